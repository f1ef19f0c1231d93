//! Empirical fingerprint model: per-location, per-transmitter RSS
//! histograms with add-constant smoothing.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::density::{ObservationModel, ObservationVector};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Location};
use crate::models::traces::TraceDataset;

pub const DEFAULT_BIN_WIDTH: f64 = 1.0;
pub const DEFAULT_SMOOTHING: f64 = 1.0;
/// Empty bins added on each side of the observed range.
pub const RANGE_EXTENSION: i64 = 3;

/// Smoothed RSS histogram for one (location, transmitter) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bin_width: f64,
    smoothing: f64,
    counts: BTreeMap<i64, u64>,
    total: u64,
    mean: f64,
}

impl Histogram {
    fn from_readings(readings: &[f64], bin_width: f64, smoothing: f64) -> Histogram {
        let mut counts = BTreeMap::new();
        for &v in readings {
            *counts.entry(bin_index(v, bin_width)).or_insert(0) += 1;
        }
        let mean = readings.iter().sum::<f64>() / readings.len() as f64;
        Histogram { bin_width, smoothing, counts, total: readings.len() as u64, mean }
    }

    fn support(&self) -> (i64, i64) {
        let lo = *self.counts.keys().next().expect("histogram has a bin");
        let hi = *self.counts.keys().next_back().expect("histogram has a bin");
        (lo - RANGE_EXTENSION, hi + RANGE_EXTENSION)
    }

    fn support_len(&self) -> f64 {
        let (lo, hi) = self.support();
        (hi - lo + 1) as f64
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn count(&self, bin: i64) -> u64 {
        self.counts.get(&bin).copied().unwrap_or(0)
    }

    /// Occupied bins as `(lower edge, count)`.
    pub fn bins(&self) -> Vec<(f64, u64)> {
        self.counts.iter().map(|(&b, &c)| (b as f64 * self.bin_width, c)).collect()
    }

    /// Smoothed probability of the bin holding `rssi`. Readings outside the
    /// extended range get the mass of an empty in-range bin.
    pub fn probability(&self, rssi: f64) -> f64 {
        let b = bin_index(rssi, self.bin_width);
        let (lo, hi) = self.support();
        let pseudo = self.smoothing / self.support_len();
        let c = if (lo..=hi).contains(&b) { self.count(b) as f64 } else { 0.0 };
        (c + pseudo) / (self.total as f64 + self.smoothing)
    }

    /// Probabilities of every bin in the extended range, low to high.
    pub fn support_probabilities(&self) -> Vec<(i64, f64)> {
        let (lo, hi) = self.support();
        (lo..=hi).map(|b| (b, self.probability((b as f64 + 0.5) * self.bin_width))).collect()
    }
}

pub fn bin_index(rssi: f64, bin_width: f64) -> i64 {
    (rssi / bin_width).floor() as i64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationFingerprint {
    pub location: Location,
    pub per_tx: BTreeMap<String, Histogram>,
}

impl LocationFingerprint {
    /// Scans recorded here, taken as the largest per-transmitter count.
    pub fn scans(&self) -> u64 {
        self.per_tx.values().map(Histogram::total).max().unwrap_or(0)
    }
}

/// Trained fingerprint database. Survey locations are kept sorted by
/// `(y, x)` and become the candidate grid in fingerprint mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintDb {
    bin_width: f64,
    smoothing: f64,
    locations: Vec<LocationFingerprint>,
}

impl FingerprintDb {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn entries(&self) -> &[LocationFingerprint] {
        &self.locations
    }

    pub fn locations(&self) -> Vec<Location> {
        self.locations.iter().map(|l| l.location).collect()
    }

    pub fn transmitters(&self) -> BTreeSet<String> {
        self.locations.iter().flat_map(|l| l.per_tx.keys().cloned()).collect()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::from_points(self.locations())
    }

    fn entry(&self, r: Location) -> Result<&LocationFingerprint> {
        self.locations.iter().find(|l| l.location == r).ok_or(Error::UnknownLocation { x: r.x, y: r.y })
    }

    /// `(location, tx)` pairs where a transmitter known to the database was
    /// never heard at that location.
    pub fn empty_cells(&self) -> Vec<(Location, String)> {
        let all = self.transmitters();
        let mut out = Vec::new();
        for l in &self.locations {
            for tx in &all {
                if !l.per_tx.contains_key(tx) {
                    out.push((l.location, tx.clone()));
                }
            }
        }
        out
    }

    /// Probability assigned to a reading from a transmitter never heard at
    /// `entry`: `smoothing / (scans + smoothing)`.
    fn unheard_floor(&self, entry: &LocationFingerprint) -> f64 {
        self.smoothing / (entry.scans() as f64 + self.smoothing)
    }
}

/// Builds per-(location, transmitter) histograms from trace data.
pub fn fingerprint_train(data: &TraceDataset, bin_width: f64, smoothing: f64) -> Result<FingerprintDb> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::InvalidParameter(format!("bin width {bin_width} must be positive")));
    }
    if !(smoothing > 0.0) || !smoothing.is_finite() {
        return Err(Error::InvalidParameter(format!("smoothing {smoothing} must be positive")));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cells: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    let locs = data.locations();
    for r in data.records() {
        let li = locs.iter().position(|l| *l == r.rx).expect("location listed");
        cells.entry((li, r.tx_id.clone())).or_default().push(r.rssi);
    }
    let mut locations: Vec<LocationFingerprint> =
        locs.iter().map(|&location| LocationFingerprint { location, per_tx: BTreeMap::new() }).collect();
    for ((li, tx), readings) in cells {
        locations[li].per_tx.insert(tx, Histogram::from_readings(&readings, bin_width, smoothing));
    }
    Ok(FingerprintDb { bin_width, smoothing, locations })
}

/// Log-probability of `obs` at survey location `r`.
///
/// Each reading contributes the log smoothed probability of its bin.
/// Transmitters the database knows but never heard at `r` contribute the
/// unheard floor; transmitters unknown to the whole database are skipped.
pub fn fingerprint_loglik(db: &FingerprintDb, obs: &ObservationVector, r: Location) -> Result<f64> {
    let entry = db.entry(r)?;
    let known = db.transmitters();
    let mut ll = 0.0;
    for (id, v) in obs.iter() {
        match entry.per_tx.get(id) {
            Some(h) => ll += h.probability(v).ln(),
            None if known.contains(id) => ll += db.unheard_floor(entry).ln(),
            None => {}
        }
    }
    Ok(ll)
}

/// Per-transmitter sample means at `r`; `None` where the transmitter was
/// never heard there.
pub fn fingerprint_mean(db: &FingerprintDb, r: Location) -> Result<BTreeMap<String, Option<f64>>> {
    let entry = db.entry(r)?;
    Ok(db
        .transmitters()
        .into_iter()
        .map(|tx| {
            let m = entry.per_tx.get(&tx).map(Histogram::mean);
            (tx, m)
        })
        .collect())
}

/// [`ObservationModel`] view of a database; only defined at survey points.
#[derive(Debug, Clone)]
pub struct FingerprintModel<'a> {
    pub db: &'a FingerprintDb,
}

impl ObservationModel for FingerprintModel<'_> {
    fn log_likelihood(&self, obs: &ObservationVector, at: Location) -> Result<f64> {
        fingerprint_loglik(self.db, obs, at)
    }
}

#[derive(Serialize, Deserialize)]
struct BinDoc {
    lo: f64,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct TxDoc {
    tx_id: String,
    mean: f64,
    bins: Vec<BinDoc>,
}

#[derive(Serialize, Deserialize)]
struct LocationDoc {
    x: f64,
    y: f64,
    per_tx: Vec<TxDoc>,
}

#[derive(Serialize, Deserialize)]
struct DbDoc {
    bin_width: f64,
    smoothing: f64,
    locations: Vec<LocationDoc>,
}

impl FingerprintDb {
    pub fn to_json(&self) -> Result<String> {
        let doc = DbDoc {
            bin_width: self.bin_width,
            smoothing: self.smoothing,
            locations: self
                .locations
                .iter()
                .map(|l| LocationDoc {
                    x: l.location.x,
                    y: l.location.y,
                    per_tx: l
                        .per_tx
                        .iter()
                        .map(|(id, h)| TxDoc {
                            tx_id: id.clone(),
                            mean: h.mean,
                            bins: h.bins().into_iter().map(|(lo, count)| BinDoc { lo, count }).collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<FingerprintDb> {
        let doc: DbDoc = serde_json::from_str(text)?;
        if !(doc.bin_width > 0.0) || !(doc.smoothing > 0.0) {
            return Err(Error::InvalidParameter("bin_width and smoothing must be positive".into()));
        }
        if doc.locations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut locations = Vec::with_capacity(doc.locations.len());
        for l in doc.locations {
            let mut per_tx = BTreeMap::new();
            for t in l.per_tx {
                let mut counts = BTreeMap::new();
                for b in &t.bins {
                    if b.count > 0 {
                        *counts.entry((b.lo / doc.bin_width).round() as i64).or_insert(0) += b.count;
                    }
                }
                let total: u64 = counts.values().sum();
                if total == 0 {
                    return Err(Error::InvalidParameter(format!("histogram for `{}` is empty", t.tx_id)));
                }
                per_tx.insert(
                    t.tx_id,
                    Histogram {
                        bin_width: doc.bin_width,
                        smoothing: doc.smoothing,
                        counts,
                        total,
                        mean: t.mean,
                    },
                );
            }
            locations.push(LocationFingerprint { location: Location::new(l.x, l.y), per_tx });
        }
        Ok(FingerprintDb { bin_width: doc.bin_width, smoothing: doc.smoothing, locations })
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<FingerprintDb> {
        let mut s = String::new();
        input.read_to_string(&mut s)?;
        FingerprintDb::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::traces::TraceRecord;

    fn rec(x: f64, y: f64, tx: &str, rssi: f64) -> TraceRecord {
        TraceRecord { rx: Location::new(x, y), tx_id: tx.into(), rssi, timestamp: None }
    }

    fn db_from(records: Vec<TraceRecord>) -> FingerprintDb {
        fingerprint_train(&TraceDataset::new(records).unwrap(), 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_data() {
        let db = db_from((0..250).map(|_| rec(0.0, 0.0, "a", -40.0)).collect());
        let h = &db.entries()[0].per_tx["a"];
        assert_eq!(h.bins(), vec![(-40.0, 250)]);
        assert_eq!(h.mean(), -40.0);
        // 7 support bins share one unit of smoothing mass
        let p = h.probability(-40.0);
        assert!((p - (250.0 + 1.0 / 7.0) / 251.0).abs() < 1e-12);
    }

    #[test]
    fn two_readings() {
        let db = db_from(vec![rec(0.0, 0.0, "a", -40.0), rec(0.0, 0.0, "a", -42.0)]);
        let h = &db.entries()[0].per_tx["a"];
        assert_eq!(h.bins(), vec![(-42.0, 1), (-40.0, 1)]);
        assert_eq!(h.mean(), -41.0);
        let means = fingerprint_mean(&db, Location::new(0.0, 0.0)).unwrap();
        assert_eq!(means["a"], Some(-41.0));
    }

    #[test]
    fn smoothed_histogram_sums_to_one() {
        let db =
            db_from(vec![rec(0.0, 0.0, "a", -40.2), rec(0.0, 0.0, "a", -47.9), rec(0.0, 0.0, "a", -40.7)]);
        let h = &db.entries()[0].per_tx["a"];
        let total: f64 = h.support_probabilities().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(h.support_probabilities().iter().all(|(_, p)| *p > 0.0));
    }

    #[test]
    fn empty_dataset_rejected() {
        assert_eq!(TraceDataset::new(vec![]).unwrap_err(), Error::EmptyDataset);
    }

    #[test]
    fn loglik_mode_floor_and_factorization() {
        let mut recs: Vec<TraceRecord> = (0..40).map(|_| rec(0.0, 0.0, "a", -40.0)).collect();
        recs.extend((0..5).map(|_| rec(0.0, 0.0, "a", -43.0)));
        recs.extend((0..20).map(|i| rec(0.0, 0.0, "b", -60.0 - (i % 3) as f64)));
        let db = db_from(recs);
        let r = Location::new(0.0, 0.0);
        let score =
            |v: f64| fingerprint_loglik(&db, &ObservationVector::from_pairs([("a", v)]).unwrap(), r).unwrap();
        let modal = score(-40.0);
        for v in [-46.0, -45.0, -44.0, -43.0, -42.0, -41.0, -39.0, -38.0, -37.0] {
            assert!(modal > score(v));
        }
        let far = score(-90.0);
        assert!(far.is_finite());

        let both = ObservationVector::from_pairs([("a", -43.0), ("b", -61.0)]).unwrap();
        let b_only =
            fingerprint_loglik(&db, &ObservationVector::from_pairs([("b", -61.0)]).unwrap(), r).unwrap();
        assert!((fingerprint_loglik(&db, &both, r).unwrap() - (score(-43.0) + b_only)).abs() < 1e-12);
    }

    #[test]
    fn unheard_transmitter_and_unknown_location() {
        let db = db_from(vec![
            rec(0.0, 0.0, "a", -40.0),
            rec(0.0, 0.0, "a", -41.0),
            rec(1.0, 0.0, "a", -50.0),
            rec(1.0, 0.0, "b", -70.0),
        ]);
        let r0 = Location::new(0.0, 0.0);
        let obs = ObservationVector::from_pairs([("b", -70.0)]).unwrap();
        assert!((fingerprint_loglik(&db, &obs, r0).unwrap() - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        assert_eq!(db.empty_cells(), vec![(r0, "b".to_string())]);
        assert_eq!(fingerprint_mean(&db, r0).unwrap()["b"], None);
        assert!(matches!(
            fingerprint_loglik(&db, &obs, Location::new(9.0, 9.0)),
            Err(Error::UnknownLocation { .. })
        ));
    }

    #[test]
    fn json_roundtrip_is_stable() {
        let db =
            db_from(vec![rec(0.5, 0.5, "a", -40.0), rec(0.5, 0.5, "a", -42.0), rec(1.5, 0.5, "b", -71.3)]);
        let text = db.to_json().unwrap();
        let back = FingerprintDb::from_json(&text).unwrap();
        assert_eq!(back, db);
        assert_eq!(back.to_json().unwrap(), text);
        assert!(text.contains("\"per_tx\"") && text.contains("\"lo\""));
    }
}
