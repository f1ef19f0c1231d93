//! RSS trace records and their CSV form.
//!
//! Schema: header `rx_x,rx_y,tx_id,rssi_dbm` with an optional fifth
//! `timestamp` column, `.` decimals, one reading per row.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::density::ObservationVector;
use crate::error::{Error, Result};
use crate::geometry::{Location, Space};

const HEADER: [&str; 4] = ["rx_x", "rx_y", "tx_id", "rssi_dbm"];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub rx: Location,
    pub tx_id: String,
    pub rssi: f64,
    pub timestamp: Option<String>,
}

/// One observation vector captured at a known location.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub location: Location,
    pub obs: ObservationVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceDataset {
    records: Vec<TraceRecord>,
}

impl TraceDataset {
    pub fn new(records: Vec<TraceRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(r) = records.iter().find(|r| !r.rx.is_finite() || !r.rssi.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite record for `{}`", r.tx_id)));
        }
        Ok(TraceDataset { records })
    }

    /// Like [`TraceDataset::new`] but also requires every receiver location
    /// to lie inside `space`.
    pub fn within(records: Vec<TraceRecord>, space: &Space) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| !space.contains(r.rx)) {
            return Err(Error::InvalidParameter(format!("receiver location {} is outside the space", r.rx)));
        }
        TraceDataset::new(records)
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct receiver locations sorted by `(y, x)`.
    pub fn locations(&self) -> Vec<Location> {
        let mut locs: Vec<Location> = Vec::new();
        for r in &self.records {
            if !locs.contains(&r.rx) {
                locs.push(r.rx);
            }
        }
        locs.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
        locs
    }

    /// Distinct transmitter ids, sorted.
    pub fn transmitters(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.records.iter().map(|r| r.tx_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Groups readings into observation vectors.
    ///
    /// Rows sharing a location and timestamp form one scan. Without
    /// timestamps the k-th reading of each transmitter at a location joins
    /// scan k. Scans keep first-appearance order.
    pub fn scans(&self) -> Vec<Scan> {
        let mut order: Vec<(Location, String)> = Vec::new();
        let mut groups: HashMap<(u64, u64, String), BTreeMap<String, f64>> = HashMap::new();
        let mut occurrence: HashMap<(u64, u64, String), usize> = HashMap::new();
        for r in &self.records {
            let lk = (r.rx.x.to_bits(), r.rx.y.to_bits());
            let scan_key = match &r.timestamp {
                Some(t) => format!("t:{t}"),
                None => {
                    let n = occurrence.entry((lk.0, lk.1, r.tx_id.clone())).or_insert(0);
                    *n += 1;
                    format!("k:{}", *n - 1)
                }
            };
            let key = (lk.0, lk.1, scan_key.clone());
            let entry = groups.entry(key).or_insert_with(|| {
                order.push((r.rx, scan_key));
                BTreeMap::new()
            });
            entry.insert(r.tx_id.clone(), r.rssi);
        }
        order
            .into_iter()
            .map(|(loc, key)| {
                let readings = groups.remove(&(loc.x.to_bits(), loc.y.to_bits(), key)).unwrap_or_default();
                Scan { location: loc, obs: ObservationVector::new(readings).expect("scan has a reading") }
            })
            .collect()
    }

    /// Flattens scans back into records, numbering scans per location.
    pub fn from_scans(scans: &[Scan]) -> Result<Self> {
        let mut counter: HashMap<(u64, u64), usize> = HashMap::new();
        let mut records = Vec::new();
        for s in scans {
            let n = counter.entry((s.location.x.to_bits(), s.location.y.to_bits())).or_insert(0);
            for (id, v) in s.obs.iter() {
                records.push(TraceRecord {
                    rx: s.location,
                    tx_id: id.to_string(),
                    rssi: v,
                    timestamp: Some(n.to_string()),
                });
            }
            *n += 1;
        }
        TraceDataset::new(records)
    }
}

fn parse_f64(field: &str, what: &str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse { line, message: format!("{what} `{field}` is not a finite number") })
}

/// Parses trace CSV from any reader.
pub fn read_traces<R: Read>(reader: R) -> Result<TraceDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => return Err(Error::EmptyFile),
        Some(h) => h.map_err(|e| Error::Parse { line: 1, message: e.to_string() })?,
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let has_ts = match names.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == HEADER => false,
        [a, b, c, d, "timestamp"] if [*a, *b, *c, *d] == HEADER => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected header `rx_x,rx_y,tx_id,rssi_dbm[,timestamp]`, got `{}`",
                    names.join(",")
                ),
            })
        }
    };
    let mut records = Vec::new();
    for row in rows {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        let expected = if has_ts { 5 } else { 4 };
        if row.len() != expected {
            return Err(Error::Parse {
                line,
                message: format!("expected {expected} fields, found {}", row.len()),
            });
        }
        let tx_id = row[2].trim();
        if tx_id.is_empty() {
            return Err(Error::Parse { line, message: "empty tx_id".into() });
        }
        records.push(TraceRecord {
            rx: Location::new(parse_f64(&row[0], "rx_x", line)?, parse_f64(&row[1], "rx_y", line)?),
            tx_id: tx_id.to_string(),
            rssi: parse_f64(&row[3], "rssi_dbm", line)?,
            timestamp: if has_ts { Some(row[4].trim().to_string()) } else { None },
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyFile);
    }
    TraceDataset::new(records)
}

pub fn load_traces<P: AsRef<Path>>(path: P) -> Result<TraceDataset> {
    let file = std::fs::File::open(path)?;
    read_traces(std::io::BufReader::new(file))
}

/// Writes the dataset in the trace CSV schema. The timestamp column is
/// emitted when any record carries one.
pub fn write_traces<W: Write>(data: &TraceDataset, mut out: W) -> Result<()> {
    let has_ts = data.records.iter().any(|r| r.timestamp.is_some());
    if has_ts {
        writeln!(out, "rx_x,rx_y,tx_id,rssi_dbm,timestamp")?;
    } else {
        writeln!(out, "rx_x,rx_y,tx_id,rssi_dbm")?;
    }
    for r in &data.records {
        write!(out, "{},{},{},{}", r.rx.x, r.rx.y, r.tx_id, r.rssi)?;
        if has_ts {
            write!(out, ",{}", r.timestamp.as_deref().unwrap_or(""))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
