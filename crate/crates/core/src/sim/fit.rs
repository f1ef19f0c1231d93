use crate::error::{Error, Result};
use crate::models::{PathLossParams, TraceDataset, TransmitterSet};

#[derive(Debug, Clone, PartialEq)]
pub struct PathLossFit {
    pub params: PathLossParams,
    pub r_squared: f64,
    pub samples: usize,
}

/// Ordinary least squares of `rssi - pt` on `10 log10(d / d0)`: the slope
/// is `-η`, the intercept `K`, and `σ` is the residual standard deviation
/// with two degrees of freedom removed.
pub fn fit_pathloss(data: &TraceDataset, txs: &TransmitterSet, pt_dbm: f64, d0: f64) -> Result<PathLossFit> {
    if !(d0 > 0.0) {
        return Err(Error::InvalidParameter(format!("d0 {d0} must be positive")));
    }
    let mut xs = Vec::with_capacity(data.len());
    let mut ys = Vec::with_capacity(data.len());
    for r in data.records() {
        let tx = txs.get(&r.tx_id).ok_or_else(|| Error::UnknownTransmitter(r.tx_id.clone()))?;
        let d = tx.distance(&r.rx);
        if d <= 0.0 {
            return Err(Error::SingularDistance { distance: d, floor: 0.0 });
        }
        xs.push(10.0 * (d / d0).log10());
        ys.push(r.rssi - pt_dbm);
    }
    let n = xs.len() as f64;
    if xs.len() < 3 {
        return Err(Error::InsufficientData("need at least three readings".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 1e-12 * n {
        return Err(Error::DegenerateGeometry("all readings are at one distance".into()));
    }
    let slope = sxy / sxx;
    let k = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - k - slope * x).powi(2)).sum();
    let sigma = (sse / (n - 2.0)).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let params = PathLossParams::new(k, -slope, sigma.max(f64::MIN_POSITIVE), d0, pt_dbm)?;
    Ok(PathLossFit { params, r_squared, samples: xs.len() })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::geometry::Location;
    use crate::models::{sample_rss_with, TraceRecord};

    fn synth(sigma: f64, n: usize, seed: u64) -> (TraceDataset, TransmitterSet) {
        let txs = TransmitterSet::numbered(&[Location::new(0.0, 0.0), Location::new(20.0, 5.0)]).unwrap();
        let params = PathLossParams::new(-40.0, 3.0, sigma, 1.0, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut recs = Vec::new();
        while recs.len() < n {
            let rx = Location::new(rng.random_range(1.0..30.0), rng.random_range(1.0..30.0));
            let o = sample_rss_with(&params, &txs, rx, &mut rng).unwrap();
            for (id, v) in o.iter() {
                recs.push(TraceRecord { rx, tx_id: id.into(), rssi: v, timestamp: None });
            }
        }
        recs.truncate(n);
        (TraceDataset::new(recs).unwrap(), txs)
    }

    #[test]
    fn noiseless_recovery() {
        let (data, txs) = synth(1e-9, 200, 1);
        let f = fit_pathloss(&data, &txs, 10.0, 1.0).unwrap();
        assert!((f.params.eta - 3.0).abs() < 1e-6);
        assert!((f.params.k_db + 40.0).abs() < 1e-6);
        assert!(f.r_squared > 0.999_999);
    }

    #[test]
    fn noisy_recovery() {
        let (data, txs) = synth(4.0, 1000, 2);
        let f = fit_pathloss(&data, &txs, 10.0, 1.0).unwrap();
        assert!((f.params.eta - 3.0).abs() < 0.15, "eta {}", f.params.eta);
        assert!((f.params.sigma_db - 4.0).abs() < 0.4);
    }

    #[test]
    fn single_distance_rejected() {
        let txs = TransmitterSet::numbered(&[Location::new(0.0, 0.0)]).unwrap();
        let recs = (0..5)
            .map(|i| TraceRecord {
                rx: Location::new(3.0, 4.0),
                tx_id: "tx0".into(),
                rssi: -50.0 - i as f64,
                timestamp: None,
            })
            .collect();
        let data = TraceDataset::new(recs).unwrap();
        assert!(matches!(fit_pathloss(&data, &txs, 0.0, 1.0), Err(Error::DegenerateGeometry(_))));
    }
}
