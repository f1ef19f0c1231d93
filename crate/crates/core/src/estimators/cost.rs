use crate::error::{Error, Result};

/// Slack added to every radius comparison. Grid points that sit exactly on
/// a disk boundary must count as inside no matter how the distance rounds.
pub const RADIUS_SLACK: f64 = 1e-9;

#[inline]
pub(crate) fn within(dx: f64, dy: f64, radius: f64) -> bool {
    (dx * dx + dy * dy).sqrt() <= radius + RADIUS_SLACK
}

/// Nondecreasing, nonnegative cost sampled at increasing distances and
/// linearly interpolated between samples (held constant outside them).
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    d: Vec<f64>,
    g: Vec<f64>,
}

impl Tabulated {
    pub fn new(d: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if d.is_empty() || d.len() != g.len() {
            return Err(Error::InvalidParameter("tabulated cost needs matching, nonempty samples".into()));
        }
        if d.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tabulated cost samples must be finite".into()));
        }
        if d[0] < 0.0 || d.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("tabulated distances must be >= 0 and increasing".into()));
        }
        if g[0] < 0.0 || g.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter(
                "tabulated cost must be nonnegative and nondecreasing".into(),
            ));
        }
        Ok(Tabulated { d, g })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.d.len();
        if x <= self.d[0] {
            return self.g[0];
        }
        if x >= self.d[n - 1] {
            return self.g[n - 1];
        }
        let k = self.d.partition_point(|&v| v <= x);
        let (d0, d1, g0, g1) = (self.d[k - 1], self.d[k], self.g[k - 1], self.g[k]);
        g0 + (g1 - g0) * (x - d0) / (d1 - d0)
    }

    /// `a * g + b`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        Tabulated::new(self.d.clone(), self.g.iter().map(|v| a * v + b).collect())
    }

    pub fn distances(&self) -> &[f64] {
        &self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }
}

/// Distance-based localization cost `g(‖r̂ - r‖)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CostFunction {
    SquaredDistance,
    Distance,
    /// 0 inside the radius, 1 outside; its expected value is `1 - P(d)`.
    WithinRadius(f64),
    TabulatedMonotone(Tabulated),
}

impl CostFunction {
    pub fn within_radius(d: f64) -> Result<Self> {
        let c = CostFunction::WithinRadius(d);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostFunction::WithinRadius(d) if !(*d > 0.0) || !d.is_finite() => {
                Err(Error::InvalidParameter(format!("radius {d} must be positive")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, dist: f64) -> f64 {
        match self {
            CostFunction::SquaredDistance => dist * dist,
            CostFunction::Distance => dist,
            CostFunction::WithinRadius(d) => {
                if dist <= d + RADIUS_SLACK {
                    0.0
                } else {
                    1.0
                }
            }
            CostFunction::TabulatedMonotone(t) => t.eval(dist),
        }
    }

    pub fn name(&self) -> String {
        match self {
            CostFunction::SquaredDistance => "squared-distance".into(),
            CostFunction::Distance => "distance".into(),
            CostFunction::WithinRadius(d) => format!("within-radius({})", short(*d)),
            CostFunction::TabulatedMonotone(t) => format!("tabulated({} samples)", t.d.len()),
        }
    }
}

/// At most four decimals, trailing zeros dropped.
fn short(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
