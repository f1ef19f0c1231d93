//! Locations, the rectangular search space and its discretization.
//!
//! A [`Grid`] is the finite candidate set every posterior and estimator
//! works on. It is either a rectilinear lattice (built from a [`Space`] or
//! from explicit axes) or an arbitrary list of points such as fingerprint
//! survey locations. Points are always enumerated row-major: `y` outer,
//! `x` inner, so index order is lexicographic in `(y, x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default grid spacing in meters.
pub const DEFAULT_RESOLUTION: f64 = 0.25;

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Location { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Euclidean distance to `other`.
    #[inline]
    pub fn distance(&self, other: &Location) -> f64 {
        distance(*self, *other)
    }
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:.4}, {:.4})", self.x, self.y)
    }
}

/// Euclidean distance between two locations.
#[inline]
pub fn distance(a: Location, b: Location) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Closed axis-aligned rectangle with a uniform grid spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Space {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    resolution: f64,
}

impl Space {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, resolution: f64) -> Result<Self> {
        let all = [x_min, x_max, y_min, y_max, resolution];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpace("bounds and resolution must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidSpace(format!("x_min {x_min} must be below x_max {x_max}")));
        }
        if y_min >= y_max {
            return Err(Error::InvalidSpace(format!("y_min {y_min} must be below y_max {y_max}")));
        }
        if resolution <= 0.0 {
            return Err(Error::InvalidSpace(format!("resolution {resolution} must be positive")));
        }
        Ok(Space { x_min, x_max, y_min, y_max, resolution })
    }

    /// `[0, width] x [0, height]`.
    pub fn rect(width: f64, height: f64, resolution: f64) -> Result<Self> {
        Space::new(0.0, width, 0.0, height, resolution)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Largest distance between two points of the rectangle: its diagonal.
    pub fn d_star(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Location {
        Location::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn contains(&self, p: Location) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn x_axis(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.resolution)
    }

    pub fn y_axis(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.resolution)
    }

    pub fn point_count(&self) -> usize {
        axis_len(self.width(), self.resolution) * axis_len(self.height(), self.resolution)
    }
}

fn axis_len(span: f64, resolution: f64) -> usize {
    // The 1e-9 guard keeps exact multiples (16 / 0.25) from gaining a column.
    (span / resolution - 1e-9).ceil().max(0.0) as usize + 1
}

fn axis(min: f64, max: f64, resolution: f64) -> Vec<f64> {
    let n = axis_len(max - min, resolution);
    (0..n).map(|i| if i + 1 == n { max } else { (min + i as f64 * resolution).min(max) }).collect()
}

/// Row-major enumeration of the grid points of `space`.
pub fn grid_points(space: &Space) -> Vec<Location> {
    let xs = space.x_axis();
    let ys = space.y_axis();
    ys.iter().flat_map(|&y| xs.iter().map(move |&x| Location::new(x, y))).collect()
}

/// Rectilinear lattice with sorted axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Lattice {
    #[inline]
    pub fn nx(&self) -> usize {
        self.xs.len()
    }
    #[inline]
    pub fn ny(&self) -> usize {
        self.ys.len()
    }
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.xs.len() + ix
    }
}

/// Finite ordered candidate set over which densities live.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Vec<Location>,
    lattice: Option<Lattice>,
    space: Option<Space>,
    d_star: f64,
}

impl Grid {
    pub fn from_space(space: &Space) -> Grid {
        let lattice = Lattice { xs: space.x_axis(), ys: space.y_axis() };
        Grid {
            points: grid_points(space),
            lattice: Some(lattice),
            space: Some(*space),
            d_star: space.d_star(),
        }
    }

    /// Lattice from explicit strictly increasing axes. A single-entry `ys`
    /// gives a one-dimensional line of points.
    pub fn from_axes(xs: Vec<f64>, ys: Vec<f64>) -> Result<Grid> {
        for (name, ax) in [("x", &xs), ("y", &ys)] {
            if ax.is_empty() {
                return Err(Error::InvalidSpace(format!("{name} axis is empty")));
            }
            if ax.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpace(format!("{name} axis has non-finite entries")));
            }
            if ax.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidSpace(format!("{name} axis must be strictly increasing")));
            }
        }
        let d_star = (xs[xs.len() - 1] - xs[0]).hypot(ys[ys.len() - 1] - ys[0]);
        let points = ys.iter().flat_map(|&y| xs.iter().map(move |&x| Location::new(x, y))).collect();
        Ok(Grid { points, lattice: Some(Lattice { xs, ys }), space: None, d_star })
    }

    /// Evenly spaced points on `[min, max]` along the x axis at `y = 0`.
    pub fn line(min: f64, max: f64, resolution: f64) -> Result<Grid> {
        if !(min < max) || !(resolution > 0.0) {
            return Err(Error::InvalidSpace(format!("bad line [{min}, {max}] step {resolution}")));
        }
        Grid::from_axes(axis(min, max, resolution), vec![0.0])
    }

    /// Arbitrary distinct points, kept in the given order.
    pub fn from_points(points: Vec<Location>) -> Result<Grid> {
        if points.is_empty() {
            return Err(Error::InvalidSpace("point set is empty".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidSpace("point set has non-finite coordinates".into()));
        }
        let mut d_star: f64 = 0.0;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if a == b {
                    return Err(Error::InvalidSpace(format!("duplicate point {a}")));
                }
                d_star = d_star.max(a.distance(b));
            }
        }
        Ok(Grid { points, lattice: None, space: None, d_star })
    }

    pub fn points(&self) -> &[Location] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn point(&self, i: usize) -> Location {
        self.points[i]
    }
    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }
    pub fn space(&self) -> Option<&Space> {
        self.space.as_ref()
    }

    /// Maximum distance between two points of the region the grid covers.
    pub fn d_star(&self) -> f64 {
        self.d_star
    }

    /// Index of a point that is exactly on the grid.
    pub fn index_of(&self, p: Location) -> Option<usize> {
        match &self.lattice {
            Some(l) => {
                let ix = l.xs.binary_search_by(|v| v.total_cmp(&p.x)).ok()?;
                let iy = l.ys.binary_search_by(|v| v.total_cmp(&p.y)).ok()?;
                Some(l.index(ix, iy))
            }
            None => self.points.iter().position(|q| *q == p),
        }
    }

    /// Index of the grid point closest to `p`; ties go to the lower index.
    pub fn nearest_index(&self, p: Location) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d = p.distance(q);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_only_grid() {
        let s = Space::rect(1.0, 1.0, 1.0).unwrap();
        let pts = grid_points(&s);
        assert_eq!(
            pts,
            vec![
                Location::new(0.0, 0.0),
                Location::new(1.0, 0.0),
                Location::new(0.0, 1.0),
                Location::new(1.0, 1.0)
            ]
        );
    }

    #[test]
    fn degenerate_height_rejected() {
        assert!(matches!(Space::new(0.0, 2.0, 0.0, 0.0, 0.5), Err(Error::InvalidSpace(_))));
        assert!(Space::new(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(Space::new(1.0, 0.0, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn desk_grid_count() {
        // (16 / 0.25 + 1)^2 = 65^2
        let s = Space::rect(16.0, 16.0, 0.25).unwrap();
        assert_eq!(s.point_count(), 4225);
        assert_eq!(grid_points(&s).len(), 4225);
        assert_eq!(Grid::from_space(&s).len(), 4225);
    }

    #[test]
    fn last_column_clamps_to_bound() {
        let s = Space::rect(1.0, 1.0, 0.4).unwrap();
        assert_eq!(s.x_axis(), vec![0.0, 0.4, 0.8, 1.0]);
        assert_eq!(s.point_count(), 16);
    }

    #[test]
    fn d_star_is_diagonal() {
        let s = Space::rect(3.0, 4.0, 0.5).unwrap();
        assert_eq!(s.d_star(), 5.0);
        let g = Grid::from_points(vec![Location::new(0.0, 0.0), Location::new(6.0, 8.0)]).unwrap();
        assert_eq!(g.d_star(), 10.0);
    }

    #[test]
    fn index_lookup() {
        let s = Space::rect(2.0, 1.0, 0.5).unwrap();
        let g = Grid::from_space(&s);
        for (i, p) in g.points().iter().enumerate() {
            assert_eq!(g.index_of(*p), Some(i));
        }
        assert_eq!(g.index_of(Location::new(0.25, 0.0)), None);
        assert_eq!(g.nearest_index(Location::new(0.3, 0.1)), 1);
    }

    #[test]
    fn line_grid() {
        let g = Grid::line(-1.0, 1.0, 0.001).unwrap();
        assert_eq!(g.len(), 2001);
        assert_eq!(g.point(0).x, -1.0);
        assert_eq!(g.point(2000).x, 1.0);
        assert!((g.point(1000).x).abs() < 1e-12);
    }
}
