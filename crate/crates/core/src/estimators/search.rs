//! Expected-cost evaluation and grid argmin.
//!
//! Every cost has an exhaustive definition ([`expected_cost`] at each grid
//! point). The common costs get faster routes that return the same argmin:
//! squared distance reduces to the nearest point to the posterior mean,
//! within-radius uses row prefix sums on lattices, and distance runs a
//! Lipschitz branch and bound over lattice rectangles.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rayon::prelude::*;

use super::cost::{within, CostFunction};
use crate::density::DensityGrid;
use crate::geometry::{Lattice, Location};

/// Relative tolerance under which two objective values tie.
pub const TIE_REL: f64 = 1e-12;

/// Result of an estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub location: Location,
    pub expected_cost: f64,
    /// Every candidate whose objective ties with the optimum, in grid order.
    pub tie_set: Vec<Location>,
}

impl Estimate {
    pub fn ties(&self) -> usize {
        self.tie_set.len()
    }
}

/// `Σ cost(‖candidate - r_i‖) · mass_i` over the grid.
pub fn expected_cost(post: &DensityGrid, candidate: Location, cost: &CostFunction) -> f64 {
    let mut acc = 0.0;
    for (p, &m) in post.grid().points().iter().zip(post.mass()) {
        if m > 0.0 {
            acc += m * cost.eval(candidate.distance(p));
        }
    }
    acc
}

/// Posterior probability that the receiver lies within `radius` of `candidate`.
pub fn capture_probability(post: &DensityGrid, candidate: Location, radius: f64) -> f64 {
    let mut acc = 0.0;
    for (p, &m) in post.grid().points().iter().zip(post.mass()) {
        if m > 0.0 && within(p.x - candidate.x, p.y - candidate.y, radius) {
            acc += m;
        }
    }
    acc
}

/// Capture probability `P(radius)` at every grid point. `radius` may be 0,
/// in which case each point captures its own mass.
pub fn capture_probabilities(post: &DensityGrid, radius: f64) -> Vec<f64> {
    match post.grid().lattice() {
        Some(l) => lattice_capture(l, post.mass(), radius),
        None => post.grid().points().iter().map(|c| capture_probability(post, *c, radius)).collect(),
    }
}

fn lattice_capture(l: &Lattice, mass: &[f64], radius: f64) -> Vec<f64> {
    let (nx, ny) = (l.nx(), l.ny());
    let prefix: Vec<Vec<f64>> = (0..ny)
        .map(|row| {
            let mut acc = 0.0;
            let mut p = Vec::with_capacity(nx + 1);
            p.push(0.0);
            for v in &mass[row * nx..(row + 1) * nx] {
                acc += v;
                p.push(acc);
            }
            p
        })
        .collect();
    let xs = &l.xs;
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        let mut lo = j;
        while lo > 0 && within(0.0, l.ys[lo - 1] - l.ys[j], radius) {
            lo -= 1;
        }
        let mut hi = j;
        while hi + 1 < ny && within(0.0, l.ys[hi + 1] - l.ys[j], radius) {
            hi += 1;
        }
        let row_out = &mut out[j * nx..(j + 1) * nx];
        for (row, pre) in prefix.iter().enumerate().take(hi + 1).skip(lo) {
            let dy = l.ys[row] - l.ys[j];
            // Both interval ends only move right as the candidate does.
            let (mut a, mut b) = (0usize, 0usize);
            for i in 0..nx {
                while !within(xs[a] - xs[i], dy, radius) {
                    a += 1;
                }
                if b < i {
                    b = i;
                }
                while b + 1 < nx && within(xs[b + 1] - xs[i], dy, radius) {
                    b += 1;
                }
                row_out[i] += pre[b + 1] - pre[a];
            }
        }
    }
    out
}

#[inline]
fn tol(best: f64) -> f64 {
    TIE_REL * best.abs()
}

/// Indices minimizing `values` up to relative ties, in grid order.
pub(crate) fn argmin_ties(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let t = tol(best);
    values.iter().enumerate().filter(|(_, &v)| v <= best + t).map(|(i, _)| i).collect()
}

/// Indices maximizing `values` up to relative ties, in grid order.
pub(crate) fn argmax_ties(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t = tol(best);
    values.iter().enumerate().filter(|(_, &v)| v >= best - t).map(|(i, _)| i).collect()
}

fn from_ties(post: &DensityGrid, ties: Vec<usize>, expected_cost: f64) -> Estimate {
    let grid = post.grid();
    Estimate {
        location: grid.point(ties[0]),
        expected_cost,
        tie_set: ties.into_iter().map(|i| grid.point(i)).collect(),
    }
}

/// Exhaustive argmin over all grid points. Reference route for any cost.
pub fn estimate_exhaustive(post: &DensityGrid, cost: &CostFunction) -> Estimate {
    let values: Vec<f64> = post.grid().points().par_iter().map(|c| expected_cost(post, *c, cost)).collect();
    let ties = argmin_ties(&values);
    let best = values[ties[0]];
    from_ties(post, ties, best)
}

pub(crate) fn estimate_squared(post: &DensityGrid) -> Estimate {
    let mean = posterior_mean(post);
    let spread = expected_cost(post, mean, &CostFunction::SquaredDistance);
    let sq: Vec<f64> = post
        .grid()
        .points()
        .iter()
        .map(|p| {
            let d = p.distance(&mean);
            d * d
        })
        .collect();
    let best = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let t = tol(best + spread);
    let ties: Vec<usize> = sq.iter().enumerate().filter(|(_, &v)| v <= best + t).map(|(i, _)| i).collect();
    let c = expected_cost(post, post.grid().point(ties[0]), &CostFunction::SquaredDistance);
    from_ties(post, ties, c)
}

pub(crate) fn estimate_within_radius(post: &DensityGrid, radius: f64) -> Estimate {
    let (ties, p) = match post.grid().lattice() {
        Some(l) => pruned_capture(l, post.mass(), radius, true),
        None => {
            let probs = capture_probabilities(post, radius);
            let ties = argmax_ties(&probs);
            let p = probs[ties[0]];
            (ties, p)
        }
    };
    from_ties(post, ties, 1.0 - p)
}

/// Largest capture probability over all grid points at `radius`.
/// Largest capture probability over all grid points at `radius`, to within
/// rounding.
pub fn max_capture_probability(post: &DensityGrid, radius: f64) -> f64 {
    match post.grid().lattice() {
        Some(l) => pruned_capture(l, post.mass(), radius, false).1,
        None => capture_probabilities(post, radius).into_iter().fold(0.0, f64::max),
    }
}

/// Absorbs rounding differences between box sums and disc sums.
const BOUND_MARGIN: f64 = 1e-12;

/// Index range `[lo, hi]` of `axis` within `half` of each entry.
fn box_ranges(axis: &[f64], half: f64) -> Vec<(usize, usize)> {
    let (mut lo, mut hi) = (0usize, 0usize);
    (0..axis.len())
        .map(|i| {
            while axis[i] - axis[lo] > half {
                lo += 1;
            }
            if hi < i {
                hi = i;
            }
            while hi + 1 < axis.len() && axis[hi + 1] - axis[i] <= half {
                hi += 1;
            }
            (lo, hi)
        })
        .collect()
}

/// Bands in the staircase that bounds a disc from outside.
const STAIR_BANDS: usize = 4;

/// Capture argmax on a lattice without scoring every candidate.
///
/// A staircase of boxes covering the disc, summed from a summed-area
/// table, bounds every candidate from above. Candidates are scored exactly
/// in decreasing bound order until no remaining bound can reach the tie
/// threshold; exact scores use the same row sums as
/// [`capture_probabilities`], so values and tie sets match it.
///
/// With `ties` false only the maximum is wanted, and scoring stops once no
/// bound exceeds it by more than rounding, leaving a partial tie set.
fn pruned_capture(l: &Lattice, mass: &[f64], radius: f64, ties: bool) -> (Vec<usize>, f64) {
    let (nx, ny) = (l.nx(), l.ny());
    let w = nx + 1;
    let mut sat = vec![0.0; w * (ny + 1)];
    for j in 0..ny {
        let mut row = 0.0;
        for i in 0..nx {
            row += mass[j * nx + i];
            sat[(j + 1) * w + i + 1] = sat[j * w + i + 1] + row;
        }
    }
    let boxed = |(x0, x1): (usize, usize), (y0, y1): (usize, usize)| {
        sat[(y1 + 1) * w + x1 + 1] - sat[y0 * w + x1 + 1] - sat[(y1 + 1) * w + x0] + sat[y0 * w + x0]
    };
    // Band k covers rows with t_k < |dy| <= t_{k+1} out to |dx| <= half_k.
    let outer = radius + super::cost::RADIUS_SLACK;
    let t: Vec<f64> = (0..=STAIR_BANDS).map(|k| outer * k as f64 / STAIR_BANDS as f64).collect();
    let rows: Vec<Vec<(usize, usize)>> = t.iter().map(|&tk| box_ranges(&l.ys, tk)).collect();
    let cols: Vec<Vec<(usize, usize)>> = t[..STAIR_BANDS]
        .iter()
        .map(|&tk| box_ranges(&l.xs, (outer * outer - tk * tk).sqrt() * (1.0 + 1e-12) + 1e-12))
        .collect();
    let bound = |c: usize| {
        let (ci, cj) = (c % nx, c / nx);
        let mut acc = boxed(cols[0][ci], rows[1][cj]);
        for k in 1..STAIR_BANDS {
            acc += boxed(cols[k][ci], rows[k + 1][cj]) - boxed(cols[k][ci], rows[k][cj]);
        }
        acc
    };
    let ub: Vec<f64> = (0..nx * ny).map(bound).collect();
    let oy = &rows[STAIR_BANDS];

    let prefix: Vec<f64> = {
        let mut p = Vec::with_capacity(ny * w);
        for j in 0..ny {
            let mut acc = 0.0;
            p.push(0.0);
            for v in &mass[j * nx..(j + 1) * nx] {
                acc += v;
                p.push(acc);
            }
        }
        p
    };
    let exact = |c: usize| {
        let (ci, cj) = (c % nx, c / nx);
        let xc = l.xs[ci];
        let mut acc = 0.0;
        for j in oy[cj].0..=oy[cj].1 {
            let dy = l.ys[j] - l.ys[cj];
            if !within(0.0, dy, radius) {
                continue;
            }
            let a = l.xs.partition_point(|&x| x < xc && !within(x - xc, dy, radius));
            let b = l.xs.partition_point(|&x| x <= xc || within(x - xc, dy, radius));
            acc += prefix[j * w + b] - prefix[j * w + a];
        }
        acc
    };

    let threshold = |best: f64| if ties { best - tol(best) } else { best };
    let top = (0..ub.len()).fold(0, |b, c| if ub[c] > ub[b] { c } else { b });
    let mut best = exact(top);
    let mut scored = vec![(top, best)];
    let mut order: Vec<usize> =
        (0..ub.len()).filter(|&c| c != top && ub[c] + BOUND_MARGIN >= threshold(best)).collect();
    if ties && order.len() > ub.len() / 4 {
        let probs = lattice_capture(l, mass, radius);
        let all = argmax_ties(&probs);
        let p = probs[all[0]];
        return (all, p);
    }
    order.sort_unstable_by(|&a, &b| ub[b].total_cmp(&ub[a]).then(a.cmp(&b)));
    for c in order {
        if ub[c] + BOUND_MARGIN < threshold(best) || (!ties && ub[c] <= best + BOUND_MARGIN) {
            break;
        }
        let v = exact(c);
        best = best.max(v);
        scored.push((c, v));
    }
    let t = tol(best);
    let mut ties: Vec<usize> = scored.into_iter().filter(|&(_, v)| v >= best - t).map(|(c, _)| c).collect();
    ties.sort_unstable();
    (ties, best)
}

/// `Σ mass_i · r_i`.
pub fn posterior_mean(post: &DensityGrid) -> Location {
    let (mut x, mut y) = (0.0, 0.0);
    for (p, &m) in post.grid().points().iter().zip(post.mass()) {
        x += m * p.x;
        y += m * p.y;
    }
    Location::new(x, y)
}

#[derive(Debug, Clone, Copy)]
struct Node {
    lb: f64,
    seq: usize,
    i0: usize,
    i1: usize,
    j0: usize,
    j1: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // min-heap on the lower bound, FIFO among equals
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb).then(other.seq.cmp(&self.seq))
    }
}

/// Branch and bound for the expected-distance argmin on a lattice.
///
/// The objective is Lipschitz with constant equal to the total mass, so a
/// rectangle whose representative scores `f` cannot contain anything below
/// `f - radius`. Rectangles whose bound clears the incumbent (plus the tie
/// tolerance) are dropped; survivors are bisected down to single points.
pub(crate) fn estimate_distance_bnb(post: &DensityGrid, lattice: &Lattice) -> Estimate {
    let grid = post.grid();
    let total = post.total();
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut eval = |ix: usize, iy: usize| -> (usize, f64) {
        let idx = lattice.index(ix, iy);
        let v = *cache
            .entry(idx)
            .or_insert_with(|| expected_cost(post, grid.point(idx), &CostFunction::Distance));
        (idx, v)
    };
    let radius = |ix: usize, iy: usize, n: &Node| -> f64 {
        let c = Location::new(lattice.xs[ix], lattice.ys[iy]);
        [(n.i0, n.j0), (n.i0, n.j1), (n.i1, n.j0), (n.i1, n.j1)]
            .iter()
            .map(|&(a, b)| c.distance(&Location::new(lattice.xs[a], lattice.ys[b])))
            .fold(0.0, f64::max)
    };

    let mut best = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let push = |n: Node,
                heap: &mut BinaryHeap<Node>,
                best: &mut f64,
                seq: &mut usize,
                eval: &mut dyn FnMut(usize, usize) -> (usize, f64)| {
        let (ix, iy) = ((n.i0 + n.i1) / 2, (n.j0 + n.j1) / 2);
        let (_, f) = eval(ix, iy);
        if f < *best {
            *best = f;
        }
        if n.i0 == n.i1 && n.j0 == n.j1 {
            return;
        }
        let lb = f - radius(ix, iy, &n) * total - 1e-12;
        if lb <= *best + tol(*best) {
            *seq += 1;
            heap.push(Node { lb, seq: *seq, ..n });
        }
    };
    let root = Node { lb: 0.0, seq: 0, i0: 0, i1: lattice.nx() - 1, j0: 0, j1: lattice.ny() - 1 };
    push(root, &mut heap, &mut best, &mut seq, &mut eval);
    while let Some(n) = heap.pop() {
        if n.lb > best + tol(best) {
            break;
        }
        let children = if n.i1 - n.i0 >= n.j1 - n.j0 {
            let m = (n.i0 + n.i1) / 2;
            [Node { i1: m, ..n }, Node { i0: m + 1, ..n }]
        } else {
            let m = (n.j0 + n.j1) / 2;
            [Node { j1: m, ..n }, Node { j0: m + 1, ..n }]
        };
        for c in children {
            push(c, &mut heap, &mut best, &mut seq, &mut eval);
        }
    }
    let t = tol(best);
    let mut ties: Vec<usize> = cache.iter().filter(|(_, &v)| v <= best + t).map(|(&i, _)| i).collect();
    ties.sort_unstable();
    let c = cache[&ties[0]];
    from_ties(post, ties, c)
}
