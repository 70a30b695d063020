//! Self-intersection local time of planar Brownian motion.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::paths::{brownian_values, TimeGrid};
use crate::quad::integrate;
use crate::rng::{aux_rng, replicate, rng_from_seed};
use crate::stats::{mean_se, MeanEstimate};

/// Largest number of grid points per path for the pair sum.
pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPath {
    pub grid: TimeGrid,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub seed: u64,
}

impl PlanarPath {
    pub fn from_values(grid: TimeGrid, xs: Vec<f64>, ys: Vec<f64>, seed: u64) -> Result<Self> {
        let n = grid.n_steps() + 1;
        if xs.len() != n || ys.len() != n {
            return Err(Error::InvalidGrid { step: grid.step(), n_steps: grid.n_steps() });
        }
        if xs[0] != 0.0 || ys[0] != 0.0 {
            return Err(Error::param("start", xs[0].hypot(ys[0]), "planar paths start at the origin"));
        }
        Ok(Self { grid, xs, ys, seed })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Restriction to `[0, t]`.
    pub fn truncate(&self, t: f64) -> Self {
        let k = self.grid.index_of(t.min(self.grid.horizon()));
        let grid = TimeGrid::new(self.grid.step(), k.max(1)).expect("sub-grid of a valid grid");
        let end = grid.n_steps() + 1;
        Self { grid, xs: self.xs[..end].to_vec(), ys: self.ys[..end].to_vec(), seed: self.seed }
    }
}

pub fn sample_planar(grid: TimeGrid, seed: u64) -> PlanarPath {
    let xs = brownian_values(grid, 0.0, &mut rng_from_seed(seed));
    let ys = brownian_values(grid, 0.0, &mut aux_rng(seed, 0));
    PlanarPath { grid, xs, ys, seed }
}

/// Product tent on `[-1, 1]²`, unit mass.
#[inline]
pub fn tent(x: f64, y: f64) -> f64 {
    (1.0 - x.abs()).max(0.0) * (1.0 - y.abs()).max(0.0)
}

#[inline]
fn mollifier(n: f64, dx: f64, dy: f64) -> f64 {
    n * n * tent(n * dx, n * dy)
}

fn check(path: &PlanarPath, n: f64) -> Result<()> {
    if !(n >= 1.0) {
        return Err(Error::param("n", n, "mollifier scale must be at least 1"));
    }
    if path.len() > MAX_POINTS + 1 {
        return Err(Error::param("points", path.len() as f64, "pair sum is capped at 4096 grid points"));
    }
    Ok(())
}

/// `Σ_{i<j} f_n(B_j - B_i - y) Δ²` over every pair.
pub fn intersection_estimate_pairs(path: &PlanarPath, y: [f64; 2], n: f64) -> Result<f64> {
    check(path, n)?;
    const BLOCK: usize = 256;
    let (xs, ys) = (&path.xs, &path.ys);
    let len = path.len();
    let mut total = 0.0;
    for ib in (0..len).step_by(BLOCK) {
        for jb in (ib..len).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(len) {
                let (bx, by) = (xs[i] + y[0], ys[i] + y[1]);
                let lo = jb.max(i + 1);
                for j in lo..(jb + BLOCK).min(len) {
                    total += mollifier(n, xs[j] - bx, ys[j] - by);
                }
            }
        }
    }
    let dt = path.grid.step();
    Ok(total * dt * dt)
}

/// Same sum as [`intersection_estimate_pairs`], visiting only pairs inside the
/// mollifier support through a grid of cells of side `1/n`.
pub fn intersection_estimate(path: &PlanarPath, y: [f64; 2], n: f64) -> Result<f64> {
    check(path, n)?;
    let cell = |v: f64| (v * n).floor() as i64;
    let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for j in 0..path.len() {
        buckets.entry((cell(path.xs[j]), cell(path.ys[j]))).or_default().push(j as u32);
    }
    let mut total = 0.0;
    for i in 0..path.len() {
        let (bx, by) = (path.xs[i] + y[0], path.ys[i] + y[1]);
        let (cx, cy) = (cell(bx), cell(by));
        for gx in cx - 1..=cx + 1 {
            for gy in cy - 1..=cy + 1 {
                let Some(list) = buckets.get(&(gx, gy)) else { continue };
                let from = list.partition_point(|&j| j as usize <= i);
                for &j in &list[from..] {
                    let j = j as usize;
                    total += mollifier(n, path.xs[j] - bx, path.ys[j] - by);
                }
            }
        }
    }
    let dt = path.grid.step();
    Ok(total * dt * dt)
}

/// `∫_0^t (t-u)/(2πu) exp(-|y|²/2u) du`.
pub fn expected_alpha(y: [f64; 2], t: f64) -> f64 {
    let r2 = y[0] * y[0] + y[1] * y[1];
    if t <= 0.0 {
        return 0.0;
    }
    if r2 == 0.0 {
        return f64::INFINITY;
    }
    let f = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            (t - u) / (2.0 * PI * u) * (-r2 / (2.0 * u)).exp()
        }
    };
    integrate(f, 0.0, t, 1e-12)
}

/// Monte Carlo mean of the estimator over `n_paths` independent paths.
pub fn mean_intersection(
    y: [f64; 2],
    t: f64,
    n: f64,
    points: usize,
    n_paths: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    let grid = TimeGrid::new(t / points as f64, points)?;
    let vals: Result<Vec<f64>> =
        replicate(n_paths, seed, |_, s| intersection_estimate(&sample_planar(grid, s), y, n)).into_iter().collect();
    Ok(mean_se(&vals?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: usize) -> PlanarPath {
        let grid = TimeGrid::new(1.0 / points as f64, points).unwrap();
        let xs = (0..=points).map(|i| grid.time(i)).collect();
        PlanarPath::from_values(grid, xs, vec![0.0; points + 1], 0).unwrap()
    }

    #[test]
    fn straight_line_closed_form() {
        // Pairs at lag r carry weight (1 - r); the tent is symmetric about r = 1/2.
        let p = line(4000);
        let est = intersection_estimate(&p, [0.5, 0.0], 10.0).unwrap();
        assert!((est / 5.0 - 1.0).abs() < 1e-3, "{est}");
    }

    #[test]
    fn hashing_matches_pair_loop() {
        let grid = TimeGrid::new(1.0 / 1000.0, 1000).unwrap();
        for seed in 0..3 {
            let p = sample_planar(grid, seed);
            for &(y, n) in &[([0.5, 0.0], 20.0), ([0.1, -0.2], 5.0), ([0.0, 0.0], 1.0)] {
                let a = intersection_estimate(&p, y, n).unwrap();
                let b = intersection_estimate_pairs(&p, y, n).unwrap();
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} {b}");
            }
        }
    }

    #[test]
    fn truncation_is_monotone() {
        let p = sample_planar(TimeGrid::new(1e-3, 1000).unwrap(), 9);
        let full = intersection_estimate(&p, [0.3, 0.0], 20.0).unwrap();
        let half = intersection_estimate(&p.truncate(0.5), [0.3, 0.0], 20.0).unwrap();
        assert!(full >= half && half >= 0.0);
    }

    #[test]
    fn expected_alpha_shape() {
        let a = |r: f64| expected_alpha([r, 0.0], 1.0);
        assert!(a(0.2) > a(0.5) && a(0.5) > a(1.0) && a(1.0) > a(2.0));
        assert!(a(20.0) < 1e-30);
        // Rotation invariance of the reference.
        assert!((expected_alpha([0.3, 0.4], 1.0) - a(0.5)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let p = line(10);
        assert!(intersection_estimate(&p, [0.5, 0.0], 0.5).is_err());
        let grid = TimeGrid::new(1.0, 1).unwrap();
        assert!(PlanarPath::from_values(grid, vec![1.0, 0.0], vec![0.0, 0.0], 0).is_err());
    }
}
