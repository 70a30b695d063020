//! Seed-reproducible path samplers on a uniform time grid.

mod walker;

pub use walker::{bridge_max, Step, StepPolicy, Trajectory, Walker};

use crate::error::{Error, Result};
use crate::rng::{aux_rng, rng_from_seed, SimRng};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Uniform grid `t_i = i * step`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    step: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(step: f64, n_steps: usize) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) || n_steps == 0 {
            return Err(Error::InvalidGrid { step, n_steps });
        }
        Ok(Self { step, n_steps })
    }

    /// Grid with step `dt` covering `[0, horizon]` (rounded up to a whole step).
    pub fn covering(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0 && dt > 0.0) {
            return Err(Error::InvalidGrid { step: dt, n_steps: 0 });
        }
        let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(dt, n)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.step * self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.step * i as f64
    }

    /// Number of grid points strictly before `t` (clamped to the grid).
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.step + 1e-9).floor().max(0.0) as usize).min(self.n_steps)
    }
}

/// A sampled time series: either a uniform [`Path`] or an adaptive [`Trajectory`].
pub trait TimeSeries {
    fn len(&self) -> usize;
    fn time(&self, i: usize) -> f64;
    fn value(&self, i: usize) -> f64;
    /// Seed that produced the series (used to derive auxiliary randomness).
    fn seed(&self) -> u64;
    /// Smallest step of the underlying mesh.
    fn base_step(&self) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// Dimension of the process the values were derived from (1, 2 or 3).
    pub dim: u8,
    pub seed: u64,
    pub start: f64,
}

impl Path {
    pub fn from_values(grid: TimeGrid, values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.len() != grid.n_steps + 1 {
            return Err(Error::InvalidGrid { step: grid.step, n_steps: values.len().saturating_sub(1) });
        }
        let start = values[0];
        Ok(Self { grid, values, dim: 1, seed, start })
    }

    pub fn step(&self) -> f64 {
        self.grid.step
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    /// Value at time `t`, linearly interpolated.
    pub fn at(&self, t: f64) -> f64 {
        let u = (t / self.grid.step).clamp(0.0, self.grid.n_steps as f64);
        let i = (u.floor() as usize).min(self.grid.n_steps - 1);
        let w = u - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

impl TimeSeries for Path {
    fn len(&self) -> usize {
        self.values.len()
    }
    fn time(&self, i: usize) -> f64 {
        self.grid.time(i)
    }
    fn value(&self, i: usize) -> f64 {
        self.values[i]
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn base_step(&self) -> f64 {
        self.grid.step
    }
}

/// One standard normal draw.
#[inline]
pub fn normal(rng: &mut SimRng) -> f64 {
    rng.sample(StandardNormal)
}

/// One uniform draw on `[0, 1)`.
#[inline]
pub fn uniform(rng: &mut SimRng) -> f64 {
    rng.random::<f64>()
}

pub(crate) fn brownian_values(grid: TimeGrid, start: f64, rng: &mut SimRng) -> Vec<f64> {
    let sd = grid.step.sqrt();
    let mut values = Vec::with_capacity(grid.n_steps + 1);
    let mut x = start;
    values.push(x);
    for _ in 0..grid.n_steps {
        x += sd * normal(rng);
        values.push(x);
    }
    values
}

pub fn sample_brownian(grid: TimeGrid, start: f64, seed: u64) -> Path {
    let mut rng = rng_from_seed(seed);
    Path { grid, values: brownian_values(grid, start, &mut rng), dim: 1, seed, start }
}

/// Brownian bridge from 0 to 0 over `[0, u]`; the grid horizon must equal `u`.
pub fn sample_bridge(u: f64, grid: TimeGrid, seed: u64) -> Result<Path> {
    if !(u > 0.0) {
        return Err(Error::param("u", u, "bridge length must be positive"));
    }
    if (grid.horizon() - u).abs() > 1e-9 * u {
        return Err(Error::HorizonMismatch { horizon: grid.horizon(), expected: u });
    }
    let mut rng = rng_from_seed(seed);
    let mut values = brownian_values(grid, 0.0, &mut rng);
    let end = values[grid.n_steps];
    for (i, v) in values.iter_mut().enumerate() {
        *v -= grid.time(i) / u * end;
    }
    values[grid.n_steps] = 0.0;
    Ok(Path { grid, values, dim: 1, seed, start: 0.0 })
}

/// Three-dimensional Bessel process as the norm of a 3-D Brownian motion.
pub fn sample_bes3(start: f64, grid: TimeGrid, seed: u64) -> Result<Path> {
    if !(start >= 0.0) {
        return Err(Error::param("start", start, "must be non-negative"));
    }
    let mut rng = rng_from_seed(seed);
    let sd = grid.step.sqrt();
    let (mut x, mut y, mut z) = (start, 0.0, 0.0);
    let mut values = Vec::with_capacity(grid.n_steps + 1);
    values.push(start);
    for _ in 0..grid.n_steps {
        x += sd * normal(&mut rng);
        y += sd * normal(&mut rng);
        z += sd * normal(&mut rng);
        values.push((x * x + y * y + z * z).sqrt());
    }
    Ok(Path { grid, values, dim: 3, seed, start })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesqMethod {
    /// Poisson mixture of Gamma variables: exact in law at every grid point.
    Exact,
    /// Euler–Maruyama with the square-root argument clamped at zero.
    Euler,
}

/// One exact BESQ(δ) transition over time `dt` from `x`.
pub fn besq_transition(delta: f64, x: f64, dt: f64, rng: &mut SimRng) -> f64 {
    let lambda = x / (2.0 * dt);
    let p = if lambda > 0.0 { Poisson::new(lambda).map(|d| d.sample(rng)).unwrap_or(0.0) } else { 0.0 };
    let shape = 0.5 * delta + p;
    if shape <= 0.0 {
        return 0.0;
    }
    Gamma::new(shape, 2.0 * dt).map(|d| d.sample(rng)).unwrap_or(0.0)
}

/// Squared Bessel process of dimension `delta` started at `x0`.
pub fn sample_besq(delta: f64, x0: f64, grid: TimeGrid, seed: u64, method: BesqMethod) -> Result<Path> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", delta, "dimension must be non-negative"));
    }
    if !(x0 >= 0.0) {
        return Err(Error::param("x0", x0, "must be non-negative"));
    }
    let mut rng = rng_from_seed(seed);
    let dt = grid.step;
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(grid.n_steps + 1);
    let mut z = x0;
    values.push(z);
    for _ in 0..grid.n_steps {
        z = match method {
            BesqMethod::Exact => besq_transition(delta, z, dt, &mut rng),
            BesqMethod::Euler => (z + delta * dt + 2.0 * z.max(0.0).sqrt() * sd * normal(&mut rng)).max(0.0),
        };
        values.push(z);
    }
    Ok(Path { grid, values, dim: 1, seed, start: x0 })
}

/// Euler–Maruyama for `dX = b(X) dt + σ(X) dB`.
pub fn sample_sde<B, S>(drift: B, sigma: S, x0: f64, grid: TimeGrid, seed: u64) -> Result<Path>
where
    B: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let mut rng = rng_from_seed(seed);
    let dt = grid.step;
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(grid.n_steps + 1);
    let mut x = x0;
    values.push(x);
    for step in 0..grid.n_steps {
        let b = drift(x);
        let s = sigma(x);
        if !b.is_finite() || !s.is_finite() {
            return Err(Error::NonFinite { step, x });
        }
        x += b * dt + s * sd * normal(&mut rng);
        if !x.is_finite() {
            return Err(Error::NonFinite { step, x });
        }
        values.push(x);
    }
    Ok(Path { grid, values, dim: 1, seed, start: x0 })
}

/// Walsh Brownian spider with `n_rays` rays chosen uniformly per excursion.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiderPath {
    pub radial: Path,
    /// Ray label (1-based) at each grid point.
    pub branch: Vec<u32>,
    pub n_rays: u32,
}

impl SpiderPath {
    /// For two rays: `+radial` on ray 1 and `-radial` on ray 2.
    pub fn signed(&self) -> Option<Path> {
        if self.n_rays != 2 {
            return None;
        }
        let mut p = self.radial.clone();
        for (v, b) in p.values.iter_mut().zip(&self.branch) {
            if *b == 2 {
                *v = -*v;
            }
        }
        Some(p)
    }
}

pub fn sample_spider(n_rays: u32, grid: TimeGrid, seed: u64) -> Result<SpiderPath> {
    if n_rays < 1 {
        return Err(Error::param("n_rays", n_rays as f64, "need at least one ray"));
    }
    let b = sample_brownian(grid, 0.0, seed);
    let mut labels = aux_rng(seed, 0);
    let mut branch = Vec::with_capacity(b.values.len());
    let mut label = labels.random_range(1..=n_rays);
    branch.push(label);
    for i in 1..b.values.len() {
        let prev = b.values[i - 1];
        let cur = b.values[i];
        // A new excursion starts whenever the driving path passes through zero,
        // including zeros the bridge touches between grid points.
        let touched = prev * cur > 0.0 && labels.random::<f64>() < (-2.0 * prev * cur / grid.step).exp();
        if prev == 0.0 || prev * cur < 0.0 || touched {
            label = labels.random_range(1..=n_rays);
        }
        branch.push(label);
    }
    let mut radial = b;
    for v in radial.values.iter_mut() {
        *v = v.abs();
    }
    Ok(SpiderPath { radial, branch, n_rays })
}

/// Halves the grid step by inserting Brownian-bridge midpoints.
pub fn refine_bridge(path: &Path, seed: u64) -> Path {
    let mut rng = rng_from_seed(seed);
    let half = path.grid.step / 2.0;
    let sd = (half / 2.0).sqrt();
    let mut values = Vec::with_capacity(2 * path.values.len() - 1);
    for w in path.values.windows(2) {
        values.push(w[0]);
        values.push(0.5 * (w[0] + w[1]) + sd * normal(&mut rng));
    }
    values.push(*path.values.last().expect("non-empty path"));
    Path {
        grid: TimeGrid::new(half, 2 * path.grid.n_steps).expect("valid grid"),
        values,
        dim: path.dim,
        seed: path.seed,
        start: path.start,
    }
}
