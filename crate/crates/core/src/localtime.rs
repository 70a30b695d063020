//! Local-time estimators and elementary path functionals.

use crate::error::{Error, Result};
use crate::paths::{Path, TimeGrid};
use serde::{Deserialize, Serialize};

/// Placement of the occupation window around the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Window {
    /// `[x, x + ε)`.
    #[default]
    Right,
    /// `[x - ε/2, x + ε/2)`; bias is second order in ε.
    Centered,
}

impl Window {
    #[inline]
    pub fn bounds(self, x: f64, eps: f64) -> (f64, f64) {
        match self {
            Window::Right => (x, x + eps),
            Window::Centered => (x - 0.5 * eps, x + 0.5 * eps),
        }
    }
}

/// Default bandwidth for a grid step `dt`.
pub fn default_bandwidth(dt: f64) -> f64 {
    dt.powf(0.4)
}

fn check(path: &Path, t: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", eps, "bandwidth must be positive"));
    }
    if !(t >= 0.0) || t > path.horizon() * (1.0 + 1e-12) {
        return Err(Error::param("t", t, "time must lie in [0, horizon]"));
    }
    Ok(path.grid.index_of(t))
}

/// Occupation-density estimate `(1/ε) Σ Δ 1{x ≤ X_i < x + ε}` over grid points before `t`.
pub fn occupation_local_time(path: &Path, x: f64, t: f64, eps: f64) -> Result<f64> {
    occupation_local_time_in(path, x, t, eps, Window::Right)
}

pub fn centered_local_time(path: &Path, x: f64, t: f64, eps: f64) -> Result<f64> {
    occupation_local_time_in(path, x, t, eps, Window::Centered)
}

pub fn occupation_local_time_in(path: &Path, x: f64, t: f64, eps: f64, window: Window) -> Result<f64> {
    let n = check(path, t, eps)?;
    let (lo, hi) = window.bounds(x, eps);
    let hits = path.values[..n].iter().filter(|v| **v >= lo && **v < hi).count();
    Ok(hits as f64 * path.step() / eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TanakaEstimate {
    /// Unclamped value (may be slightly negative on coarse grids).
    pub raw: f64,
    pub value: f64,
}

/// `2[(X_t - x)^+ - (X_0 - x)^+ - Σ 1{X_i > x}(X_{i+1} - X_i)]`.
pub fn tanaka_local_time(path: &Path, x: f64, t: f64) -> Result<TanakaEstimate> {
    let n = check(path, t, 1.0)?;
    let v = &path.values;
    let mut integral = 0.0;
    for i in 0..n {
        if v[i] > x {
            integral += v[i + 1] - v[i];
        }
    }
    let raw = 2.0 * ((v[n] - x).max(0.0) - (v[0] - x).max(0.0) - integral);
    Ok(TanakaEstimate { raw, value: raw.max(0.0) })
}

/// First grid time at which the occupation estimate at 0 exceeds `l`
/// (`Some(0)` for `l = 0`, `None` if the horizon is reached first).
pub fn inverse_local_time(path: &Path, l: f64, eps: f64) -> Result<Option<f64>> {
    inverse_local_time_in(path, l, eps, Window::Right)
}

pub fn inverse_local_time_in(path: &Path, l: f64, eps: f64, window: Window) -> Result<Option<f64>> {
    if !(l >= 0.0) {
        return Err(Error::param("l", l, "local-time level must be non-negative"));
    }
    check(path, 0.0, eps)?;
    if l == 0.0 {
        return Ok(Some(0.0));
    }
    let mut meter = OccupationMeter::new(0.0, eps, window);
    for (i, v) in path.values.iter().enumerate().take(path.grid.n_steps()) {
        meter.observe(*v, path.step());
        if meter.local_time() > l {
            return Ok(Some(path.grid.time(i + 1)));
        }
    }
    Ok(None)
}

/// Streaming occupation-density accumulator for a single level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationMeter {
    lo: f64,
    hi: f64,
    eps: f64,
    time: f64,
}

impl OccupationMeter {
    pub fn new(x: f64, eps: f64, window: Window) -> Self {
        let (lo, hi) = window.bounds(x, eps);
        Self { lo, hi, eps, time: 0.0 }
    }

    /// Records that the process sat at `x` for a duration `dt`.
    #[inline]
    pub fn observe(&mut self, x: f64, dt: f64) {
        if x >= self.lo && x < self.hi {
            self.time += dt;
        }
    }

    pub fn occupation(&self) -> f64 {
        self.time
    }

    pub fn local_time(&self) -> f64 {
        self.time / self.eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    pub t: f64,
    /// Last zero before `t` (0 if the path has no zero in `(0, t]`).
    pub g_t: f64,
    /// First zero after `t`, if one occurs before the horizon.
    pub d_t: Option<f64>,
    pub sup: f64,
    pub inf: f64,
    /// Time spent positive before `t` (linear interpolation between grid points).
    pub a_plus: f64,
    /// Centered occupation estimate of the local time at 0 with the default bandwidth.
    pub l0: f64,
}

/// Zero crossing time inside step `i` if the linear interpolant vanishes there.
#[inline]
pub(crate) fn crossing_in_step(grid: &TimeGrid, v: &[f64], i: usize) -> Option<f64> {
    let (a, b) = (v[i], v[i + 1]);
    if a == 0.0 {
        Some(grid.time(i))
    } else if a * b < 0.0 {
        Some(grid.time(i) + grid.step() * a / (a - b))
    } else {
        None
    }
}

/// Positive time within one linear step.
#[inline]
fn positive_fraction(a: f64, b: f64) -> f64 {
    match (a > 0.0 || (a == 0.0 && b > 0.0), b > 0.0 || (b == 0.0 && a > 0.0)) {
        (true, true) => 1.0,
        (false, false) => 0.0,
        _ => {
            if a > 0.0 {
                a / (a - b)
            } else {
                b / (b - a)
            }
        }
    }
}

pub fn path_functionals(path: &Path, t: f64) -> Result<PathFunctionals> {
    let n = check(path, t, 1.0)?;
    let v = &path.values;
    let grid = &path.grid;
    let mut g_t = 0.0;
    let mut sup = v[0];
    let mut inf = v[0];
    let mut a_plus = 0.0;
    for i in 0..n {
        if let Some(z) = crossing_in_step(grid, v, i) {
            g_t = z;
        }
        a_plus += grid.step() * positive_fraction(v[i], v[i + 1]);
        sup = sup.max(v[i + 1]);
        inf = inf.min(v[i + 1]);
    }
    if v[n] == 0.0 {
        g_t = grid.time(n);
    }
    let mut d_t = None;
    for i in n..grid.n_steps() {
        if v[i] == 0.0 && i > n {
            d_t = Some(grid.time(i));
            break;
        }
        if v[i] * v[i + 1] < 0.0 {
            d_t = Some(grid.time(i) + grid.step() * v[i] / (v[i] - v[i + 1]));
            break;
        }
        if v[i + 1] == 0.0 {
            d_t = Some(grid.time(i + 1));
            break;
        }
    }
    let eps = default_bandwidth(grid.step());
    let l0 = centered_local_time(path, 0.0, t, eps)?;
    Ok(PathFunctionals { t, g_t, d_t, sup, inf, a_plus, l0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeCurve {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub eps: f64,
    pub window: Window,
}

impl LocalTimeCurve {
    /// Riemann sum of the curve over an equally spaced level grid.
    pub fn integral(&self) -> f64 {
        if self.levels.len() < 2 {
            return 0.0;
        }
        let h = self.levels[1] - self.levels[0];
        self.values.iter().sum::<f64>() * h
    }
}

/// Occupation estimates at each level (right windows).
pub fn local_time_curve(path: &Path, levels: &[f64], t: f64, eps: f64) -> Result<LocalTimeCurve> {
    local_time_curve_in(path, levels, t, eps, Window::Right)
}

pub fn local_time_curve_in(path: &Path, levels: &[f64], t: f64, eps: f64, window: Window) -> Result<LocalTimeCurve> {
    let n = check(path, t, eps)?;
    let mut values = vec![0.0; levels.len()];
    let sorted = levels.windows(2).all(|w| w[0] <= w[1]);
    for &x in &path.values[..n] {
        if sorted {
            let first = levels.partition_point(|l| window.bounds(*l, eps).1 <= x);
            for j in first..levels.len() {
                let (lo, hi) = window.bounds(levels[j], eps);
                if lo > x {
                    break;
                }
                if x < hi {
                    values[j] += 1.0;
                }
            }
        } else {
            for (j, &l) in levels.iter().enumerate() {
                let (lo, hi) = window.bounds(l, eps);
                if x >= lo && x < hi {
                    values[j] += 1.0;
                }
            }
        }
    }
    let scale = path.step() / eps;
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(LocalTimeCurve { levels: levels.to_vec(), values, eps, window })
}

/// Draws the local time at `level` accumulated by a Brownian bridge from `x0`
/// to `x1` over `dt`, using `P(L > l) = exp(-((|x0-a| + |x1-a| + l)² - (x1-x0)²) / 2dt)`.
#[inline]
pub fn bridge_local_time_increment(x0: f64, x1: f64, dt: f64, level: f64, u: f64) -> f64 {
    let r = ((x1 - x0).powi(2) - 2.0 * dt * u.max(f64::MIN_POSITIVE).ln()).sqrt();
    (r - (x0 - level).abs() - (x1 - level).abs()).max(0.0)
}

/// Streaming local time at one level, sampled exactly given the skeleton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeMeter {
    pub level: f64,
    value: f64,
}

impl BridgeMeter {
    pub fn new(level: f64) -> Self {
        Self { level, value: 0.0 }
    }

    /// Adds the step `x0 → x1` of length `dt`; `u` is a fresh uniform.
    #[inline]
    pub fn observe(&mut self, x0: f64, x1: f64, dt: f64, u: f64) {
        self.value += bridge_local_time_increment(x0, x1, dt, self.level, u);
    }

    pub fn local_time(&self) -> f64 {
        self.value
    }
}

/// Local time at `x` up to grid time `t`, sampled step by step from the bridge
/// law with uniforms from the auxiliary stream of the path seed.
pub fn bridge_local_time(path: &Path, x: f64, t: f64) -> Result<f64> {
    use rand::Rng;
    let k = check(path, t, 1.0)?;
    let mut rng = crate::rng::aux_rng(path.seed, 3);
    let dt = path.grid.step();
    let mut m = BridgeMeter::new(x);
    for w in path.values[..=k].windows(2) {
        m.observe(w[0], w[1], dt, rng.random::<f64>());
    }
    Ok(m.local_time())
}
