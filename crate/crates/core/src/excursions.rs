//! Excursion decomposition of sampled paths and excursion-counting estimators.
//!
//! Zeros are located from sign changes of consecutive samples. In
//! [`ZeroDetection::Bridge`] mode a step whose endpoints share a sign is also
//! declared to touch zero with the Brownian-bridge probability
//! `exp(-2 x0 x1 / dt)`, and excursion heights include a sampled bridge maximum
//! for each step. Both corrections use an auxiliary stream derived from the path
//! seed, so decompositions stay deterministic.

use crate::error::{Error, Result};
use crate::paths::{bridge_max, TimeSeries};
use crate::rng::aux_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ZeroDetection {
    SignChange,
    #[default]
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOptions {
    pub detection: ZeroDetection,
    /// Keep sample times and values of every excursion.
    pub keep_values: bool,
    /// Excursions shorter than this many base steps are treated as part of the zero set.
    pub min_steps: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { detection: ZeroDetection::Bridge, keep_values: true, min_steps: 2.0 }
    }
}

impl DecomposeOptions {
    pub fn summaries_only() -> Self {
        Self { keep_values: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excursion {
    pub start: f64,
    pub end: f64,
    pub sign: Sign,
    /// Supremum of the absolute value.
    pub height: f64,
    pub complete: bool,
    /// Sample times, including the bounding zeros when complete.
    pub times: Vec<f64>,
    /// Signed sample values matching `times`.
    pub values: Vec<f64>,
}

impl Excursion {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Supremum of the signed excursion (0 for negative excursions).
    pub fn signed_max(&self) -> f64 {
        match self.sign {
            Sign::Positive => self.height,
            Sign::Negative => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub excursions: Vec<Excursion>,
    /// Segment before the first zero when the series does not start at 0.
    pub leading: Option<Excursion>,
    /// Incomplete excursion in progress at the end of the series.
    pub boundary: Option<Excursion>,
    pub start: f64,
    pub end: f64,
    /// Number of short excursions absorbed into the zero set.
    pub merged: usize,
}

impl Decomposition {
    /// Total length of complete, leading and boundary pieces.
    pub fn covered_time(&self) -> f64 {
        self.excursions.iter().map(Excursion::length).sum::<f64>()
            + self.leading.as_ref().map_or(0.0, Excursion::length)
            + self.boundary.as_ref().map_or(0.0, Excursion::length)
    }
}

pub fn decompose<T: TimeSeries + ?Sized>(series: &T) -> Decomposition {
    decompose_with(series, &DecomposeOptions::default())
}

struct Zero {
    time: f64,
    /// First sample index after the zero.
    next: usize,
}

pub fn decompose_with<T: TimeSeries + ?Sized>(series: &T, opts: &DecomposeOptions) -> Decomposition {
    let n = series.len();
    let mut rng = aux_rng(series.seed(), 7);
    let bridge = opts.detection == ZeroDetection::Bridge;
    let mut zeros: Vec<Zero> = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let a = series.value(i);
        let b = series.value(i + 1);
        let t0 = series.time(i);
        let dt = series.time(i + 1) - t0;
        if a == 0.0 {
            zeros.push(Zero { time: t0, next: i + 1 });
        } else if a * b < 0.0 {
            zeros.push(Zero { time: t0 + dt * a / (a - b), next: i + 1 });
        } else if bridge && b != 0.0 {
            let p = (-2.0 * a * b / dt).exp();
            if p > 1e-12 && rng.random::<f64>() < p {
                zeros.push(Zero { time: t0 + dt * a.abs() / (a.abs() + b.abs()), next: i + 1 });
            }
        }
    }
    if n > 0 && series.value(n - 1) == 0.0 {
        zeros.push(Zero { time: series.time(n - 1), next: n });
    }

    let min_len = opts.min_steps * series.base_step();
    let build = |rng: &mut crate::rng::SimRng,
                 from: usize,
                 to: usize,
                 start: f64,
                 end: f64,
                 lead_zero: bool,
                 tail_zero: bool|
     -> Option<Excursion> {
        // Interior samples are indices from..to (exclusive) with non-zero value.
        let idx: Vec<usize> = (from..to).filter(|&j| series.value(j) != 0.0).collect();
        let first = *idx.first()?;
        let sign = if series.value(first) > 0.0 { Sign::Positive } else { Sign::Negative };
        let mut height = idx.iter().map(|&j| series.value(j).abs()).fold(0.0, f64::max);
        if bridge {
            for w in idx.windows(2) {
                let (j, k) = (w[0], w[1]);
                if k != j + 1 {
                    continue;
                }
                let a = series.value(j).abs();
                let b = series.value(k).abs();
                let dt = series.time(k) - series.time(j);
                if a.max(b) + 4.0 * dt.sqrt() > height {
                    height = height.max(bridge_max(a, b, dt, rng.random::<f64>()));
                }
            }
        }
        let (times, values) = if opts.keep_values {
            let mut times = Vec::with_capacity(idx.len() + 2);
            let mut values = Vec::with_capacity(idx.len() + 2);
            if lead_zero {
                times.push(start);
                values.push(0.0);
            }
            for &j in &idx {
                times.push(series.time(j));
                values.push(series.value(j));
            }
            if tail_zero {
                times.push(end);
                values.push(0.0);
            }
            (times, values)
        } else {
            (Vec::new(), Vec::new())
        };
        Some(Excursion { start, end, sign, height, complete: lead_zero && tail_zero, times, values })
    };

    let start = if n > 0 { series.time(0) } else { 0.0 };
    let end = if n > 0 { series.time(n - 1) } else { 0.0 };
    let mut excursions = Vec::new();
    let mut merged = 0;
    let leading = match zeros.first() {
        Some(z) if z.time > start => build(&mut rng, 0, z.next, start, z.time, false, true),
        None if n > 0 => build(&mut rng, 0, n, start, end, false, false),
        _ => None,
    };
    for w in zeros.windows(2) {
        let (z0, z1) = (&w[0], &w[1]);
        if z1.time - z0.time < min_len {
            merged += 1;
            continue;
        }
        match build(&mut rng, z0.next, z1.next, z0.time, z1.time, true, true) {
            Some(e) => excursions.push(e),
            None => merged += 1,
        }
    }
    let boundary =
        zeros.last().and_then(|z| if z.next < n { build(&mut rng, z.next, n, z.time, end, true, false) } else { None });
    Decomposition { excursions, leading, boundary, start, end, merged }
}

/// One point of an estimated Itô-measure tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub level: f64,
    pub count: u64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItoTail {
    /// `n(V ≥ v)` (excursions of either sign).
    pub length: Vec<TailPoint>,
    /// `n(sup ε ≥ a)` (positive excursions only).
    pub height: Vec<TailPoint>,
    pub total_local_time: f64,
    pub n_paths: usize,
}

/// Accumulates excursion counts against local time at 0.
#[derive(Debug, Clone)]
pub struct TailAccumulator {
    v_grid: Vec<f64>,
    a_grid: Vec<f64>,
    v_counts: Vec<u64>,
    a_counts: Vec<u64>,
    local_time: f64,
    n_paths: usize,
    /// Per-path counts, kept for dispersion checks.
    pub per_path_v: Vec<Vec<u64>>,
}

impl TailAccumulator {
    pub fn new(v_grid: &[f64], a_grid: &[f64]) -> Self {
        Self {
            v_grid: v_grid.to_vec(),
            a_grid: a_grid.to_vec(),
            v_counts: vec![0; v_grid.len()],
            a_counts: vec![0; a_grid.len()],
            local_time: 0.0,
            n_paths: 0,
            per_path_v: Vec::new(),
        }
    }

    pub fn add(&mut self, d: &Decomposition, local_time: f64) {
        let mut row = vec![0u64; self.v_grid.len()];
        for e in &d.excursions {
            let v = e.length();
            for (k, &lv) in self.v_grid.iter().enumerate() {
                if v >= lv {
                    row[k] += 1;
                }
            }
            let m = e.signed_max();
            for (k, &la) in self.a_grid.iter().enumerate() {
                if m >= la {
                    self.a_counts[k] += 1;
                }
            }
        }
        for (c, r) in self.v_counts.iter_mut().zip(&row) {
            *c += r;
        }
        self.per_path_v.push(row);
        self.local_time += local_time;
        self.n_paths += 1;
    }

    pub fn finish(&self) -> Result<ItoTail> {
        if self.n_paths == 0 || !(self.local_time > 1e-9 * self.n_paths as f64) {
            return Err(Error::Degenerate("local time at zero is too small".into()));
        }
        let pts = |grid: &[f64], counts: &[u64]| {
            grid.iter()
                .zip(counts)
                .map(|(&level, &count)| TailPoint { level, count, estimate: count as f64 / self.local_time })
                .collect()
        };
        Ok(ItoTail {
            length: pts(&self.v_grid, &self.v_counts),
            height: pts(&self.a_grid, &self.a_counts),
            total_local_time: self.local_time,
            n_paths: self.n_paths,
        })
    }
}

/// `n̂(V ≥ v) = Σ counts / Σ L` and `n̂(M ≥ a)` likewise, over a set of paths.
pub fn ito_tail_estimates(samples: &[(Decomposition, f64)], v_grid: &[f64], a_grid: &[f64]) -> Result<ItoTail> {
    let mut acc = TailAccumulator::new(v_grid, a_grid);
    for (d, l) in samples {
        acc.add(d, *l);
    }
    acc.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Straddle {
    pub excursion: Excursion,
    pub g: f64,
    pub d: Option<f64>,
    /// The series had not yet visited 0 at time `t`.
    pub before_first_zero: bool,
}

/// The excursion containing time `t`.
pub fn straddling_excursion<T: TimeSeries + ?Sized>(series: &T, t: f64) -> Result<Straddle> {
    let d = decompose(series);
    straddle_in(&d, t)
}

pub fn straddle_in(d: &Decomposition, t: f64) -> Result<Straddle> {
    if let Some(l) = &d.leading {
        if t < l.end {
            return Ok(Straddle {
                excursion: l.clone(),
                g: l.start,
                d: l.complete.then_some(l.end),
                before_first_zero: true,
            });
        }
    }
    let k = d.excursions.partition_point(|e| e.end <= t);
    if let Some(e) = d.excursions.get(k) {
        if e.start <= t {
            return Ok(Straddle { excursion: e.clone(), g: e.start, d: Some(e.end), before_first_zero: false });
        }
    }
    if let Some(b) = &d.boundary {
        if b.start <= t {
            return Ok(Straddle { excursion: b.clone(), g: b.start, d: None, before_first_zero: false });
        }
    }
    Err(Error::Degenerate(format!("t = {t} lies in the zero set")))
}

/// Rescales a complete excursion to unit length: `s ↦ ε(sV)/√V`.
pub fn normalized_shape(e: &Excursion) -> Result<Excursion> {
    if !e.complete {
        return Err(Error::IncompleteExcursion);
    }
    let v = e.length();
    let sv = v.sqrt();
    Ok(Excursion {
        start: 0.0,
        end: 1.0,
        sign: e.sign,
        height: e.height / sv,
        complete: true,
        times: e.times.iter().map(|s| (s - e.start) / v).collect(),
        values: e.values.iter().map(|x| x / sv).collect(),
    })
}

/// Where to stop when looking for the longest excursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Upto {
    /// Complete excursions finished by the last zero before `t`.
    LastZeroBefore(f64),
    /// Complete excursions finished by the first zero after `t`.
    FirstZeroAfter(f64),
    /// Everything in the series, including the boundary piece.
    End,
}

pub fn longest_excursion<T: TimeSeries + ?Sized>(series: &T, upto: Upto) -> f64 {
    longest_in(&decompose_with(series, &DecomposeOptions::summaries_only()), upto)
}

pub fn longest_in(d: &Decomposition, upto: Upto) -> f64 {
    let cutoff = match upto {
        Upto::End => {
            let b = d.boundary.as_ref().map_or(0.0, Excursion::length);
            return d.excursions.iter().map(Excursion::length).fold(b, f64::max);
        }
        Upto::LastZeroBefore(t) => match straddle_in(d, t) {
            Ok(s) => s.g,
            Err(_) => t,
        },
        Upto::FirstZeroAfter(t) => match straddle_in(d, t) {
            Ok(s) => s.d.unwrap_or(f64::INFINITY),
            Err(_) => t,
        },
    };
    d.excursions.iter().filter(|e| e.end <= cutoff).map(Excursion::length).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{sample_brownian, Path, TimeGrid};

    fn path_of(values: Vec<f64>, dt: f64) -> Path {
        let g = TimeGrid::new(dt, values.len() - 1).unwrap();
        Path::from_values(g, values, 1).unwrap()
    }

    #[test]
    fn lengths_tile_the_horizon() {
        let p = sample_brownian(TimeGrid::new(1e-3, 5000).unwrap(), 0.0, 3);
        for det in [ZeroDetection::SignChange, ZeroDetection::Bridge] {
            let d = decompose_with(&p, &DecomposeOptions { detection: det, keep_values: true, min_steps: 0.0 });
            assert!((d.covered_time() - 5.0).abs() < 1e-9, "{det:?}");
            assert_eq!(d.merged, 0);
            for e in &d.excursions {
                assert!(e.height >= e.values.iter().map(|v| v.abs()).fold(0.0, f64::max));
                let s = match e.sign {
                    Sign::Positive => 1.0,
                    Sign::Negative => -1.0,
                };
                assert!(e.values.iter().all(|v| v * s >= 0.0));
            }
        }
    }

    #[test]
    fn single_positive_bump() {
        let p = path_of(vec![0.0, 1.0, 2.0, 1.0, 0.0], 1.0);
        let d = decompose_with(&p, &DecomposeOptions { detection: ZeroDetection::SignChange, ..Default::default() });
        assert_eq!(d.excursions.len(), 1);
        let e = &d.excursions[0];
        assert_eq!((e.start, e.end), (0.0, 4.0));
        assert_eq!(e.height, 2.0);
        assert!(d.boundary.is_none() && d.leading.is_none());
        let s = normalized_shape(e).unwrap();
        assert_eq!(s.end, 1.0);
        assert_eq!(s.height, 1.0);
    }

    #[test]
    fn boundary_is_incomplete() {
        let p = path_of(vec![0.0, 1.0, -1.0, -2.0], 1.0);
        let d = decompose_with(
            &p,
            &DecomposeOptions { detection: ZeroDetection::SignChange, min_steps: 0.0, keep_values: true },
        );
        let b = d.boundary.as_ref().unwrap();
        assert!(!b.complete);
        assert_eq!(b.sign, Sign::Negative);
        assert!(normalized_shape(b).is_err());
        let s = straddle_in(&d, 2.5).unwrap();
        assert!(s.d.is_none());
        assert!((s.g - 1.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_tail_is_an_error() {
        let d = decompose(&path_of(vec![0.0, 1.0, 0.0], 1.0));
        assert!(ito_tail_estimates(&[(d, 0.0)], &[0.1], &[0.1]).is_err());
    }

    #[test]
    fn longest_before_and_after() {
        // Excursions on [0,2], [2,3], [3,7).
        let p = path_of(vec![0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 2.0, 1.0, 0.0], 0.5);
        let d = decompose_with(
            &p,
            &DecomposeOptions { detection: ZeroDetection::SignChange, min_steps: 0.0, keep_values: false },
        );
        assert_eq!(d.excursions.len(), 3);
        assert_eq!(longest_in(&d, Upto::LastZeroBefore(2.5)), 1.0);
        assert_eq!(longest_in(&d, Upto::FirstZeroAfter(2.5)), 2.0);
        assert_eq!(longest_in(&d, Upto::End), 2.0);
    }
}
