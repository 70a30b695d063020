//! Goodness-of-fit, moment and regression tests.

use crate::error::{Error, Result};
use crate::special::{kolmogorov_sf, norm_quantile, norm_sf};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-experiment significance level.
pub const ALPHA: f64 = 1e-3;

/// Default bias tolerance for statistics that involve local-time or zero-set estimates.
pub const GRID_BIAS_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Detail {
    Bool(bool),
    Num(f64),
    Text(String),
    List(Vec<f64>),
}

impl From<f64> for Detail {
    fn from(v: f64) -> Self {
        Detail::Num(v)
    }
}
impl From<usize> for Detail {
    fn from(v: usize) -> Self {
        Detail::Num(v as f64)
    }
}
impl From<bool> for Detail {
    fn from(v: bool) -> Self {
        Detail::Bool(v)
    }
}
impl From<&str> for Detail {
    fn from(v: &str) -> Self {
        Detail::Text(v.to_string())
    }
}
impl From<String> for Detail {
    fn from(v: String) -> Self {
        Detail::Text(v)
    }
}
impl From<Vec<f64>> for Detail {
    fn from(v: Vec<f64>) -> Self {
        Detail::List(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub experiment: String,
    pub statistic: f64,
    /// Absent for pure tolerance checks.
    pub p_value: Option<f64>,
    pub passed: bool,
    pub n: Vec<usize>,
    pub seed: u64,
    pub runtime_ms: u64,
    pub details: BTreeMap<String, Detail>,
}

impl TestReport {
    pub fn new(
        experiment: impl Into<String>,
        statistic: f64,
        p_value: Option<f64>,
        passed: bool,
        n: Vec<usize>,
    ) -> Self {
        Self {
            experiment: experiment.into(),
            statistic,
            p_value,
            passed,
            n,
            seed: 0,
            runtime_ms: 0,
            details: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Detail>) -> Self {
        self.details.insert(key.into(), value.into());
        self
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<Detail>) {
        self.details.insert(key.into(), value.into());
    }

    pub fn named(mut self, experiment: impl Into<String>) -> Self {
        self.experiment = experiment.into();
        self
    }

    pub fn detail_num(&self, key: &str) -> Option<f64> {
        match self.details.get(key) {
            Some(Detail::Num(v)) => Some(*v),
            _ => None,
        }
    }
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn ks_p(d: f64, bias_tolerance: f64, n_eff: f64) -> (f64, f64) {
    let d_adj = (d - bias_tolerance).max(0.0);
    (d_adj, kolmogorov_sf(n_eff.sqrt() * d_adj))
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64], bias_tolerance: f64) -> Result<TestReport> {
    const MIN: usize = 50;
    if a.len() < MIN || b.len() < MIN {
        return Err(Error::SampleTooSmall { got: a.len().min(b.len()), min: MIN });
    }
    let (sa, sb) = (sorted(a), sorted(b));
    let (n, m) = (sa.len(), sb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = sa[i].min(sb[j]);
        while i < n && sa[i] <= x {
            i += 1;
        }
        while j < m && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    let (d_adj, p) = ks_p(d, bias_tolerance, n_eff);
    Ok(TestReport::new("ks_two_sample", d, Some(p), p > ALPHA, vec![n, m])
        .with("d_adjusted", d_adj)
        .with("bias_tolerance", bias_tolerance))
}

/// One-sample Kolmogorov–Smirnov test against a CDF (atoms allowed).
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F, bias_tolerance: f64) -> Result<TestReport> {
    const MIN: usize = 50;
    if sample.len() < MIN {
        return Err(Error::SampleTooSmall { got: sample.len(), min: MIN });
    }
    let s = sorted(sample);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let below = i as f64 / n;
        while i < s.len() && s[i] <= x {
            i += 1;
        }
        let at = i as f64 / n;
        let left = cdf(x - 1e-12 * x.abs().max(1.0));
        d = d.max((at - cdf(x)).abs()).max((left - below).abs());
    }
    let (d_adj, p) = ks_p(d, bias_tolerance, n);
    Ok(TestReport::new("ks_one_sample", d, Some(p), p > ALPHA, vec![s.len()])
        .with("d_adjusted", d_adj)
        .with("bias_tolerance", bias_tolerance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

pub fn mean_se(sample: &[f64]) -> MeanEstimate {
    let n = sample.len();
    if n == 0 {
        return MeanEstimate { mean: f64::NAN, std_error: f64::NAN, n };
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    MeanEstimate { mean, std_error: (var / n as f64).sqrt(), n }
}

/// z-test of a sample mean against a target.
pub fn moment_test(sample: &[f64], target: f64, se_mult: f64) -> Result<TestReport> {
    if sample.len() < 2 {
        return Err(Error::SampleTooSmall { got: sample.len(), min: 2 });
    }
    let m = mean_se(sample);
    let gap = m.mean - target;
    let (z, p) = if m.std_error > 0.0 {
        let z = gap / m.std_error;
        (z, 2.0 * norm_sf(z.abs()))
    } else if gap.abs() <= 1e-12 * (1.0 + target.abs()) {
        (0.0, 1.0)
    } else {
        (f64::INFINITY * gap.signum(), 0.0)
    };
    Ok(TestReport::new("moment_test", z, Some(p), z.abs() <= se_mult, vec![sample.len()])
        .with("mean", m.mean)
        .with("std_error", m.std_error)
        .with("target", target)
        .with("se_mult", se_mult))
}

/// Relative-tolerance check `|value / target - 1| ≤ rel_tol`.
pub fn tolerance_test(name: &str, value: f64, target: f64, rel_tol: f64) -> TestReport {
    let rel = (value / target - 1.0).abs();
    TestReport::new(name, rel, None, rel <= rel_tol, vec![])
        .with("value", value)
        .with("target", target)
        .with("rel_tol", rel_tol)
}

/// Multiplier after Bonferroni adjustment of a two-sided `se_mult` test over `k` points.
pub fn bonferroni_multiplier(se_mult: f64, k: usize) -> f64 {
    if k <= 1 {
        return se_mult;
    }
    let alpha = 2.0 * norm_sf(se_mult);
    norm_quantile(1.0 - alpha / (2.0 * k as f64))
}

/// Compares the empirical Laplace transform with `transform` on a grid.
pub fn laplace_grid_test<F: Fn(f64) -> f64>(
    sample: &[f64],
    transform: F,
    grid: &[f64],
    se_mult: f64,
    allowance: f64,
) -> Result<TestReport> {
    if sample.len() < 2 {
        return Err(Error::SampleTooSmall { got: sample.len(), min: 2 });
    }
    let mult = bonferroni_multiplier(se_mult, grid.len());
    let mut passed = true;
    let mut worst: f64 = 0.0;
    let mut min_p: f64 = 1.0;
    let mut emp = Vec::new();
    let mut th = Vec::new();
    let mut zs = Vec::new();
    for &lam in grid {
        let w: Vec<f64> = sample.iter().map(|x| (-lam * x).exp()).collect();
        let m = mean_se(&w);
        let target = transform(lam);
        let gap = (m.mean - target).abs();
        let z = if m.std_error > 0.0 {
            gap / m.std_error
        } else if gap > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        passed &= gap <= mult * m.std_error + allowance;
        worst = worst.max(z);
        min_p = min_p.min(2.0 * norm_sf(z));
        emp.push(m.mean);
        th.push(target);
        zs.push(z);
    }
    let p = (min_p * grid.len() as f64).min(1.0);
    Ok(TestReport::new("laplace_grid_test", worst, Some(p), passed, vec![sample.len()])
        .with("lambda", grid.to_vec())
        .with("empirical", emp)
        .with("theoretical", th)
        .with("z", zs)
        .with("multiplier", mult)
        .with("allowance", allowance))
}

/// Index of dispersion check for Poisson counts: variance/mean in [0.9, 1.1].
pub fn dispersion_test(counts: &[u64]) -> Result<TestReport> {
    if counts.len() < 2 {
        return Err(Error::SampleTooSmall { got: counts.len(), min: 2 });
    }
    let x: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let m = mean_se(&x);
    if !(m.mean > 0.0) {
        return Err(Error::Degenerate("all counts are zero".into()));
    }
    let var = m.std_error.powi(2) * x.len() as f64;
    let ratio = var / m.mean;
    Ok(TestReport::new("dispersion_test", ratio, None, (0.9..=1.1).contains(&ratio), vec![counts.len()])
        .with("mean", m.mean)
        .with("variance", var))
}

/// Pearson correlation; passes when `|r| ≤ 4/√N`.
pub fn correlation_test(a: &[f64], b: &[f64]) -> Result<TestReport> {
    let n = a.len().min(b.len());
    if n < 3 {
        return Err(Error::SampleTooSmall { got: n, min: 3 });
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (da, db) = (a[k] - ma, b[k] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    let r = sab / (saa * sbb).sqrt();
    let bound = 4.0 / (n as f64).sqrt();
    Ok(TestReport::new("correlation_test", r, None, r.abs() <= bound, vec![n]).with("bound", bound))
}

/// Bins `x` over `range`, compares the bin mean of `y` with the bin mean of
/// `model(x)` within 4 binomial standard errors. Bins with fewer than 30
/// observations are skipped. The statistic is the largest absolute gap.
pub fn regression_bin_test<F: Fn(f64) -> f64>(
    x: &[f64],
    y: &[f64],
    model: F,
    bins: usize,
    range: (f64, f64),
) -> Result<TestReport> {
    if x.len() != y.len() || x.len() < 30 || bins == 0 {
        return Err(Error::SampleTooSmall { got: x.len().min(y.len()), min: 30 });
    }
    let (lo, hi) = range;
    let w = (hi - lo) / bins as f64;
    let mut cnt = vec![0usize; bins];
    let mut sy = vec![0.0; bins];
    let mut sm = vec![0.0; bins];
    for (&xi, &yi) in x.iter().zip(y) {
        if xi < lo || xi > hi {
            continue;
        }
        let k = (((xi - lo) / w) as usize).min(bins - 1);
        cnt[k] += 1;
        sy[k] += yi;
        sm[k] += model(xi);
    }
    let mut passed = true;
    let mut worst: f64 = 0.0;
    let mut gaps = Vec::with_capacity(bins);
    for k in 0..bins {
        if cnt[k] < 30 {
            gaps.push(f64::NAN);
            continue;
        }
        let n = cnt[k] as f64;
        let (ey, em) = (sy[k] / n, sm[k] / n);
        let se = (em.clamp(1e-6, 1.0 - 1e-6) * (1.0 - em.clamp(1e-6, 1.0 - 1e-6)) / n).sqrt();
        let gap = ey - em;
        passed &= gap.abs() <= 4.0 * se;
        worst = worst.max(gap.abs());
        gaps.push(gap);
    }
    Ok(TestReport::new("regression_bin_test", worst, None, passed, vec![x.len()])
        .with("bin_gaps", gaps)
        .with("bins", bins))
}

/// Marks a report as passed only if every part passed; statistic is taken from the first.
pub fn all_of(name: &str, parts: Vec<TestReport>) -> TestReport {
    let passed = parts.iter().all(|r| r.passed);
    let p = parts.iter().filter_map(|r| r.p_value).fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.min(p))));
    let statistic = parts.first().map_or(f64::NAN, |r| r.statistic);
    let n = parts.iter().flat_map(|r| r.n.iter().copied()).collect();
    let mut out = TestReport::new(name, statistic, p, passed, n);
    for part in parts {
        let prefix = part.experiment.clone();
        out.note(format!("{prefix}.passed"), part.passed);
        out.note(format!("{prefix}.statistic"), part.statistic);
        if let Some(p) = part.p_value {
            out.note(format!("{prefix}.p_value"), p);
        }
        for (k, v) in part.details {
            out.details.insert(format!("{prefix}.{k}"), v);
        }
    }
    out
}
