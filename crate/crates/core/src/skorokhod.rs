//! Azéma–Yor embedding of a centred law into Brownian motion.

use crate::error::{Error, Result};
use crate::paths::{normal, uniform};
use crate::rng::{replicate, rng_from_seed};
use crate::stats::{ks_one_sample, TestReport};

/// Number of quantile nodes used for continuous targets.
pub const QUANTILE_NODES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    /// Sorted `(value, probability)` pairs.
    Atoms(Vec<(f64, f64)>),
    /// Quantile function at `u_j = j / (len - 1)`, with cumulative trapezoid
    /// integrals `∫_0^{u_j} q(u) du`.
    Quantile { q: Vec<f64>, cum: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetMeasure {
    pub repr: Representation,
    pub mean: f64,
    pub variance: f64,
}

impl TargetMeasure {
    pub fn atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|(v, p)| !v.is_finite() || !(*p >= 0.0)) {
            return Err(Error::InvalidTarget("atoms need finite values and non-negative weights".into()));
        }
        let total: f64 = atoms.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidTarget(format!("probabilities sum to {total}")));
        }
        atoms.retain(|(_, p)| *p > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mean: f64 = atoms.iter().map(|(v, p)| v * p).sum();
        let variance: f64 = atoms.iter().map(|(v, p)| (v - mean).powi(2) * p).sum();
        Self::checked(Representation::Atoms(atoms), mean, variance)
    }

    /// Centred two-point law on `{-a, b}`.
    pub fn two_point(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidTarget("two-point law needs a, b > 0".into()));
        }
        Self::atoms(vec![(-a, b / (a + b)), (b, a / (a + b))])
    }

    /// Law given by a non-decreasing quantile function on `[0, 1]`.
    pub fn from_quantile<F: Fn(f64) -> f64>(quantile: F, nodes: usize) -> Result<Self> {
        let n = nodes.max(2);
        let q: Vec<f64> = (0..=n).map(|j| quantile(j as f64 / n as f64)).collect();
        if q.iter().any(|v| !v.is_finite()) || q.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidTarget("quantile must be finite and non-decreasing".into()));
        }
        let h = 1.0 / n as f64;
        let mut cum = vec![0.0; n + 1];
        for j in 1..=n {
            cum[j] = cum[j - 1] + 0.5 * h * (q[j - 1] + q[j]);
        }
        let mean = cum[n];
        let second: f64 = q.windows(2).map(|w| 0.5 * h * (w[0] * w[0] + w[1] * w[1])).sum();
        Self::checked(Representation::Quantile { q, cum }, mean, second - mean * mean)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::from_quantile(|u| lo + (hi - lo) * u, QUANTILE_NODES)
    }

    fn checked(repr: Representation, mean: f64, variance: f64) -> Result<Self> {
        if mean.abs() > 1e-10 {
            return Err(Error::InvalidTarget(format!("target must be centred (mean {mean})")));
        }
        if !variance.is_finite() {
            return Err(Error::InvalidTarget("infinite variance".into()));
        }
        Ok(Self { repr, mean, variance })
    }

    pub fn bottom(&self) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => a[0].0,
            Representation::Quantile { q, .. } => q[0],
        }
    }

    pub fn top(&self) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => a[a.len() - 1].0,
            Representation::Quantile { q, .. } => q[q.len() - 1],
        }
    }

    /// Stopping barrier `Φ(s) = sup{y : Ψ(y) ≤ s}`: the path stops once `B ≤ Φ(S)`.
    pub fn barrier(&self, s: f64) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => {
                let mut phi = a[0].0;
                for (v, _) in a {
                    if self.psi_or_inf(*v) <= s {
                        phi = *v;
                    } else {
                        break;
                    }
                }
                phi
            }
            Representation::Quantile { .. } => {
                let (mut lo, mut hi) = (self.bottom(), self.top());
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.psi_or_inf(mid) <= s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    /// `Ψ(x)`, with `+∞` above the top of the support.
    fn psi_or_inf(&self, x: f64) -> f64 {
        match &self.repr {
            Representation::Atoms(a) => {
                let (mut m, mut s) = (0.0, 0.0);
                for (v, p) in a.iter().rev() {
                    if *v < x {
                        break;
                    }
                    m += p;
                    s += v * p;
                }
                if m > 0.0 {
                    s / m
                } else {
                    f64::INFINITY
                }
            }
            Representation::Quantile { q, cum } => {
                let n = q.len() - 1;
                if x <= q[0] {
                    return self.mean;
                }
                if x > q[n] {
                    return f64::INFINITY;
                }
                if x == q[n] {
                    return q[n];
                }
                // Cell j with q[j] < x <= q[j+1]; u* by linear interpolation.
                let j = q.partition_point(|v| *v < x) - 1;
                let h = 1.0 / n as f64;
                let frac = if q[j + 1] > q[j] { (x - q[j]) / (q[j + 1] - q[j]) } else { 1.0 };
                let u_star = (j as f64 + frac) * h;
                let partial = 0.5 * (1.0 - frac) * h * (x + q[j + 1]);
                let tail = partial + (cum[n] - cum[j + 1]);
                tail / (1.0 - u_star)
            }
        }
    }
}

/// Hardy–Littlewood function `Ψ(x) = E[X | X ≥ x]`.
pub fn hardy_littlewood(mu: &TargetMeasure, x: f64) -> Result<f64> {
    let v = mu.psi_or_inf(x);
    if v.is_infinite() {
        return Err(Error::AboveSupport { x, top: mu.top() });
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedding {
    /// `B_T`.
    pub b: f64,
    pub t: f64,
    /// `S_T`.
    pub s: f64,
}

/// Largest multiple of `horizon` simulated before giving up.
const HORIZON_CAP: f64 = 64.0;

/// Runs a Brownian path until `S_t ≥ Ψ(B_t)`, locating the crossing inside the
/// final step by bisection on the linear interpolant.
pub fn azema_yor_embed(mu: &TargetMeasure, dt: f64, seed: u64, horizon: f64) -> Result<Embedding> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(Error::param("dt", dt, "need dt > 0 and horizon > 0"));
    }
    let mut rng = rng_from_seed(seed);
    let sd = dt.sqrt();
    let max_steps = (HORIZON_CAP * horizon / dt).ceil() as u64;
    // Reaching the top of the support always stops the path, even when the
    // skeleton steps past it.
    let top = mu.top();
    let stop = |s: f64, b: f64| b >= top || s >= mu.psi_or_inf(b);
    let (mut b, mut s, mut t) = (0.0f64, 0.0f64, 0.0f64);
    if stop(s, b) {
        return Ok(Embedding { b, t, s });
    }
    let mut cached = (f64::NAN, f64::NAN);
    for _ in 0..max_steps {
        let b1 = b + sd * normal(&mut rng);
        let s1 = s.max(b1);
        if stop(s1, b1) {
            let at = |th: f64| {
                let bt = b + th * (b1 - b);
                (bt, s.max(bt))
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let (bm, sm) = at(mid);
                if stop(sm, bm) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let (bt, st) = at(hi);
            // Snap onto an atom when the crossing lands on one.
            let bt = snap(mu, bt, (b1 - b).abs() * (hi - lo) + 1e-12);
            return Ok(Embedding { b: bt, t: t + hi * dt, s: st.max(bt) });
        }
        // The bridge may dip below the barrier between grid points.
        if b1 <= s {
            if cached.0 != s {
                cached = (s, mu.barrier(s));
            }
            let phi = cached.1;
            let (d0, d1) = (b - phi, b1 - phi);
            if uniform(&mut rng) < (-2.0 * d0 * d1 / dt).exp() {
                return Ok(Embedding { b: phi, t: t + 0.5 * dt, s });
            }
        }
        if top.is_finite() {
            let (d0, d1) = (top - b, top - b1);
            if uniform(&mut rng) < (-2.0 * d0 * d1 / dt).exp() {
                return Ok(Embedding { b: top, t: t + 0.5 * dt, s: top });
            }
        }
        b = b1;
        s = s1;
        t += dt;
    }
    Err(Error::HorizonExhausted { steps: max_steps })
}

fn snap(mu: &TargetMeasure, x: f64, tol: f64) -> f64 {
    if let Representation::Atoms(a) = &mu.repr {
        for (v, _) in a {
            if (x - v).abs() <= tol.max(1e-9) {
                return *v;
            }
        }
    }
    x
}

/// Tabulated law of `S_{T_μ}`: `P(S ≥ x) = exp(-∫_0^x dl / (l - Φ(l)))`,
/// `Φ` the right-continuous inverse of `Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupremumLaw {
    top: f64,
    kind: SupKind,
}

#[derive(Debug, Clone, PartialEq)]
enum SupKind {
    /// `(ψ_j, v_j)`: Φ = v_j on `[ψ_j, ψ_{j+1})`.
    Steps(Vec<(f64, f64)>),
    /// Survival tabulated on `l_j = top · j / m`.
    Table(Vec<f64>),
}

impl SupremumLaw {
    pub fn new(mu: &TargetMeasure) -> Self {
        let top = mu.top();
        match &mu.repr {
            Representation::Atoms(a) => {
                let steps = a.iter().map(|(v, _)| (mu.psi_or_inf(*v), *v)).collect();
                Self { top, kind: SupKind::Steps(steps) }
            }
            Representation::Quantile { .. } => {
                let m = 4000;
                let h = top / m as f64;
                let phi = |l: f64| mu.barrier(l);
                let g = 0.5 / 3f64.sqrt();
                let mut acc = 0.0;
                let mut surv = Vec::with_capacity(m + 1);
                surv.push(1.0);
                for j in 0..m {
                    let a = j as f64 * h;
                    let f = |l: f64| 1.0 / (l - phi(l));
                    let c = a + 0.5 * h;
                    acc += 0.5 * h * (f(c - g * h) + f(c + g * h));
                    surv.push((-acc).exp());
                }
                surv[m] = 0.0;
                Self { top, kind: SupKind::Table(surv) }
            }
        }
    }

    /// `P(S_{T_μ} ≥ x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x > self.top {
            return 0.0;
        }
        match &self.kind {
            SupKind::Steps(steps) => {
                let mut integral = 0.0;
                for (k, &(psi, v)) in steps.iter().enumerate() {
                    let next = steps.get(k + 1).map_or(f64::INFINITY, |s| s.0);
                    let (a, b) = (psi.max(0.0), next.min(x));
                    if b <= a {
                        continue;
                    }
                    if v >= b {
                        return 0.0;
                    }
                    integral += ((b - v) / (a - v)).ln();
                }
                (-integral).exp()
            }
            SupKind::Table(s) => {
                let m = s.len() - 1;
                let u = x / self.top * m as f64;
                let j = (u.floor() as usize).min(m - 1);
                let w = u - j as f64;
                s[j] * (1.0 - w) + s[j + 1] * w
            }
        }
    }

    /// `P(S_{T_μ} ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= self.top {
            return 1.0;
        }
        1.0 - self.survival(x)
    }
}

/// Samples `n` embeddings in parallel (ordered by replicate index).
pub fn embed_many(mu: &TargetMeasure, n: usize, dt: f64, seed: u64, horizon: f64) -> Result<Vec<Embedding>> {
    replicate(n, seed, |_, s| azema_yor_embed(mu, dt, s, horizon)).into_iter().collect()
}

/// One-sample KS of simulated `S_{T_μ}` against the excursion-theoretic law.
pub fn supremum_law_check(mu: &TargetMeasure, n: usize, dt: f64, seed: u64) -> Result<TestReport> {
    let horizon = 10.0 * mu.variance.max(0.1);
    let emb = embed_many(mu, n, dt, seed, horizon)?;
    let sups: Vec<f64> = emb.iter().map(|e| e.s).collect();
    let law = SupremumLaw::new(mu);
    Ok(ks_one_sample(&sups, |x| law.cdf(x), crate::stats::GRID_BIAS_TOLERANCE)?.named("supremum_law_check"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_inverts_psi() {
        let uni = TargetMeasure::uniform(-1.0, 1.0).unwrap();
        for s in [0.1, 0.5, 0.9] {
            assert!((uni.barrier(s) - (2.0 * s - 1.0)).abs() < 1e-6);
        }
        let two = TargetMeasure::two_point(1.0, 1.0).unwrap();
        assert_eq!(two.barrier(0.5), -1.0);
        assert_eq!(two.barrier(1.0), 1.0);
    }

    #[test]
    fn two_point_psi() {
        let mu = TargetMeasure::two_point(1.0, 1.0).unwrap();
        assert_eq!(hardy_littlewood(&mu, -2.0).unwrap(), 0.0);
        assert_eq!(hardy_littlewood(&mu, -1.0).unwrap(), 0.0);
        assert_eq!(hardy_littlewood(&mu, -0.5).unwrap(), 1.0);
        assert_eq!(hardy_littlewood(&mu, 1.0).unwrap(), 1.0);
        assert!(matches!(hardy_littlewood(&mu, 1.5), Err(Error::AboveSupport { .. })));
    }

    #[test]
    fn uniform_psi() {
        let mu = TargetMeasure::uniform(-1.0, 1.0).unwrap();
        for &x in &[-0.9, -0.3, 0.0, 0.41, 0.99] {
            assert!((hardy_littlewood(&mu, x).unwrap() - 0.5 * (1.0 + x)).abs() < 1e-8, "{x}");
        }
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=100 {
            let x = -1.0 + 0.02 * k as f64;
            let p = hardy_littlewood(&mu, x).unwrap();
            assert!(p >= x - 1e-12 && p >= prev);
            prev = p;
        }
    }

    #[test]
    fn targets_are_validated() {
        assert!(TargetMeasure::atoms(vec![(1.0, 0.5), (-1.0, 0.4)]).is_err());
        assert!(TargetMeasure::atoms(vec![(1.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(TargetMeasure::uniform(0.0, 1.0).is_err());
    }

    #[test]
    fn supremum_law_closed_forms() {
        let two = SupremumLaw::new(&TargetMeasure::two_point(1.0, 1.0).unwrap());
        for &x in &[0.0, 0.25, 0.5, 0.99] {
            assert!((two.survival(x) - 1.0 / (1.0 + x)).abs() < 1e-12);
        }
        assert!((two.cdf(1.0 - 1e-9) - 0.5).abs() < 1e-8);
        assert_eq!(two.cdf(1.0), 1.0);
        // Uniform target: Φ(l) = 2l - 1 gives P(S ≥ x) = 1 - x.
        let uni = SupremumLaw::new(&TargetMeasure::uniform(-1.0, 1.0).unwrap());
        for &x in &[0.1, 0.5, 0.9] {
            assert!((uni.survival(x) - (1.0 - x)).abs() < 1e-5, "{x}: {}", uni.survival(x));
        }
    }

    #[test]
    fn embedding_hits_an_atom() {
        let mu = TargetMeasure::two_point(1.0, 1.0).unwrap();
        for seed in 0..20 {
            let e = azema_yor_embed(&mu, 1e-3, seed, 10.0).unwrap();
            assert!(e.b == 1.0 || e.b == -1.0, "{e:?}");
            assert!(e.s >= e.b);
        }
    }

    #[test]
    fn cap_is_reported() {
        let mu = TargetMeasure::two_point(100.0, 100.0).unwrap();
        assert!(matches!(azema_yor_embed(&mu, 1e-2, 1, 0.01), Err(Error::HorizonExhausted { .. })));
    }
}
