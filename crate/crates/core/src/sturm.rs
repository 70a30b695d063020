//! Sturm–Liouville solvers for `u'' = V u` with non-negative potentials, and the
//! Feynman–Kac resolvent built from them.
//!
//! The decaying solution is integrated backwards from the truncation point in
//! Riccati form `w = u'/u`, `w' = V - w²`, which is stable in that direction,
//! together with `ln u`. Point masses in the potential make `w` jump by the mass.

use crate::error::{Error, Result};
use crate::paths::normal;
use crate::rng::{replicate, rng_from_seed};
use crate::stats::mean_se;
use rand::Rng;
use rand_distr::Exp1;
use std::sync::Arc;

/// Integration step.
pub const STEP: f64 = 1e-3;

pub type Potential = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct PotentialSpec {
    pub continuous: Potential,
    /// Points where the continuous part may jump.
    pub breakpoints: Vec<f64>,
    /// `(location, mass)` point masses.
    pub atoms: Vec<(f64, f64)>,
    pub x_max: f64,
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("breakpoints", &self.breakpoints)
            .field("atoms", &self.atoms)
            .field("x_max", &self.x_max)
            .finish()
    }
}

impl PotentialSpec {
    pub fn zero(x_max: f64) -> Self {
        Self { continuous: Arc::new(|_| 0.0), breakpoints: vec![], atoms: vec![], x_max }
    }

    pub fn constant(c: f64, x_max: f64) -> Self {
        Self { continuous: Arc::new(move |_| c), ..Self::zero(x_max) }
    }

    /// `c · 1{lo ≤ x < hi}`.
    pub fn indicator(c: f64, lo: f64, hi: f64, x_max: f64) -> Self {
        Self {
            continuous: Arc::new(move |x| if x >= lo && x < hi { c } else { 0.0 }),
            breakpoints: vec![lo, hi],
            atoms: vec![],
            x_max,
        }
    }

    pub fn with_atom(mut self, at: f64, mass: f64) -> Self {
        self.atoms.push((at, mass));
        self
    }

    /// The same potential seen from `-x`.
    pub fn mirrored(&self) -> Self {
        let f = self.continuous.clone();
        Self {
            continuous: Arc::new(move |x| f(-x)),
            breakpoints: self.breakpoints.iter().map(|b| -b).collect(),
            atoms: self.atoms.iter().map(|(a, m)| (-a, *m)).collect(),
            x_max: self.x_max,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_max > 0.0) {
            return Err(Error::param("x_max", self.x_max, "must be positive"));
        }
        if let Some((_, m)) = self.atoms.iter().find(|(_, m)| !(*m >= 0.0)) {
            return Err(Error::param("mass", *m, "atoms must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SLSolution {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub du0_plus: f64,
    pub du0_minus: f64,
    pub integral: f64,
    /// The potential vanished identically (solution ≡ 1).
    pub degenerate: bool,
    /// Maximum absolute ODE residual relative to `max u`, away from knots.
    pub residual: f64,
}

impl SLSolution {
    /// `∫ q u dx` by the trapezoid rule on the solution grid.
    pub fn integrate_against<F: Fn(f64) -> f64>(&self, q: F) -> f64 {
        self.x
            .windows(2)
            .zip(self.u.windows(2))
            .map(|(x, u)| 0.5 * (x[1] - x[0]) * (q(x[0]) * u[0] + q(x[1]) * u[1]))
            .sum()
    }

    /// Linear interpolation of `u`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        let k = self.x.partition_point(|v| *v <= x).clamp(1, n - 1) - 1;
        let t = (x - self.x[k]) / (self.x[k + 1] - self.x[k]);
        self.u[k] * (1.0 - t) + self.u[k + 1] * t
    }
}

/// Half-line solution: grid on `[0, x_max]`, `w` and `ln u` (unnormalised).
struct HalfLine {
    x: Vec<f64>,
    w: Vec<f64>,
    g: Vec<f64>,
    /// Segment boundaries (grid indices) where the solution is not smooth.
    knots: Vec<usize>,
}

fn half_line(pot: &PotentialSpec, scale: f64, shift: f64) -> HalfLine {
    let x_max = pot.x_max;
    let mut knots: Vec<f64> = pot
        .breakpoints
        .iter()
        .chain(pot.atoms.iter().map(|(a, _)| a))
        .copied()
        .filter(|b| *b > 0.0 && *b < x_max)
        .collect();
    knots.push(0.0);
    knots.push(x_max);
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut x = vec![0.0];
    let mut knot_idx = vec![0];
    for seg in knots.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let n = ((b - a) / STEP).ceil().max(1.0) as usize;
        for k in 1..=n {
            x.push(if k == n { b } else { a + (b - a) * k as f64 / n as f64 });
        }
        knot_idx.push(x.len() - 1);
    }

    let v = |y: f64| scale * (shift + (pot.continuous)(y));
    let n = x.len();
    let mut w = vec![0.0; n];
    let mut g = vec![0.0; n];
    w[n - 1] = -v(x_max - 1e-12).max(0.0).sqrt();
    for i in (0..n - 1).rev() {
        let (lo, hi) = (x[i], x[i + 1]);
        // Side-aware evaluation keeps each step inside one smooth piece.
        let nudge = 1e-12 * (1.0 + hi.abs());
        let vv = |y: f64| v(y.clamp(lo + nudge, hi - nudge));
        let mut wi = w[i + 1];
        // Crossing an atom at x[i+1] from the right.
        if let Some((_, m)) = pot.atoms.iter().find(|(a, _)| (a - hi).abs() < 1e-12) {
            if i + 1 < n - 1 {
                wi -= scale * m;
            }
        }
        let h = -(hi - lo);
        let f = |y: f64, w: f64| vv(y) - w * w;
        let k1 = f(hi, wi);
        let k2 = f(hi + 0.5 * h, wi + 0.5 * h * k1);
        let k3 = f(hi + 0.5 * h, wi + 0.5 * h * k2);
        let k4 = f(lo, wi + h * k3);
        w[i] = wi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        // (ln u)' = w; Simpson with a cubic Hermite midpoint value of w.
        let k_end = f(lo, w[i]);
        let w_mid = 0.5 * (wi + w[i]) + h / 8.0 * (k1 - k_end);
        g[i] = g[i + 1] + h / 6.0 * (wi + 4.0 * w_mid + w[i]);
    }
    HalfLine { x, w, g, knots: knot_idx }
}

fn residual_of(x: &[f64], u: &[f64], knots: &[usize], v: &dyn Fn(f64) -> f64) -> f64 {
    let umax = u.iter().cloned().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 2..x.len().saturating_sub(2) {
        if knots.iter().any(|k| (*k as isize - i as isize).abs() <= 2) {
            continue;
        }
        let h = x[i + 1] - x[i];
        if ((x[i] - x[i - 1]) - h).abs() > 1e-9 * h
            || ((x[i + 2] - x[i + 1]) - h).abs() > 1e-9 * h
            || ((x[i - 1] - x[i - 2]) - h).abs() > 1e-9 * h
        {
            continue;
        }
        let d2 = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) / (12.0 * h * h);
        worst = worst.max((d2 - v(x[i]) * u[i]).abs());
    }
    worst / umax
}

/// Decreasing solution of `Φ'' = Φ · (f(x) dx + Σ mᵢ δ_{aᵢ})` on `[0, ∞)` with `Φ(0) = 1`.
pub fn solve_decreasing(pot: &PotentialSpec) -> Result<SLSolution> {
    pot.validate()?;
    let probe = (0..=1000).any(|k| (pot.continuous)(pot.x_max * k as f64 / 1000.0) > 0.0);
    if !probe && pot.atoms.iter().all(|(a, m)| *m == 0.0 || *a <= 0.0) {
        let x = vec![0.0, pot.x_max];
        return Ok(SLSolution {
            x,
            u: vec![1.0, 1.0],
            du: vec![0.0, 0.0],
            du0_plus: 0.0,
            du0_minus: 0.0,
            integral: pot.x_max,
            degenerate: true,
            residual: 0.0,
        });
    }
    let hl = half_line(pot, 1.0, 0.0);
    let g0 = hl.g[0];
    let u: Vec<f64> = hl.g.iter().map(|g| (g - g0).exp()).collect();
    let du: Vec<f64> = hl.w.iter().zip(&u).map(|(w, u)| w * u).collect();
    let v = |y: f64| (pot.continuous)(y);
    let residual = residual_of(&hl.x, &u, &hl.knots, &v);
    let integral = trapezoid(&hl.x, &u);
    Ok(SLSolution { du0_plus: hl.w[0], du0_minus: f64::NAN, x: hl.x, u, du, integral, degenerate: false, residual })
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Normalisation of the Feynman–Kac equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convention {
    /// `u'' = 2(k + f) u`, matching the generator `½ d²/dx²`.
    #[default]
    Generator,
    /// `u'' = (k + f) u`.
    Literal,
}

impl Convention {
    fn factor(self) -> f64 {
        match self {
            Convention::Generator => 2.0,
            Convention::Literal => 1.0,
        }
    }
}

/// Default truncation `12 / √(2k)`.
pub fn default_x_max(k: f64) -> f64 {
    12.0 / (2.0 * k).sqrt()
}

/// Resolvent density `U` solving `u'' = c(k + f) u` on each half-line with
/// `u'(0+) - u'(0-) = -2`, decaying at `±x_max` (`x_max` taken from `f`).
pub fn solve_feynman_kac(k: f64, f: &PotentialSpec, convention: Convention) -> Result<SLSolution> {
    if !(k > 0.0) {
        return Err(Error::param("k", k, "must be positive"));
    }
    f.validate()?;
    let c = convention.factor();
    let right = half_line(f, c, k);
    let left = half_line(&f.mirrored(), c, k);
    let (wp, wm) = (right.w[0], left.w[0]);
    let u0 = -2.0 / (wp + wm);
    if !(u0 > 0.0 && u0.is_finite()) {
        return Err(Error::NonDecaying { x_max: f.x_max });
    }
    let (gr, gl) = (right.g[0], left.g[0]);
    let nl = left.x.len();
    let mut x = Vec::with_capacity(nl + right.x.len() - 1);
    let mut u = Vec::with_capacity(x.capacity());
    let mut du = Vec::with_capacity(x.capacity());
    for i in (1..nl).rev() {
        x.push(-left.x[i]);
        let ui = u0 * (left.g[i] - gl).exp();
        u.push(ui);
        du.push(-left.w[i] * ui);
    }
    for i in 0..right.x.len() {
        x.push(right.x[i]);
        let ui = u0 * (right.g[i] - gr).exp();
        u.push(ui);
        du.push(right.w[i] * ui);
    }
    let tail = u[0].max(*u.last().expect("non-empty"));
    if tail > 1e-4 * u0 {
        return Err(Error::NonDecaying { x_max: f.x_max });
    }
    let fk = f.continuous.clone();
    let v = move |y: f64| c * (k + fk(y));
    let mut knots: Vec<usize> = left.knots.iter().map(|i| nl - 1 - i).collect();
    knots.extend(right.knots.iter().map(|i| i + nl - 1));
    let residual = residual_of(&x, &u, &knots, &v);
    let integral = trapezoid(&x, &u);
    Ok(SLSolution { x, u, du, du0_plus: wp * u0, du0_minus: -wm * u0, integral, degenerate: false, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo `∫_0^∞ e^{-kt} E[q(B_t) exp(-∫_0^t f(B_s) ds)] dt`: draws `T ~ Exp(k)`,
/// simulates one path to `T` and returns `(1/k) E[q(B_T) e^{-∫f}]`.
pub fn resolvent_mc<Q, F>(q: Q, k: f64, f: F, n: usize, dt: f64, seed: u64) -> Result<Estimate>
where
    Q: Fn(f64) -> f64 + Sync + Send,
    F: Fn(f64) -> f64 + Sync + Send,
{
    if !(k > 0.0) || !(dt > 0.0) || n < 2 {
        return Err(Error::param("k", k, "need k > 0, dt > 0 and n >= 2"));
    }
    let vals = replicate(n, seed, |_, s| {
        let mut rng = rng_from_seed(s);
        let e: f64 = rng.sample(Exp1);
        let t_end = e / k;
        let (mut t, mut x, mut acc) = (0.0, 0.0, 0.0);
        let mut fx = f(x);
        while t < t_end {
            let h = dt.min(t_end - t);
            let x1 = x + h.sqrt() * normal(&mut rng);
            let f1 = f(x1);
            acc += 0.5 * h * (fx + f1);
            x = x1;
            fx = f1;
            t += h;
        }
        q(x) * (-acc).exp() / k
    });
    let m = mean_se(&vals);
    Ok(Estimate { value: m.mean, std_error: m.std_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_potential_gives_exponential() {
        let s = solve_decreasing(&PotentialSpec::constant(1.0, 20.0)).unwrap();
        assert!((s.du0_plus + 1.0).abs() < 1e-6);
        assert!((s.eval(1.0) - (-1f64).exp()).abs() < 1e-6);
        assert!(s.residual < 1e-6);
    }

    #[test]
    fn single_atom() {
        let s = solve_decreasing(&PotentialSpec::zero(3.0).with_atom(1.0, 2.0)).unwrap();
        assert!((s.du0_plus + 2.0 / 3.0).abs() < 1e-6, "{}", s.du0_plus);
        // Jump in the derivative equals mass · Φ(a).
        let i = s.x.iter().position(|x| (*x - 1.0).abs() < 1e-12).unwrap();
        assert!(s.u.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(s.u[i] > 0.0);
    }

    #[test]
    fn ray_knight_functional_value() {
        // Potential 1 on [0, 1]: Φ'(0) = -tanh 1.
        let s = solve_decreasing(&PotentialSpec::indicator(1.0, 0.0, 1.0, 2.0)).unwrap();
        assert!((s.du0_plus + 1f64.tanh()).abs() < 1e-6);
        assert!(s.residual < 1e-6);
    }

    #[test]
    fn zero_potential_is_flagged() {
        let s = solve_decreasing(&PotentialSpec::zero(5.0)).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.du0_plus, 0.0);
    }

    #[test]
    fn free_resolvent() {
        let k = 0.5;
        let s = solve_feynman_kac(k, &PotentialSpec::zero(default_x_max(k)), Convention::Generator).unwrap();
        assert!((s.eval(1.0) - (-1f64).exp()).abs() < 1e-6);
        assert!((s.eval(-1.0) - (-1f64).exp()).abs() < 1e-6);
        assert!((s.du0_plus - s.du0_minus + 2.0).abs() < 1e-9);
        assert!(s.residual < 1e-6);
        assert!(s.integral > 0.0);
    }

    #[test]
    fn half_line_indicator_shape() {
        let (k, c) = (1.0, 1.0);
        let s = solve_feynman_kac(
            k,
            &PotentialSpec::indicator(c, 0.0, f64::INFINITY, default_x_max(k)),
            Convention::Generator,
        )
        .unwrap();
        let u0 = 2.0 / ((2.0 * (k + c)).sqrt() + (2.0 * k).sqrt());
        assert!((s.eval(0.0) - u0).abs() < 1e-6);
        assert!((s.eval(1.0) / u0 - (-(2.0 * (k + c)).sqrt()).exp()).abs() < 1e-6);
        assert!((s.eval(-1.0) / u0 - (-(2.0 * k).sqrt()).exp()).abs() < 1e-6);
        assert!(s.residual < 1e-6);
    }

    #[test]
    fn zero_observable() {
        let e = resolvent_mc(|_| 0.0, 1.0, |_| 0.0, 100, 1e-2, 1).unwrap();
        assert_eq!(e.value, 0.0);
    }
}
