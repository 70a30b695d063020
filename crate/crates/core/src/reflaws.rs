//! Closed-form reference laws, densities and Laplace transforms.

use crate::error::{Error, Result};
use crate::paths::besq_transition;
use crate::quad;
use crate::rng::rng_from_seed;
use crate::special::{gamma_p, gamma_pdf, ln_gamma, norm_cdf, norm_pdf, norm_sf};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_2_PI, PI};

/// A named one-dimensional law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Law {
    pub name: String,
    pub params: Vec<f64>,
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum Kind {
    Arcsine,
    Rayleigh,
    StableHalf {
        l: f64,
    },
    Bes3Marginal {
        t: f64,
    },
    BesqMarginal {
        delta: f64,
        x0: f64,
        t: f64,
    },
    ReflectedSup {
        t: f64,
    },
    Exponential {
        mean: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Pareto {
        c: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    /// CDF `exp(-c / x)` on `(0, ∞)`.
    InverseExponential {
        c: f64,
    },
    LongestExcursion {
        l: f64,
    },
}

const NAMES: &[(&str, usize)] = &[
    ("arcsine", 0),
    ("rayleigh", 0),
    ("stable_half", 1),
    ("bes3_marginal", 1),
    ("besq_marginal", 3),
    ("reflected_sup", 1),
    ("exp_law", 1),
    ("uniform", 2),
    ("pareto", 1),
    ("normal", 2),
    ("watanabe_literal", 1),
    ("watanabe_excursion", 1),
    ("longest_excursion", 1),
];

/// Names accepted by [`law_catalog`] with their parameter counts.
pub fn catalog_names() -> &'static [(&'static str, usize)] {
    NAMES
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, v, "must be positive"))
    }
}

pub fn law_catalog(name: &str, params: &[f64]) -> Result<Law> {
    let arity =
        NAMES.iter().find(|(n, _)| *n == name).map(|(_, k)| *k).ok_or_else(|| Error::UnknownLaw(name.to_string()))?;
    if params.len() != arity {
        return Err(Error::param("params", params.len() as f64, "wrong number of parameters"));
    }
    let p = |i: usize| params[i];
    let kind = match name {
        "arcsine" => Kind::Arcsine,
        "rayleigh" => Kind::Rayleigh,
        "stable_half" => Kind::StableHalf { l: positive("l", p(0))? },
        "bes3_marginal" => Kind::Bes3Marginal { t: positive("t", p(0))? },
        "besq_marginal" => {
            if !(p(0) >= 0.0) || !(p(1) >= 0.0) || (p(0) == 0.0 && p(1) == 0.0) {
                return Err(Error::param("delta", p(0), "need delta >= 0, x0 >= 0, not both zero"));
            }
            Kind::BesqMarginal { delta: p(0), x0: p(1), t: positive("t", p(2))? }
        }
        "reflected_sup" => Kind::ReflectedSup { t: positive("t", p(0))? },
        "exp_law" => Kind::Exponential { mean: positive("mean", p(0))? },
        "uniform" => {
            if !(p(1) > p(0)) {
                return Err(Error::param("b", p(1), "need a < b"));
            }
            Kind::Uniform { a: p(0), b: p(1) }
        }
        "pareto" => Kind::Pareto { c: positive("c", p(0))? },
        "normal" => Kind::Normal { mean: p(0), sd: positive("sd", p(1))? },
        "watanabe_literal" => Kind::InverseExponential { c: 2.0 * positive("l", p(0))? },
        "watanabe_excursion" => Kind::InverseExponential { c: 0.5 * positive("l", p(0))? },
        "longest_excursion" => Kind::LongestExcursion { l: positive("l", p(0))? },
        _ => unreachable!(),
    };
    Ok(Law { name: name.to_string(), params: params.to_vec(), kind })
}

impl Law {
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            Kind::Arcsine => (0.0, 1.0),
            Kind::Uniform { a, b } => (a, b),
            Kind::Pareto { c } => (c, f64::INFINITY),
            Kind::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn density(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return Some(0.0);
        }
        let d = match self.kind {
            Kind::Arcsine => {
                if x <= 0.0 || x >= 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / (PI * (x * (1.0 - x)).sqrt())
                }
            }
            Kind::Rayleigh => x * (-0.5 * x * x).exp(),
            Kind::StableHalf { l } => stable_half_density(l, x),
            Kind::Bes3Marginal { t } => x * x * (2.0 / (PI * t * t * t)).sqrt() * (-x * x / (2.0 * t)).exp(),
            Kind::BesqMarginal { delta, x0, t } => besq_density(delta, x0, t, x),
            Kind::ReflectedSup { t } => 2.0 * norm_pdf(x / t.sqrt()) / t.sqrt(),
            Kind::Exponential { mean } => (-x / mean).exp() / mean,
            Kind::Uniform { a, b } => 1.0 / (b - a),
            Kind::Pareto { c } => c / (x * x),
            Kind::Normal { mean, sd } => norm_pdf((x - mean) / sd) / sd,
            Kind::InverseExponential { c } => {
                if x <= 0.0 {
                    0.0
                } else {
                    c / (x * x) * (-c / x).exp()
                }
            }
            Kind::LongestExcursion { l } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let k = l * (2.0 / PI).sqrt();
                    (-k / x.sqrt()).exp() * 0.5 * k * x.powf(-1.5)
                }
            }
        };
        Some(d)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match self.kind {
            Kind::Arcsine => FRAC_2_PI * x.sqrt().asin(),
            Kind::Rayleigh => -(-0.5 * x * x).exp_m1(),
            Kind::StableHalf { l } => {
                if x <= 0.0 {
                    0.0
                } else {
                    2.0 * norm_sf(l / x.sqrt())
                }
            }
            Kind::Bes3Marginal { t } => {
                let u = x / t.sqrt();
                (2.0 * norm_cdf(u) - 1.0 - 2.0 * u * norm_pdf(u)).max(0.0)
            }
            Kind::BesqMarginal { delta, x0, t } => besq_cdf(delta, x0, t, x),
            Kind::ReflectedSup { t } => libm::erf(x / (2.0 * t).sqrt()),
            Kind::Exponential { mean } => -(-x / mean).exp_m1(),
            Kind::Uniform { a, b } => (x - a) / (b - a),
            Kind::Pareto { c } => 1.0 - c / x,
            Kind::Normal { mean, sd } => norm_cdf((x - mean) / sd),
            Kind::InverseExponential { c } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-c / x).exp()
                }
            }
            Kind::LongestExcursion { l } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-l * (2.0 / (PI * x)).sqrt()).exp()
                }
            }
        }
    }

    /// `E[exp(-λX)]` where a closed form is available.
    pub fn laplace(&self, lambda: f64) -> Option<f64> {
        let v = match self.kind {
            Kind::Arcsine => (-0.5 * lambda).exp() * bessel_i0(0.5 * lambda),
            Kind::Rayleigh => 1.0 - lambda * (PI / 2.0).sqrt() * scaled_erfc(lambda / std::f64::consts::SQRT_2),
            Kind::StableHalf { l } => tau_laplace(l, lambda),
            Kind::BesqMarginal { delta, x0, t } => {
                let d = 1.0 + 2.0 * lambda * t;
                d.powf(-0.5 * delta) * (-lambda * x0 / d).exp()
            }
            Kind::ReflectedSup { t } => scaled_erfc(lambda * (t / 2.0).sqrt()),
            Kind::Exponential { mean } => 1.0 / (1.0 + mean * lambda),
            Kind::Uniform { a, b } => {
                if lambda == 0.0 {
                    1.0
                } else {
                    ((-lambda * a).exp() - (-lambda * b).exp()) / (lambda * (b - a))
                }
            }
            _ => return None,
        };
        Some(v)
    }

    pub fn has_sampler(&self) -> bool {
        true
    }

    /// Exact i.i.d. sample of size `n`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let v = match self.kind {
                Kind::Arcsine => {
                    let s = (0.5 * PI * rng.random::<f64>()).sin();
                    s * s
                }
                Kind::Rayleigh => {
                    let e: f64 = rng.sample(Exp1);
                    (2.0 * e).sqrt()
                }
                Kind::StableHalf { l } => l * l / (z * z),
                Kind::Bes3Marginal { t } => {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    (t * (z * z + a * a + b * b)).sqrt()
                }
                Kind::BesqMarginal { delta, x0, t } => besq_transition(delta, x0, t, &mut rng),
                Kind::ReflectedSup { t } => z.abs() * t.sqrt(),
                Kind::Exponential { mean } => {
                    let e: f64 = rng.sample(Exp1);
                    mean * e
                }
                Kind::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
                Kind::Pareto { c } => c / (1.0 - rng.random::<f64>()),
                Kind::Normal { mean, sd } => mean + sd * z,
                Kind::InverseExponential { c } => {
                    let e: f64 = rng.sample(Exp1);
                    c / e
                }
                Kind::LongestExcursion { l } => {
                    let e: f64 = rng.sample(Exp1);
                    2.0 * l * l / (PI * e * e)
                }
            };
            out.push(v);
        }
        out
    }

    /// Mean, when finite and elementary.
    pub fn mean(&self) -> Option<f64> {
        Some(match self.kind {
            Kind::Arcsine => 0.5,
            Kind::Rayleigh => (PI / 2.0).sqrt(),
            Kind::Bes3Marginal { t } => 2.0 * (2.0 * t / PI).sqrt(),
            Kind::BesqMarginal { delta, x0, t } => x0 + delta * t,
            Kind::ReflectedSup { t } => (2.0 * t / PI).sqrt(),
            Kind::Exponential { mean } => mean,
            Kind::Uniform { a, b } => 0.5 * (a + b),
            Kind::Normal { mean, .. } => mean,
            _ => return None,
        })
    }
}

/// `e^{x²} erfc(x)` evaluated without overflow.
fn scaled_erfc(x: f64) -> f64 {
    if x < 25.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // Asymptotic series.
        let x2 = x * x;
        (1.0 - 0.5 / x2 + 0.75 / (x2 * x2)) / (x * PI.sqrt())
    }
}

fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn stable_half_density(l: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    l * (-l * l / (2.0 * s)).exp() / (2.0 * PI * s * s * s).sqrt()
}

/// Poisson weights `e^{-m} m^k / k!` for the noncentral chi-square mixture.
fn poisson_weight(m: f64, k: usize) -> f64 {
    if m == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (-m + k as f64 * m.ln() - ln_gamma(k as f64 + 1.0)).exp()
}

/// Sum over the Poisson mixture starting at the mode and walking outwards until
/// terms drop below 1e-14 of the running sum.
fn poisson_mixture<F: Fn(usize) -> f64>(m: f64, term: F) -> f64 {
    let mode = m.floor() as usize;
    let mut sum = 0.0;
    let mut k = mode;
    loop {
        let t = poisson_weight(m, k) * term(k);
        sum += t;
        let w = poisson_weight(m, k);
        if (w < 1e-14 && k > mode + 5) || k > mode + 100_000 {
            break;
        }
        k += 1;
    }
    let mut k = mode;
    while k > 0 {
        k -= 1;
        let w = poisson_weight(m, k);
        sum += w * term(k);
        if w < 1e-14 {
            break;
        }
    }
    sum
}

fn besq_density(delta: f64, x0: f64, t: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    let m = x0 / (2.0 * t);
    poisson_mixture(m, |k| {
        let shape = 0.5 * delta + k as f64;
        if shape == 0.0 {
            0.0
        } else {
            gamma_pdf(z, shape, 2.0 * t)
        }
    })
}

fn besq_cdf(delta: f64, x0: f64, t: f64, z: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    let m = x0 / (2.0 * t);
    poisson_mixture(m, |k| {
        let shape = 0.5 * delta + k as f64;
        if shape == 0.0 {
            1.0
        } else {
            gamma_p(shape, z / (2.0 * t))
        }
    })
    .min(1.0)
}

/// Joint density of `(S_t, B_t)` on the wedge `a ≥ 0, b ≤ a`.
pub fn reflection_joint_density(t: f64, a: f64, b: f64) -> f64 {
    if a < 0.0 || b > a {
        return 0.0;
    }
    let r = 2.0 * a - b;
    2.0 * r / (2.0 * PI * t * t * t).sqrt() * (-r * r / (2.0 * t)).exp()
}

/// Joint density of `(g_t, L_t, B_t)` at `(s, l, x)`.
pub fn triple_density(t: f64, s: f64, l: f64, x: f64) -> f64 {
    if l < 0.0 || s <= 0.0 || s >= t {
        return 0.0;
    }
    let u = t - s;
    stable_half_density(l, s) * x.abs() * (-x * x / (2.0 * u)).exp() / (2.0 * PI * u * u * u).sqrt()
}

/// `E[exp(-λ τ_l)] = exp(-l √(2λ))`.
pub fn tau_laplace(l: f64, lambda: f64) -> f64 {
    (-l * (2.0 * lambda).sqrt()).exp()
}

/// `λ / sinh λ`: Laplace transform of `λ²/2 · T₁` for a Bessel(3) process from 0.
pub fn bes3_hit_laplace(lambda: f64) -> f64 {
    if lambda.abs() < 1e-8 {
        1.0
    } else {
        lambda / lambda.sinh()
    }
}

/// `2μ / sinh 2μ`.
pub fn knight_laplace(mu: f64) -> f64 {
    bes3_hit_laplace(2.0 * mu)
}

/// `[cosh λ + ((μ + 2α)/λ) sinh λ]^{-1}`, with the `λ → 0` limit `1/(1 + μ + 2α)`.
pub fn trivariate_laplace(lambda: f64, mu: f64, alpha: f64) -> f64 {
    let ratio = if lambda.abs() < 1e-8 { 1.0 } else { lambda.sinh() / lambda };
    1.0 / (lambda.cosh() + (mu + 2.0 * alpha) * ratio)
}

/// Density of `ν_x(dy) = (1/4x²) e^{-y/2x} dy`.
pub fn excursion_lt_levy_density(x: f64, y: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    (-y / (2.0 * x)).exp() / (4.0 * x * x)
}

/// Transition density of `dX = dB - λ sgn(X) dt` from `x = 0`.
pub fn bangbang_density(lambda: f64, t: f64, y: f64) -> f64 {
    let u = y.abs();
    let st = t.sqrt();
    (-(u + lambda * t).powi(2) / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
        + lambda * (-2.0 * lambda * u).exp() * norm_sf((u - lambda * t) / st)
}

/// CDF of the bang-bang marginal from 0 (by symmetry and quadrature of the density).
pub fn bangbang_cdf(lambda: f64, t: f64, y: f64) -> f64 {
    let half = quad::integrate(|z| bangbang_density(lambda, t, z), 0.0, y.abs(), 1e-11);
    if y >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// `∫_x^∞ e^{-βv} dv / √(2πv³)`.
pub fn excursion_length_tail_weighted(x: f64, beta: f64) -> f64 {
    quad::integrate_to_inf(|v| (-beta * v).exp() / (2.0 * PI * v * v * v).sqrt(), x, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_point_values() {
        let a = law_catalog("arcsine", &[]).unwrap();
        assert!((a.density(0.5).unwrap() - 2.0 / PI).abs() < 1e-12);
        assert!((a.cdf(0.5) - 0.5).abs() < 1e-12);
        let r = law_catalog("rayleigh", &[]).unwrap();
        assert!((1.0 - r.cdf(1.0) - 0.606_530_659_712_633_4).abs() < 1e-12);
        assert!((tau_laplace(1.0, 1.0) - 0.243_116_734_434_694_4).abs() < 1e-12);
        assert!((bes3_hit_laplace(1.0) - 0.850_918_128_239_321_6).abs() < 1e-12);
        assert!((trivariate_laplace(1e-12, 0.0, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_and_bad_params() {
        assert!(matches!(law_catalog("cauchy", &[]), Err(Error::UnknownLaw(_))));
        assert!(law_catalog("exp_law", &[-1.0]).is_err());
        assert!(law_catalog("exp_law", &[]).is_err());
    }

    #[test]
    fn trivariate_marginal_limits() {
        // α only: L_{T_1} is exponential with mean 2.
        for &al in &[0.3, 1.0, 2.5] {
            assert!((trivariate_laplace(1e-12, 0.0, al) - 1.0 / (1.0 + 2.0 * al)).abs() < 1e-9);
        }
        // λ only: 1/cosh λ.
        assert!((trivariate_laplace(1.3, 0.0, 0.0) - 1.0 / 1.3f64.cosh()).abs() < 1e-14);
    }

    #[test]
    fn reflection_density_checks() {
        let t = 1.0;
        // Total mass over the wedge.
        let mass = quad::integrate(
            |a| quad::integrate(|b| reflection_joint_density(t, a, b), a - 14.0, a, 1e-10),
            0.0,
            10.0,
            1e-9,
        );
        assert!((mass - 1.0).abs() < 1e-4);
        // Marginal of S at a = 1 is the |N(0,1)| density.
        let m = quad::integrate(|b| reflection_joint_density(t, 1.0, b), -14.0, 1.0, 1e-11);
        assert!((m - 2.0 * norm_pdf(1.0)).abs() < 1e-4);
        // Pushforward by r = 2a - b at r = 1: ∫_0^r density(a, 2a - r) da.
        let r = 1.0;
        let p = quad::integrate(|a| reflection_joint_density(t, a, 2.0 * a - r), 0.0, r, 1e-12);
        assert!((p - r * r * (2.0 / PI).sqrt() * (-r * r / 2.0).exp()).abs() < 1e-4);
    }

    #[test]
    fn triple_density_checks() {
        let t = 1.0;
        assert_eq!(triple_density(t, 0.3, 0.4, 0.7), triple_density(t, 0.3, 0.4, -0.7));
        // (l, x)-marginal at (0.5, 0.5) for x > 0.
        let (l, x) = (0.5, 0.5);
        let m = quad::integrate(|s| triple_density(t, s, l, x), 0.0, t, 1e-12);
        let target = (l + x) / (2.0 * PI * t * t * t).sqrt() * (-(l + x).powi(2) / (2.0 * t)).exp();
        // The signed joint density 2(l+x)... is split evenly between x and -x.
        assert!((2.0 * m - 2.0 * target).abs() < 1e-4, "{m} vs {target}");
    }

    #[test]
    fn triple_density_total_mass() {
        let t = 1.0;
        // Composite Simpson in scaled coordinates: s = t sin²θ, l = √s u, x = √(t-s) w.
        let simpson = |n: usize, lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| {
            let h = (hi - lo) / n as f64;
            let mut acc = f(lo) + f(hi);
            for k in 1..n {
                acc += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        let mass = simpson(200, 1e-6, PI / 2.0 - 1e-6, &|th: f64| {
            let (sn, cs) = th.sin_cos();
            let s = t * sn * sn;
            let (rs, ru) = (s.sqrt(), (t - s).sqrt());
            let jac = 2.0 * t * sn * cs * rs * ru;
            jac * simpson(160, 0.0, 12.0, &|u: f64| {
                2.0 * simpson(160, 0.0, 12.0, &|w: f64| triple_density(t, s, rs * u, ru * w))
            })
        });
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    }

    #[test]
    fn bangbang_reduces_and_normalises() {
        let g = (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((bangbang_density(0.0, 1.0, 1.0) - g).abs() < 1e-10);
        let m = 2.0 * quad::integrate(|y| bangbang_density(1.0, 1.0, y), 0.0, 30.0, 1e-11);
        assert!((m - 1.0).abs() < 1e-4);
        assert!((bangbang_cdf(1.0, 1.0, 0.0) - 0.5).abs() < 1e-15);
    }

    fn all_laws() -> Vec<Law> {
        vec![
            law_catalog("arcsine", &[]).unwrap(),
            law_catalog("rayleigh", &[]).unwrap(),
            law_catalog("stable_half", &[1.0]).unwrap(),
            law_catalog("bes3_marginal", &[1.0]).unwrap(),
            law_catalog("besq_marginal", &[2.0, 0.0, 1.0]).unwrap(),
            law_catalog("besq_marginal", &[0.5, 1.5, 0.7]).unwrap(),
            law_catalog("besq_marginal", &[0.0, 1.0, 1.0]).unwrap(),
            law_catalog("reflected_sup", &[2.0]).unwrap(),
            law_catalog("exp_law", &[2.0]).unwrap(),
            law_catalog("uniform", &[-1.0, 1.0]).unwrap(),
            law_catalog("pareto", &[1.0]).unwrap(),
            law_catalog("normal", &[0.5, 2.0]).unwrap(),
            law_catalog("watanabe_literal", &[1.0]).unwrap(),
            law_catalog("watanabe_excursion", &[1.0]).unwrap(),
            law_catalog("longest_excursion", &[1.0]).unwrap(),
        ]
    }

    #[test]
    fn cdf_derivative_is_density() {
        for law in all_laws() {
            let (lo, hi) = law.support();
            let lo = if lo.is_finite() { lo } else { -5.0 };
            let hi = if hi.is_finite() { hi } else { lo.max(0.0) + 6.0 };
            for k in 1..=20 {
                let x = lo + (hi - lo) * k as f64 / 21.0;
                let h = 1e-5 * (1.0 + x.abs());
                let fd = (law.cdf(x + h) - law.cdf(x - h)) / (2.0 * h);
                let d = law.density(x).unwrap();
                assert!((fd - d).abs() < 1e-6 * (1.0 + d), "{} at {x}: {fd} vs {d}", law.name);
            }
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        for law in all_laws() {
            // The BESQ(0) marginal carries an atom at 0.
            let atom = law.cdf(0.0);
            let mass = match law.name.as_str() {
                // Endpoint singularities: substitute x = sin²θ.
                "arcsine" => quad::integrate(
                    |th: f64| {
                        let (s, c) = th.sin_cos();
                        let v = law.density(s * s).unwrap() * 2.0 * s * c;
                        if v.is_finite() {
                            v
                        } else {
                            0.0
                        }
                    },
                    0.0,
                    PI / 2.0,
                    1e-12,
                ),
                _ => {
                    let (lo, hi) = law.support();
                    let f = |x: f64| law.density(x).unwrap();
                    if law.name == "besq_marginal" {
                        // z = v⁴ tames the z^{δ/2-1} singularity at the origin.
                        let g = |v: f64| f(v.powi(4)) * 4.0 * v.powi(3);
                        quad::integrate(g, 0.0, 1.0, 1e-11) + quad::integrate_to_inf(g, 1.0, 1e-11)
                    } else if lo.is_finite() && hi.is_finite() {
                        quad::integrate(f, lo, hi, 1e-10)
                    } else if lo.is_finite() {
                        // Split to keep the transformed integrand smooth.
                        let m = lo + 1.0;
                        quad::integrate(f, lo, m, 1e-10) + quad::integrate_to_inf(f, m, 1e-10)
                    } else {
                        quad::integrate(f, -40.0, 40.0, 1e-10)
                    }
                }
            };
            let expected = if law.name == "besq_marginal" { 1.0 - atom } else { 1.0 };
            let tol = if law.name == "longest_excursion" { 1e-4 } else { 1e-6 };
            assert!((mass - expected).abs() < tol, "{}: {mass}", law.name);
        }
    }

    #[test]
    fn laplace_is_normalised_and_completely_monotone() {
        for law in all_laws() {
            if law.support().0 < 0.0 {
                continue;
            }
            let Some(l0) = law.laplace(0.0) else { continue };
            assert!((l0 - 1.0).abs() < 1e-12, "{}", law.name);
            let grid: Vec<f64> = (0..12).map(|k| 0.25 * k as f64).collect();
            let mut d: Vec<f64> = grid.iter().map(|&l| law.laplace(l).unwrap()).collect();
            for order in 1..=3 {
                d = d.windows(2).map(|w| w[1] - w[0]).collect();
                let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
                assert!(d.iter().all(|v| sign * v >= -1e-13), "{} order {order}", law.name);
            }
        }
    }

    #[test]
    fn laplace_matches_monte_carlo() {
        for law in all_laws() {
            let Some(_) = law.laplace(1.0) else { continue };
            let s = law.sample(50_000, 5);
            let emp = s.iter().map(|x| (-x).exp()).sum::<f64>() / s.len() as f64;
            assert!((emp - law.laplace(1.0).unwrap()).abs() < 0.01, "{}", law.name);
        }
    }

    #[test]
    fn weighted_length_tail() {
        // β → 0 recovers n(V ≥ x) = √(2/(πx)).
        let v = excursion_length_tail_weighted(0.5, 0.0);
        assert!((v - (2.0 / (PI * 0.5)).sqrt()).abs() < 1e-7);
    }
}
