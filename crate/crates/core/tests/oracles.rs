//! Reference values computed independently (closed forms evaluated with
//! mpmath, distribution functions from scipy) and frozen here.

use loctime::diffusions::{scale_function, DiffusionSpec, OuCandidate};
use loctime::reflaws::law_catalog;
use loctime::special::{gamma_p, gamma_q, kolmogorov_sf, norm_quantile};
use loctime::sturm::{solve_feynman_kac, Convention, PotentialSpec};

fn close(got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "got {got}, want {want} (tol {tol})");
}

#[test]
fn catalog_cdfs_match_scipy() {
    let cases: [(&str, &[f64], f64, f64); 9] = [
        ("bes3_marginal", &[1.0], 1.0, 0.19874804309879915),
        ("bes3_marginal", &[2.0], 1.5, 0.22895733175710956),
        ("besq_marginal", &[2.0, 1.0, 1.0], 2.0, 0.46986963780290464),
        ("besq_marginal", &[0.5, 1.0, 2.0], 1.0, 0.6060365210281486),
        ("stable_half", &[1.0], 1.0, 0.31731050786291415),
        ("stable_half", &[2.0], 3.0, 0.24821307898992362),
        ("arcsine", &[], 0.25, 1.0 / 3.0),
        ("rayleigh", &[], 1.0, 0.3934693402873666),
        ("reflected_sup", &[1.0], 1.0, 0.6826894921370859),
    ];
    for (name, params, x, want) in cases {
        let law = law_catalog(name, params).unwrap();
        close(law.cdf(x), want, 1e-8);
    }
}

#[test]
fn special_functions_match_scipy() {
    close(kolmogorov_sf(1.0), 0.26999967167735456, 1e-12);
    close(kolmogorov_sf(0.5), 0.9639452436648751, 1e-12);
    close(gamma_p(2.5, 1.3), 0.23863473215498604, 1e-12);
    close(gamma_q(0.5, 2.0), 0.04550026389635857, 1e-12);
    close(norm_quantile(0.975), 1.959963984540054, 1e-9);
    close(norm_quantile(1e-10), -6.361340902404056, 1e-8);
}

#[test]
fn resolvent_matches_piecewise_closed_form() {
    let sol = solve_feynman_kac(1.0, &PotentialSpec::constant(0.5, 12.0), Convention::Generator).unwrap();
    close(sol.eval(0.0), 0.577_350_269_189_625_7, 1e-6);
    // c = 2 on [0.5, 1.5), k = 1: matched exponentials on each piece.
    let sol = solve_feynman_kac(1.0, &PotentialSpec::indicator(2.0, 0.5, 1.5, 12.0), Convention::Generator).unwrap();
    close(sol.eval(0.0), 0.661_362_652_371_151_3, 1e-6);
    close(sol.eval(-1.0), 0.16078832832122474, 1e-5);
    close(sol.eval(1.0), 0.076_771_276_731_843_59, 1e-5);
    assert!(sol.residual < 1e-6);
}

#[test]
fn ou_inverse_local_time_exponent_matches_gamma_ratio() {
    // 2√θ Γ(λ/2θ + 1/2) / Γ(λ/2θ) at θ = 1.
    for (lambda, want) in
        [(0.5, 0.675_978_240_067_284_7), (1.0, std::f64::consts::FRAC_2_SQRT_PI), (2.0, 1.772453850905516)]
    {
        close(OuCandidate::MeanRevertingArea.exponent(1.0, lambda), want, 1e-8);
    }
}

#[test]
fn bang_bang_scale_matches_quadrature() {
    close(scale_function(&DiffusionSpec::bang_bang(1.0), 1.0).unwrap(), 3.1945280494653248, 1e-8);
    close(scale_function(&DiffusionSpec::bang_bang(1.0), -1.0).unwrap(), -3.1945280494653248, 1e-8);
}
