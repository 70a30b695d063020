//! Fixed-horizon Brownian experiments.

use loctime::localtime::{bridge_local_time, default_bandwidth, OccupationMeter, Window};
use loctime::paths::{normal, sample_bridge, uniform, Step, TimeGrid};
use loctime::reflaws::{self, law_catalog};
use loctime::rng::{aux_rng, replicate, rng_from_seed};
use loctime::special::norm_pdf;
use loctime::stats::{
    all_of, bonferroni_multiplier, ks_one_sample, ks_two_sample, mean_se, regression_bin_test, tolerance_test,
    TestReport,
};
use loctime::{Error, Result};

use super::{Ctx, Outcome, PlotData};
use crate::sim::{bridge_hits, grid_run, positive_time, run_to_level, update_max};

fn steps(ctx: &Ctx, horizon: f64) -> usize {
    (horizon / ctx.dt).round().max(1.0) as usize
}

fn abs_normal_density(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        2.0 * norm_pdf(x)
    }
}

pub fn local_time_moments(ctx: &Ctx) -> Result<Outcome> {
    let n_steps = steps(ctx, 1.0);
    let eps = default_bandwidth(ctx.dt);
    let sd = ctx.dt.sqrt();
    let lt = replicate(ctx.n, ctx.seed, |_, s| {
        let mut rng = rng_from_seed(s);
        let mut meter = OccupationMeter::new(0.0, eps, Window::Centered);
        let mut x = 0.0;
        for _ in 0..n_steps {
            meter.observe(x, ctx.dt);
            x += sd * normal(&mut rng);
        }
        meter.local_time()
    });
    let sq: Vec<f64> = lt.iter().map(|l| l * l).collect();
    let m = mean_se(&sq);
    let report =
        tolerance_test("local_time_moments", m.mean, 1.0, 0.03).with("std_error", m.std_error).with("bandwidth", eps);
    Ok(Outcome::new(report).with_plot(PlotData::new("occupation local time at 0", lt, abs_normal_density)))
}

pub fn levy_equivalence(ctx: &Ctx) -> Result<Outcome> {
    let n_steps = steps(ctx, 1.0);
    let a = replicate(ctx.n, ctx.seed, |_, s| {
        let r = grid_run(n_steps, ctx.dt, s);
        (r.sup - r.values[n_steps], r.sup)
    });
    let b = replicate(ctx.n, ctx.sub(1), |_, s| {
        let r = grid_run(n_steps, ctx.dt, s);
        (r.values[n_steps].abs(), r.l0)
    });
    let (s_minus_b, sup): (Vec<f64>, Vec<f64>) = a.into_iter().unzip();
    let (abs_b, l0): (Vec<f64>, Vec<f64>) = b.into_iter().unzip();
    let first = ks_two_sample(&s_minus_b, &abs_b, 0.0)?.named("s_minus_b_vs_abs_b");
    let second = ks_two_sample(&sup, &l0, ctx.bias)?.named("sup_vs_local_time");
    Ok(Outcome::new(all_of("levy_equivalence", vec![first, second])).with_plot(PlotData::new(
        "S1 - B1",
        s_minus_b,
        abs_normal_density,
    )))
}

pub fn pitman(ctx: &Ctx) -> Result<Outcome> {
    let n_steps = steps(ctx, 1.0);
    let pairs = replicate(ctx.n, ctx.seed, |_, s| {
        let r = grid_run(n_steps, ctx.dt, s);
        (2.0 * r.sup - r.values[n_steps], r.sup)
    });
    let bes3 = law_catalog("bes3_marginal", &[1.0])?;
    let radial: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ks = ks_one_sample(&radial, |x| bes3.cdf(x), 0.0)?.named("bes3_marginal");
    // Conditional uniformity of S given 2S - B, in 5 quantile bins of 2S - B.
    let mut sorted = pairs.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let per = sorted.len() / 5;
    let mut worst: f64 = 0.0;
    for chunk in sorted.chunks(per.max(1)).take(5) {
        let mut counts = [0usize; 10];
        for (r, s) in chunk {
            let u = if *r > 0.0 { s / r } else { 0.5 };
            counts[((u * 10.0) as usize).min(9)] += 1;
        }
        for c in counts {
            worst = worst.max((c as f64 / chunk.len() as f64 - 0.1).abs());
        }
    }
    let bins =
        TestReport::new("conditional_uniform", worst, None, worst <= 0.03, vec![pairs.len()]).with("tolerance", 0.03);
    Ok(Outcome::new(all_of("pitman", vec![ks, bins]))
        .with_plot(PlotData::new("2S1 - B1", radial, |x| bes3.density(x).unwrap_or(f64::NAN))))
}

pub fn pitman_drift(ctx: &Ctx) -> Result<Outcome> {
    let mu = ctx.param("mu", 1.0);
    let n_steps = steps(ctx, 1.0);
    let dt = ctx.dt;
    let sd = dt.sqrt();
    let pitman = replicate(ctx.n, ctx.seed, |_, s| {
        let mut rng = rng_from_seed(s);
        let (mut x, mut sup) = (0.0f64, 0.0f64);
        for _ in 0..n_steps {
            let x1 = x + mu * dt + sd * normal(&mut rng);
            update_max(&mut sup, x, x1, dt, &mut rng);
            x = x1;
        }
        2.0 * sup - x
    });
    // Euler scheme for dX = dB + μ coth(μX) dt, started with an exact Bessel(3) step.
    let fine = dt / 4.0;
    let euler = replicate(ctx.n, ctx.sub(1), |_, s| {
        let mut rng = rng_from_seed(s);
        let first: f64 = (0..3).map(|_| normal(&mut rng).powi(2)).sum::<f64>().sqrt();
        let mut x = first * fine.sqrt();
        for _ in 1..n_steps * 4 {
            let drift = mu / (mu * x).tanh();
            x = (x + drift * fine + fine.sqrt() * normal(&mut rng)).abs();
        }
        x
    });
    let ks = ks_two_sample(&pitman, &euler, ctx.bias)?.named("pitman_drift").with("mu", mu);
    Ok(Outcome::new(ks))
}

pub fn b_gamma_uniform(ctx: &Ctx) -> Result<Outcome> {
    let a = ctx.param("a", 1.0);
    let dt = ctx.dt;
    let sd = dt.sqrt();
    let cap = (200.0 / dt) as u64;
    let vals: Result<Vec<f64>> = replicate(ctx.n, ctx.seed, |_, s| {
        let mut rng = rng_from_seed(s);
        let (mut x, mut sup) = (0.0f64, 0.0f64);
        for _ in 0..cap {
            let x1 = x + sd * normal(&mut rng);
            let r1 = 2.0 * sup.max(x1) - x1;
            if r1 >= a {
                let at = |th: f64| {
                    let b = x + th * (x1 - x);
                    (b, 2.0 * sup.max(b) - b)
                };
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..50 {
                    let mid = 0.5 * (lo + hi);
                    if at(mid).1 >= a {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Ok(at(hi).0);
            }
            sup = sup.max(x1);
            x = x1;
        }
        Err(Error::HorizonExhausted { steps: cap })
    })
    .into_iter()
    .collect();
    let vals = vals?;
    let law = law_catalog("uniform", &[-a, a])?;
    let ks = ks_one_sample(&vals, |x| law.cdf(x), ctx.bias)?.named("b_gamma_uniform");
    Ok(Outcome::new(ks)
        .with_plot(PlotData::new("B at first hit of a by 2S - B", vals, |x| law.density(x).unwrap_or(0.0))))
}

/// `(g_1, A⁺_1, B_1)` from one fixed-grid path.
fn zero_functionals(n_steps: usize, dt: f64, seed: u64) -> (f64, f64, f64) {
    let mut rng = rng_from_seed(seed);
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut x = 0.0;
    values.push(x);
    let mut a_plus = 0.0;
    for i in 0..n_steps {
        let x1 = x + sd * normal(&mut rng);
        a_plus += positive_time(&Step { t0: i as f64 * dt, dt, x0: x, x1 });
        values.push(x1);
        x = x1;
    }
    let mut aux = aux_rng(seed, 5);
    let mut g = 0.0;
    for i in (0..n_steps).rev() {
        let (v0, v1) = (values[i], values[i + 1]);
        if v0 * v1 <= 0.0 {
            g = (i as f64 + v0.abs() / (v0.abs() + v1.abs()).max(f64::MIN_POSITIVE)) * dt;
            break;
        }
        if bridge_hits(v0, v1, dt, 0.0, uniform(&mut aux)) {
            g = (i as f64 + v0.abs() / (v0.abs() + v1.abs())) * dt;
            break;
        }
    }
    (g, a_plus, values[n_steps])
}

pub fn arcsine_pair(ctx: &Ctx) -> Result<Outcome> {
    let n_steps = steps(ctx, 1.0);
    let f = replicate(ctx.n, ctx.seed, |_, s| zero_functionals(n_steps, ctx.dt, s));
    let arcsine = law_catalog("arcsine", &[])?;
    let g: Vec<f64> = f.iter().map(|v| v.0).collect();
    let a: Vec<f64> = f.iter().map(|v| v.1).collect();
    let kg = ks_one_sample(&g, |x| arcsine.cdf(x), ctx.bias)?.named("last_zero");
    let ka = ks_one_sample(&a, |x| arcsine.cdf(x), ctx.bias)?.named("time_positive");
    Ok(Outcome::new(all_of("arcsine_pair", vec![kg, ka]))
        .with_plot(PlotData::new("last zero before 1", g, |x| arcsine.density(x).unwrap_or(f64::NAN))))
}

pub fn conditional_sign(ctx: &Ctx) -> Result<Outcome> {
    let n_steps = steps(ctx, 1.0);
    let f = replicate(ctx.n, ctx.seed, |_, s| zero_functionals(n_steps, ctx.dt, s));
    let a: Vec<f64> = f.iter().map(|v| v.1).collect();
    let y: Vec<f64> = f.iter().map(|v| if v.2 > 0.0 { 1.0 } else { 0.0 }).collect();
    let bins = regression_bin_test(&a, &y, |x| x, 10, (0.0, 1.0))?;
    let worst = bins.statistic;
    let mut report = bins.named("conditional_sign");
    report.note("within_4se", report.passed);
    report.note("tolerance", 0.03);
    report.passed = worst <= 0.03;
    Ok(Outcome::new(report))
}

pub fn bridge_lt_rayleigh(ctx: &Ctx) -> Result<Outcome> {
    let grid = TimeGrid::new(ctx.dt, steps(ctx, 1.0))?;
    let lt: Result<Vec<f64>> =
        replicate(ctx.n, ctx.seed, |_, s| bridge_local_time(&sample_bridge(1.0, grid, s)?, 0.0, 1.0))
            .into_iter()
            .collect();
    let lt = lt?;
    let law = law_catalog("rayleigh", &[])?;
    let ks = ks_one_sample(&lt, |x| law.cdf(x), 0.0)?.named("bridge_lt_rayleigh");
    Ok(Outcome::new(ks).with_plot(PlotData::new("bridge local time at 0", lt, |x| law.density(x).unwrap_or(f64::NAN))))
}

pub fn meander_endpoint(ctx: &Ctx) -> Result<Outcome> {
    let n_steps = steps(ctx, 1.0);
    let f = replicate(ctx.n, ctx.seed, |_, s| zero_functionals(n_steps, ctx.dt, s));
    let m: Vec<f64> = f.iter().map(|(g, _, b)| b.abs() / (1.0 - g).max(1e-12).sqrt()).collect();
    let law = law_catalog("rayleigh", &[])?;
    let ks = ks_one_sample(&m, |x| law.cdf(x), ctx.bias)?.named("meander_endpoint");
    Ok(Outcome::new(ks).with_plot(PlotData::new("|B1| / sqrt(1 - g1)", m, |x| law.density(x).unwrap_or(f64::NAN))))
}

pub fn trivariate_laplace(ctx: &Ctx) -> Result<Outcome> {
    const GRID: [(f64, f64, f64); 3] = [(1.0, 0.0, 0.0), (0.0, 0.0, 0.5), (1.0, 1.0, 0.5)];
    let runs: Result<Vec<_>> =
        replicate(ctx.n, ctx.seed, |_, s| run_to_level(1.0, &[], ctx.dt, 1.0, s)).into_iter().collect();
    let runs = runs?;
    let mult = bonferroni_multiplier(4.0, GRID.len());
    let allowance = 0.01;
    let mut passed = true;
    let (mut emp, mut th, mut zs) = (vec![], vec![], vec![]);
    for (lam, mu, alpha) in GRID {
        let w: Vec<f64> = runs
            .iter()
            .map(|r| (-0.5 * lam * lam * r.a_plus - 0.5 * mu * mu * r.a_minus - alpha * r.l0).exp())
            .collect();
        let m = mean_se(&w);
        let target = reflaws::trivariate_laplace(lam, mu, alpha);
        let gap = (m.mean - target).abs();
        passed &= gap <= mult * m.std_error + allowance;
        emp.push(m.mean);
        th.push(target);
        zs.push(gap / m.std_error);
    }
    let worst = zs.iter().cloned().fold(0.0, f64::max);
    let report = TestReport::new("trivariate_laplace", worst, None, passed, vec![runs.len()])
        .with("empirical", emp)
        .with("theoretical", th)
        .with("z", zs)
        .with("multiplier", mult)
        .with("allowance", allowance);
    Ok(Outcome::new(report))
}
