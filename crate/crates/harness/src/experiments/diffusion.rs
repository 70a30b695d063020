//! One-dimensional diffusions, embeddings, Feynman-Kac and planar intersections.

use loctime::diffusions::{excursion_height_tail_diffusion, ou_inverse_lt_experiment, scale_function, DiffusionSpec};
use loctime::intersect2d::{expected_alpha, mean_intersection};
use loctime::paths::{besq_transition, StepPolicy, Trajectory, Walker};
use loctime::reflaws::{bangbang_cdf, bangbang_density, law_catalog};
use loctime::rng::{replicate, rng_from_seed};
use loctime::skorokhod::{embed_many, supremum_law_check, TargetMeasure};
use loctime::stats::{all_of, ks_one_sample, mean_se, moment_test, tolerance_test, MeanEstimate, TestReport};
use loctime::sturm::{default_x_max, resolvent_mc, solve_feynman_kac, Convention, PotentialSpec};
use loctime::{Error, Result};

use super::excursion::adjudicate;
use super::{Ctx, Outcome, PlotData};
use crate::sim::{bridge_hits, MAX_STEPS};

pub fn bangbang_marginal(ctx: &Ctx) -> Result<Outcome> {
    let (lambda, t) = (ctx.param("lambda", 1.0), 1.0);
    let spec = DiffusionSpec::bang_bang(lambda);
    let n_steps = (t / ctx.dt).round() as usize;
    let sample = replicate(ctx.n, ctx.seed, |_, s| {
        let mut w = Walker::new(0.0, StepPolicy::uniform(ctx.dt), s).with_drift(spec.drift.clone());
        for _ in 0..n_steps {
            w.step();
        }
        w.position()
    });
    let report = ks_one_sample(&sample, |y| bangbang_cdf(lambda, t, y), ctx.bias)?
        .named("bangbang_marginal")
        .with("lambda", lambda);
    Ok(Outcome::new(report)
        .with_plot(PlotData::new("bang-bang marginal at t = 1", sample, |y| bangbang_density(lambda, t, y))))
}

pub fn azema_yor(ctx: &Ctx) -> Result<Outcome> {
    let mut parts = Vec::new();
    let two = TargetMeasure::two_point(1.0, 1.0)?;
    let emb = embed_many(&two, ctx.n, ctx.dt, ctx.seed, 10.0 * two.variance)?;
    let up: Vec<f64> = emb.iter().map(|e| if e.b > 0.0 { 1.0 } else { 0.0 }).collect();
    parts.push(moment_test(&up, 0.5, 4.0)?.named("two_point_atom_weight"));
    let t_mean = mean_se(&emb.iter().map(|e| e.t).collect::<Vec<_>>()).mean;
    parts.push(tolerance_test("two_point_mean_time", t_mean, two.variance, 0.05));
    let uni = TargetMeasure::uniform(-1.0, 1.0)?;
    let emb = embed_many(&uni, ctx.n, ctx.dt, ctx.sub(1), 10.0 * uni.variance.max(0.1))?;
    let b: Vec<f64> = emb.iter().map(|e| e.b).collect();
    let law = law_catalog("uniform", &[-1.0, 1.0])?;
    parts.push(ks_one_sample(&b, |x| law.cdf(x), ctx.bias)?.named("uniform_target"));
    let t_mean = mean_se(&emb.iter().map(|e| e.t).collect::<Vec<_>>()).mean;
    parts.push(tolerance_test("uniform_mean_time", t_mean, uni.variance, 0.05));
    Ok(Outcome::new(all_of("azema_yor", parts))
        .with_plot(PlotData::new("embedded uniform target", b, |x| law.density(x).unwrap_or(f64::NAN))))
}

pub fn supremum_law(ctx: &Ctx) -> Result<Outcome> {
    let two = TargetMeasure::two_point(1.0, 1.0)?;
    let uni = TargetMeasure::uniform(-1.0, 1.0)?;
    let parts = vec![
        supremum_law_check(&two, ctx.n, ctx.dt, ctx.seed)?.named("two_point"),
        supremum_law_check(&uni, ctx.n, ctx.dt, ctx.sub(1))?.named("uniform"),
    ];
    Ok(Outcome::new(all_of("supremum_law", parts)))
}

/// Tent of unit mass on `[-1, 1]`.
fn tent(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

const FK_CASES: [(f64, f64); 3] = [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)];

/// Monte Carlo resolvent against `q` with killing `c 1{x ≥ 0}` at rate `k`.
fn fk_mc(ctx: &Ctx, k: f64, c: f64, i: u64) -> Result<MeanEstimate> {
    let e = resolvent_mc(tent, k, move |x| if x >= 0.0 { c } else { 0.0 }, ctx.n, ctx.dt, ctx.sub(i))?;
    Ok(MeanEstimate { mean: e.value, std_error: e.std_error, n: ctx.n })
}

fn fk_ode(k: f64, c: f64, convention: Convention) -> Result<(f64, f64)> {
    // The literal form decays only like e^{-√k x}; widen its domain accordingly.
    let x_max = match convention {
        Convention::Generator => default_x_max(k),
        Convention::Literal => 2.0 * default_x_max(k),
    };
    let f = PotentialSpec::indicator(c, 0.0, f64::INFINITY, x_max);
    let sol = solve_feynman_kac(k, &f, convention)?;
    Ok((sol.integrate_against(tent), sol.residual))
}

pub fn feynman_kac_resolvent(ctx: &Ctx) -> Result<Outcome> {
    let mut parts = Vec::new();
    for (i, (k, c)) in FK_CASES.iter().enumerate() {
        let mc = fk_mc(ctx, *k, *c, i as u64)?;
        let (ode, residual) = fk_ode(*k, *c, Convention::Generator)?;
        let mut r = tolerance_test(&format!("k{k}_c{c}"), mc.mean, ode, 0.02)
            .with("std_error", mc.std_error)
            .with("residual", residual);
        r.passed &= residual < 1e-6;
        parts.push(r);
    }
    Ok(Outcome::new(all_of("feynman_kac_resolvent", parts)))
}

pub fn feynman_kac_convention(ctx: &Ctx) -> Result<Outcome> {
    let emp: Vec<MeanEstimate> =
        FK_CASES.iter().enumerate().map(|(i, (k, c))| fk_mc(ctx, *k, *c, i as u64)).collect::<Result<_>>()?;
    let pred = |conv| -> Result<Vec<f64>> { FK_CASES.iter().map(|(k, c)| fk_ode(*k, *c, conv).map(|p| p.0)).collect() };
    let report = adjudicate(
        "feynman_kac_convention",
        &emp,
        &[("u'' = 2(k+f)u", pred(Convention::Generator)?), ("u'' = (k+f)u", pred(Convention::Literal)?)],
    );
    Ok(Outcome::new(report))
}

pub fn ou_inverse_lt(ctx: &Ctx) -> Result<Outcome> {
    let report = ou_inverse_lt_experiment(ctx.param("theta", 1.0), ctx.param("l", 1.0), ctx.n, ctx.dt, ctx.seed)?;
    Ok(Outcome::new(report.with("adjudication", true)))
}

/// Fraction of walkers from `x0` leaving `(a, b)` through `b`.
fn exit_top(spec: &DiffusionSpec, x0: f64, a: f64, b: f64, ctx: &Ctx, seed: u64) -> Result<Vec<f64>> {
    replicate(ctx.n, seed, |_, s| {
        let mut w = Walker::new(x0, StepPolicy::uniform(ctx.dt), s).with_drift(spec.drift.clone());
        loop {
            let st = w.step();
            let (u, v) = (w.uniform(), w.uniform());
            let top = bridge_hits(st.x0, st.x1, st.dt, b, u);
            let bottom = bridge_hits(st.x0, st.x1, st.dt, a, v);
            if top || bottom {
                // Both within one step: nearer endpoint of the step decides.
                return Ok(if top && bottom {
                    if (st.x1 - b).abs() < (st.x1 - a).abs() {
                        1.0
                    } else {
                        0.0
                    }
                } else if top {
                    1.0
                } else {
                    0.0
                });
            }
            if w.steps() >= MAX_STEPS {
                return Err(Error::HorizonExhausted { steps: w.steps() });
            }
        }
    })
    .into_iter()
    .collect()
}

pub fn scale_hitting(ctx: &Ctx) -> Result<Outcome> {
    let mut parts = Vec::new();
    let bm = DiffusionSpec::brownian();
    let bes = DiffusionSpec::bessel(3.0);
    let mut worst = 0.0f64;
    for x in [-1.0, 0.5, 2.0] {
        worst = worst.max((scale_function(&bm, x)? - x).abs());
    }
    for x in [0.5, 2.0, 5.0] {
        worst = worst.max((scale_function(&bes, x)? - (1.0 - 1.0 / x)).abs());
    }
    parts.push(TestReport::new("closed_form_scale", worst, None, worst <= 1e-6, vec![]));
    let hits = exit_top(&bm, 0.0, -1.0, 1.0, ctx, ctx.seed)?;
    parts.push(moment_test(&hits, 0.5, 4.0)?.named("brownian_exit"));
    let (lambda, x0) = (ctx.param("lambda", 1.0), 0.2);
    let bb = DiffusionSpec::bang_bang(lambda);
    let (ha, hb, hx) = (scale_function(&bb, -1.0)?, scale_function(&bb, 1.0)?, scale_function(&bb, x0)?);
    let hits = exit_top(&bb, x0, -1.0, 1.0, ctx, ctx.sub(1))?;
    parts.push(moment_test(&hits, (hx - ha) / (hb - ha), 4.0)?.named("bang_bang_exit"));
    Ok(Outcome::new(all_of("scale_hitting", parts)))
}

/// Brownian path run to `horizon`, then on to its next visit below `eta`.
fn brownian_to_return(horizon: f64, eta: f64, dt: f64, seed: u64) -> Result<Trajectory> {
    Trajectory::record(0.0, StepPolicy::scaled(dt, 1.0), seed, MAX_STEPS, |s| s.t1() >= horizon && s.x1 <= eta)
}

/// Bessel(δ) path (square root of exact BESQ(δ) transitions) with the same stopping rule.
fn bessel_to_return(delta: f64, horizon: f64, eta: f64, dt: f64, seed: u64) -> Result<Trajectory> {
    let mut rng = rng_from_seed(seed);
    let (mut times, mut values) = (vec![0.0], vec![0.0]);
    let (mut t, mut z) = (0.0f64, 0.0f64);
    loop {
        let x = z.sqrt();
        let h = if x > 1.0 { dt * x * x } else { dt };
        z = besq_transition(delta, z, h, &mut rng);
        t += h;
        times.push(t);
        values.push(z.sqrt());
        if t >= horizon && z.sqrt() <= eta {
            break;
        }
        if times.len() as u64 >= MAX_STEPS {
            return Err(Error::HorizonExhausted { steps: times.len() as u64 });
        }
    }
    Ok(Trajectory { times, values, seed, base_step: dt })
}

/// Pooled height tail over chunks of paths; the result carries the summed
/// counts and local time.
fn pooled_tail<P>(
    spec: &DiffusionSpec,
    h0: &dyn Fn(f64) -> f64,
    n: usize,
    seed: u64,
    eta: f64,
    eps: f64,
    path: P,
) -> Result<TestReport>
where
    P: Fn(u64) -> Result<Trajectory> + Sync + Send,
{
    const LEVELS: [f64; 3] = [0.2, 0.5, 1.0];
    const CHUNK: usize = 64;
    let mut counts = [0u64; 3];
    let mut lt = 0.0;
    let seeds = replicate(n, seed, |_, s| s);
    for chunk in seeds.chunks(CHUNK) {
        let paths: Vec<Trajectory> =
            replicate(chunk.len(), 0, |i, _| path(chunk[i])).into_iter().collect::<Result<_>>()?;
        let tail = excursion_height_tail_diffusion(spec, h0, &paths, &LEVELS, eta, eps)?;
        for (c, k) in counts.iter_mut().zip(&tail.counts) {
            *c += k;
        }
        lt += tail.local_time;
    }
    let products: Vec<f64> = LEVELS.iter().zip(&counts).map(|(a, c)| *c as f64 / lt * h0(*a)).collect();
    let constant = products.iter().sum::<f64>() / products.len() as f64;
    let spread = products.iter().map(|p| (p / constant - 1.0).abs()).fold(0.0, f64::max);
    Ok(TestReport::new(spec.name.clone(), spread, None, spread <= 0.05, vec![n])
        .with("levels", LEVELS.to_vec())
        .with("counts", counts.iter().map(|c| *c as f64).collect::<Vec<_>>())
        .with("products", products)
        .with("fitted_constant", constant)
        .with("local_time", lt))
}

pub fn diffusion_height_tail(ctx: &Ctx) -> Result<Outcome> {
    let horizon = ctx.param("horizon", 4.0);
    let eta = ctx.param("eta", 0.02);
    let eps = ctx.dt.powf(0.4);
    // Upcrossings from eta to a are counted on the grid; discrete monitoring
    // moves both levels outward by about 0.5826 √dt.
    let shift = 0.5826 * ctx.dt.sqrt();
    let bm = DiffusionSpec::brownian();
    let h_bm = move |x: f64| (x + shift) - (eta - shift);
    let dt = ctx.dt;
    let first = pooled_tail(&bm, &h_bm, ctx.n, ctx.seed, eta, eps, |s| brownian_to_return(horizon, eta, dt, s))?;
    let delta = ctx.param("delta", 0.5);
    let bes = DiffusionSpec::bessel(delta);
    let h_eta = scale_function(&bes, (eta - shift).max(0.0))?;
    let spec = bes.clone();
    let h_bes = move |x: f64| scale_function(&spec, x + shift).map_or(f64::NAN, |h| h - h_eta);
    let second =
        pooled_tail(&bes, &h_bes, ctx.n, ctx.sub(1), eta, eps, |s| bessel_to_return(delta, horizon, eta, dt, s))?;
    Ok(Outcome::new(all_of("diffusion_height_tail", vec![first, second])))
}

pub fn intersection_mean(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.param("n", 20.0);
    let points = (1.0 / ctx.dt).round() as usize;
    let y = [0.5, 0.0];
    let m = mean_intersection(y, 1.0, n, points, ctx.n, ctx.seed)?;
    let target = expected_alpha(y, 1.0);
    let mean = tolerance_test("mean", m.mean, target, 0.05).with("std_error", m.std_error);
    let rot = mean_intersection([0.0, 0.5], 1.0, n, points, ctx.n, ctx.seed)?;
    let gap = (m.mean - rot.mean).abs();
    let se = (m.std_error.powi(2) + rot.std_error.powi(2)).sqrt();
    let iso = TestReport::new("isotropy", gap / se, None, gap <= 4.0 * se, vec![ctx.n]).with("rotated_mean", rot.mean);
    Ok(Outcome::new(all_of("intersection_mean", vec![mean, iso])))
}
