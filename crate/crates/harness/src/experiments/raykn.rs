//! Ray–Knight fields, squared Bessel additivity and the Ciesielski–Taylor identity.

use loctime::paths::{besq_transition, uniform, StepPolicy, Walker};
use loctime::reflaws::law_catalog;
use loctime::rng::{replicate, rng_from_seed};
use loctime::stats::{
    all_of, correlation_test, ks_one_sample, ks_two_sample, mean_se, moment_test, tolerance_test, TestReport,
};
use loctime::{Error, Result};

use super::{Ctx, Outcome, PlotData};
use crate::sim::{bridge_hits, run_to_level, run_to_tau, Bes3, TauConfig};

pub fn ray_knight_t1(ctx: &Ctx) -> Result<Outcome> {
    const A: [f64; 3] = [0.25, 0.5, 0.75];
    let levels: Vec<f64> = A.iter().map(|a| 1.0 - a).collect();
    let runs: Result<Vec<_>> =
        replicate(ctx.n, ctx.seed, |_, s| run_to_level(1.0, &levels, ctx.dt, 1.0, s)).into_iter().collect();
    let runs = runs?;
    let mut parts = Vec::new();
    for (k, a) in A.iter().enumerate() {
        let lt: Vec<f64> = runs.iter().map(|r| r.level_lt[k]).collect();
        let m = mean_se(&lt).mean;
        parts.push(tolerance_test(&format!("mean_a{a}"), m, 2.0 * a, 0.05));
        let law = law_catalog("exp_law", &[2.0 * a])?;
        parts.push(ks_one_sample(&lt, |x| law.cdf(x), 0.0)?.named(format!("exp_a{a}")));
    }
    // Increment Z_{0.75} - Z_{0.25} against exact BESQ(2) transitions.
    let inc: Vec<f64> = runs.iter().map(|r| r.level_lt[2] - r.level_lt[0]).collect();
    let reference = replicate(ctx.n, ctx.sub(1), |_, s| {
        let mut rng = rng_from_seed(s);
        let z1 = besq_transition(2.0, 0.0, 0.25, &mut rng);
        besq_transition(2.0, z1, 0.5, &mut rng) - z1
    });
    parts.push(ks_two_sample(&inc, &reference, 0.0)?.named("besq2_increment"));
    let plot_sample: Vec<f64> = runs.iter().map(|r| r.level_lt[1]).collect();
    Ok(Outcome::new(all_of("ray_knight_T1", parts)).with_plot(PlotData::new(
        "local time at 1/2 up to T1",
        plot_sample,
        |x| if x < 0.0 { 0.0 } else { (-x).exp() },
    )))
}

pub fn ray_knight_tau(ctx: &Ctx) -> Result<Outcome> {
    let mut cfg = TauConfig::new(1.0, ctx.dt);
    cfg.levels = vec![0.25, 0.5, 1.0, -0.5];
    let runs: Result<Vec<_>> = replicate(ctx.n, ctx.seed, |_, s| run_to_tau(&cfg, s)).into_iter().collect();
    let runs = runs?;
    let mut parts = Vec::new();
    for k in 0..3 {
        let lt: Vec<f64> = runs.iter().map(|r| r.level_lt[k]).collect();
        let m = mean_se(&lt);
        parts.push(
            tolerance_test(&format!("mean_x{}", cfg.levels[k]), m.mean, 1.0, 0.05).with("std_error", m.std_error),
        );
    }
    let right: Vec<f64> = runs.iter().map(|r| r.level_lt[1]).collect();
    let left: Vec<f64> = runs.iter().map(|r| r.level_lt[3]).collect();
    parts.push(correlation_test(&left, &right)?.named("left_right_independence"));
    Ok(Outcome::new(all_of("ray_knight_tau", parts)))
}

pub fn besq_additivity(ctx: &Ctx) -> Result<Outcome> {
    let a = ctx.param("a", 1.0);
    let sum = replicate(ctx.n, ctx.seed, |_, s| {
        let mut rng = rng_from_seed(s);
        besq_transition(1.0, 0.0, a, &mut rng) + besq_transition(1.0, 0.0, a, &mut rng)
    });
    let two = replicate(ctx.n, ctx.sub(1), |_, s| besq_transition(2.0, 0.0, a, &mut rng_from_seed(s)));
    let ks = ks_two_sample(&sum, &two, 0.0)?.named("sum_vs_besq2");
    let mean = moment_test(&sum, 2.0 * a, 4.0)?.named("mean");
    let law = law_catalog("besq_marginal", &[2.0, 0.0, a])?;
    Ok(Outcome::new(all_of("besq_additivity", vec![ks, mean])).with_plot(PlotData::new(
        "BESQ(1) + BESQ(1) at a",
        sum,
        |x| law.density(x).unwrap_or(f64::NAN),
    )))
}

/// Escape radius for the Bessel(3) occupation; returns happen with probability `1/K`.
const ESCAPE: f64 = 50.0;

fn bes3_occupation_below_one(dt: f64, seed: u64, cap: u64) -> Result<f64> {
    let mut p = Bes3::new(seed);
    let mut occ = 0.0;
    for _ in 0..cap {
        let r = p.radius();
        let h = dt * r.max(1.0).powi(2);
        let (r0, r1) = p.step(h);
        occ += match (r0 < 1.0, r1 < 1.0) {
            (true, true) => h,
            (false, false) => 0.0,
            (true, false) => h * (1.0 - r0) / (r1 - r0),
            (false, true) => h * (1.0 - r1) / (r0 - r1),
        };
        if r1 >= ESCAPE {
            // From radius K the path returns to the unit sphere with probability 1/K;
            // its excursion above 1 adds nothing, so restart on the sphere.
            if uniform(&mut p.rng) < 1.0 / ESCAPE {
                let r = p.radius();
                p.w.iter_mut().for_each(|c| *c /= r);
            } else {
                return Ok(occ);
            }
        }
    }
    Err(Error::HorizonExhausted { steps: cap })
}

fn abs_bm_hit_one(dt: f64, seed: u64, cap: u64) -> Result<f64> {
    let mut w = Walker::new(0.0, StepPolicy::uniform(dt), seed);
    for _ in 0..cap {
        let s = w.step();
        let (u, v) = (w.uniform(), w.uniform());
        if bridge_hits(s.x0, s.x1, s.dt, 1.0, u) || bridge_hits(s.x0, s.x1, s.dt, -1.0, v) {
            return Ok(s.t0 + 0.5 * s.dt);
        }
    }
    Err(Error::HorizonExhausted { steps: cap })
}

pub fn ciesielski_taylor(ctx: &Ctx) -> Result<Outcome> {
    let cap = (100.0 / ctx.dt) as u64;
    let occ = replicate(ctx.n, ctx.seed, |_, s| bes3_occupation_below_one(ctx.dt, s, cap).ok());
    let hit = replicate(ctx.n, ctx.sub(1), |_, s| abs_bm_hit_one(ctx.dt, s, cap).ok());
    let capped = occ.iter().chain(&hit).filter(|v| v.is_none()).count();
    let rate = capped as f64 / (2 * ctx.n) as f64;
    let occ: Vec<f64> = occ.into_iter().flatten().collect();
    let hit: Vec<f64> = hit.into_iter().flatten().collect();
    let ks = ks_two_sample(&occ, &hit, 0.0)?.named("occupation_vs_hitting");
    let cap_report = TestReport::new("cap_hit_rate", rate, None, rate < 1e-3, vec![2 * ctx.n]);
    Ok(Outcome::new(all_of("ciesielski_taylor", vec![ks, cap_report])))
}
