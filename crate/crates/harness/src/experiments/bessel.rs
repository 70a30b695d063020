//! Bessel(3) path decompositions.

use loctime::paths::{uniform, StepPolicy, Walker};
use loctime::reflaws::law_catalog;
use loctime::rng::replicate;
use loctime::stats::{ks_one_sample, ks_two_sample};
use loctime::{Error, Result};

use super::{Ctx, Outcome, PlotData};
use crate::sim::{bridge_hits, interpolate, Bes3, MAX_STEPS};

/// Radius beyond which a return to level `a` is ignored (probability `a / r`).
const ESCAPE: f64 = 1000.0;

/// `R_{γ_a + u} - a` where `γ_a` is the last passage of Bessel(3) at `a`.
fn after_last_passage(a: f64, u: f64, dt: f64, seed: u64) -> Result<f64> {
    let mut bes = Bes3::new(seed);
    // (γ, value at γ + u) of the most recent passage.
    let mut last: Option<(f64, Option<f64>)> = None;
    let mut steps = 0u64;
    loop {
        let pending = matches!(last, Some((_, None)));
        let r = bes.radius();
        let h = if pending || r < 2.0 * a { dt } else { dt * (r / (2.0 * a)).powi(2) };
        let t0 = bes.t;
        let (r0, r1) = bes.step(h);
        steps += 1;
        if bridge_hits(r0, r1, h, a, uniform(&mut bes.rng)) {
            let frac =
                if (r0 - a) * (r1 - a) <= 0.0 { (r0 - a).abs() / (r0 - r1).abs().max(f64::MIN_POSITIVE) } else { 0.5 };
            last = Some((t0 + frac * h, None));
        }
        if let Some((g, None)) = last {
            if bes.t >= g + u {
                let w = (g + u - t0) / h;
                last = Some((g, Some(r0 + w * (r1 - r0) - a)));
            }
        }
        if r1 >= ESCAPE * a {
            if let Some((_, Some(v))) = last {
                return Ok(v);
            }
        }
        if steps >= MAX_STEPS {
            return Err(Error::HorizonExhausted { steps });
        }
    }
}

pub fn post_gamma_bes3(ctx: &Ctx) -> Result<Outcome> {
    let a = ctx.param("a", 1.0);
    let sample: Result<Vec<f64>> =
        replicate(ctx.n, ctx.seed, |_, s| after_last_passage(a, 1.0, ctx.dt, s)).into_iter().collect();
    let sample = sample?;
    let law = law_catalog("bes3_marginal", &[1.0])?;
    let report = ks_one_sample(&sample, |x| law.cdf(x), ctx.bias)?.named("post_gamma_bes3").with("a", a);
    Ok(Outcome::new(report).with_plot(PlotData::new("Bessel(3) one unit after its last passage", sample, |x| {
        law.density(x).unwrap_or(f64::NAN)
    })))
}

/// Value at half-length of the rising piece `[g_{T_c}, T_c]` of Brownian motion.
/// Steps widen away from `[-c/2, 3c/2]`, so long negative excursions stay cheap.
fn rising_midpoint(c: f64, dt: f64, seed: u64) -> Result<f64> {
    let policy = StepPolicy { dt, radius: c, center: 0.5 * c };
    let mut w = Walker::new(0.0, policy, seed);
    let (mut times, mut values) = (vec![0.0], vec![0.0]);
    loop {
        let st = w.step();
        if st.x1 >= c {
            let tc = st.t0 + st.dt * (c - st.x0) / (st.x1 - st.x0);
            times.push(tc);
            values.push(c);
            let g = times[0];
            return Ok(interpolate(&times, &values, 0.5 * (g + tc)));
        }
        let u = w.uniform();
        if bridge_hits(st.x0, st.x1, st.dt, 0.0, u) {
            let frac = if st.x0 * st.x1 <= 0.0 {
                st.x0.abs() / (st.x0.abs() + st.x1.abs()).max(f64::MIN_POSITIVE)
            } else {
                0.5
            };
            times.clear();
            values.clear();
            times.push(st.t0 + frac * st.dt);
            values.push(0.0);
        }
        if st.x1 > 0.0 {
            times.push(st.t1());
            values.push(st.x1);
        }
        if w.steps() >= MAX_STEPS {
            return Err(Error::HorizonExhausted { steps: w.steps() });
        }
    }
}

/// Bessel(3) from 0 stopped at `c`, read at half its hitting time.
fn bes3_midpoint(c: f64, dt: f64, seed: u64) -> Result<f64> {
    let mut bes = Bes3::new(seed);
    let (mut times, mut values) = (vec![0.0], vec![0.0]);
    loop {
        let t0 = bes.t;
        let (r0, r1) = bes.step(dt);
        if r1 >= c {
            let tc = t0 + dt * (c - r0) / (r1 - r0);
            times.push(tc);
            values.push(c);
            return Ok(interpolate(&times, &values, 0.5 * tc));
        }
        times.push(bes.t);
        values.push(r1);
        if times.len() as u64 >= MAX_STEPS {
            return Err(Error::HorizonExhausted { steps: times.len() as u64 });
        }
    }
}

pub fn excursion_over_tc(ctx: &Ctx) -> Result<Outcome> {
    let c = ctx.param("c", 1.0);
    let a: Result<Vec<f64>> = replicate(ctx.n, ctx.seed, |_, s| rising_midpoint(c, ctx.dt, s)).into_iter().collect();
    let b: Result<Vec<f64>> = replicate(ctx.n, ctx.sub(1), |_, s| bes3_midpoint(c, ctx.dt, s)).into_iter().collect();
    let report = ks_two_sample(&a?, &b?, ctx.bias)?.named("excursion_over_Tc").with("c", c);
    Ok(Outcome::new(report))
}
