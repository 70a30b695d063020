//! Streaming Brownian functionals shared by the experiments.

use loctime::localtime::bridge_local_time_increment;
use loctime::paths::{bridge_max, normal, uniform, Step, StepPolicy, Trajectory, Walker};
use loctime::rng::{rng_from_seed, SimRng};
use loctime::{Error, Result};

/// Hard cap on walker steps for a single replicate.
pub const MAX_STEPS: u64 = 200_000_000;

/// Time spent above 0 during a step, with the crossing located linearly.
#[inline]
pub fn positive_time(s: &Step) -> f64 {
    match (s.x0 > 0.0, s.x1 > 0.0) {
        (true, true) => s.dt,
        (false, false) => 0.0,
        _ => s.dt * s.x0.max(s.x1) / (s.x0.abs() + s.x1.abs()),
    }
}

/// Whether the Brownian bridge over the step touches `level`.
#[inline]
pub fn bridge_hits(x0: f64, x1: f64, dt: f64, level: f64, u: f64) -> bool {
    let (a, b) = (x0 - level, x1 - level);
    a * b <= 0.0 || u < (-2.0 * a * b / dt).exp()
}

/// Keeps the running maximum exact given the skeleton: the bridge maximum is
/// only drawn when the step can plausibly exceed the current record.
#[inline]
pub fn update_max(sup: &mut f64, x0: f64, x1: f64, dt: f64, rng: &mut SimRng) {
    let top = x0.max(x1);
    if top + 8.0 * dt.sqrt() > *sup {
        *sup = sup.max(bridge_max(x0, x1, dt, uniform(rng)));
    }
}

/// Fixed-grid Brownian path with its exact running maximum and local time at 0.
pub struct GridRun {
    pub values: Vec<f64>,
    pub sup: f64,
    pub l0: f64,
}

pub fn grid_run(n_steps: usize, dt: f64, seed: u64) -> GridRun {
    let mut rng = rng_from_seed(seed);
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(n_steps + 1);
    let (mut x, mut sup, mut l0) = (0.0f64, 0.0f64, 0.0);
    values.push(x);
    for _ in 0..n_steps {
        let x1 = x + sd * normal(&mut rng);
        update_max(&mut sup, x, x1, dt, &mut rng);
        l0 += bridge_local_time_increment(x, x1, dt, 0.0, uniform(&mut rng));
        values.push(x1);
        x = x1;
    }
    GridRun { values, sup, l0 }
}

#[derive(Debug, Clone)]
pub struct TauConfig {
    pub l: f64,
    pub dt: f64,
    pub radius: f64,
    /// Exponent for `∫ |B|^γ ds`, if wanted.
    pub gamma: Option<f64>,
    /// Extra levels whose local time is tracked.
    pub levels: Vec<f64>,
    pub record: bool,
}

impl TauConfig {
    pub fn new(l: f64, dt: f64) -> Self {
        Self { l, dt, radius: 0.5, gamma: None, levels: vec![], record: false }
    }
}

/// Functionals of a Brownian path run until its local time at 0 reaches `l`.
#[derive(Debug, Clone)]
pub struct TauRun {
    pub tau: f64,
    pub a_plus: f64,
    pub sup: f64,
    pub area: f64,
    pub level_lt: Vec<f64>,
    pub path: Option<Trajectory>,
}

pub fn run_to_tau(cfg: &TauConfig, seed: u64) -> Result<TauRun> {
    let policy = StepPolicy::scaled(cfg.dt, cfg.radius);
    let mut w = Walker::new(0.0, policy, seed);
    let (mut l0, mut a_plus, mut sup, mut area) = (0.0, 0.0, 0.0f64, 0.0);
    let mut level_lt = vec![0.0; cfg.levels.len()];
    let mut rec = cfg.record.then(|| (vec![0.0], vec![0.0]));
    let g = cfg.gamma;
    loop {
        let s = w.step();
        let incr = bridge_local_time_increment(s.x0, s.x1, s.dt, 0.0, w.uniform());
        // Fraction of the step before the local time reaches l.
        let frac = if l0 + incr >= cfg.l { (cfg.l - l0) / incr } else { 1.0 };
        a_plus += frac * positive_time(&s);
        update_max(&mut sup, s.x0, s.x1, s.dt, w.rng());
        if let Some(g) = g {
            area += frac * 0.5 * s.dt * (s.x0.abs().powf(g) + s.x1.abs().powf(g));
        }
        for (k, lev) in cfg.levels.iter().enumerate() {
            level_lt[k] += frac * bridge_local_time_increment(s.x0, s.x1, s.dt, *lev, w.uniform());
        }
        if frac < 1.0 {
            let tau = s.t0 + frac * s.dt;
            let path = rec.map(|(mut t, mut v)| {
                t.push(tau);
                v.push(0.0);
                Trajectory { times: t, values: v, seed, base_step: cfg.dt }
            });
            return Ok(TauRun { tau, a_plus, sup, area, level_lt, path });
        }
        l0 += incr;
        if let Some((t, v)) = rec.as_mut() {
            t.push(s.t1());
            v.push(s.x1);
        }
        if w.steps() >= MAX_STEPS {
            return Err(Error::HorizonExhausted { steps: w.steps() });
        }
    }
}

/// First passage of Brownian motion from `start` to `level` (detected through
/// the bridge), as `(time, walker steps)`, along with the local time at each
/// of `levels` and the positive/negative occupation times.
#[derive(Debug, Clone)]
pub struct HitRun {
    pub t: f64,
    pub level_lt: Vec<f64>,
    pub l0: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

pub fn run_to_level(level: f64, levels: &[f64], dt: f64, radius: f64, seed: u64) -> Result<HitRun> {
    let mut policy = StepPolicy::scaled(dt, radius);
    policy.center = 0.5 * level;
    let mut w = Walker::new(0.0, policy, seed);
    let mut level_lt = vec![0.0; levels.len()];
    let (mut l0, mut a_plus) = (0.0, 0.0);
    loop {
        let s = w.step();
        for (k, lev) in levels.iter().enumerate() {
            level_lt[k] += bridge_local_time_increment(s.x0, s.x1, s.dt, *lev, w.uniform());
        }
        l0 += bridge_local_time_increment(s.x0, s.x1, s.dt, 0.0, w.uniform());
        a_plus += positive_time(&s);
        if bridge_hits(s.x0, s.x1, s.dt, level, w.uniform()) {
            let t = s.t1();
            return Ok(HitRun { t, level_lt, l0, a_plus, a_minus: t - a_plus });
        }
        if w.steps() >= MAX_STEPS {
            return Err(Error::HorizonExhausted { steps: w.steps() });
        }
    }
}

/// Three-dimensional Brownian motion from the origin: `|W|` is Bessel(3).
pub struct Bes3 {
    pub rng: SimRng,
    pub w: [f64; 3],
    pub t: f64,
}

impl Bes3 {
    pub fn new(seed: u64) -> Self {
        Self { rng: rng_from_seed(seed), w: [0.0; 3], t: 0.0 }
    }

    pub fn radius(&self) -> f64 {
        (self.w[0] * self.w[0] + self.w[1] * self.w[1] + self.w[2] * self.w[2]).sqrt()
    }

    /// Advances by `dt`, returning `(r0, r1)`.
    pub fn step(&mut self, dt: f64) -> (f64, f64) {
        let r0 = self.radius();
        let sd = dt.sqrt();
        for c in &mut self.w {
            *c += sd * normal(&mut self.rng);
        }
        self.t += dt;
        (r0, self.radius())
    }
}

/// Linear interpolation of a recorded `(times, values)` series at `t`.
pub fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|s| *s <= t);
    if k == 0 {
        return values[0];
    }
    if k >= times.len() {
        return values[values.len() - 1];
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    values[k - 1] + w * (values[k] - values[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_time_splits_crossing_steps() {
        let s = Step { t0: 0.0, dt: 1.0, x0: -1.0, x1: 3.0 };
        assert!((positive_time(&s) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn tau_run_is_seeded() {
        let cfg = TauConfig::new(0.5, 1e-3);
        let a = run_to_tau(&cfg, 4).unwrap();
        let b = run_to_tau(&cfg, 4).unwrap();
        assert_eq!(a.tau, b.tau);
        assert!(a.a_plus <= a.tau && a.sup >= 0.0);
    }

    #[test]
    fn recorded_tau_path_ends_at_zero() {
        let mut cfg = TauConfig::new(0.3, 1e-3);
        cfg.record = true;
        let r = run_to_tau(&cfg, 11).unwrap();
        let p = r.path.unwrap();
        assert_eq!(*p.values.last().unwrap(), 0.0);
        assert!((p.end_time() - r.tau).abs() < 1e-12);
    }

    #[test]
    fn interpolation() {
        assert_eq!(interpolate(&[0.0, 1.0, 3.0], &[0.0, 2.0, 0.0], 2.0), 1.0);
    }
}
