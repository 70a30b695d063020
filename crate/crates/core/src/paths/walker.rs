//! Streaming Euler/Brownian walker with a state-dependent time mesh.
//!
//! Far from `center` the step grows like `(|x - center| / radius)^2`, so the
//! relative displacement per step stays of order `sqrt(dt) / radius`. This keeps
//! experiments that run until heavy-tailed random times (inverse local times,
//! hitting times) cheap without coarsening the mesh near the level of interest.

use super::{normal, TimeSeries};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use rand::Rng;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub dt: f64,
    pub radius: f64,
    pub center: f64,
}

impl StepPolicy {
    pub fn uniform(dt: f64) -> Self {
        Self { dt, radius: f64::INFINITY, center: 0.0 }
    }

    pub fn scaled(dt: f64, radius: f64) -> Self {
        Self { dt, radius, center: 0.0 }
    }

    #[inline]
    pub fn step_at(&self, x: f64) -> f64 {
        let r = (x - self.center).abs() / self.radius;
        if r > 1.0 {
            self.dt * r * r
        } else {
            self.dt
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t0: f64,
    pub dt: f64,
    pub x0: f64,
    pub x1: f64,
}

impl Step {
    pub fn t1(&self) -> f64 {
        self.t0 + self.dt
    }
}

pub type DriftFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub struct Walker {
    rng: SimRng,
    policy: StepPolicy,
    drift: Option<DriftFn>,
    t: f64,
    x: f64,
    steps: u64,
}

impl Walker {
    pub fn new(start: f64, policy: StepPolicy, seed: u64) -> Self {
        Self { rng: rng_from_seed(seed), policy, drift: None, t: 0.0, x: start, steps: 0 }
    }

    /// Adds a drift `b(x)`; steps become Euler–Maruyama steps.
    pub fn with_drift(mut self, drift: DriftFn) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn position(&self) -> f64 {
        self.x
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn step(&mut self) -> Step {
        let dt = self.policy.step_at(self.x);
        self.step_by(dt)
    }

    pub fn step_by(&mut self, dt: f64) -> Step {
        let x0 = self.x;
        let mut x1 = x0 + dt.sqrt() * normal(&mut self.rng);
        if let Some(b) = &self.drift {
            x1 += b(x0) * dt;
        }
        let s = Step { t0: self.t, dt, x0, x1 };
        self.t += dt;
        self.x = x1;
        self.steps += 1;
        s
    }
}

/// Maximum of a Brownian bridge from `x0` to `x1` over time `dt`, given `u ~ U(0,1)`.
#[inline]
pub fn bridge_max(x0: f64, x1: f64, dt: f64, u: f64) -> f64 {
    let d = x1 - x0;
    0.5 * (x0 + x1 + (d * d - 2.0 * dt * u.max(f64::MIN_POSITIVE).ln()).sqrt())
}

/// A recorded walker path with non-uniform times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub base_step: f64,
}

impl Trajectory {
    /// Records steps of a fresh walker until `stop` returns true for a step
    /// (that step is kept). Fails after `max_steps` steps.
    pub fn record<F>(start: f64, policy: StepPolicy, seed: u64, max_steps: u64, mut stop: F) -> Result<Self>
    where
        F: FnMut(&Step) -> bool,
    {
        let mut w = Walker::new(start, policy, seed);
        let mut times = vec![0.0];
        let mut values = vec![start];
        loop {
            let s = w.step();
            times.push(s.t1());
            values.push(s.x1);
            if stop(&s) {
                break;
            }
            if w.steps() >= max_steps {
                return Err(Error::HorizonExhausted { steps: w.steps() });
            }
        }
        Ok(Self { times, values, seed, base_step: policy.dt })
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }
}

impl TimeSeries for Trajectory {
    fn len(&self) -> usize {
        self.values.len()
    }
    fn time(&self, i: usize) -> f64 {
        self.times[i]
    }
    fn value(&self, i: usize) -> f64 {
        self.values[i]
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn base_step(&self) -> f64 {
        self.base_step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_is_uniform_near_center() {
        let p = StepPolicy::scaled(1e-4, 1.0);
        assert_eq!(p.step_at(0.5), 1e-4);
        assert!((p.step_at(3.0) - 9e-4).abs() < 1e-15);
        assert_eq!(StepPolicy::uniform(1e-3).step_at(1e6), 1e-3);
    }

    #[test]
    fn bridge_max_dominates_endpoints() {
        for &u in &[1e-12, 0.1, 0.5, 0.999_999] {
            let m = bridge_max(0.3, -0.2, 0.01, u);
            assert!(m >= 0.3 - 1e-15);
        }
        // u -> 1 gives the larger endpoint.
        assert!((bridge_max(0.3, -0.2, 0.01, 1.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn record_stops_and_reports_exhaustion() {
        let t = Trajectory::record(0.0, StepPolicy::uniform(1e-3), 1, 1_000_000, |s| s.x1 >= 0.5).unwrap();
        assert!(*t.values.last().unwrap() >= 0.5);
        assert!(t.values[..t.values.len() - 1].iter().all(|v| *v < 0.5));
        let e = Trajectory::record(0.0, StepPolicy::uniform(1e-3), 1, 10, |_| false);
        assert!(matches!(e, Err(Error::HorizonExhausted { steps: 10 })));
    }

    #[test]
    fn drift_shifts_the_walk() {
        let mut w = Walker::new(0.0, StepPolicy::uniform(1e-3), 3).with_drift(Arc::new(|_| 5.0));
        for _ in 0..1000 {
            w.step();
        }
        // Mean 5, sd 1.
        assert!((w.position() - 5.0).abs() < 5.0);
        assert!((w.time() - 1.0).abs() < 1e-9);
    }
}
