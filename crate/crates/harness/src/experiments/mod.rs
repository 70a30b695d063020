//! The experiment catalog.

use std::collections::BTreeMap;

use loctime::stats::TestReport;
use loctime::Result;

mod bessel;
mod brownian;
mod diffusion;
mod excursion;
mod raykn;

/// Inputs handed to an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Ctx {
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    /// KS bias tolerance for statistics built on local-time or zero-set estimates.
    pub bias: f64,
    pub params: BTreeMap<String, f64>,
}

impl Ctx {
    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    /// Seed of an independent sub-stream.
    pub fn sub(&self, k: u64) -> u64 {
        loctime::rng::mix(self.seed, 0xA5A5_0000 + k)
    }
}

/// A histogram sample with a reference density evaluated on its range.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub title: String,
    pub sample: Vec<f64>,
    pub reference: Vec<(f64, f64)>,
}

impl PlotData {
    pub fn new<F: Fn(f64) -> f64>(title: &str, sample: Vec<f64>, density: F) -> Self {
        let mut s = sample.clone();
        s.sort_by(f64::total_cmp);
        let (lo, hi) = if s.is_empty() { (0.0, 1.0) } else { (s[s.len() / 200], s[s.len() - 1 - s.len() / 200]) };
        let reference = (0..=200)
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / 200.0;
                (x, density(x))
            })
            .filter(|(_, y)| y.is_finite())
            .collect();
        Self { title: title.to_string(), sample, reference }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: TestReport,
    pub plot: Option<PlotData>,
}

impl Outcome {
    pub fn new(report: TestReport) -> Self {
        Self { report, plot: None }
    }

    pub fn with_plot(mut self, plot: PlotData) -> Self {
        self.plot = Some(plot);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub n: usize,
    pub dt: f64,
}

pub type Runner = fn(&Ctx) -> Result<Outcome>;

#[derive(Clone, Copy)]
pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    /// Never gates the suite; reports which candidate the data supports.
    pub adjudication: bool,
    pub full: Budget,
    pub quick: Budget,
    /// Simulated time per replicate (used for the work budget).
    pub horizon: f64,
    pub run: Runner,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).finish()
    }
}

const fn b(n: usize, dt: f64) -> Budget {
    Budget { n, dt }
}

macro_rules! entry {
    ($name:literal, $about:literal, $adj:expr, $full:expr, $quick:expr, $h:expr, $run:path) => {
        Experiment {
            name: $name,
            about: $about,
            adjudication: $adj,
            full: $full,
            quick: $quick,
            horizon: $h,
            run: $run,
        }
    };
}

static CATALOG: &[Experiment] = &[
    entry!(
        "local_time_moments",
        "second moment of the occupation local time at 0",
        false,
        b(50_000, 1e-4),
        b(20_000, 2.5e-4),
        1.0,
        brownian::local_time_moments
    ),
    entry!(
        "levy_equivalence",
        "(S-B, S) against (|B|, L)",
        false,
        b(20_000, 1e-3),
        b(4_000, 1e-3),
        1.0,
        brownian::levy_equivalence
    ),
    entry!(
        "pitman",
        "2S-B against Bessel(3); S given 2S-B uniform",
        false,
        b(20_000, 1e-3),
        b(4_000, 1e-3),
        1.0,
        brownian::pitman
    ),
    entry!(
        "pitman_drift",
        "2S-B with drift against the coth diffusion",
        false,
        b(20_000, 1e-3),
        b(3_000, 2e-3),
        2.0,
        brownian::pitman_drift
    ),
    entry!(
        "b_gamma_uniform",
        "B at the first hit of a by 2S-B is uniform on [-a, a]",
        false,
        b(10_000, 1e-4),
        b(2_000, 1e-3),
        0.34,
        brownian::b_gamma_uniform
    ),
    entry!(
        "arcsine_pair",
        "last zero and time positive against the arcsine law",
        false,
        b(50_000, 1e-3),
        b(5_000, 1e-3),
        1.0,
        brownian::arcsine_pair
    ),
    entry!(
        "conditional_sign",
        "P(B1 > 0 | A+) = A+",
        false,
        b(100_000, 1e-3),
        b(30_000, 1e-3),
        1.0,
        brownian::conditional_sign
    ),
    entry!(
        "bridge_lt_rayleigh",
        "bridge local time at 0 against Rayleigh",
        false,
        b(20_000, 1e-3),
        b(4_000, 1e-3),
        1.0,
        brownian::bridge_lt_rayleigh
    ),
    entry!(
        "meander_endpoint",
        "|B1| / sqrt(1 - g1) against Rayleigh",
        false,
        b(20_000, 1e-3),
        b(4_000, 1e-3),
        1.0,
        brownian::meander_endpoint
    ),
    entry!(
        "trivariate_laplace",
        "joint transform of (A+, A-, L) at the first hit of 1",
        false,
        b(20_000, 1e-3),
        b(3_000, 2e-3),
        4.0,
        brownian::trivariate_laplace
    ),
    entry!(
        "ray_knight_T1",
        "local times below 1 at its hitting time are BESQ(2)",
        false,
        b(10_000, 1e-3),
        b(2_000, 2e-3),
        4.0,
        raykn::ray_knight_t1
    ),
    entry!(
        "ray_knight_tau",
        "local times at inverse local time are BESQ(0)",
        false,
        b(30_000, 1e-3),
        b(4_000, 2e-3),
        4.0,
        raykn::ray_knight_tau
    ),
    entry!(
        "besq_additivity",
        "BESQ(1) + BESQ(1) = BESQ(2)",
        false,
        b(100_000, 1.0),
        b(20_000, 1.0),
        1.0,
        raykn::besq_additivity
    ),
    entry!(
        "ciesielski_taylor",
        "occupation of Bessel(3) below 1 against T1 of |B|",
        false,
        b(10_000, 1e-4),
        b(2_000, 1e-3),
        2.0,
        raykn::ciesielski_taylor
    ),
    entry!(
        "tau_subordinator",
        "Laplace transform of the inverse local time",
        false,
        b(20_000, 2e-4),
        b(3_000, 1e-3),
        4.0,
        excursion::tau_subordinator
    ),
    entry!(
        "knight_identity",
        "A+ / 2S^2 at inverse local time against Bessel(3) hitting of 2",
        false,
        b(20_000, 2e-4),
        b(3_000, 1e-3),
        4.0,
        excursion::knight_identity
    ),
    entry!(
        "coth_transform",
        "which constant the coth transform carries",
        true,
        b(20_000, 2e-4),
        b(3_000, 1e-3),
        4.0,
        excursion::coth_transform
    ),
    entry!(
        "watanabe_law",
        "which law the maximum at inverse local time follows",
        true,
        b(20_000, 2e-4),
        b(3_000, 1e-3),
        4.0,
        excursion::watanabe_law
    ),
    entry!(
        "excursion_tails",
        "Ito measure tails of length and height",
        false,
        b(20_000, 2e-4),
        b(3_000, 5e-4),
        4.0,
        excursion::excursion_tails
    ),
    entry!(
        "longest_excursion",
        "longest excursion before inverse local time and before g1",
        false,
        b(10_000, 2e-4),
        b(2_000, 5e-4),
        4.0,
        excursion::longest_excursion
    ),
    entry!(
        "excursion_lt_law",
        "local time at x of excursions reaching x",
        false,
        b(10_000, 2e-4),
        b(2_000, 5e-4),
        4.0,
        excursion::excursion_lt_law
    ),
    entry!(
        "stable_from_excursions",
        "integral of |B|^gamma up to inverse local time is stable",
        false,
        b(10_000, 5e-4),
        b(2_000, 1e-3),
        8.0,
        excursion::stable_from_excursions
    ),
    entry!(
        "straddle_laws",
        "straddling excursion laws at a fixed time and at T_c",
        false,
        b(10_000, 1e-3),
        b(2_000, 1e-3),
        6.0,
        excursion::straddle_laws
    ),
    entry!(
        "williams_ito_consistency",
        "straddling excursion shape is independent of its length",
        false,
        b(10_000, 1e-4),
        b(2_000, 5e-4),
        3.0,
        excursion::williams_ito_consistency
    ),
    entry!(
        "spider_occupation",
        "Walsh spider occupation fractions",
        false,
        b(20_000, 2.5e-4),
        b(4_000, 1e-3),
        1.0,
        excursion::spider_occupation
    ),
    entry!(
        "post_gamma_bes3",
        "Bessel(3) after its last passage at a",
        false,
        b(10_000, 1e-3),
        b(2_000, 2e-3),
        8.0,
        bessel::post_gamma_bes3
    ),
    entry!(
        "excursion_over_Tc",
        "rising part of the excursion over T_c is Bessel(3)",
        false,
        b(10_000, 1e-4),
        b(2_000, 1e-3),
        4.0,
        bessel::excursion_over_tc
    ),
    entry!(
        "bangbang_marginal",
        "bang-bang diffusion marginal",
        false,
        b(20_000, 1e-4),
        b(4_000, 1e-3),
        1.0,
        diffusion::bangbang_marginal
    ),
    entry!(
        "azema_yor",
        "Azema-Yor embedding of two-point and uniform targets",
        false,
        b(10_000, 1e-4),
        b(2_000, 2.5e-4),
        1.0,
        diffusion::azema_yor
    ),
    entry!(
        "supremum_law",
        "maximum at the Azema-Yor time",
        false,
        b(10_000, 1e-4),
        b(2_000, 1e-3),
        1.0,
        diffusion::supremum_law
    ),
    entry!(
        "feynman_kac_resolvent",
        "Monte Carlo resolvent against the Sturm-Liouville solution",
        false,
        b(100_000, 5e-4),
        b(20_000, 2e-3),
        2.0,
        diffusion::feynman_kac_resolvent
    ),
    entry!(
        "feynman_kac_convention",
        "which generator convention matches Monte Carlo",
        true,
        b(100_000, 5e-4),
        b(20_000, 2e-3),
        2.0,
        diffusion::feynman_kac_convention
    ),
    entry!(
        "ou_inverse_lt",
        "Levy measure of the Ornstein-Uhlenbeck inverse local time",
        true,
        b(10_000, 1e-3),
        b(2_000, 2e-3),
        2.0,
        diffusion::ou_inverse_lt
    ),
    entry!(
        "scale_hitting",
        "exit probabilities from the scale function",
        false,
        b(10_000, 1e-4),
        b(2_000, 1e-3),
        1.0,
        diffusion::scale_hitting
    ),
    entry!(
        "diffusion_height_tail",
        "n(M >= a) h(a) is constant for a recurrent diffusion",
        false,
        b(5_000, 1e-4),
        b(500, 1e-3),
        4.0,
        diffusion::diffusion_height_tail
    ),
    entry!(
        "intersection_mean",
        "mean planar self-intersection local time",
        false,
        b(2_000, 2.5e-4),
        b(300, 1e-3),
        1.0,
        diffusion::intersection_mean
    ),
];

pub fn catalog() -> &'static [Experiment] {
    CATALOG
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    CATALOG.iter().find(|e| e.name == name)
}
