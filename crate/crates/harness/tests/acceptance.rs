//! Acceptance run: the full suite on one worker, the quick suite on one and
//! eight workers, and a null calibration of the gating tests. Prints one line
//! per criterion and exits non-zero if any fails.

use std::process::ExitCode;

use loctime::paths::{normal, uniform};
use loctime::rng::{replicate, rng_from_seed};
use loctime::special::norm_cdf;
use loctime::stats::{
    correlation_test, dispersion_test, ks_one_sample, ks_two_sample, moment_test, regression_bin_test,
};
use loctime::TestReport;
use loctime_harness::{run_suite, ReportRecord, RunOptions, Suite, SuiteOptions, SuiteReport};
use serde_json::Value;

struct Check {
    id: usize,
    title: &'static str,
    failures: Vec<String>,
}

impl Check {
    fn new(id: usize, title: &'static str) -> Self {
        Self { id, title, failures: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn print(&self) -> bool {
        let ok = self.failures.is_empty();
        let tag = if ok { "PASS" } else { "FAIL" };
        if ok {
            println!("{tag}  criterion {:>2}  {}", self.id, self.title);
        } else {
            println!("{tag}  criterion {:>2}  {}: {}", self.id, self.title, self.failures.join("; "));
        }
        ok
    }
}

fn record<'a>(report: &'a SuiteReport, name: &str) -> &'a ReportRecord {
    report
        .reports
        .iter()
        .find(|r| r.experiment == name)
        .unwrap_or_else(|| panic!("experiment {name} missing from report"))
}

fn num(r: &ReportRecord, key: &str) -> f64 {
    r.details.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn nums(r: &ReportRecord, key: &str) -> Vec<f64> {
    r.details
        .get(key)
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default()
}

fn flag(r: &ReportRecord, key: &str) -> bool {
    r.details.get(key).and_then(Value::as_bool).unwrap_or(false)
}

/// Requires the experiment to pass with at least `n` paths.
fn gate(c: &mut Check, report: &SuiteReport, name: &str, n: usize) {
    let r = record(report, name);
    c.require(r.passed, format!("{name} failed (statistic {:?})", r.statistic));
    c.require(r.n_paths >= n, format!("{name} used {} paths, needs {n}", r.n_paths));
}

fn ks_parts(c: &mut Check, r: &ReportRecord, parts: &[&str]) {
    for part in parts {
        let p = num(r, &format!("{part}.p_value"));
        c.require(p > 1e-3, format!("{}.{part} p = {p:.3e}", r.experiment));
        let bias = num(r, &format!("{part}.bias_tolerance"));
        c.require(bias <= 0.02 + 1e-12, format!("{}.{part} bias tolerance {bias}", r.experiment));
    }
}

fn without_timing(mut report: SuiteReport) -> String {
    report.wall_clock_ms = 0;
    for r in &mut report.reports {
        r.runtime_ms = 0;
    }
    serde_json::to_string(&report).expect("serialize report")
}

fn suite(kind: Suite, jobs: usize, timing: bool) -> SuiteReport {
    let opts = SuiteOptions { jobs: Some(jobs), run: RunOptions { timing, plots: false }, ..SuiteOptions::default() };
    run_suite(kind, &opts).expect("suite runs").0
}

/// Failure rate of a gating test over independent null replicates.
fn null_rate(reps: usize, seed: u64, test: impl Fn(u64) -> TestReport + Sync + Send) -> f64 {
    let passed = replicate(reps, seed, |_, s| test(s).passed);
    passed.iter().filter(|p| !**p).count() as f64 / reps as f64
}

fn poisson(rng: &mut loctime::rng::SimRng, mean: f64) -> u64 {
    let u = uniform(rng);
    let (mut k, mut p) = (0u64, (-mean).exp());
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

fn null_calibration(c: &mut Check) {
    const REPS: usize = 2000;
    const LIMIT: f64 = 5e-3;
    let rates = [
        (
            "ks_one_sample",
            null_rate(REPS, 1, |s| {
                let mut rng = rng_from_seed(s);
                let x: Vec<f64> = (0..2000).map(|_| normal(&mut rng)).collect();
                ks_one_sample(&x, norm_cdf, 0.0).unwrap()
            }),
        ),
        (
            "ks_two_sample",
            null_rate(REPS, 2, |s| {
                let mut rng = rng_from_seed(s);
                let a: Vec<f64> = (0..2000).map(|_| uniform(&mut rng)).collect();
                let b: Vec<f64> = (0..1500).map(|_| uniform(&mut rng)).collect();
                ks_two_sample(&a, &b, 0.0).unwrap()
            }),
        ),
        (
            "moment_test",
            null_rate(REPS, 3, |s| {
                let mut rng = rng_from_seed(s);
                let x: Vec<f64> = (0..2000).map(|_| -uniform(&mut rng).ln()).collect();
                moment_test(&x, 1.0, 4.0).unwrap()
            }),
        ),
        (
            "correlation_test",
            null_rate(REPS, 4, |s| {
                let mut rng = rng_from_seed(s);
                let a: Vec<f64> = (0..2000).map(|_| normal(&mut rng)).collect();
                let b: Vec<f64> = (0..2000).map(|_| uniform(&mut rng)).collect();
                correlation_test(&a, &b).unwrap()
            }),
        ),
        (
            "regression_bin_test",
            null_rate(REPS, 5, |s| {
                let mut rng = rng_from_seed(s);
                let x: Vec<f64> = (0..5000).map(|_| uniform(&mut rng)).collect();
                let y: Vec<f64> = x.iter().map(|&p| f64::from(u8::from(uniform(&mut rng) < p))).collect();
                regression_bin_test(&x, &y, |p| p, 10, (0.0, 1.0)).unwrap()
            }),
        ),
        (
            "dispersion_test",
            null_rate(REPS / 4, 6, |s| {
                let mut rng = rng_from_seed(s);
                let x: Vec<u64> = (0..20_000).map(|_| poisson(&mut rng, 1.5)).collect();
                dispersion_test(&x).unwrap()
            }),
        ),
    ];
    for (name, rate) in rates {
        println!("      null failure rate {name:<20} {rate:.4}");
        c.require(rate <= LIMIT, format!("{name} null failure rate {rate}"));
    }
}

fn main() -> ExitCode {
    let full = suite(Suite::Full, 1, true);
    let quick1 = suite(Suite::Quick, 1, true);
    let quick8 = suite(Suite::Quick, 8, false);
    let full_s = full.wall_clock_ms as f64 / 1000.0;
    let quick_s = quick1.wall_clock_ms as f64 / 1000.0;
    println!("      full suite {full_s:.1} s on one worker, quick suite {quick_s:.1} s");

    let mut checks = Vec::new();

    let mut c = Check::new(1, "second moment of local time at 0");
    gate(&mut c, &full, "local_time_moments", 50_000);
    let r = record(&full, "local_time_moments");
    c.require((r.dt - 1e-4).abs() < 1e-15, format!("dt {}", r.dt));
    c.require((num(r, "bandwidth") - 1e-4f64.powf(0.4)).abs() < 1e-12, "bandwidth is not dt^0.4");
    c.require(num(r, "rel_tol") <= 0.03, "relative tolerance above 3%");
    c.require(r.runtime_ms <= 60_000, format!("runtime {} ms", r.runtime_ms));
    checks.push(c);

    let mut c = Check::new(2, "Levy equivalence");
    gate(&mut c, &full, "levy_equivalence", 20_000);
    ks_parts(&mut c, record(&full, "levy_equivalence"), &["s_minus_b_vs_abs_b", "sup_vs_local_time"]);
    checks.push(c);

    let mut c = Check::new(3, "Pitman");
    gate(&mut c, &full, "pitman", 20_000);
    let r = record(&full, "pitman");
    ks_parts(&mut c, r, &["bes3_marginal"]);
    c.require(num(r, "conditional_uniform.statistic") <= 0.03, "conditional uniform gap above 0.03");
    checks.push(c);

    let mut c = Check::new(4, "inverse local time transform");
    gate(&mut c, &full, "tau_subordinator", 1);
    let r = record(&full, "tau_subordinator");
    c.require(nums(r, "laplace_grid.lambda") == [0.5, 1.0, 2.0], "grid is not {0.5, 1, 2}");
    c.require(num(r, "laplace_grid.allowance") <= 0.02, "allowance above 0.02");
    c.require((num(r, "laplace_at_1.target") - 0.2431).abs() < 5e-5, "E exp(-tau) target");
    c.require((num(r, "laplace_at_1.value") - 0.2431).abs() <= 0.02, "E exp(-tau) off by more than 0.02");
    checks.push(c);

    let mut c = Check::new(5, "arcsine laws and conditional sign");
    gate(&mut c, &full, "arcsine_pair", 1);
    ks_parts(&mut c, record(&full, "arcsine_pair"), &["last_zero", "time_positive"]);
    gate(&mut c, &full, "conditional_sign", 50_000);
    let r = record(&full, "conditional_sign");
    c.require(num(r, "bins") == 10.0, "conditional sign does not use 10 bins");
    c.require(r.statistic.is_some_and(|s| s <= 0.03), "conditional sign gap above 0.03");
    checks.push(c);

    let mut c = Check::new(6, "Ray-Knight");
    gate(&mut c, &full, "ray_knight_T1", 1);
    let r = record(&full, "ray_knight_T1");
    for a in ["0.25", "0.5", "0.75"] {
        c.require(flag(r, &format!("mean_a{a}.passed")), format!("mean at a = {a}"));
        c.require(num(r, &format!("mean_a{a}.rel_tol")) <= 0.05, format!("mean tolerance at a = {a}"));
        ks_parts(&mut c, r, &[&format!("exp_a{a}")]);
    }
    gate(&mut c, &full, "ray_knight_tau", 1);
    let r = record(&full, "ray_knight_tau");
    for x in ["0.25", "0.5", "1"] {
        c.require(flag(r, &format!("mean_x{x}.passed")), format!("mean at x = {x}"));
        c.require(num(r, &format!("mean_x{x}.rel_tol")) <= 0.05, format!("mean tolerance at x = {x}"));
    }
    let bound = 4.0 / (r.n_paths as f64).sqrt();
    c.require(num(r, "left_right_independence.statistic").abs() <= bound, "left/right correlation");
    checks.push(c);

    let mut c = Check::new(7, "BESQ additivity");
    gate(&mut c, &full, "besq_additivity", 100_000);
    let r = record(&full, "besq_additivity");
    ks_parts(&mut c, r, &["sum_vs_besq2"]);
    c.require(num(r, "mean.se_mult") <= 4.0, "mean check looser than 4 SE");
    checks.push(c);

    let mut c = Check::new(8, "Ciesielski-Taylor");
    gate(&mut c, &full, "ciesielski_taylor", 10_000);
    let r = record(&full, "ciesielski_taylor");
    ks_parts(&mut c, r, &["occupation_vs_hitting"]);
    c.require(num(r, "cap_hit_rate.statistic") < 1e-3, "cap-hit rate");
    checks.push(c);

    let mut c = Check::new(9, "excursion measure tails");
    gate(&mut c, &full, "excursion_tails", 1);
    let r = record(&full, "excursion_tails");
    for k in r.details.keys().filter(|k| k.ends_with(".rel_tol")) {
        c.require(num(r, k) <= 0.05, format!("{k} above 5%"));
    }
    let disp = num(r, "band_dispersion.statistic");
    c.require((0.9..=1.1).contains(&disp), format!("dispersion {disp}"));
    checks.push(c);

    let mut c = Check::new(10, "Knight identity");
    gate(&mut c, &full, "knight_identity", 1);
    c.require(num(record(&full, "knight_identity"), "allowance") <= 0.02, "allowance above 0.02");
    checks.push(c);

    let mut c = Check::new(11, "Azema-Yor embedding");
    gate(&mut c, &full, "azema_yor", 1);
    let r = record(&full, "azema_yor");
    c.require(num(r, "two_point_atom_weight.se_mult") <= 4.0, "atom weight looser than 4 SE");
    c.require(num(r, "two_point_mean_time.rel_tol") <= 0.05, "mean time tolerance");
    ks_parts(&mut c, r, &["uniform_target"]);
    gate(&mut c, &full, "supremum_law", 1);
    ks_parts(&mut c, record(&full, "supremum_law"), &["two_point", "uniform"]);
    checks.push(c);

    let mut c = Check::new(12, "Feynman-Kac resolvent");
    gate(&mut c, &full, "feynman_kac_resolvent", 1);
    let r = record(&full, "feynman_kac_resolvent");
    let cases: Vec<&String> = r.details.keys().filter(|k| k.ends_with(".residual")).collect();
    c.require(cases.len() >= 3, "fewer than three (k, c) pairs");
    for k in cases {
        c.require(num(r, k) < 1e-6, format!("{k} = {}", num(r, k)));
        let tol = k.replace(".residual", ".rel_tol");
        c.require(num(r, &tol) <= 0.02, format!("{tol} above 2%"));
    }
    checks.push(c);

    let mut c = Check::new(13, "planar self-intersection");
    gate(&mut c, &full, "intersection_mean", 1);
    let r = record(&full, "intersection_mean");
    c.require(num(r, "mean.rel_tol") <= 0.05, "tolerance above 5%");
    c.require(r.runtime_ms <= 300_000, format!("runtime {} ms", r.runtime_ms));
    checks.push(c);

    let mut c = Check::new(14, "scale functions");
    gate(&mut c, &full, "scale_hitting", 1);
    let r = record(&full, "scale_hitting");
    c.require(num(r, "closed_form_scale.statistic") <= 1e-6, "closed-form scale error");
    for part in ["brownian_exit", "bang_bang_exit"] {
        c.require(num(r, &format!("{part}.se_mult")) <= 4.0, format!("{part} looser than 4 SE"));
    }
    checks.push(c);

    let mut c = Check::new(15, "adjudication verdicts");
    for name in ["coth_transform", "watanabe_law", "ou_inverse_lt", "feynman_kac_convention"] {
        let r = record(&full, name);
        let verdict = r.details.get("verdict").and_then(Value::as_str).unwrap_or("");
        println!("      {name:<24} verdict: {verdict}");
        c.require(r.is_adjudication(), format!("{name} is not marked as an adjudication"));
        c.require(!verdict.is_empty(), format!("{name} has no verdict"));
        c.require(flag(r, "verdict_supported"), format!("{name} verdict not supported at every grid point"));
    }
    checks.push(c);

    let mut c = Check::new(16, "engineering");
    c.require(full.all_gating_passed(), "full suite has gating failures");
    c.require(quick1.all_gating_passed(), "quick suite has gating failures");
    c.require(full.counts_consistent(), "full suite counts inconsistent");
    c.require(without_timing(quick1.clone()) == without_timing(quick8), "1 and 8 workers disagree");
    c.require(without_timing(quick1) == without_timing(suite(Suite::Quick, 1, false)), "quick suite not reproducible");
    c.require(quick_s <= 60.0, format!("quick suite {quick_s:.1} s"));
    c.require(full_s <= 900.0, format!("full suite {full_s:.1} s"));
    null_calibration(&mut c);
    checks.push(c);

    let mut all = true;
    for c in &checks {
        all &= c.print();
    }
    for r in full.reports.iter().filter(|r| !r.gates_ok()) {
        println!("      failing experiment: {}", r.experiment);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
