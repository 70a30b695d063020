use loctime_harness::experiments::catalog;
use loctime_harness::report::{write_csv, COLUMNS};
use loctime_harness::{
    plot, run_suite, ConfigFile, ExperimentConfig, HarnessError, RunOptions, Settings, Suite, SuiteOptions, SuiteReport,
};

const SMALL: &str = r#"{"defaults": {"n": 2000}, "overrides": {"bridge_lt_rayleigh": {"n": 1500}}}"#;

fn subset(
    jobs: usize,
    seed: Option<u64>,
    plots: bool,
) -> (SuiteReport, Vec<Option<loctime_harness::experiments::PlotData>>) {
    let opts = SuiteOptions {
        seed,
        jobs: Some(jobs),
        file: Some(ConfigFile::parse(SMALL).unwrap()),
        only: Some(vec!["levy_equivalence".into(), "bridge_lt_rayleigh".into(), "besq_additivity".into()]),
        run: RunOptions { timing: false, plots },
    };
    run_suite(Suite::Quick, &opts).unwrap()
}

#[test]
fn worker_count_does_not_change_results() {
    let (a, _) = subset(1, None, false);
    let (b, _) = subset(4, None, false);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.reports.len(), 3);
}

#[test]
fn same_seed_same_report_other_seed_differs() {
    let (a, _) = subset(2, Some(11), false);
    let (b, _) = subset(2, Some(11), false);
    let (c, _) = subset(2, Some(12), false);
    assert_eq!(a, b);
    assert_ne!(a.reports[0].statistic, c.reports[0].statistic);
    assert!(a.reports.iter().all(|r| r.seed == 11));
}

#[test]
fn records_follow_catalog_order_and_config() {
    let (r, _) = subset(2, None, false);
    let names: Vec<&str> = r.reports.iter().map(|r| r.experiment.as_str()).collect();
    let order: Vec<&str> = catalog().iter().map(|e| e.name).filter(|n| names.contains(n)).collect();
    assert_eq!(names, order);
    let n: Vec<usize> = r.reports.iter().map(|r| r.n_paths).collect();
    assert_eq!(n, vec![2000, 1500, 2000]);
    assert!(r.counts_consistent());
    assert!(r.all_gating_passed());
}

#[test]
fn cli_flags_override_file_and_file_overrides_catalog() {
    let file =
        ConfigFile::parse(r#"{"defaults": {"n": 300, "dt": 0.01}, "overrides": {"levy_equivalence": {"dt": 0.002}}}"#)
            .unwrap();
    let cli = Settings { n: Some(200), ..Settings::default() };
    let cfg = ExperimentConfig::resolve("levy_equivalence", Suite::Quick, Some(&file), &cli).unwrap();
    assert_eq!((cfg.n_paths, cfg.dt), (200, 0.002));
    let cfg = ExperimentConfig::resolve("bridge_lt_rayleigh", Suite::Quick, Some(&file), &Settings::default()).unwrap();
    assert_eq!((cfg.n_paths, cfg.dt), (300, 0.01));
}

#[test]
fn unknown_names_are_rejected() {
    let only = SuiteOptions { only: Some(vec!["no_such_experiment".into()]), ..SuiteOptions::default() };
    assert!(matches!(run_suite(Suite::Quick, &only), Err(HarnessError::UnknownExperiment(_))));
    assert!(matches!(
        ConfigFile::parse(r#"{"overrides": {"no_such_experiment": {"n": 5}}}"#),
        Err(HarnessError::UnknownExperiment(_))
    ));
    assert!(ConfigFile::parse(r#"{"defaults": {"paths": 5}}"#).is_err());
    assert!("medium".parse::<Suite>().is_err());
}

#[test]
fn empty_filter_gives_empty_report() {
    let opts = SuiteOptions { only: Some(vec![]), ..SuiteOptions::default() };
    let (r, plots) = run_suite(Suite::Quick, &opts).unwrap();
    assert!(r.reports.is_empty() && plots.is_empty());
    assert_eq!((r.total, r.passed, r.failed), (0, 0, 0));
}

#[test]
fn too_few_paths_becomes_failed_record() {
    let opts = SuiteOptions {
        file: Some(ConfigFile::parse(r#"{"overrides": {"levy_equivalence": {"n": 10}}}"#).unwrap()),
        only: Some(vec!["levy_equivalence".into()]),
        ..SuiteOptions::default()
    };
    let (r, _) = run_suite(Suite::Quick, &opts).unwrap();
    assert!(!r.reports[0].passed);
    assert!(r.reports[0].details.contains_key("error"));
    assert!(!r.all_gating_passed());
}

#[test]
fn json_round_trip_and_key_order() {
    let (r, _) = subset(1, None, false);
    let text = serde_json::to_string(&r).unwrap();
    let back: SuiteReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    let rec = serde_json::to_string(&r.reports[0]).unwrap();
    let pos: Vec<usize> = COLUMNS.iter().map(|k| rec.find(&format!("\"{k}\":")).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{rec}");
}

#[test]
fn csv_has_report_columns() {
    let (r, _) = subset(1, None, false);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    write_csv(&r.reports, std::fs::File::create(&path).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, COLUMNS);
    assert_eq!(rdr.records().count(), r.reports.len());
}

#[test]
fn svg_overlays_reference_density() {
    let (_, plots) = subset(1, None, true);
    let p = plots[0].as_ref().expect("levy_equivalence has a plot");
    let s = plot::svg(p);
    assert!(s.starts_with("<svg"));
    assert!(s.contains(r#"class="histogram""#) && s.contains(r#"class="reference""#));
    let (_, _, dens) = plot::histogram(p);
    assert_eq!(dens.len(), 40);
}
