use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use loctime_harness::experiments::{catalog, PlotData};
use loctime_harness::report::{to_json, write_csv, write_json, ReportRecord};
use loctime_harness::{
    plot, run_experiment, run_suite, ConfigFile, ExperimentConfig, Result, RunOptions, Settings, Suite, SuiteOptions,
};

#[derive(Parser)]
#[command(name = "loctime", version, about = "Monte Carlo checks of Brownian local time and excursion laws")]
struct Cli {
    /// JSON config file: {"defaults": {n, dt, seed}, "overrides": {name: {...}}}.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Record wall-clock runtimes in the reports.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the experiment catalog.
    List,
    /// Run one experiment.
    Run {
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// KS bias tolerance for estimator-based statistics.
        #[arg(long)]
        bias: Option<f64>,
        /// Use the quick budget instead of the full one.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        emit_plots: bool,
    },
    /// Run a whole suite.
    RunAll {
        #[arg(long, default_value = "quick")]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Comma-separated subset of experiments.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        #[arg(long)]
        emit_plots: bool,
    },
}

fn write_outputs(out: &Path, records: &[ReportRecord], plots: &[Option<PlotData>]) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write_csv(records, std::fs::File::create(out.join("report.csv"))?)?;
    for (r, p) in records.iter().zip(plots) {
        if let Some(p) = p {
            std::fs::write(out.join(format!("{}.svg", r.experiment)), plot::svg(p))?;
        }
    }
    Ok(())
}

fn summary_line(r: &ReportRecord) -> String {
    let status = if r.passed {
        "PASS"
    } else if r.gates_ok() {
        "NOTE"
    } else {
        "FAIL"
    };
    let verdict =
        r.details.get("verdict").and_then(|v| v.as_str()).map(|v| format!("  verdict: {v}")).unwrap_or_default();
    let error = r.details.get("error").and_then(|v| v.as_str()).map(|v| format!("  error: {v}")).unwrap_or_default();
    format!(
        "{status}  {:<26} stat={:<12} p={:<12}{verdict}{error}",
        r.experiment,
        r.statistic.map_or("-".into(), |s| format!("{s:.5}")),
        r.p_value.map_or("-".into(), |p| format!("{p:.3e}")),
    )
}

fn run(cli: Cli) -> Result<bool> {
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    match cli.command {
        Command::List => {
            for e in catalog() {
                let tag = if e.adjudication { " [adjudication]" } else { "" };
                println!("{:<26} {}{tag}", e.name, e.about);
            }
            Ok(true)
        }
        Command::Run { name, n, dt, seed, bias, quick, out, emit_plots } => {
            let flags = Settings { n, dt, seed, bias_tolerance: bias, ..Settings::default() };
            let suite = if quick { Suite::Quick } else { Suite::Full };
            let cfg = ExperimentConfig::resolve(&name, suite, file.as_ref(), &flags)?;
            let opts = RunOptions { timing: cli.timing, plots: emit_plots };
            let res = run_experiment(&cfg, opts)?;
            println!("{}", to_json(&res.record)?);
            eprintln!("{}", summary_line(&res.record));
            if let Some(out) = out {
                write_outputs(&out, std::slice::from_ref(&res.record), &[res.plot])?;
                write_json(&res.record, &out.join("report.json"))?;
            }
            Ok(res.record.gates_ok())
        }
        Command::RunAll { suite, seed, out, jobs, only, emit_plots } => {
            let suite: Suite = suite.parse()?;
            let opts =
                SuiteOptions { seed, jobs, file, only, run: RunOptions { timing: cli.timing, plots: emit_plots } };
            let (report, plots) = run_suite(suite, &opts)?;
            for r in &report.reports {
                println!("{}", summary_line(r));
            }
            println!("{} passed, {} failed ({} adjudications)", report.passed, report.failed, report.adjudications);
            if let Some(out) = out {
                write_outputs(&out, &report.reports, &plots)?;
                write_json(&report, &out.join("report.json"))?;
            }
            Ok(report.all_gating_passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
