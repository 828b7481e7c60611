use std::path::{Path, PathBuf};
use std::process::ExitCode;

use byzren::runner::{check_trace, execute, sweep, RunConfig, RunReport, SweepGrid};
use byzren::RunError;
use clap::{Parser, Subcommand};

/// Byzantine order-preserving renaming simulator.
#[derive(Debug, Parser)]
#[command(name = "byzren", version, after_help = concat!(
    "Exit status: 0 all checks pass, 1 a check failed, 2 configuration or I/O error.\n",
    "Sweep parallelism is read from BYZREN_THREADS (default: all cores)."
))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute one run and print its report as JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Write the JSON Lines trace here. When the config sets emit_trace
        /// and this is omitted, the trace goes next to the config.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Execute every point of a grid and write one CSV row per run.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a saved trace, re-run every check and print the report.
    Check {
        #[arg(long)]
        trace: PathBuf,
    },
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn exit_for_error(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        RunError::Sim(_) | RunError::Checker(_) | RunError::Replay(_) => ExitCode::from(EXIT_CHECK_FAILED),
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn exit_for_report(report: &RunReport) -> ExitCode {
    print!("{}", report.to_json());
    for c in report.failures() {
        eprintln!("FAIL {}: {}", c.name, c.witness.as_deref().unwrap_or(""));
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn default_trace_path(config: &Path) -> PathBuf {
    config.with_extension("trace.jsonl")
}

fn cmd_run(config_path: &Path, trace: Option<PathBuf>) -> Result<RunReport, RunError> {
    let config = RunConfig::load(config_path)?;
    let artifacts = execute(&config)?;
    let trace_path = trace.or_else(|| config.emit_trace.then(|| default_trace_path(config_path)));
    if let Some(path) = trace_path {
        std::fs::write(&path, artifacts.trace_jsonl()).map_err(|e| RunError::io(&path, e))?;
    }
    Ok(artifacts.report)
}

fn cmd_sweep(grid: &Path, out: &Path) -> Result<bool, RunError> {
    let grid = SweepGrid::load(grid)?;
    let summary = sweep(&grid)?;
    for notice in &summary.skipped {
        eprintln!("{notice}");
    }
    summary.write_csv(out)?;
    for row in summary.rows.iter().filter(|r| !r.all_checks_pass) {
        eprintln!(
            "FAIL N={} t={} {} {} seed {}: {}",
            row.n,
            row.t,
            row.algorithm,
            row.strategy,
            row.seed,
            row.failures.join(" | ")
        );
    }
    let spread = summary.max_final_spread().map(|r| r.to_string()).unwrap_or_else(|| "-".into());
    eprintln!(
        "{} runs, {} passed, {} failed, {} skipped, max final spread {spread}",
        summary.rows.len(),
        summary.passed(),
        summary.failed(),
        summary.skipped.len()
    );
    Ok(summary.failed() == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, trace } => match cmd_run(&config, trace) {
            Ok(report) => exit_for_report(&report),
            Err(e) => exit_for_error(&e),
        },
        Command::Sweep { grid, out } => match cmd_sweep(&grid, &out) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
            Err(e) => exit_for_error(&e),
        },
        Command::Check { trace } => match check_trace(&trace) {
            Ok(report) => exit_for_report(&report),
            Err(e) => exit_for_error(&e),
        },
    }
}
