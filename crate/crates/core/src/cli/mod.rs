//! Command-line front end: `breglab run <config> [--seed N] [--out PATH]
//! [--override key=value]... [--plot-script PATH]`.
//!
//! Exit codes: `0` all checks pass, `1` a check failed, `2` configuration
//! or domain error, `3` more than 1% of grid points did not converge.

mod config;
mod experiments;
mod output;

pub use config::{ExperimentConfig, ExperimentKind, KEYS, SECTIONS};
pub use experiments::{execute, CheckLine, ExperimentOutput};
pub use output::{format_csv, plot_script, report, CSV_HEADER};

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "breglab", version, about = "Bregman-distance error bounds for Tikhonov regularization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Base seed for the noise; overrides `seed` in the file.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV destination; overrides `out` in the file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key=value`, applied after the file. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write a gnuplot script for the CSV.
        #[arg(long)]
        plot_script: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub plot_script: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: String,
    pub csv_path: Option<PathBuf>,
}

/// Exit code for an error escaping an experiment.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NotConverged(_) => EXIT_NOT_CONVERGED,
        Error::LinearSolve(_) | Error::DegenerateFit { .. } => EXIT_CHECK_FAILED,
        _ => EXIT_CONFIG,
    }
}

pub fn run(config_path: &Path, opts: &RunOptions) -> RunOutcome {
    let failed = |err: Error| RunOutcome { exit_code: exit_code_for(&err), summary: format!("error: {err}\n"), csv_path: None };
    let mut cfg = match ExperimentConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return failed(e),
    };
    for o in &opts.overrides {
        if let Err(e) = cfg.apply_override(o) {
            return failed(e);
        }
    }
    if let Some(seed) = opts.seed {
        if let Err(e) = cfg.set("seed", &seed.to_string()) {
            return failed(e);
        }
    }
    let out_path = opts
        .out
        .clone()
        .or_else(|| cfg.raw("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("breglab-{}.csv", cfg.experiment)));

    let output = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => return failed(e),
    };
    if let Err(e) = std::fs::write(&out_path, format_csv(&output.records)) {
        return failed(Error::Io(format!("cannot write {}: {e}", out_path.display())));
    }
    if let Some(p) = &opts.plot_script {
        if let Err(e) = std::fs::write(p, plot_script(&out_path, cfg.experiment)) {
            return failed(Error::Io(format!("cannot write {}: {e}", p.display())));
        }
    }

    let mut summary = report(&output);
    let exit_code = if output.nonconverged * 100 > output.grid_points {
        summary.push_str(&format!(
            "non-convergence: {} of {} grid points\n",
            output.nonconverged, output.grid_points
        ));
        EXIT_NOT_CONVERGED
    } else if output.checks.iter().all(|c| c.passed) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    summary.push_str(&format!("csv: {}\n", out_path.display()));
    RunOutcome { exit_code, summary, csv_path: Some(out_path) }
}

/// Parses `args` (including the program name), runs, prints, and returns
/// the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run { config, seed, out, overrides, plot_script } => {
            let outcome = run(&config, &RunOptions { seed, out, overrides, plot_script });
            if outcome.exit_code == EXIT_CONFIG && outcome.csv_path.is_none() {
                eprint!("{}", outcome.summary);
            } else {
                print!("{}", outcome.summary);
            }
            outcome.exit_code
        }
    }
}
