//! Command-line front end.
//!
//! Each invocation runs one subcommand against one JSON configuration file
//! and writes CSV tables and SVG plots into the output directory. Exit
//! status: 0 on success, 1 for invalid input, 2 for numeric failures or
//! results that did not converge (files are still written).

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
pub use commands::Outcome;
pub use config::RunConfig;
pub use output::Format;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "LZFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lzforge", version, about = "Landau-Zener pulse engineering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated output formats; overrides `output.formats`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
    /// Recorded in every output header; overrides `output.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for grid evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Propagate a pulse and overlay the multi-jump model.
    Simulate,
    /// Design a windowed diabatic sweep.
    Design,
    /// Nelder-Mead over the oscillating-sweep parameters.
    OptimizeNm,
    /// GRAPE on a pixelated pulse.
    Grape,
    /// Phase, robustness or adiabatic-transfer scans.
    Scan,
    /// Fit the speed-limit model to measured or estimated data.
    FitQsl,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Design => "design",
            Command::OptimizeNm => "optimize-nm",
            Command::Grape => "grape",
            Command::Scan => "scan",
            Command::FitQsl => "fit-qsl",
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation { .. } | Error::Domain(_) | Error::Design { .. } | Error::Io { .. } => EXIT_INVALID,
        Error::Numeric(_) | Error::Fit(_) => EXIT_FAILED,
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) if !s.trim().is_empty() => Some(s.trim().parse::<usize>().map_err(|_| {
                Error::validation(THREADS_ENV, format!("`{s}` is not a thread count"))
            })?),
            _ => None,
        },
    };
    match n {
        Some(0) => Err(Error::validation("threads", "must be at least 1")),
        other => Ok(other),
    }
}

/// Loads the configuration, applies flag overrides and runs the command.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::validation("config", "pass --config <path>"))?;
    let mut run = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        run.output.directory = std::env::current_dir().map(|d| d.join(out)).unwrap_or_else(|_| out.clone());
    }
    if let Some(f) = &cli.format {
        run.output.formats = f.clone();
    }
    if let Some(s) = cli.seed {
        run.output.seed = s;
    }
    let dispatch = || match cli.command {
        Command::Simulate => commands::simulate(&run),
        Command::Design => commands::design(&run),
        Command::OptimizeNm => commands::optimize_nm(&run),
        Command::Grape => commands::grape(&run),
        Command::Scan => commands::scan(&run),
        Command::FitQsl => commands::fit_qsl_command(&run),
    };
    match thread_count(cli.threads)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::validation("threads", e.to_string()))?
            .install(dispatch),
        None => dispatch(),
    }
}

/// Parses `args` (program name first), runs, reports and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(o) if o.converged => EXIT_OK,
        Ok(o) => {
            eprintln!(
                "lzforge {}: did not converge; {} file(s) written with converged=false",
                cli.command.name(),
                o.files.len()
            );
            EXIT_FAILED
        }
        Err(e) => {
            eprintln!("lzforge {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}
