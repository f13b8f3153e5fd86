//! Command-line harness around `latorbit-core`: JSON experiment configs,
//! seeded parallel sweeps and bit-stable CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::Report;
use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::manifest::{manifest_path, RunManifest};

pub const THREADS_ENV: &str = "LATORBIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "latorbit", version, about = "Lattice counting and ergodic-average experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; overrides LATORBIT_THREADS and the config (0 = auto).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Lattice-point counts in growing shells against their volume.
    Count,
    /// Two-sided bound between the orbit integral and shell counts.
    Sandwich,
    /// α and the rank attaining it.
    Alpha,
    /// Siegel transform averages over the unipotent slice.
    Siegel,
    /// Region volumes.
    Volume,
    /// Dyadic covers of [0, k].
    Dyadic,
    /// Convergence rate of time averages.
    Rate,
    /// Double equidistribution on a (t, w) grid.
    DoubleEqui,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Count => "count",
            Command::Sandwich => "sandwich",
            Command::Alpha => "alpha",
            Command::Siegel => "siegel",
            Command::Volume => "volume",
            Command::Dyadic => "dyadic",
            Command::Rate => "rate",
            Command::DoubleEqui => "double-equi",
        }
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Result<Report, CliError> {
        match self {
            Command::Count => commands::count(cfg),
            Command::Sandwich => commands::sandwich(cfg),
            Command::Alpha => commands::alpha_cmd(cfg),
            Command::Siegel => commands::siegel(cfg),
            Command::Volume => commands::volume(cfg),
            Command::Dyadic => commands::dyadic(cfg),
            Command::Rate => commands::rate(cfg),
            Command::DoubleEqui => commands::double_equi(cfg),
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("latorbit: {}", first.trim_start_matches("error: "));
            return 2;
        }
        Err(e) => {
            // --help and --version
            print!("{e}");
            return 0;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("latorbit: {}", e.one_line());
            e.exit_code()
        }
    }
}

fn resolve_threads(flag: Option<usize>, env: Option<String>, config: usize) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
        None => Ok(config),
    }
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let threads = resolve_threads(cli.threads, std::env::var(THREADS_ENV).ok(), cfg.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    let start = Instant::now();
    let report = pool.install(|| cli.command.run(&cfg))?;
    let elapsed = start.elapsed().as_secs_f64();
    let body = report.table.render(cfg.output.format, &report.summary);
    match &cfg.output.path {
        Some(path) => {
            output::write_file(path, &body)?;
            let m = RunManifest::new(cli.command.name(), &cfg, pool.current_num_threads(), elapsed, report.summary);
            output::write_file(&manifest_path(path), &m.to_json())?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| CliError::Io(format!("standard output: {e}")))?;
        }
    }
    match report.violation {
        Some(msg) => Err(CliError::Violation(msg)),
        None => Ok(()),
    }
}
