//! `codesign` command-line driver.
//!
//! Exit codes: 0 ok, 1 internal failure, 2 missing or invalid input,
//! 3 no design met the resource budget, 4 design space too large to
//! enumerate.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use codesign_core::explorer::Preset;
use codesign_core::gp::{KernelFamily, TargetKind};
use codesign_core::Error;

pub use config::RunConfig;

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_SPACE_TOO_LARGE: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn invalid_input(message: impl Into<String>) -> Self {
        Self::new(EXIT_INVALID_INPUT, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SpaceTooLarge { .. } | Error::CountOverflow => EXIT_SPACE_TOO_LARGE,
            Error::NotPositiveDefinite { .. } => EXIT_INTERNAL,
            _ => EXIT_INVALID_INPUT,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "codesign", version, about = "Joint architecture / FPGA-accelerator design-space exploration")]
pub struct Cli {
    /// TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for sampling, the train/test split and the GA.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw loss and performance samples from the oracle.
    Sample(SampleArgs),
    /// Fit a GP surrogate for one target and report its test MAE.
    Fit(FitArgs),
    /// Search the design space with the genetic algorithm.
    Explore(ExploreArgs),
    /// Enumerate the (reduced) design space and extract its Pareto frontier.
    Pareto(ParetoArgs),
    /// Check an exploration result against a frontier file.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_name = "N")]
    pub n_loss: Option<usize>,
    #[arg(long, value_name = "N")]
    pub n_perf: Option<usize>,
    /// Loss samples produced elsewhere (e0..e15,ce), copied into the output.
    #[arg(long, value_name = "PATH")]
    pub loss_input: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub loss_out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub perf_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// ce, latency_ms or power_w.
    #[arg(long, value_parser = parse_target)]
    pub target: TargetKind,
    /// Sample file; defaults to the configured loss or perf file.
    #[arg(long, value_name = "PATH")]
    pub samples: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// matern32 or matern52.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<KernelFamily>,
    #[arg(long, value_name = "N")]
    pub iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    /// Score designs with the analytic oracle instead of GP models.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    /// Explicit weights as eta,mu,lambda.
    #[arg(long, value_name = "ETA,MU,LAMBDA", value_parser = parse_weights, allow_hyphen_values = true)]
    pub weights: Option<[f64; 3]>,
    #[arg(long, value_name = "G")]
    pub gamma: Option<f64>,
    #[arg(long, value_name = "N")]
    pub dsp_budget: Option<u64>,
    #[arg(long, value_name = "BYTES")]
    pub mem_budget: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub model_ce: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub model_latency: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub model_power: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub generations: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    /// Frontier points (all columns).
    #[arg(long, value_name = "PATH")]
    pub frontier_out: Option<PathBuf>,
    /// ce,latency_ms,power_w for every evaluated point.
    #[arg(long, value_name = "PATH")]
    pub plot_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_name = "PATH")]
    pub result: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub frontier: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn parse_target(s: &str) -> Result<TargetKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<KernelFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

pub fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected eta,mu,lambda, got {s:?}"));
    }
    let mut w = [0.0; 3];
    for (slot, p) in w.iter_mut().zip(&parts) {
        let v: f64 = p.parse().map_err(|_| format!("{p:?} is not a number"))?;
        if !v.is_finite() || v < 0.0 {
            return Err(format!("weight {p} must be finite and non-negative"));
        }
        *slot = v;
    }
    Ok(w)
}

/// Loads the configuration named on the command line (or the defaults) and
/// applies `--seed`.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(match cli.seed {
        Some(s) => config.with_seed(s),
        None => config,
    })
}

/// Runs one command, returning the lines to print on success.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let config = resolve_config(cli)?;
    match &cli.command {
        Command::Sample(a) => commands::sample(&config, a),
        Command::Fit(a) => commands::fit(&config, a),
        Command::Explore(a) => commands::explore(&config, a),
        Command::Pareto(a) => commands::pareto(&config, a),
        Command::Report(a) => commands::report(&config, a),
    }
}
