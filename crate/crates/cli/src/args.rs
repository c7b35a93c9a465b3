use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lrtc_core::{PenaltyKind, ProxWeight, StopRule};

#[derive(Debug, Parser)]
#[command(name = "lrtc", version, about = "Low-rank tensor completion experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complete a partially observed tensor.
    Complete(CompleteArgs),
    /// Run a grid of penalties and parameters and tabulate recovery metrics.
    Ablate(AblateArgs),
    /// Compare two tensors with PSNR, SSIM and ERGAS.
    Metrics(MetricsArgs),
    /// Draw a uniformly random observation mask.
    SampleMask(SampleMaskArgs),
    /// Generate a synthetic low-tubal-rank tensor.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Mpcp,
    Mcp,
    Tnn,
}

impl From<PenaltyArg> for PenaltyKind {
    fn from(p: PenaltyArg) -> Self {
        match p {
            PenaltyArg::Mpcp => PenaltyKind::Mpcp,
            PenaltyArg::Mcp => PenaltyKind::Mcp,
            PenaltyArg::Tnn => PenaltyKind::Tnn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProxWeightArg {
    Consistent,
    Inverted,
}

impl From<ProxWeightArg> for ProxWeight {
    fn from(w: ProxWeightArg) -> Self {
        match w {
            ProxWeightArg::Consistent => ProxWeight::Consistent,
            ProxWeightArg::Inverted => ProxWeight::Inverted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopRuleArg {
    /// Relative change only.
    Change,
    /// Relative change and per-pair feasibility.
    ChangeFeasibility,
}

impl From<StopRuleArg> for StopRule {
    fn from(s: StopRuleArg) -> Self {
        match s {
            StopRuleArg::Change => StopRule::Change,
            StopRuleArg::ChangeFeasibility => StopRule::ChangeAndFeasibility,
        }
    }
}

/// Solver settings shared by `complete` and `ablate`.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Mode-pair weights, one per selected pair, summing to 1.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Initial penalty parameter; one value or one per pair.
    #[arg(long, value_delimiter = ',', default_value = "1e-3")]
    pub rho0: Vec<f64>,
    #[arg(long, default_value_t = 1.05)]
    pub mu: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Mode-pair numbers q to use; all pairs when omitted.
    #[arg(long, value_delimiter = ',')]
    pub mode_pairs: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "consistent")]
    pub prox_weight: ProxWeightArg,
    #[arg(long, value_enum, default_value = "change-feasibility")]
    pub stop_rule: StopRuleArg,
    #[arg(long, default_value_t = 1e10)]
    pub rho_cap: f64,
    /// Worker threads; the rayon default when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CompleteArgs {
    /// Observed tensor (float64 NPY); unobserved entries are ignored.
    #[arg(long)]
    pub input: PathBuf,
    /// Observation mask (uint8 NPY, 1 = observed).
    #[arg(long)]
    pub mask: PathBuf,
    /// Where to write the completed tensor.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "mpcp")]
    pub penalty: PenaltyArg,
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    #[arg(long = "tau-p", default_value_t = 100.0)]
    pub tau_p: f64,
    /// CSV iteration log.
    #[arg(long)]
    pub log: PathBuf,
    /// Ground truth for the final metrics.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// JSON run report; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Scale tensors by 255 before computing metrics (for data in [0, 1]).
    #[arg(long)]
    pub rescale: bool,
    /// Export a slice of the result as PGM, e.g. `0=slice0.pgm`. Repeatable.
    #[arg(long = "export-slice", value_parser = parse_export)]
    pub export_slice: Vec<(usize, PathBuf)>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn parse_export(s: &str) -> Result<(usize, PathBuf), String> {
    let (index, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected INDEX=PATH, got `{s}`"))?;
    let index = index
        .trim()
        .parse()
        .map_err(|_| format!("bad slice index `{index}`"))?;
    if path.is_empty() {
        return Err("empty export path".into());
    }
    Ok((index, PathBuf::from(path)))
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Fixed observation mask; conflicts with `--sr`.
    #[arg(long, conflicts_with = "sr", required_unless_present = "sr")]
    pub mask: Option<PathBuf>,
    /// Sample a fresh mask per seed at this rate.
    #[arg(long)]
    pub sr: Option<f64>,
    /// Ground truth; defaults to `--input`.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "mpcp")]
    pub penalties: Vec<String>,
    #[arg(long = "p-grid", value_delimiter = ',', default_value = "0.1")]
    pub p_grid: Vec<String>,
    #[arg(long = "tau-p-grid", value_delimiter = ',', default_value = "100")]
    pub tau_p_grid: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub rescale: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub rescale: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SampleMaskArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub shape: Vec<usize>,
    #[arg(long)]
    pub sr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// `n1,n2,n3`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub shape: Vec<usize>,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}
