use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stomads_core::{Mode, Ratio};

/// Mesh adaptive direct search for noisy constrained blackbox problems.
#[derive(Debug, Parser)]
#[command(name = "stomads", version, args_override_self = true)]
pub struct Cli {
    /// Read flags from a `key = value` file; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem from one start point.
    #[command(args_override_self = true)]
    Solve(SolveArgs),
    /// Run every problem, start, noise level, solver and seed, then build profiles.
    #[command(args_override_self = true)]
    Campaign(CampaignArgs),
    /// Build data and performance profiles from a directory of run records.
    #[command(args_override_self = true)]
    Profile(ProfileArgs),
    /// Re-execute recorded runs and compare them with the record.
    #[command(args_override_self = true)]
    Replay(ReplayArgs),
    /// List the built-in problems, or describe one problem.
    Problems(ProblemsArgs),
}

/// Parameters shared by `solve` and `campaign`.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Sufficient-decrease constant, must exceed 2.
    #[arg(long, default_value_t = 17.0)]
    pub gamma: f64,
    /// Estimate accuracy constant.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Mesh refinement ratio, as `p/q`.
    #[arg(long, default_value = "1/2")]
    pub tau: Ratio,
    /// Cap exponent: the poll size never exceeds its start value times `tau^-z_hat`.
    #[arg(long, default_value_t = 10)]
    pub z_hat: u32,
    /// Frame-center trigger.
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    /// Budget is this many calls per `n + 1`.
    #[arg(long, default_value_t = 1000)]
    pub budget_multiplier: u64,
    /// Fixed budget, overriding the multiplier.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub initial_poll_size: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub min_poll_size: f64,
    /// Also estimate the inert feasible incumbent before a feasible point exists.
    #[arg(long)]
    pub strict_remark1: bool,
    /// Poll a full 2n frame around the secondary center.
    #[arg(long)]
    pub full_secondary_poll: bool,
    /// Evaluate poll candidates in parallel.
    #[arg(long)]
    pub batch_poll: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Built-in problem name or path to a problem definition file.
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub seed: u64,
    /// Index of the start point in the problem's list.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Noise level relative to the start point.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    /// Objective reference for the noise width (defaults to the problem's best known value).
    #[arg(long, allow_negative_numbers = true)]
    pub reference: Option<f64>,
    /// Samples drawn per visit.
    #[arg(long, default_value_t = 2)]
    pub nk: u32,
    #[arg(long, default_value = "stochastic")]
    pub mode: Mode,
    /// In deterministic mode, keep the noise instead of ignoring `--sigma`.
    #[arg(long)]
    pub noisy_oracle: bool,
    /// Report true objective and violation values at the incumbents.
    #[arg(long)]
    pub with_truth: bool,
    /// Record file; defaults to `<out-dir>/<problem>-s<start>-seed<seed>.jsonl`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, env = "STOMADS_OUT_DIR", default_value = "stomads-out")]
    pub out_dir: PathBuf,
    /// Solver name stored in the record and used by profiles.
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    /// Problems to run; built-in names or definition files. Defaults to every built-in.
    #[arg(long, value_delimiter = ',')]
    pub problems: Vec<String>,
    /// Start indices; defaults to every start of every problem.
    #[arg(long, value_delimiter = ',')]
    pub starts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05")]
    pub sigmas: Vec<f64>,
    /// Number of seeds; seeds are `first_seed .. first_seed + seeds`.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Samples per visit, one stochastic variant per value.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub nk: Vec<u32>,
    /// Leave out the deterministic baseline.
    #[arg(long)]
    pub no_baseline: bool,
    /// Run the deterministic baseline without noise.
    #[arg(long)]
    pub noiseless_baseline: bool,
    /// Convergence tolerances for the profiles.
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-3")]
    pub tol: Vec<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Also render profiles as SVG.
    #[arg(long)]
    pub svg: bool,
    #[arg(long, env = "STOMADS_OUT_DIR", default_value = "stomads-out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Directory searched recursively for `.jsonl` run records.
    pub records: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-3")]
    pub tol: Vec<f64>,
    #[arg(long)]
    pub svg: bool,
    #[arg(long, env = "STOMADS_OUT_DIR", default_value = "stomads-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Record files.
    #[arg(required = true)]
    pub records: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProblemsArgs {
    /// Built-in name or definition file to describe.
    #[arg(long)]
    pub show: Option<String>,
}
