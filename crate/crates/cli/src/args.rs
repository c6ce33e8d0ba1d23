use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "lightsync",
    version,
    about = "Constant-size PoW light-client simulator and calculator"
)]
pub struct Cli {
    /// Human-readable tables instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo challenge races or velvet-history root discovery.
    Simulate(SimulateArgs),
    /// Solve the challenge period, alpha and beta for a target epsilon.
    Params(ParamsArgs),
    /// Evaluate race bounds, vote tails and proof-size tables.
    Bounds(BoundsArgs),
    /// Build, extend, prove and verify MMRs over leaf files.
    Mmr(MmrArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Race,
    Velvet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    AlwaysInvalidRoot,
    AlwaysValidRoot,
    AcceptOwnRejectHonest,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "race")]
    pub mode: SimMode,
    #[arg(long)]
    pub trials: u64,
    /// Defaults to the config file seed, then LIGHTSYNC_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON with optional `population`, `sim` and `security` objects.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Honest blocks per second.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub adversary_ratio: Option<f64>,
    /// Seconds.
    #[arg(long)]
    pub challenge_period: Option<f64>,
    /// Challenge period given as expected honest blocks, `lambda * t`.
    #[arg(long, conflicts_with = "challenge_period")]
    pub lambda_t: Option<f64>,
    /// Message delay, seconds.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Desk target exponent; the target is 2^N.
    #[arg(long)]
    pub target_log2: Option<u32>,
    #[arg(long)]
    pub inclusion_delay: Option<u32>,
    #[arg(long)]
    pub alpha: Option<u32>,
    #[arg(long)]
    pub beta: Option<u32>,
    #[arg(long)]
    pub upgraded_fraction: Option<f64>,
    /// Adversarial share of upgraded power, e.g. `1/3`.
    #[arg(long)]
    pub adversary_fraction: Option<String>,
    #[arg(long, value_enum)]
    pub strategy: Option<Strategy>,
    /// Mine every block and exchange real proofs instead of counting.
    #[arg(long)]
    pub full: bool,
    /// Include per-trial outcomes even above 1000 trials.
    #[arg(long)]
    pub per_trial: bool,
    /// Write the first trial's event transcript (JSON lines); needs --full.
    #[arg(long, requires = "full")]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Chernoff,
    Exact,
    Both,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    /// Target failure probability, `2^-20` or a decimal.
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub adversary_ratio: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub method: MethodArg,
    /// Adversarial share of upgraded power; enables the alpha/beta solve.
    #[arg(long)]
    pub adversary_fraction: Option<String>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Search cap for alpha and beta.
    #[arg(long, default_value_t = 4096)]
    pub cap: u32,
    /// JSON with an optional `security` object.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Proof sizes of header download against the constant-size proof.
    #[arg(long)]
    pub table1: bool,
    /// Static comparison of light-client approaches.
    #[arg(long, alias = "table2")]
    pub comparison: bool,
    #[arg(long, default_value_t = 508)]
    pub header_bytes: u64,
    #[arg(long, default_value_t = 140)]
    pub proof_headers: u64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1000000,10000000,100000000"
    )]
    pub chain_lengths: Vec<u64>,
    /// Equal-target race: bound at m0 and exact value.
    #[arg(long)]
    pub race: bool,
    #[arg(long, default_value_t = 0.5)]
    pub adversary_ratio: f64,
    #[arg(long, default_value_t = 100.0)]
    pub lambda_t: f64,
    /// Worst case over change times and adversary targets.
    #[arg(long)]
    pub worst_case: bool,
    /// Honest targets `T1,T2` (relative units).
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    pub honest_targets: Vec<f64>,
    /// Adversary target pairs `a:b` separated by commas.
    #[arg(long, value_delimiter = ',', default_value = "1:1")]
    pub adversary_targets: Vec<String>,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Probability that no beta candidate is honest.
    #[arg(long)]
    pub candidates: bool,
    /// Binomial tail of an invalid root winning its vote.
    #[arg(long)]
    pub votes: bool,
    #[arg(long, default_value = "1/3")]
    pub adversary_fraction: String,
    #[arg(long, default_value_t = 80)]
    pub alpha: u32,
    #[arg(long, default_value_t = 7)]
    pub beta: u32,
}

#[derive(Debug, Args)]
pub struct MmrArgs {
    #[command(subcommand)]
    pub action: MmrAction,
}

#[derive(Debug, Subcommand)]
pub enum MmrAction {
    /// Root and peaks over a leaf file (one hex digest per line).
    Root {
        #[arg(long)]
        leaves: PathBuf,
    },
    /// Append hex leaf digests to a leaf file and report the new root.
    Append {
        #[arg(long)]
        leaves: PathBuf,
        #[arg(long = "leaf", required = true)]
        new: Vec<String>,
    },
    /// Inclusion proof for one leaf, written as JSON.
    Prove {
        #[arg(long)]
        leaves: PathBuf,
        #[arg(long)]
        index: u64,
        /// Prove against the first N leaves; defaults to all.
        #[arg(long)]
        count: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a proof file against a root and leaf.
    Verify {
        #[arg(long)]
        root: String,
        #[arg(long)]
        leaf: String,
        #[arg(long)]
        proof: PathBuf,
    },
}
