use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbpre::carpet::DEFAULT_SQUARE_BUDGET;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "mbpre", version, about = "Branching processes in random environments")]
pub struct Cli {
    /// Emit JSON on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// 64-bit seed, or `random` to draw one from the OS.
    #[arg(long, global = true, default_value = "0")]
    pub seed: SeedArg,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug)]
pub enum SeedArg {
    Fixed(u64),
    Random,
}

impl std::str::FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            return Ok(SeedArg::Random);
        }
        s.parse()
            .map(SeedArg::Fixed)
            .map_err(|_| format!("`{s}` is neither a u64 nor `random`"))
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check the survival theorem's hypotheses on a model.
    Check(CheckArgs),
    /// Estimate a Lyapunov exponent of the expectation matrices.
    Lyapunov(LyapunovArgs),
    /// Extinction probabilities by pgf composition.
    Extinction(ExtinctionArgs),
    /// Monte Carlo survival, and optionally the conditioned growth rate.
    Simulate(SimulateArgs),
    /// Check hypotheses, estimate the exponent and give a verdict.
    Classify(ClassifyArgs),
    /// The random Sierpinski carpet.
    #[command(subcommand)]
    Carpet(CarpetCommand),
    /// Run the comparison-map oracle checks.
    Proofkit(ProofkitArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub max_word_len: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Sum,
    Colmin,
    Rowmin,
}

impl From<KindArg> for mbpre::ExponentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sum => mbpre::ExponentKind::SumNorm,
            KindArg::Colmin => mbpre::ExponentKind::ColMin,
            KindArg::Rowmin => mbpre::ExponentKind::RowMin,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct LyapunovArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Sum)]
    pub kind: KindArg,
    /// Steps per batch.
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 32)]
    pub batches: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtinctionMode {
    Fixed,
    Converged,
    Annealed,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtinctionArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ExtinctionMode,
    /// Comma-separated letter names or indices, outermost generation first.
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 1 << 16)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 100)]
    pub envs: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub start_type: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 40)]
    pub horizon: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub cap: u64,
    /// Also estimate the growth rate conditioned on survival.
    #[arg(long)]
    pub growth: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 32)]
    pub batches: usize,
    #[arg(long, default_value_t = 16)]
    pub max_word_len: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ProofkitArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// A positive Lyapunov exponent for the model.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarpetCommand {
    /// Lyapunov exponent of the p = 1 matrices.
    LambdaB(EstimateArgs),
    /// Interval for the critical retention probability.
    Critical(CriticalArgs),
    /// Mean projection length of sampled carpets.
    Project(ProjectArgs),
    /// Offspring statistics from the raw geometry against the model law.
    Offspring(OffspringArgs),
    /// Sample one carpet.
    Sample(SampleArgs),
    /// Write the projection model at retention probability p.
    Model(ModelArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct EstimateArgs {
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 32)]
    pub batches: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CriticalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub estimate: EstimateArgs,
    /// Cross-check by bisection on simulated survival.
    #[arg(long)]
    pub bisect: bool,
    #[arg(long, default_value_t = 0.1)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.5)]
    pub hi: f64,
    #[arg(long, default_value_t = 8)]
    pub iters: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, default_value_t = 60)]
    pub horizon: usize,
    #[arg(long, default_value_t = 100_000)]
    pub cap: u64,
    /// Survival fraction above which p counts as supercritical.
    #[arg(long, default_value_t = 0.02)]
    pub threshold: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub depth: u32,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SQUARE_BUDGET)]
    pub budget: usize,
    /// Write the first sample's projection intervals as CSV.
    #[arg(long)]
    pub intervals_csv: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct OffspringArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub column: usize,
    /// Parent type: 0 upper, 1 lower.
    #[arg(long = "type")]
    pub parent_type: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub depth: u32,
    #[arg(long, default_value_t = DEFAULT_SQUARE_BUDGET)]
    pub budget: usize,
    /// Write the squares as text lines `n i j`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ModelArgs {
    #[arg(long)]
    pub p: f64,
}
