use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use littlestone::dims::Caps;
use littlestone::Epsilon;

#[derive(Debug, Parser, Serialize)]
#[command(name = "littlestone", version, about = "Experiments on finite hypothesis classes")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Rational ε, written p/q.
    #[arg(long, global = true, value_parser = parse_eps)]
    pub epsilon: Option<Epsilon>,

    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,

    /// Include witnesses (trees, chains, shattered sets, transcripts).
    #[arg(long, global = true)]
    pub emit_witness: bool,

    /// Exit 0 even when a verdict or dimension is only a bound.
    #[arg(long, global = true)]
    pub allow_indeterminate: bool,

    /// Depth cap for the ε-tree searches.
    #[arg(long, global = true, default_value_t = Caps::default().max_depth)]
    pub max_depth: usize,

    /// Largest point set tried as a virtual element or excellence witness.
    #[arg(long, global = true)]
    pub max_subset_size: Option<usize>,

    #[arg(long, global = true, default_value_t = Caps::default().node_budget)]
    pub node_budget: u64,

    /// Cap on enumerated tuples: expert families, exhaustive tree sets, exact
    /// history sums.
    #[arg(long, global = true, default_value_t = littlestone::experts::FAMILY_CAP)]
    pub tuple_cap: u128,
}

impl Global {
    pub fn caps(&self) -> Caps {
        Caps {
            max_depth: self.max_depth,
            max_subset_size: self.max_subset_size,
            node_budget: self.node_budget,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Text,
    /// Structured JSON document.
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Dimensions of a class; ε-variants when --epsilon is given.
    Analyze {
        /// Class file, or `-` for stdin.
        class: PathBuf,
    },
    /// Extract a good, excellent or majority-agreeing subset.
    Extract(ExtractArgs),
    /// Build the dynamic expert family and check that it covers every tree.
    Cover(CoverArgs),
    /// Play learners against adversaries.
    Duel(DuelArgs),
    /// Write a generated class.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractMode {
    Good,
    Excellent,
    Agreeing,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    pub class: PathBuf,

    #[arg(long, value_enum)]
    pub mode: ExtractMode,

    /// Hypothesis indices to start from (default: the whole class).
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<usize>>,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverArgs {
    pub class: PathBuf,

    #[arg(long = "T", value_name = "T")]
    pub horizon: usize,

    /// Number of sampled trees (needs --seed).
    #[arg(long, conflicts_with = "exhaustive")]
    pub trees: Option<usize>,

    #[arg(long)]
    pub exhaustive: bool,

    /// Also rerun with one expert removed and report the failures.
    #[arg(long)]
    pub mutation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Soa,
    Mw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    Goodtree,
    Replay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Adaptive,
    Oblivious,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorArg {
    Expected,
    Resampled,
}

#[derive(Debug, Args, Serialize)]
pub struct DuelArgs {
    pub class: PathBuf,

    #[arg(long, value_enum)]
    pub learner: LearnerKind,

    #[arg(long, value_enum)]
    pub adversary: AdversaryKind,

    /// Horizon; the good-tree adversary defaults to the depth of its tree.
    #[arg(long = "T", value_name = "T")]
    pub horizon: Option<usize>,

    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[arg(long, value_enum, default_value_t = ModeArg::Adaptive)]
    pub mode: ModeArg,

    #[arg(long, value_enum, default_value_t = EstimatorArg::Expected)]
    pub estimator: EstimatorArg,

    /// Monte Carlo histories per round in oblivious mode.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,

    /// Labeled sequences for the replay adversary, one per line as `x:y`
    /// pairs; without it, seeded random sequences are drawn.
    #[arg(long)]
    pub sequences: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Generator: full, singleton, threshold, random, random_capped_ldim.
    pub kind: String,

    /// Integer parameters of the generator.
    pub params: Vec<u64>,

    /// Write here instead of stdout; `.json` paths get the structured format.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn parse_eps(s: &str) -> Result<Epsilon, String> {
    s.parse().map_err(|e: littlestone::Error| e.to_string())
}
