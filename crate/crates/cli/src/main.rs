//! `crt`: simulate growth processes, run verification bundles, compute exact
//! shape probabilities and convert tree files.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] crt_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(crt_core::Error::Capability(_)) => 3,
            CliError::Core(crt_core::Error::Io(_)) | CliError::Write { .. } | CliError::Read { .. } => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crt", version, about = "Random trees grown on strings of beads")]
struct Cli {
    /// Worker threads for replicates (default: logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a growth model and write its trajectory and final trees.
    Simulate(SimulateArgs),
    /// Run an acceptance bundle and write its JSON report.
    Verify(VerifyArgs),
    /// Convert a tree between Newick and JSON.
    Export(ExportArgs),
    /// Write exact shape probabilities of a discrete chain.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Model {
    TwoColour,
    StableMass,
    Ford,
    Marchal,
    AlphaGamma,
    DiscreteTwoColour,
    Recursive,
    BranchReplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Newick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "kebab-case")]
pub enum BundleName {
    #[value(name = "theorem-1-1")]
    Theorem11,
    FordEmbedding,
    GemFragments,
    MlSampler,
    TwoColourStructure,
    DiscreteScaling,
    Metrics,
    Duality,
    Calibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum OracleModelName {
    Marchal,
    AlphaGamma,
    TwoColour,
}

/// Model parameters, accepted as decimals or fractions such as 1/3.
#[derive(Debug, Clone, Args)]
pub struct Params {
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub beta_prime: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = "CRT_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[command(flatten)]
    pub params: Params,
    /// Steps (k or n; leaves for ford and alpha_gamma).
    #[arg(long = "k", alias = "n", default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tree format of the final trees; csv writes the trajectory only.
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Levels of the recursive construction.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// Atoms expanded per string in the recursive construction.
    #[arg(long, default_value_t = 4)]
    pub atoms: usize,
    /// Sticks per diversity estimate in branch replacement.
    #[arg(long, default_value_t = crt_core::growth::REPLACE_DEFAULT_STICKS)]
    pub sticks: usize,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub bundle: BundleName,
    #[arg(long, default_value = "1/3")]
    pub beta: String,
    /// Steps k (or n: chain length for discrete-scaling, n_max for duality).
    #[arg(long = "k", alias = "n")]
    pub steps: Option<usize>,
    /// Samples per side (runs for ford-embedding, seeds for calibration).
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub m_max: usize,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub from: TreeFormat,
    #[arg(long, value_enum)]
    pub to: TreeFormat,
    /// Output file (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Json,
    Newick,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub model: OracleModelName,
    #[command(flatten)]
    pub params: Params,
    #[arg(long = "n")]
    pub n: usize,
    /// Forget leaf labels.
    #[arg(long)]
    pub unlabeled: bool,
    #[command(flatten)]
    pub out: OutDir,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Simulate(a) => run::simulate(&a).map(|()| true),
        Command::Verify(a) => run::verify(&a),
        Command::Export(a) => run::export(&a).map(|()| true),
        Command::Oracle(a) => run::oracle(&a).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
