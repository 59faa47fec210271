mod commands;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "isosample", version, about = "Sampling and approximate counting over k-subsets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw N approximate samples, one k-subset per line.
    Sample(SampleArgs),
    /// Estimate the partition function.
    Count(CountArgs),
    /// Build the per-level sampling distributions and print the final one.
    Marginals(MarginalArgs),
    /// Run the exact verification suites.
    Verify(VerifyArgs),
    /// Query counts per sample across ground-set sizes.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Graph,
    MatrixDpp,
    MatrixLinear,
    Explicit,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Downup,
    Isotropic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Practical,
    Theoretical,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum POracle {
    /// Per-level marginal estimates from the annealing pipeline.
    Pipeline,
    /// The uniform distribution over the ground set.
    Uniform,
}

/// Options shared by every subcommand that reads an instance.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Instance file.
    #[arg(long)]
    pub input: PathBuf,
    /// Instance format; inferred from the file header when omitted
    /// (a `matrix` header is read as a DPP kernel).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Subset size. Defaults: graph rank for graphs, row count for
    /// matrix-linear, the header value for explicit tables.
    #[arg(short = 'k', long = "k")]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Master seed; drawn from entropy and echoed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Outer-chain sequence length override.
    #[arg(long)]
    pub t: Option<usize>,
    /// Inner down-up steps per outer step override.
    #[arg(long)]
    pub s: Option<usize>,
    /// Outer steps per sample override.
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long, value_enum, default_value_t = Preset::Practical)]
    pub preset: Preset,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Mode::Isotropic)]
    pub mode: Mode,
    /// Number of samples.
    #[arg(short = 'n', long = "samples", default_value_t = 10)]
    pub samples: usize,
    /// Down-up steps per sample override.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Source of the isotropic chain's sampling distribution.
    #[arg(long = "p", value_enum, default_value_t = POracle::Pipeline)]
    pub p_oracle: POracle,
    /// Compare the empirical distribution with the exact table.
    #[arg(long)]
    pub exact_crosscheck: bool,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    #[command(flatten)]
    pub common: Common,
    /// Samples per level for each ratio.
    #[arg(long)]
    pub ratio_samples: Option<usize>,
    /// Samples per level for marginal estimation.
    #[arg(long)]
    pub marginal_samples: Option<usize>,
    /// Compare with the exact count.
    #[arg(long)]
    pub exact_crosscheck: bool,
}

#[derive(Args, Debug)]
pub struct MarginalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub marginal_samples: Option<usize>,
    /// Print the exact marginals next to the estimates.
    #[arg(long)]
    pub exact_crosscheck: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Verify one instance instead of the built-in families.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(short = 'k', long = "k")]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trials per stationarity case.
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    /// Largest allowed empirical TV in the stationarity suite.
    #[arg(long, default_value_t = 0.01)]
    pub tv_threshold: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(short = 'k', long = "k", default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Ground-set sizes.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1_000usize, 10_000, 100_000])]
    pub ns: Vec<usize>,
    /// Samples per size.
    #[arg(long, default_value_t = 3)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Failure classes with their exit codes.
pub enum Failure {
    /// Malformed input: exit 2 with usage.
    Usage(String),
    /// Anything else: exit 1.
    Runtime(String),
}

impl From<isosample::Error> for Failure {
    fn from(e: isosample::Error) -> Self {
        match e {
            isosample::Error::Parse { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = std::time::Instant::now();
    let result = match cli.command {
        Command::Sample(a) => commands::sample(a),
        Command::Count(a) => commands::count(a),
        Command::Marginals(a) => commands::marginals(a),
        Command::Verify(a) => commands::verify(a),
        Command::Bench(a) => commands::bench(a),
    };
    eprintln!("wall_time_s {:.3}", started.elapsed().as_secs_f64());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
