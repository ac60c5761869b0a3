mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Field;
use output::{Format, Sink};
use spectra_core::explore::Conjecture;
use spectra_core::verify::Suite;
use spectra_core::Error;

/// Explore three-term progressions in F_p^n through their Fourier spectra.
#[derive(Parser)]
#[command(name = "spectra", version)]
struct Cli {
    /// Field characteristic; checked against input files when given.
    #[arg(long, global = true)]
    p: Option<u32>,
    /// Dimension; checked against input files when given.
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fourier transform of a function file.
    Dft {
        #[arg(long)]
        input: PathBuf,
    },
    /// Progression density Λ(f).
    Lambda {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = LambdaMode::Both)]
        mode: LambdaMode,
    },
    /// Spectral order and decay report.
    Spectrum(SpectrumArgs),
    /// Slice, smoothing or span collapse.
    Collapse(CollapseArgs),
    /// Sample subspaces avoiding the difference set of given points.
    SampleSubspace(SampleArgs),
    /// The large-spectrum dichotomy at ranks ℓ and Bℓ.
    Dichotomy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        ell: usize,
        #[arg(long, default_value_t = 50)]
        b: usize,
    },
    /// Run the density-increment iteration and write its trace.
    Iterate(IterateArgs),
    /// Stress-test the stronger decay conjectures on generated sets.
    Hunt(HuntArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// Generate a function file.
    Generate(GeneratorArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LambdaMode {
    Brute,
    Spectral,
    Both,
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Density θ in the decay bound; defaults to 𝔼(f).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Evaluate |f̂(a_j)| < θ^{j^{1/2+δ}} F at every rank.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Report only the first ranks.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CollapseMode {
    Slice,
    Smooth,
    Span,
}

#[derive(Args)]
pub struct CollapseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: CollapseMode,
    /// Slice direction (point index).
    #[arg(long)]
    pub t: Option<usize>,
    /// Slice shift; defaults to the densest coset.
    #[arg(long)]
    pub x: Option<usize>,
    /// Smoothing subspace V as a spanning list of point indices.
    #[arg(long, value_delimiter = ',')]
    pub basis: Option<Vec<usize>>,
    /// Dimension of a random smoothing subspace V.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Rank j for the span collapse or the smoothing decomposition.
    #[arg(long)]
    pub j: Option<usize>,
}

#[derive(Args)]
pub struct SampleArgs {
    /// The points a_1, …, a_j as indices.
    #[arg(long, value_delimiter = ',')]
    pub points: Option<Vec<usize>>,
    /// Take the points from the top of this function's spectral order.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    #[arg(long, default_value_t = spectra_core::collapse::DEFAULT_SAMPLER_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Threshold {
    TwoSqrtF,
    TwoInvSqrtF,
}

#[derive(Args)]
pub struct IterateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub j: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub j0: Option<usize>,
    #[arg(long)]
    pub big_j0: Option<usize>,
    /// Step budget.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Record the asymptotic hypotheses as flags instead of stopping on them.
    #[arg(long)]
    pub desk: bool,
    #[arg(long, value_enum, default_value_t = Threshold::TwoSqrtF)]
    pub threshold: Threshold,
    /// Also write the full trace (config, reduction, handoff) as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorChoice {
    Bernoulli,
    SubspaceUnion,
    CosetUnion,
    #[value(name = "planted-3ap-free")]
    Planted3apFree,
}

#[derive(Args)]
pub struct GeneratorArgs {
    #[arg(long, value_enum)]
    pub kind: GeneratorChoice,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub cosets: Option<usize>,
    /// Planted sets: insert points in a seeded random order.
    #[arg(long)]
    pub shuffle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConjectureChoice {
    C1,
    C2,
}

impl From<ConjectureChoice> for Conjecture {
    fn from(c: ConjectureChoice) -> Self {
        match c {
            ConjectureChoice::C1 => Conjecture::C1,
            ConjectureChoice::C2 => Conjecture::C2,
        }
    }
}

#[derive(Args)]
pub struct HuntArgs {
    #[arg(long, value_enum)]
    pub conjecture: ConjectureChoice,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Density exponent: θ > F^{−c}.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 1)]
    pub big_j0: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,6,8")]
    pub j_grid: Vec<usize>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteChoice {
    Identities,
    Arithmetic,
    Driver,
    All,
}

impl From<SuiteChoice> for Suite {
    fn from(s: SuiteChoice) -> Self {
        match s {
            SuiteChoice::Identities => Suite::Identities,
            SuiteChoice::Arithmetic => Suite::Arithmetic,
            SuiteChoice::Driver => Suite::Driver,
            SuiteChoice::All => Suite::All,
        }
    }
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteChoice::Identities)]
    pub suite: SuiteChoice,
    /// Random functions for the identity checks over --p/--n (default F_3^4).
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

/// A command that stopped before producing its report.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Regime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) | Error::BudgetExhausted { .. } => Failure::Regime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> commands::Exit {
    let field = Field { p: cli.p, n: cli.n };
    let sink = Sink { format: cli.format, out: cli.out };
    let seed = cli.seed;
    match &cli.command {
        Command::Dft { input } => commands::dft_cmd(input, field, &sink),
        Command::Lambda { input, mode } => commands::lambda_cmd(input, *mode, field, &sink),
        Command::Spectrum(args) => commands::spectrum_cmd(args, field, &sink),
        Command::Collapse(args) => commands::collapse_cmd(args, field, seed, &sink),
        Command::SampleSubspace(args) => commands::sample_cmd(args, field, seed, &sink),
        Command::Dichotomy { input, ell, b } => commands::dichotomy_cmd(input, *ell, *b, field, &sink),
        Command::Iterate(args) => commands::iterate_cmd(args, field, seed, &sink),
        Command::Hunt(args) => commands::hunt_cmd(args, field, seed, &sink),
        Command::Verify(args) => commands::verify_cmd(args, field, seed, &sink),
        Command::Generate(args) => commands::generate_cmd(args, field, seed, &sink),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors and unknown subcommands.
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Regime(msg)) => {
            eprintln!("regime: {msg}");
            ExitCode::from(3)
        }
    }
}
