//! `benrec`: generate recurrence sequences and test them against Benford's law.
//!
//! Exit codes: 0 success, 1 verdict differs from `--expect`, 2 usage or
//! parse error, 3 numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use benrec::benford::Verdict;
use benrec::montecarlo::Mode;
use benrec::RecurrenceKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Command, Format, InlineSpec, RunConfig, ThresholdOverrides};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Expectation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Expectation(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Expectation(m) => f.write_str(m),
        }
    }
}

impl From<benrec::Error> for CliError {
    fn from(e: benrec::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "benrec", version, about = "Recurrence sequences and Benford's law")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Generate a sequence.
    Gen(Common),
    /// Benford diagnostics for a sequence from a spec or a CSV file.
    Analyze(Common),
    /// λ/μ decomposition, dominance check and main-term analysis.
    Decompose(Common),
    /// Benford verdict for constant coefficients from the characteristic roots.
    Predict(Common),
    /// Repeated seeded trials of a random model.
    Montecarlo(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Linear,
    Multiplicative,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ProductChain,
    Sequence,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpectArg {
    Consistent,
    Inconsistent,
    InsufficientSample,
}

#[derive(Args)]
struct Common {
    /// Run configuration JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset, see `--list-presets`.
    #[arg(long)]
    preset: Option<String>,
    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long)]
    depth: Option<usize>,
    /// Coefficient expression f_i(n), repeat once per term.
    #[arg(long = "coeff", allow_hyphen_values = true)]
    coeffs: Vec<String>,
    /// Initial value, repeat once per term.
    #[arg(long = "init", allow_hyphen_values = true)]
    inits: Vec<f64>,
    /// Main-term multiplier μ(k); the sequence is b1 ∏ μ(k).
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b1: Option<f64>,
    /// Sequence CSV to analyze instead of a spec.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Horizon N.
    #[arg(short = 'N', long)]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Two-column plot data (digit, frequency).
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Number of Weyl sums to report.
    #[arg(short = 'M', long)]
    weyl_terms: Option<usize>,
    #[arg(long)]
    max_digit_dev: Option<f64>,
    #[arg(long)]
    max_discrepancy: Option<f64>,
    #[arg(long)]
    max_weyl: Option<f64>,
    /// Weyl sums up to this frequency enter the verdict.
    #[arg(long)]
    weyl_m: Option<usize>,
    /// Smaller samples are reported as insufficient.
    #[arg(long)]
    min_n: Option<usize>,
    /// Decomposition parameter c (default: the minimal-solution value).
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Second c to decompose with; verdicts are compared.
    #[arg(long, allow_hyphen_values = true)]
    compare_c: Option<f64>,
    /// CSV with n, p, q, g/f², rel_error.
    #[arg(long)]
    dominance_csv: Option<PathBuf>,
    #[arg(short = 'T', long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Chain length (product-chain) or sequence horizon (sequence mode).
    #[arg(long)]
    length: Option<usize>,
    /// Exit with code 1 when the verdict differs.
    #[arg(long, value_enum)]
    expect: Option<ExpectArg>,
}

impl Common {
    fn to_config(&self) -> Result<RunConfig, CliError> {
        let inline = InlineSpec {
            kind: self.kind.map(|k| match k {
                KindArg::Linear => RecurrenceKind::Linear,
                KindArg::Multiplicative => RecurrenceKind::Multiplicative,
            }),
            depth: self.depth,
            coeffs: self.coeffs.clone(),
            inits: self.inits.clone(),
            mu: self.mu.clone(),
            b1: self.b1,
        };
        let flags = RunConfig {
            command: None,
            preset: self.preset.clone(),
            model: inline.to_model()?,
            input: self.input.clone(),
            horizon: self.horizon,
            seed: self.seed,
            output: self.output.clone(),
            format: self.format,
            plot: self.plot.clone(),
            thresholds: ThresholdOverrides {
                max_digit_dev: self.max_digit_dev,
                star_discrepancy: self.max_discrepancy,
                weyl: self.max_weyl,
                weyl_m: self.weyl_m,
                min_n: self.min_n,
            },
            weyl_terms: self.weyl_terms,
            c: self.c,
            compare_c: self.compare_c,
            dominance_csv: self.dominance_csv.clone(),
            trials: self.trials,
            mode: self.mode.map(|m| match m {
                ModeArg::ProductChain => Mode::ProductChain,
                ModeArg::Sequence => Mode::Sequence,
            }),
            length: self.length,
            expect: self.expect.map(|e| match e {
                ExpectArg::Consistent => Verdict::Consistent,
                ExpectArg::Inconsistent => Verdict::Inconsistent,
                ExpectArg::InsufficientSample => Verdict::InsufficientSample,
            }),
        };
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.merge(flags))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, common) = match &cli.command {
        Sub::Gen(c) => (Command::Gen, c),
        Sub::Analyze(c) => (Command::Analyze, c),
        Sub::Decompose(c) => (Command::Decompose, c),
        Sub::Predict(c) => (Command::Predict, c),
        Sub::Montecarlo(c) => (Command::Montecarlo, c),
    };
    if common.list_presets {
        for p in benrec::presets::list_presets() {
            println!("{:<14} {}", p.name, p.description);
        }
        return Ok(());
    }
    let run = config::resolve(command, common.to_config()?)?;
    if let Some(from) = run.resolved.clamped_from {
        eprintln!(
            "note: horizon {from} exceeds what this preset can represent, clamped to {}",
            run.resolved.horizon
        );
    }
    commands::dispatch(&run)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
