//! `eprop`: diagnostics for Markov operators on finite metric state spaces.
//!
//! Four subcommands: `run-example` (canonical report bundle for a built-in
//! model), `diagnose` (one diagnostic profile), `decompose` (inductive
//! measure decomposition with verification), `check-stability` (flat
//! distance trace toward the invariant measure).
//!
//! Exit codes: `0` success, `1` an expected outcome was not reproduced,
//! `2` usage, load, or validation errors, `3` the decomposition step search
//! exhausted its horizon.

mod commands;
mod document;
mod observable;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eprop_core::{
    build_example1, build_example2, build_halfmap, DecompositionError, MetricModel,
};

#[derive(Parser)]
#[command(
    name = "eprop",
    version,
    about = "Markov operator diagnostics: dual iterates, flat distances, measure decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the canonical diagnostic bundle for a built-in model and check
    /// its expected verdicts.
    RunExample(RunExampleArgs),
    /// Run one diagnostic profile and emit its report.
    Diagnose(DiagnoseArgs),
    /// Build the inductive measure decomposition, verify its telescoping
    /// identity, and scan continuity of the pieces.
    Decompose(DecomposeArgs),
    /// Trace the flat distance from kernel iterates to the invariant
    /// measure.
    CheckStability(CheckStabilityArgs),
}

/// Built-in models.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BuiltinName {
    /// Shrinking walk on {1/m} with an absorbing limit point.
    Example1,
    /// Prime-indexed cycles with a common absorbing zero state.
    Example2,
    /// Three-state chain with strong diagonal and uniform leakage.
    Doeblin3,
    /// Halving chain on {2^-j} with an absorbing zero state.
    Halfmap,
}

/// Report output format.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Where the model comes from: a JSON document or a built-in builder.
#[derive(Args)]
struct ModelSource {
    /// Path to a model document (JSON).
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,

    /// Built-in model name.
    #[arg(long, value_enum, value_name = "NAME")]
    builtin: Option<BuiltinName>,

    /// Chain length for the built-in shrinking walk.
    #[arg(long, default_value_t = 100, value_name = "M")]
    m_max: usize,

    /// Increasing primes for the built-in prime cycles.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2u64, 3, 5, 7, 11, 13], value_name = "P,P,...")]
    primes: Vec<u64>,

    /// Depth for the built-in halving chain.
    #[arg(long, default_value_t = 40, value_name = "J")]
    j_max: usize,
}

impl ModelSource {
    fn resolve(&self) -> Result<MetricModel> {
        match (&self.model, self.builtin) {
            (Some(_), Some(_)) => bail!("pass exactly one of --model and --builtin, not both"),
            (None, None) => bail!("pass one of --model FILE or --builtin NAME"),
            (Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    anyhow::anyhow!("cannot read model file {}: {e}", path.display())
                })?;
                document::model_from_json(&text)
            }
            (None, Some(name)) => build_builtin(name, self.m_max, &self.primes, self.j_max),
        }
    }
}

fn build_builtin(
    name: BuiltinName,
    m_max: usize,
    primes: &[u64],
    j_max: usize,
) -> Result<MetricModel> {
    let model = match name {
        BuiltinName::Example1 => build_example1(m_max)?,
        BuiltinName::Example2 => build_example2(primes)?,
        BuiltinName::Doeblin3 => eprop_core::build_doeblin3(),
        BuiltinName::Halfmap => build_halfmap(j_max)?,
    };
    Ok(model)
}

#[derive(Args)]
struct RunExampleArgs {
    /// Built-in model name.
    #[arg(value_enum, value_name = "NAME")]
    name: BuiltinName,

    /// Chain length for the shrinking walk.
    #[arg(long, default_value_t = 100, value_name = "M")]
    m_max: usize,

    /// Increasing primes for the prime cycles.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2u64, 3, 5, 7, 11, 13], value_name = "P,P,...")]
    primes: Vec<u64>,

    /// Depth for the halving chain.
    #[arg(long, default_value_t = 40, value_name = "J")]
    j_max: usize,

    /// Directory for the three report files.
    #[arg(long, default_value = ".", value_name = "DIR")]
    out: PathBuf,

    /// Report file format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// Diagnostic profiles.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Profile {
    /// Tail-sup gaps of dual iterates along a probe ladder.
    Eproperty,
    /// Tail-sup gaps of Cesàro averages of dual iterates.
    Cesaro,
    /// Flat distance from kernel iterates to the invariant measure.
    Stability,
    /// Smallest ball mass of advanced iterates over a tail window.
    LiminfBall,
    /// Search for a ball on which dual iterates eventually oscillate below
    /// a level.
    LemmaBall,
    /// Flat distances between kernel rows of probes and target.
    Feller,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    source: ModelSource,

    /// Which diagnostic to run.
    #[arg(long, value_enum)]
    profile: Profile,

    /// Observable: a built-in name (identity_on_norm, min1_2norm) or a JSON
    /// file.
    #[arg(long, default_value = "identity_on_norm", value_name = "NAME|FILE")]
    f: String,

    /// Target state id (eproperty, cesaro, feller).
    #[arg(long, value_name = "ID")]
    z: Option<usize>,

    /// Start state id (stability, liminf-ball); default 0.
    #[arg(long, value_name = "ID")]
    x0: Option<usize>,

    /// Ball radius (liminf-ball).
    #[arg(long, value_name = "R")]
    r: Option<f64>,

    /// Probe state ids (default: one per distinct distance to the target,
    /// farthest first).
    #[arg(long, value_delimiter = ',', value_name = "ID,ID,...")]
    probes: Option<Vec<usize>>,

    /// Largest iterate index examined.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..), value_name = "N")]
    horizon: u64,

    /// First iterate counted in tail statistics (default: horizon / 2, at
    /// least 1).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), value_name = "N0")]
    tail_start: Option<u64>,

    /// Verdict tolerance.
    #[arg(long, default_value_t = eprop_core::DEFAULT_VERDICT_TOL, value_name = "TOL")]
    tol: f64,

    /// Oscillation level (lemma-ball).
    #[arg(long, default_value_t = 0.1, value_name = "EPS")]
    epsilon: f64,

    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    source: ModelSource,

    /// Observable: a built-in name or a JSON file.
    #[arg(long, default_value = "identity_on_norm", value_name = "NAME|FILE")]
    f: String,

    /// Start state id (default: the state farthest from the ball center).
    #[arg(long, value_name = "ID")]
    x0: Option<usize>,

    /// Ball center state id.
    #[arg(long, default_value_t = 0, value_name = "ID")]
    z: usize,

    /// Ball radius (default: half the smallest positive distance from the
    /// center).
    #[arg(long, value_name = "R")]
    r: Option<f64>,

    /// Mixing weight; must lie strictly between 0 and the invariant mass of
    /// the ball (default: half that mass).
    #[arg(long, value_name = "A")]
    alpha: Option<f64>,

    /// Number of decomposition levels (default: smallest depth whose
    /// residual bound clears epsilon).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), value_name = "K")]
    k: Option<u64>,

    /// Accuracy level for the residual bound and the contradiction check.
    #[arg(long, default_value_t = 0.05, value_name = "EPS")]
    epsilon: f64,

    /// Largest step count tried when searching for ball mass at each level.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..), value_name = "N")]
    n_search: u64,

    /// Probe state ids for the continuity scan (default: the nearest
    /// distinct neighbor of the start state).
    #[arg(long, value_delimiter = ',', value_name = "ID,ID,...")]
    probes: Option<Vec<usize>>,

    /// Verify with exact rational arithmetic instead of floating point.
    #[arg(long)]
    rational: bool,

    /// Output file for the JSON record (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Output format; the decomposition record is always JSON.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct CheckStabilityArgs {
    #[command(flatten)]
    source: ModelSource,

    /// Start state id.
    #[arg(long, default_value_t = 0, value_name = "ID")]
    x0: usize,

    /// Number of kernel steps to trace.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..), value_name = "N")]
    horizon: u64,

    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::RunExample(args) => commands::run_example(&args),
        Command::Diagnose(args) => commands::diagnose(&args),
        Command::Decompose(args) => commands::decompose_cmd(&args),
        Command::CheckStability(args) => commands::check_stability(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<DecompositionError>() {
                Some(DecompositionError::SearchHorizon { .. }) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
