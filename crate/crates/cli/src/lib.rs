//! Command-line front end: argument parsing, dispatch and exit codes.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
pub mod defaults;
pub mod grid;
pub mod output;
mod selftest;

pub use commands::Outcome;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            _ => EXIT_NUMERICAL,
        }
    }
}

impl From<tacnode_core::Error> for CliError {
    fn from(e: tacnode_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Resolved command line.
#[derive(Debug, Parser)]
#[command(name = "tacnode", version, about = "Hard-edge tacnode numerics")]
pub struct RunConfig {
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid evaluations (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Add a wall-clock timestamp to the header.
    #[arg(long, global = true)]
    pub stamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hastings-McLeod solution table: x, q, qprime, u.
    Pii(PiiArgs),
    /// Residuals of the Lax-pair compatibility identities.
    LaxCheck(LaxArgs),
    /// Tacnode kernel on a grid.
    Kernel(KernelArgs),
    /// Finite-n correlation kernel of the path ensemble.
    FiniteN(FiniteArgs),
    /// Rescaled finite-n kernel against the tacnode limit.
    Scaling(ScalingArgs),
    /// Phase classification in the (t, T) plane.
    Phase(PhaseArgs),
    /// Metropolis sample of non-intersecting paths.
    Sample(SampleArgs),
    /// Quick run of the invariant checks; nonzero exit if any fails.
    Selftest,
}

#[derive(Debug, Args)]
pub struct PiiArgs {
    #[arg(long, default_value_t = defaults::NU, allow_negative_numbers = true)]
    pub nu: f64,
    #[arg(long, default_value_t = defaults::PII_X_MIN, allow_negative_numbers = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = defaults::PII_X_MAX, allow_negative_numbers = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = defaults::PII_GRID_SIZE)]
    pub grid_size: usize,
    /// Emit every k-th node.
    #[arg(long, default_value_t = 1)]
    pub every: usize,
}

#[derive(Debug, Args)]
pub struct LaxArgs {
    #[arg(long, default_value_t = defaults::NU, allow_negative_numbers = true)]
    pub nu: f64,
    /// Comma-separated s values.
    #[arg(long, default_value = defaults::LAX_S, allow_hyphen_values = true)]
    pub s: String,
    /// Comma-separated tau values.
    #[arg(long, default_value = defaults::LAX_TAU, allow_hyphen_values = true)]
    pub tau: String,
    #[arg(long, default_value_t = defaults::LAX_STEP)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, default_value_t = defaults::NU, allow_negative_numbers = true)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub tau: f64,
    /// umin:umax:count
    #[arg(long, default_value = defaults::KERNEL_GRID)]
    pub grid: String,
    /// Only the diagonal K(u, u).
    #[arg(long)]
    pub diag_only: bool,
    /// Largest tolerated |Im K|.
    #[arg(long, default_value_t = tacnode_core::rhkernel::IMAG_TOL)]
    pub imag_tol: f64,
}

#[derive(Debug, Args)]
pub struct PrecisionArgs {
    /// Working precision in bits of the Gram solve.
    #[arg(long)]
    pub precision_bits: Option<usize>,
    /// Gauss nodes per quadrature panel.
    #[arg(long)]
    pub quad_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FiniteArgs {
    #[arg(long, default_value_t = defaults::PATHS)]
    pub n: usize,
    #[arg(long, default_value_t = defaults::ENDPOINT)]
    pub a: f64,
    #[arg(long, default_value_t = defaults::ENDPOINT)]
    pub b: f64,
    #[arg(long = "bigT", default_value_t = 1.0)]
    pub big_t: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = defaults::FINITE_ALPHA, allow_negative_numbers = true)]
    pub alpha: f64,
    /// xmin:xmax:count
    #[arg(long, default_value = defaults::FINITE_GRID)]
    pub grid: String,
    #[arg(long)]
    pub diag_only: bool,
    #[command(flatten)]
    pub precision: PrecisionArgs,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, default_value_t = defaults::PATHS)]
    pub n: usize,
    #[arg(long = "K", default_value_t = 0.0, allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long = "L", default_value_t = 0.0, allow_negative_numbers = true)]
    pub l: f64,
    #[arg(long = "L1", default_value_t = 0.0, allow_negative_numbers = true)]
    pub l1: f64,
    #[arg(long = "L2", default_value_t = 0.0, allow_negative_numbers = true)]
    pub l2: f64,
    #[arg(long, default_value_t = defaults::ENDPOINT)]
    pub a: f64,
    #[arg(long, default_value_t = defaults::ENDPOINT)]
    pub b: f64,
    #[arg(long, default_value_t = defaults::FINITE_ALPHA, allow_negative_numbers = true)]
    pub alpha: f64,
    /// umin:umax:count, used for both u and v
    #[arg(long, default_value = defaults::SCALING_GRID)]
    pub grid: String,
    #[command(flatten)]
    pub precision: PrecisionArgs,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[arg(long, default_value_t = defaults::ENDPOINT)]
    pub a: f64,
    #[arg(long, default_value_t = defaults::ENDPOINT)]
    pub b: f64,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long = "T")]
    pub big_t: Option<f64>,
    /// tmin:tmax:count
    #[arg(long)]
    pub sweep_t: Option<String>,
    /// Tmin:Tmax:count
    #[arg(long = "sweep-T")]
    pub sweep_big_t: Option<String>,
    /// Sample the Case II/III boundary curve at tmin:tmax:count.
    #[arg(long)]
    pub curve: Option<String>,
    #[arg(long, default_value_t = tacnode_core::phase::PHASE_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = defaults::SAMPLE_PATHS)]
    pub n: usize,
    #[arg(long, default_value_t = defaults::SAMPLE_SLICES)]
    pub m: usize,
    #[arg(long, default_value_t = defaults::ENDPOINT)]
    pub a: f64,
    #[arg(long, default_value_t = defaults::ENDPOINT)]
    pub b: f64,
    #[arg(long = "bigT", default_value_t = 1.0)]
    pub big_t: f64,
    #[arg(long, default_value_t = tacnode_core::sampler::DEFAULT_ALPHA, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = tacnode_core::sampler::DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Production sweeps after burn-in.
    #[arg(long, default_value_t = tacnode_core::sampler::DEFAULT_BURN_IN)]
    pub sweeps: usize,
    #[arg(long, default_value_t = tacnode_core::sampler::DEFAULT_THIN)]
    pub thin: usize,
    #[arg(long, default_value_t = defaults::SAMPLE_SEED)]
    pub seed: u64,
    /// Write the JSON summary here instead of stderr.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Execute a parsed command and write its output.
pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    configure_threads(cfg.threads)?;
    let outcome = commands::dispatch(&cfg.command)?;
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            outcome.table.write_to(&mut w, cfg.stamp)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            outcome.table.write_to(&mut lock, cfg.stamp)?;
        }
    }
    if let Some(json) = &outcome.json {
        match &outcome.json_path {
            Some(path) => std::fs::write(path, format!("{json}\n"))?,
            None => eprintln!("{json}"),
        }
    }
    Ok(outcome)
}

/// Parse `argv`, run, and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cfg) {
        Ok(outcome) if outcome.failed => {
            eprintln!("tacnode: one or more checks failed");
            EXIT_NUMERICAL
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("tacnode: {e}");
            e.exit_code()
        }
    }
}
