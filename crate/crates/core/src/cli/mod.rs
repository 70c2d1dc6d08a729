//! Command-line front end: TOML configuration, command dispatch, CSV artifacts
//! and a JSON run manifest with output checksums.

pub mod config;
pub mod manifest;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::model::{KappaConvention, ModelError, Q0Sign};
use crate::nullfinder::NullError;
use crate::timedomain::TimeDomainError;

pub use config::{load_config, ConfigError, RunConfig, Target};
pub use manifest::{checksum, RunManifest, MANIFEST_FILE};
pub use run::{run, sweep_csv, RunReport, SWEEP_COLUMNS, TRACE_COLUMNS, VERIFY_COLUMNS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Steady state of the pumped cavity.
    Steady,
    /// Sideband amplitudes at one operating point.
    Response,
    /// Spectrum over Δ_p and response over g.
    Sweep,
    /// Operating point where c₊ vanishes, with the reference-point note.
    Null,
    /// c₊ over g at Δ_p = ω_m.
    Eit,
    /// Width of the |c₋|² peak.
    Bandwidth,
    /// One time-domain run with trace dump.
    Simulate,
    /// Time-domain comparison gates.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Response => "response",
            Command::Sweep => "sweep",
            Command::Null => "null",
            Command::Eit => "eit",
            Command::Bandwidth => "bandwidth",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KappaArg {
    Single,
    Doubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Q0Arg {
    Derived,
    Negated,
}

#[derive(Debug, Parser)]
#[command(name = "optomech", version, about = "Sideband response of a pumped optomechanical cavity")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration; the built-in preset is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    kappa_convention: Option<KappaArg>,
    #[arg(long, value_enum)]
    q0_sign: Option<Q0Arg>,
    /// Worker threads for sweeps and oracle runs.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn io(e: impl std::fmt::Display) -> Self {
        CliError::Io(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<NullError> for CliError {
    fn from(e: NullError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<TimeDomainError> for CliError {
    fn from(e: TimeDomainError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&args) {
        Ok(report) => {
            print!("{}", report.summary);
            println!("wrote {} file(s) and {}", report.manifest.outputs.len(), MANIFEST_FILE);
            if report.gate_failures.is_empty() {
                EXIT_OK
            } else {
                for f in &report.gate_failures {
                    eprintln!("gate failed: {f}");
                }
                EXIT_NUMERICAL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &Args) -> Result<RunReport, CliError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
    if let Some(k) = args.kappa_convention {
        config.kappa_convention = match k {
            KappaArg::Single => KappaConvention::Single,
            KappaArg::Doubled => KappaConvention::Doubled,
        };
    }
    if let Some(q) = args.q0_sign {
        config.q0_sign = match q {
            Q0Arg::Derived => Q0Sign::Derived,
            Q0Arg::Negated => Q0Sign::Negated,
        };
    }
    match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(ConfigError::Validation {
                    key: "--threads".into(),
                    message: e.to_string(),
                }))?;
            pool.install(|| run(&config, args.command))
        }
        None => run(&config, args.command),
    }
}
