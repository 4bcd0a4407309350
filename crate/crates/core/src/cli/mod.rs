//! The `legrec` command-line front end.
//!
//! Exit codes: 0 success, 1 semantic failure, 2 usage error.

mod bench;
mod quantum;
mod recover;
mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::ffield::PrimeModulus;
use crate::oracle::OracleMode;
use crate::reconstruct::Algorithm;
use crate::Budget;

pub use bench::BenchArgs;
pub use quantum::QuantumArgs;
pub use recover::RecoverArgs;
pub use verify::{Lemma, VerifyArgs};

/// Version tag embedded in JSON reports.
pub const SCHEMA_VERSION: &str = "1";

/// Smallest accepted `--budget`.
pub const MIN_BUDGET: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "legrec",
    version,
    about = "Recover a hidden square-free monic polynomial over F_p from its quadratic-character oracle"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Worker threads for candidate scans (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Omit wall-clock fields so output is byte-for-byte reproducible.
    #[arg(long, global = true)]
    pub no_timing: bool,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover a hidden polynomial and report queries and survivors.
    Recover(RecoverArgs),
    /// Check the character-sum bounds and emit CSV.
    VerifyBounds(VerifyArgs),
    /// Simulate the query-state measurement.
    Quantum(QuantumArgs),
    /// Time and count work over a grid of instances and emit CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Brute,
    Short,
    TwoStage,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Brute => Algorithm::Brute,
            AlgoArg::Short => Algorithm::Short,
            AlgoArg::TwoStage => Algorithm::TwoStage,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Signed,
    Patched,
}

impl From<ModeArg> for OracleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Signed => OracleMode::Signed,
            ModeArg::Patched => OracleMode::Patched,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } | Error::NonConvergence(_) => {
                CliError::failure(e.to_string())
            }
            _ => CliError::usage(e.to_string()),
        }
    }
}

/// Report text plus the exit code it should end with.
pub struct Output {
    pub text: String,
    pub code: i32,
}

pub(crate) fn modulus(p: u64) -> Result<PrimeModulus, CliError> {
    PrimeModulus::new(p).map_err(CliError::from)
}

pub(crate) fn budget(limit: Option<u64>) -> Result<Budget, CliError> {
    match limit {
        None => Ok(Budget::default()),
        Some(b) if b < MIN_BUDGET => Err(CliError::usage(format!(
            "budget too small: {b} < {MIN_BUDGET}"
        ))),
        Some(b) => Ok(Budget::new(b)),
    }
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let timing = !cli.global.no_timing;
    match &cli.command {
        Command::Recover(a) => recover::run(a, timing),
        Command::VerifyBounds(a) => verify::run(a),
        Command::Quantum(a) => quantum::run(a),
        Command::Bench(a) => bench::run(a, timing),
    }
}

fn run_with_threads(cli: &Cli) -> Result<Output, CliError> {
    match cli.global.threads {
        None => execute(cli),
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::failure(format!("cannot start thread pool: {e}")))?;
            pool.install(|| execute(cli))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_with_threads(&cli) {
        Ok(out) => {
            let written = match &cli.global.out {
                Some(path) => std::fs::write(path, &out.text),
                None => std::io::stdout().write_all(out.text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write report: {e}");
                return 1;
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
