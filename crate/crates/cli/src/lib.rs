//! `patcount` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 resource cap, 3 verification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

pub use output::{Envelope, Table, SCHEMA_VERSION};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RESOURCE: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "patcount", version, about = "Distinct patterns in permutations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for commands that sweep or sample.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepTable {
    /// E(X_n)/2^n for n = 1..=N (exact up to 9, sampled above).
    Ratio,
    /// Exact per-length expectations for n = 1..=min(N, 9).
    Exact,
    /// epsilon, delta, tail fraction and the main bound for n = 1..=N.
    Bounds,
    /// eta(k, r) for k = 1..=K.
    Eta,
    /// Total variation reports for n <= min(N, 9), k <= min(n, K).
    Tv,
    /// Case table for n = 8, 16, 32, ... up to N.
    Cases,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distinct-pattern tally of one permutation.
    Count(CountArgs),
    /// Monte Carlo estimate of the mean tally.
    Estimate(EstimateArgs),
    /// Exact expectation by sweeping S_n.
    Exact(ExactArgs),
    /// Asymptotic bound report, case table and root solve.
    Bounds(BoundsArgs),
    /// Total variation distance to Poisson next to the coupling bound.
    Tv(TvArgs),
    /// Run the conformance suites.
    Verify(VerifyArgs),
    /// Tables over ranges of n or k, CSV first.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Permutation, e.g. "3 4 1 5 2" or 34152.
    #[arg(long)]
    pub perm: patcount::Permutation,
    #[arg(long, default_value = "nonconsecutive")]
    pub mode: patcount::Mode,
    #[arg(long, default_value = "without-empty")]
    pub convention: patcount::Convention,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "nonconsecutive")]
    pub mode: patcount::Mode,
    #[arg(long, default_value = "without-empty")]
    pub convention: patcount::Convention,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "without-empty")]
    pub convention: patcount::Convention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum K0 {
    Half,
    At(u64),
}

impl std::str::FromStr for K0 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "half" {
            return Ok(K0::Half);
        }
        s.parse().map(K0::At).map_err(|_| format!("expected 'half' or an integer, got {s:?}"))
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: u64,
    /// Lower summation limit: "half" or an integer.
    #[arg(long, default_value = "half")]
    pub k0: K0,
    /// Also tabulate eta(k, r) for this k.
    #[arg(long)]
    pub k: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TvArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Single pattern; all patterns of length k when omitted.
    #[arg(long)]
    pub pattern: Option<patcount::PatternCode>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: patcount::oracles::Suite,
    /// Largest overlap universe for the overlap lemma sweep.
    #[arg(long, default_value_t = 8)]
    pub max_m: usize,
    /// Largest n for the coupling audit.
    #[arg(long, default_value_t = 7)]
    pub n: usize,
    /// Largest k for the coupling audit.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub table: SweepTable,
    /// Largest n.
    #[arg(long, default_value_t = 12)]
    pub n: u64,
    /// Largest k.
    #[arg(long, default_value_t = 10)]
    pub k: u64,
    #[arg(long, default_value_t = 200)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "nonconsecutive")]
    pub mode: patcount::Mode,
    #[arg(long, default_value = "without-empty")]
    pub convention: patcount::Convention,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<patcount::Error> for Failure {
    fn from(e: patcount::Error) -> Self {
        let code = match e {
            patcount::Error::ResourceLimit { .. } => EXIT_RESOURCE,
            patcount::Error::Contract(_) => EXIT_VERIFY,
            patcount::Error::InvalidInput(_) | patcount::Error::Domain(_) => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

/// Parse `args` (including the program name), run, write the rendered output.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
            return code;
        }
    };
    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let started = Instant::now();
    let outcome = commands::dispatch(&cli);
    let (result, verdict) = match outcome {
        Ok(r) => (r, EXIT_OK),
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    let envelope = Envelope::new(echo, result.payload, started.elapsed().as_secs_f64());
    let rendered = match output::render(&envelope, result.table.as_ref(), cli.format) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, rendered.as_bytes()),
        None => stdout.write_all(rendered.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_USAGE;
    }
    if !result.pass {
        let _ = writeln!(stderr, "verification failed");
        return EXIT_VERIFY;
    }
    verdict
}

/// What a command hands back to the renderer.
pub(crate) struct CommandResult {
    pub payload: serde_json::Value,
    pub table: Option<Table>,
    /// False only for a failed verification.
    pub pass: bool,
}
