//! `fracmag`: spectra and critical points of the fractional magnetic
//! Laplacian from a JSON run config.
//!
//! Exit codes: 0 success, 1 validation or runtime failure, 2 config error,
//! 3 mathematical precondition violated. Errors are printed to stderr as a
//! JSON object.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracmag_core::Error;
use serde_json::json;

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Precondition(String),
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Precondition(_) => "precondition",
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Precondition(m) | CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidArgument(_) | Error::InvalidDomain(_) | Error::Unsupported(_) => CliError::Config(msg),
            Error::Precondition(_)
            | Error::Resonant { .. }
            | Error::NotPositiveDefinite(_)
            | Error::Conditioning { .. } => CliError::Precondition(msg),
            Error::ValidationFailed(_) => CliError::Validation(msg),
            _ => CliError::Runtime(msg),
        }
    }
}

#[derive(Parser)]
#[command(name = "fracmag", version, about = "Fractional magnetic Laplacian solver")]
struct Cli {
    /// Log level (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, eigenvectors and a Courant-Fischer report.
    Spectrum(Common),
    /// Critical points by deflated Newton from eigenspace multistarts.
    Solve(Common),
    /// First eigenvalue against s, with the local form as reference.
    SweepS {
        #[command(flatten)]
        common: Common,
        /// Comma separated fractional orders; replaces `s_list`.
        #[arg(long, value_delimiter = ',')]
        s_list: Option<Vec<f64>>,
    },
    /// Nonlinearity, eigensolver and assembly checks.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Run config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative paths are taken under $FRACMAG_OUTPUT_ROOT when set.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    reproducible: bool,
    /// Absolute β∞; replaces the problem block's setting.
    #[arg(long)]
    beta_inf: Option<f64>,
}

impl Common {
    fn load(&self, s_list: Option<Vec<f64>>) -> Result<RunConfig, CliError> {
        let o = Overrides {
            resolution: self.resolution,
            s: self.s,
            m_max: self.m_max,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            reproducible: self.reproducible,
            beta_inf: self.beta_inf,
            s_list,
        };
        RunConfig::load(&self.config, &o)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let summary = match cli.command {
        Command::Spectrum(c) => commands::spectrum(&c.load(None)?)?,
        Command::Solve(c) => commands::solve(&c.load(None)?)?,
        Command::SweepS { common, s_list } => commands::sweep_s(&common.load(s_list)?)?,
        Command::Validate(c) => {
            let (report, passed) = commands::validate(&c.load(None)?)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            if !passed {
                return Err(CliError::Validation("one or more checks failed".into()));
            }
            return Ok(());
        }
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let err = json!({ "error": e.kind(), "message": e.message(), "exit_code": e.code() });
            eprintln!("{err}");
            ExitCode::from(e.code())
        }
    }
}
