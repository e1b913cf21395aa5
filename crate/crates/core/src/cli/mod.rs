//! Command-line surface: scenario files in, reports out.
//!
//! Exit status is 0 when every check passes, 1 on a property failure or a
//! mechanism error, and 2 on unusable input.

mod commands;
mod generate;
mod report;
mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::mechanism::MechanismError;
use crate::model::Issue;

pub use commands::{cmd_price, cmd_solve, cmd_verify, property_suite, RunSettings, SuiteResult};
pub use generate::{generate_corpus, generate_instance, CorpusConfig, GeneratorConfig};
pub use report::{InputSummary, OutcomeDigest, RunReport, SettingsSummary, TablesSummary, Timing};
pub use scenario::{
    emit_scenario, parse_scenario, parse_scenario_str, Decimal, LoadedScenario, ScenarioFile, ServiceEntry,
    TravelerEntry,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {location}: {message}", path.display())]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },
    #[error("{}: invalid instance:\n{}", path.display(), list(issues))]
    Invalid { path: PathBuf, issues: Vec<Issue> },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

fn list(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mechanism(_) => EXIT_FAILURE,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(
    name = "mobility-equity",
    version,
    about = "Worst-case revenue assignment and pricing of mobility services"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Tolerance for every solver and check, relative to the instance's
    /// largest datum (overrides the scenario file).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include wall-clock timings (makes reports non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the offline stage and print the worst case, nominal assignment,
    /// reservation payments and gamma.
    Solve { scenario: PathBuf },
    /// Price one scenario of the file as the reported profile.
    Price {
        scenario: PathBuf,
        /// Index of the scenario to price.
        #[arg(long)]
        realized: usize,
    },
    /// Check every property over all scenarios and misreports.
    Verify {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Files verified in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Multiply every payment by this factor before checking (for
        /// exercising the checks).
        #[arg(long, default_value_t = 1.0)]
        payment_scale: f64,
    },
    /// Write a seeded random scenario file.
    Gen {
        #[arg(long)]
        travelers: usize,
        #[arg(long)]
        services: usize,
        #[arg(long)]
        scenarios: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with value ranges.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
    },
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit status. Reports go to `stdout` (or `--out`), diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match commands::dispatch(&cli, stderr) {
        Ok((text, code)) => match emit(&cli, &text, stdout) {
            Ok(()) => code,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(cli: &Cli, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}
