//! Batch front end for `liouville-core`.
//!
//! Each command reads a problem file, runs one computation and prints a
//! machine-readable report. Exit codes are stable across commands:
//!
//! | code | meaning                                  |
//! |------|------------------------------------------|
//! | 0    | success                                  |
//! | 1    | invalid input or precondition failure    |
//! | 2    | ρ lies exactly on a critical curve       |
//! | 3    | the solver did not converge              |

pub mod commands;
pub mod output;
pub mod spec;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use liouville_core::degree::DegreeError;
use liouville_core::exact::{self, Rational};
use liouville_core::solver::SolveError;

pub use commands::{
    cmd_classify, cmd_degree, cmd_solve, cmd_spectrum, cmd_sweep, cmd_symmetrize, Report,
};
pub use spec::{ProblemSpec, SpecError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("rho lies on the critical curve Gamma_{k} (n = {})", exact::Display(.n))]
    OnCriticalSet { k: usize, n: Rational },
    #[error(transparent)]
    Degree(DegreeError),
    #[error("solver did not converge: residual {residual:e} after {steps} steps")]
    NonConvergence { residual: f64, steps: usize },
    #[error(transparent)]
    Solve(SolveError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
    message: String,
}

impl CliError {
    pub fn from_solve(e: SolveError) -> Self {
        match e {
            SolveError::Degree(DegreeError::OnCriticalSet { k, n }) => CliError::OnCriticalSet { k, n },
            SolveError::Degree(d) => CliError::Degree(d),
            SolveError::NonConvergence { residual, history, .. } => CliError::NonConvergence {
                residual,
                steps: history.len().saturating_sub(1),
            },
            other => CliError::Solve(other),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::OnCriticalSet { .. } => 2,
            CliError::NonConvergence { .. } => 3,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &str {
        match self {
            CliError::Spec(e) => e.kind,
            CliError::OnCriticalSet { .. } => "OnCriticalSet",
            CliError::Degree(DegreeError::Coupling(_)) => "Coupling",
            CliError::Degree(DegreeError::Profile(_)) => "InvalidProfile",
            CliError::Degree(DegreeError::NonPositiveCutoff(_)) => "InvalidCutoff",
            CliError::Degree(_) => "Precondition",
            CliError::NonConvergence { .. } => "NonConvergence",
            CliError::Solve(_) => "SolverError",
            CliError::Io { .. } => "Io",
        }
    }

    /// The error as a one-object JSON document.
    pub fn json(&self) -> String {
        let report = ErrorReport {
            kind: self.kind(),
            k: match self {
                CliError::OnCriticalSet { k, .. } => Some(*k),
                _ => None,
            },
            n: match self {
                CliError::OnCriticalSet { n, .. } => Some(exact::format_rational(n)),
                _ => None,
            },
            field: match self {
                CliError::Spec(e) => Some(e.field.as_str()),
                _ => None,
            },
            message: self.to_string(),
        };
        let mut s = serde_json::to_string(&report).expect("errors serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "liouville", version, about = "Degree counting and torus solver for 2x2 singular Liouville systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Problem file (TOML or JSON)
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Spectrum cutoff, an exact rational such as 7/2
    #[arg(long, global = true)]
    pub cutoff: Option<String>,
    /// Grid points per axis for the solver
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; sweeps default to csv, everything else to json
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Run sweep steps independently and in parallel
    #[arg(long, global = true)]
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Region and Leray-Schauder degree at rho
    Degree,
    /// Critical values, series coefficients and partial sums up to a cutoff
    Spectrum,
    /// Locate rho between consecutive critical curves
    Classify,
    /// Solve the regularized system on the torus
    Solve {
        /// Also write u1, u2 and the reconstructed fields as CSV into this directory
        #[arg(long)]
        fields: Option<PathBuf>,
    },
    /// Solve along the straight path given in the spec's [sweep] table
    Sweep,
    /// Symmetrized coefficients and the shift of the first component
    Symmetrize,
}

fn render(report: &dyn Report, format: Format) -> String {
    match format {
        Format::Json => report.json(),
        Format::Csv => report.csv(),
    }
}

/// Runs one command and returns the rendered report.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let path = cli.spec.as_ref().ok_or_else(|| SpecError {
        field: "--spec".into(),
        message: "a problem file is required".into(),
        kind: "InvalidSpec",
    })?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec = ProblemSpec::parse(&text)?;
    let format = cli.format.unwrap_or(Format::Json);
    let rendered = match &cli.command {
        Command::Degree => render(&cmd_degree(&spec)?, format),
        Command::Spectrum => render(&cmd_spectrum(&spec, cli.cutoff.as_deref())?, format),
        Command::Classify => render(&cmd_classify(&spec)?, format),
        Command::Symmetrize => render(&cmd_symmetrize(&spec)?, format),
        Command::Solve { fields } => {
            let out = cmd_solve(&spec, cli.grid)?;
            if let Some(dir) = fields {
                out.write_fields(dir)?;
            }
            render(&out, format)
        }
        Command::Sweep => {
            let out = cmd_sweep(&spec, cli.grid, cli.parallel)?;
            render(&out, cli.format.unwrap_or(Format::Csv))
        }
    };
    Ok(rendered)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        let critical = CliError::OnCriticalSet {
            k: 1,
            n: exact::int(2),
        };
        assert_eq!(critical.exit_code(), 2);
        assert_eq!(
            critical.json(),
            "{\"kind\":\"OnCriticalSet\",\"k\":1,\"n\":\"2\",\"message\":\"rho lies on the critical curve Gamma_1 (n = 2)\"}\n"
        );
        let stalled = CliError::NonConvergence {
            residual: 1.0,
            steps: 3,
        };
        assert_eq!(stalled.exit_code(), 3);
        let bad = CliError::Spec(SpecError {
            field: "rho".into(),
            message: "x".into(),
            kind: "InvalidRho",
        });
        assert_eq!(bad.exit_code(), 1);
        assert!(bad.json().contains("\"field\":\"rho\""));
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "liouville", "spectrum", "--spec", "p.toml", "--cutoff", "7/2", "--format", "csv",
        ])
        .unwrap();
        assert_eq!(cli.command, Command::Spectrum);
        assert_eq!(cli.cutoff.as_deref(), Some("7/2"));
        assert_eq!(cli.format, Some(Format::Csv));
        let cli = Cli::try_parse_from(["liouville", "solve", "--fields", "out", "--grid", "64"]).unwrap();
        assert_eq!(cli.grid, Some(64));
        assert!(matches!(cli.command, Command::Solve { fields: Some(_) }));
    }
}
