//! Command-line driver for the `herman` crate.
//!
//! An [`ExperimentSpec`] names a command and its parameters. [`execute`]
//! runs it and returns a [`Report`]; [`run`] additionally persists the
//! report as JSON (and optionally its CSV projection).

mod commands;
pub mod report;
pub mod spec;

use std::path::PathBuf;

use chrono::Utc;

pub use report::{render_csv, Check, Payload, Report};
pub use spec::{Command, ExperimentSpec, FunctionalKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] herman::Error),
    #[error("{} exists; pass --force to overwrite", .0.display())]
    Exists(PathBuf),
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// `2` for bad input, `3` for exhausted resources.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(herman::Error::Capacity { .. })
            | CliError::Core(herman::Error::Singular { .. })
            | CliError::Core(herman::Error::AllCensored { .. }) => 3,
            _ => 2,
        }
    }
}

/// Exit status for a finished run: `0` when every check passed, else `1`.
pub fn exit_code(report: &Report) -> i32 {
    if report.passed() {
        0
    } else {
        1
    }
}

/// Resolves the spec and runs it without touching the filesystem.
pub fn execute(spec: ExperimentSpec) -> Result<Report, CliError> {
    let spec = spec.resolve()?;
    let (payload, checks) = commands::dispatch(&spec)?;
    let provenance = report::Provenance {
        seed: spec.seed,
        arithmetic: matches!(spec.command, spec::Command::Exact | spec::Command::VerifyConjecture)
            .then_some(spec.arithmetic),
        spec_digest: spec.digest(),
    };
    Ok(Report {
        spec,
        tool_version: report::tool_version(),
        timestamp: Utc::now(),
        payload,
        checks,
        provenance,
    })
}

/// Where the report for `spec` goes: `--out`, or the default directory with
/// a spec-derived file name.
pub fn report_path(spec: &ExperimentSpec) -> PathBuf {
    spec.out
        .clone()
        .unwrap_or_else(|| report::report_dir().join(spec.default_file_name()))
}

/// Runs the spec and writes the report. Returns the report and its path.
pub fn run(spec: ExperimentSpec, force: bool) -> Result<(Report, PathBuf), CliError> {
    let resolved = spec.resolve()?;
    let path = report_path(&resolved);
    if path.exists() && !force {
        return Err(CliError::Exists(path));
    }
    let report = execute(resolved)?;
    let csv = if report.spec.csv { Some(render_csv(&report)?) } else { None };
    report::write_atomic(&path, report.to_json()?.as_bytes(), force)?;
    if let Some(csv) = csv {
        report::write_atomic(&path.with_extension("csv"), csv.as_bytes(), force)?;
    }
    Ok((report, path))
}
