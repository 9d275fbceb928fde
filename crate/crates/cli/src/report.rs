//! Reports, their on-disk form, and the CSV projection.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use herman::exact::Arithmetic;
use herman::lemma::{QPoint, RatioScan, ScanReport};
use herman::montecarlo::Estimate;
use herman::ring::{DoubledConfig, GapTriple, RingConfig};

use crate::spec::ExperimentSpec;
use crate::CliError;

pub const TOOL_NAME: &str = "herman-cli";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The violating input (or the extremal one when passing).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, witness: Option<Value>) -> Self {
        Self {
            name: name.into(),
            passed,
            witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<Arithmetic>,
    pub spec_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueRow {
    pub config: RingConfig,
    pub value: f64,
    /// Exact rational value as `p/q`, in exact mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_at_tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub n: usize,
    pub functional: String,
    pub rows: Vec<ValueRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxSummary {
    pub n: usize,
    pub max_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_max: Option<String>,
    pub bound: f64,
    pub maximizers: Vec<RingConfig>,
    pub maximizer_gaps: Vec<GapTriple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: RingConfig,
    pub runs: u64,
    pub censored: u64,
    pub t_max: u64,
    pub estimates: Vec<Estimate>,
    /// Exact value of each functional, when the solver reaches this `N`.
    pub exact_reference: Vec<Option<f64>>,
    pub histogram: BTreeMap<u64, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionRow {
    pub n: usize,
    pub configs: usize,
    pub max_residual: f64,
    pub worst: DoubledConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionSummary {
    pub tolerance: f64,
    pub max_residual: f64,
    pub rows: Vec<RecursionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureRow {
    pub n: usize,
    pub max_value: f64,
    pub bound: f64,
    pub maximizers: Vec<RingConfig>,
    pub nearest_gaps: GapTriple,
    pub matches_nearest_class: bool,
    pub growth_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureSummary {
    pub rows: Vec<ConjectureRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QScanSummary {
    pub threshold: f64,
    pub scan: ScanReport,
    pub refined: ScanReport,
    pub refinement_change: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<QPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub threshold: f64,
    pub scan: RatioScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub config: RingConfig,
    pub t_max: u64,
    /// `P(T ≤ t)` for `t = 0..=t_max`.
    pub cdf: Vec<f64>,
}

/// Externally tagged: `{"simulation": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Values(ValueTable),
    Argmax(ArgmaxSummary),
    Simulation(SimulationSummary),
    Recursion(RecursionSummary),
    Conjecture(ConjectureSummary),
    QScan(QScanSummary),
    RatioScan(RatioSummary),
    Distribution(DistributionTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub tool_version: String,
    pub timestamp: DateTime<Utc>,
    pub payload: Payload,
    pub checks: Vec<Check>,
    pub provenance: Provenance,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Pretty JSON with object keys in sorted order.
    pub fn to_json(&self) -> Result<String, CliError> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn tool_version() -> String {
    format!("{TOOL_NAME} {}", env!("CARGO_PKG_VERSION"))
}

/// Default report directory: `$HERMAN_REPORT_DIR` or `./reports`.
pub fn report_dir() -> PathBuf {
    std::env::var_os("HERMAN_REPORT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("reports"))
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory. An existing file is replaced only when `force` is set.
pub fn write_atomic(path: &Path, contents: &[u8], force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Exists(path.to_path_buf()));
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn tokens_key(config: &RingConfig) -> String {
    config
        .tokens()
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// CSV projection of a tabular payload: key columns first, then values,
/// floats at 17 significant digits.
pub fn render_csv(report: &Report) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match &report.payload {
        Payload::Values(table) => {
            let has_exact = table.rows.iter().any(|r| r.exact.is_some());
            let has_tau = table.rows.iter().any(|r| r.psi_at_tau.is_some());
            let mut header = vec!["n", "tokens", "value"];
            if has_exact {
                header.push("exact");
            }
            if has_tau {
                header.extend(["psi_at_tau", "slack"]);
            }
            w.write_record(&header)?;
            for row in &table.rows {
                let mut rec = vec![table.n.to_string(), tokens_key(&row.config), float(row.value)];
                if has_exact {
                    rec.push(row.exact.clone().unwrap_or_default());
                }
                if has_tau {
                    rec.push(row.psi_at_tau.map(float).unwrap_or_default());
                    rec.push(row.slack.map(float).unwrap_or_default());
                }
                w.write_record(&rec)?;
            }
        }
        Payload::Distribution(d) => {
            w.write_record(["t", "P(T<=t)"])?;
            for (t, p) in d.cdf.iter().enumerate() {
                w.write_record([t.to_string(), float(*p)])?;
            }
        }
        Payload::QScan(QScanSummary {
            samples: Some(samples), ..
        }) => {
            w.write_record(["u", "v", "Q"])?;
            for p in samples {
                w.write_record([float(p.u), float(p.v), p.q.map(float).unwrap_or_default()])?;
            }
        }
        Payload::Simulation(s) => {
            w.write_record(["t", "count"])?;
            for (t, c) in &s.histogram {
                w.write_record([t.to_string(), c.to_string()])?;
            }
        }
        Payload::Conjecture(c) => {
            w.write_record(["n", "max_value", "bound", "growth_max", "matches_nearest_class"])?;
            for r in &c.rows {
                w.write_record([
                    r.n.to_string(),
                    float(r.max_value),
                    float(r.bound),
                    float(r.growth_max),
                    r.matches_nearest_class.to_string(),
                ])?;
            }
        }
        Payload::Recursion(r) => {
            w.write_record(["n", "configs", "max_residual"])?;
            for row in &r.rows {
                w.write_record([row.n.to_string(), row.configs.to_string(), float(row.max_residual)])?;
            }
        }
        Payload::QScan(_) | Payload::Argmax(_) | Payload::RatioScan(_) => {
            return Err(CliError::Unsupported(format!(
                "{} payload has no tabular form",
                report.spec.command.name()
            )))
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
