//! Experiment specifications: what to run and with which parameters.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use herman::exact::{default_horizon, Arithmetic};
use herman::lemma::{DEFAULT_DELTA, LEMMA_CONSTANT};
use herman::ring::{GapTriple, RingConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Exact,
    Simulate,
    VerifyRecursion,
    VerifyConjecture,
    ScanQ,
    ScanRatio,
    Distribution,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Simulate => "simulate",
            Command::VerifyRecursion => "verify-recursion",
            Command::VerifyConjecture => "verify-conjecture",
            Command::ScanQ => "scan-q",
            Command::ScanRatio => "scan-ratio",
            Command::Distribution => "distribution",
        }
    }
}

/// Which expectation `exact` solves for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum FunctionalKind {
    /// `E(T)`.
    #[value(alias = "ET")]
    Et,
    /// `E(a^T)` with `a = 1/(1 - ε)`.
    Growth,
    /// `E(a^T)` with `a` from `--base`.
    Base,
    /// `E(τ)` and `E(Ψ(X_τ))`.
    Tau,
}

/// A fully specified run. Unset optional fields take command defaults in
/// [`ExperimentSpec::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalKind>,
    #[serde(default)]
    pub argmax: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<u64>,
    #[serde(default = "default_arithmetic")]
    pub arithmetic: Arithmetic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Output path; not part of the spec hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Also write the CSV projection; not part of the spec hash.
    #[serde(default)]
    pub csv: bool,
}

fn default_arithmetic() -> Arithmetic {
    Arithmetic::Float
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ExperimentSpec {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            n: None,
            n_max: None,
            config: None,
            functional: None,
            argmax: false,
            runs: None,
            seed: None,
            base: None,
            step: None,
            sample_step: None,
            delta: None,
            t_max: None,
            arithmetic: Arithmetic::Float,
            threshold: None,
            tolerance: None,
            out: None,
            csv: false,
        }
    }

    /// Builds the configuration from `--tokens` or `--gaps` and reconciles it
    /// with `--n`. Gap triples become a configuration starting at node 1.
    pub fn with_config_input(
        mut self,
        tokens: Option<Vec<usize>>,
        gaps: Option<Vec<usize>>,
    ) -> Result<Self, CliError> {
        let config = match (tokens, gaps) {
            (Some(_), Some(_)) => return Err(usage("--tokens and --gaps are mutually exclusive")),
            (Some(tokens), None) => {
                let n = self.n.ok_or_else(|| usage("--tokens needs --n"))?;
                Some(RingConfig::new(n, tokens)?)
            }
            (None, Some(g)) => {
                let [a, b, c] = g[..] else {
                    return Err(usage(format!("--gaps needs three values, got {}", g.len())));
                };
                Some(GapTriple::new(a, b, c)?.to_config())
            }
            (None, None) => None,
        };
        if let Some(config) = &config {
            match self.n {
                Some(n) if n != config.n() => {
                    return Err(usage(format!("--n {n} disagrees with a configuration on {} nodes", config.n())))
                }
                _ => self.n = Some(config.n()),
            }
        }
        self.config = config;
        Ok(self)
    }

    fn require_n(&self) -> Result<usize, CliError> {
        let n = self.n.ok_or_else(|| usage(format!("{} needs --n", self.command.name())))?;
        if n < 3 {
            return Err(usage(format!("N must be at least 3, got {n}")));
        }
        Ok(n)
    }

    /// Fills command defaults and checks that the parameters fit the command.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(usage(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("--step", self.step)?;
        positive("--sample-step", self.sample_step)?;
        positive("--base", self.base)?;
        positive("--tolerance", self.tolerance)?;
        if let Some(d) = self.delta {
            if !(d.is_finite() && d >= 0.0) {
                return Err(usage(format!("--delta must be nonnegative, got {d}")));
            }
        }
        match self.command {
            Command::Exact => {
                self.require_n()?;
                let functional = *self.functional.get_or_insert(FunctionalKind::Et);
                if functional == FunctionalKind::Base && self.base.is_none() {
                    return Err(usage("--functional base needs --base"));
                }
                if self.argmax && functional != FunctionalKind::Et {
                    return Err(usage("--argmax applies to the E(T) functional only"));
                }
                if functional == FunctionalKind::Tau && self.arithmetic == Arithmetic::Exact {
                    return Err(usage("the tau functionals are solved in floating point only"));
                }
                if self.config.is_some() && self.argmax {
                    return Err(usage("--argmax scans every configuration; drop --tokens/--gaps"));
                }
            }
            Command::Simulate => {
                let n = self.require_n()?;
                if self.config.is_none() {
                    self.config = Some(RingConfig::equidistant(n)?);
                }
                self.runs.get_or_insert(100_000);
                self.seed.get_or_insert(0);
                self.t_max.get_or_insert(default_horizon(n));
                if self.runs == Some(0) {
                    return Err(usage("--runs must be at least 1"));
                }
            }
            Command::Distribution => {
                let n = self.require_n()?;
                if self.config.is_none() {
                    self.config = Some(RingConfig::equidistant(n)?);
                }
                self.t_max.get_or_insert(default_horizon(n));
            }
            Command::VerifyRecursion => {
                self.n.get_or_insert(3);
                self.n_max.get_or_insert(8);
                self.tolerance.get_or_insert(1e-10);
                self.check_range()?;
            }
            Command::VerifyConjecture => {
                self.n.get_or_insert(5);
                self.n_max.get_or_insert(10);
                self.check_range()?;
            }
            Command::ScanQ => {
                self.step.get_or_insert(1.0 / 1200.0);
                self.delta.get_or_insert(DEFAULT_DELTA);
                self.threshold.get_or_insert(LEMMA_CONSTANT);
                if self.csv {
                    self.sample_step.get_or_insert(1.0 / 120.0);
                }
            }
            Command::ScanRatio => {
                self.n.get_or_insert(3);
                self.n_max.get_or_insert(200);
                self.threshold.get_or_insert(LEMMA_CONSTANT);
                self.check_range()?;
            }
        }
        Ok(self)
    }

    fn check_range(&self) -> Result<(), CliError> {
        let (lo, hi) = (self.n.unwrap_or(3), self.n_max.unwrap_or(3));
        if lo < 3 || hi < lo {
            return Err(usage(format!("need 3 <= --n <= --n-max, got {lo}..={hi}")));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of the spec, without output options.
    pub fn digest(&self) -> String {
        let mut hashed = self.clone();
        hashed.out = None;
        hashed.csv = false;
        let value = serde_json::to_value(&hashed).expect("spec serializes");
        let bytes = serde_json::to_vec(&value).expect("value serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `<command>-<first 12 hex digits of the digest>.json`
    pub fn default_file_name(&self) -> String {
        format!("{}-{}.json", self.command.name(), &self.digest()[..12])
    }
}
