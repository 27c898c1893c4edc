use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complexity::{DomainSpec, Growth, OptimizerOptions};
use crate::correlator::{Correlator, CorrelatorRegistry};
use crate::error::{Error, Result};
use crate::kacrice::{CensusOptions, KacRiceOptions};
use crate::numeric::logspace;

/// One run of the command-line tool. Unknown keys are rejected and every
/// default is written back into the echoed copy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `{"kind": ..., parameters...}`
    pub correlator: Value,
    #[serde(default)]
    pub mu: MuSpec,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    #[serde(default)]
    pub validity: ValidityConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub kacrice: KacRiceConfig,
    #[serde(default)]
    pub census: CensusConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_solver() -> String {
    "variational".into()
}

/// A single `mu` or a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    One(f64),
    Sweep(Vec<f64>),
}

impl Default for MuSpec {
    fn default() -> Self {
        MuSpec::One(1.0)
    }
}

impl MuSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            MuSpec::One(m) => vec![*m],
            MuSpec::Sweep(v) => v.clone(),
        }
    }
}

/// Shell radii and energy window; `null` stands for an infinite bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub r1: f64,
    pub r2: Option<f64>,
    pub energy: [Option<f64>; 2],
    pub growth: Option<Growth>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { r1: 0.0, r2: None, energy: [None, None], growth: None }
    }
}

impl DomainConfig {
    pub fn spec(&self) -> DomainSpec {
        DomainSpec {
            r1: self.r1,
            r2: self.r2.unwrap_or(f64::INFINITY),
            e_lo: self.energy[0].unwrap_or(f64::NEG_INFINITY),
            e_hi: self.energy[1].unwrap_or(f64::INFINITY),
            growth: self.growth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidityConfig {
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub points: usize,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        Self { grid_lo: 1e-4, grid_hi: 1e4, points: 64 }
    }
}

impl ValidityConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.grid_lo > 0.0 && self.grid_hi > self.grid_lo && self.points >= 2) {
            return Err(Error::Config("validity grid needs 0 < grid_lo < grid_hi and points >= 2".into()));
        }
        Ok(logspace(self.grid_lo, self.grid_hi, self.points))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Hessian size for the moment and Schur checks.
    pub n: usize,
    pub rho: f64,
    pub u: f64,
    pub covariance_samples: usize,
    /// Pass threshold in standard errors.
    pub covariance_z: f64,
    pub schur_draws: usize,
    pub schur_tol: f64,
    /// Dimensions of the Kac–Rice convergence study; empty to skip it.
    pub sweep: Vec<usize>,
    /// Largest accepted gap at the largest swept dimension.
    pub sweep_gap: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: 6,
            rho: 1.0,
            u: 0.0,
            covariance_samples: 1_000_000,
            covariance_z: 4.0,
            schur_draws: 10_000,
            schur_tol: 1e-8,
            sweep: vec![],
            sweep_gap: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KacRiceConfig {
    pub dims: Vec<usize>,
    pub options: KacRiceOptions,
}

impl Default for KacRiceConfig {
    fn default() -> Self {
        Self { dims: vec![2], options: KacRiceOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CensusConfig {
    pub dim: usize,
    pub fields: usize,
    pub features: usize,
    pub options: CensusOptions,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self { dim: 2, fields: 400, features: 4096, options: CensusOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Format,
}

/// A parsed config together with its correlator.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub correlator: Correlator,
}

impl Resolved {
    /// Parses and checks `text`; every failure is a [`Error::Config`].
    pub fn from_json(text: &str) -> Result<Self> {
        let mut config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        let correlator = CorrelatorRegistry::builtin().build(&config.correlator).map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        config.correlator = correlator.to_config();
        config.validity.grid()?;
        if config.mu.values().is_empty() {
            return Err(Error::Config("mu sweep is empty".into()));
        }
        if config.mu.values().iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("mu values must be finite".into()));
        }
        Ok(Self { config, correlator })
    }

    /// The config with all defaults filled in.
    pub fn echo(&self) -> Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }
}
