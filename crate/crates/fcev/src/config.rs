//! The versioned JSON run configuration.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "model": {"sigma": 0.2, "beta": 1.0, "hurst": 0.75, "mu": 0.05,
//!             "r": 0.05, "delta": 0.02, "x0": 100.0},
//!   "contracts": [{"strike": 100.0, "maturity": 1.0}],
//!   "engine": "series"
//! }
//! ```
//!
//! Every other section is optional and falls back to the engine defaults.

use std::path::{Path, PathBuf};

use fcev_core::engine::EngineConfigs;
use fcev_core::{ContractSpec, Engine, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// The only schema version this build reads.
pub const SCHEMA_VERSION: u32 = 1;

/// Report file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// Comma separated values.
    #[default]
    Csv,
    /// A single JSON document.
    Json,
}

/// Where reports go.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Report file; stdout when absent.
    pub path: Option<PathBuf>,
    /// Report format.
    pub format: Format,
    /// Optional finite-difference surface dump `(t, X, P)` for `price` with the PDE engine.
    pub surface: Option<PathBuf>,
}

/// Strike grid for `skew`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkewConfig {
    /// Strikes; empty means `0.80 X0, 0.85 X0, ..., 1.20 X0`.
    pub strikes: Vec<f64>,
}

/// Which process `paths` simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// The transformed square-root state `Y = X^{2 - beta}` under the pricing measure.
    #[default]
    Transformed,
    /// Real-world stock paths through the explicit solution and the Gaussian driver.
    Stock,
    /// The Gaussian driver `int_0^t h dB^H` itself.
    Driver,
}

/// Settings for `paths`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Process to simulate.
    pub mode: PathMode,
    /// Time grid for the Gaussian modes; empty means `n_steps` even steps over `[0, T]`.
    pub times: Vec<f64>,
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Model constants.
    pub model: ModelParams,
    /// Contracts to price; the first one drives `skew` and `paths`.
    #[serde(alias = "contract", deserialize_with = "one_or_many")]
    pub contracts: Vec<ContractSpec>,
    /// Engine for `price` and `skew`.
    #[serde(default = "default_engine")]
    pub engine: Engine,
    /// Per-engine settings.
    #[serde(default)]
    pub engines: EngineConfigs,
    /// Strike grid for `skew`.
    #[serde(default)]
    pub skew: SkewConfig,
    /// Settings for `paths`.
    #[serde(default)]
    pub paths: PathsConfig,
    /// Report destination.
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_engine() -> Engine {
    Engine::Series
}

fn one_or_many<'de, D>(de: D) -> Result<Vec<ContractSpec>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(ContractSpec),
        Many(Vec<ContractSpec>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(c) => vec![c],
        OneOrMany::Many(v) => v,
    })
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// `--engine`
    pub engine: Option<Engine>,
    /// `--out`
    pub out: Option<PathBuf>,
    /// `--format`
    pub format: Option<Format>,
    /// `--seed`
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        // check the version first so old files get a clear message
        let raw: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
        match raw.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(CliError::config(format!(
                    "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(CliError::config("missing integer field schema_version")),
        }
        let cfg: RunConfig = serde_json::from_value(raw)
            .map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every module-level invariant.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.contracts.is_empty() {
            return Err(CliError::config("at least one contract is required"));
        }
        for c in &self.contracts {
            fcev_core::model::validate(&self.model, c).map_err(CliError::config)?;
        }
        self.engines.validate().map_err(CliError::config)?;
        if self
            .skew
            .strikes
            .iter()
            .any(|k| !(k.is_finite() && *k >= 0.0))
        {
            return Err(CliError::config("skew strikes must be finite and >= 0"));
        }
        let t = &self.paths.times;
        if !t.is_empty() && (t[0] < 0.0 || t.windows(2).any(|w| !(w[1] > w[0]))) {
            return Err(CliError::config(
                "paths.times must be strictly increasing and start at t >= 0",
            ));
        }
        Ok(())
    }

    /// Applies command-line overrides and revalidates.
    pub fn apply(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(e) = o.engine {
            self.engine = e;
        }
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(s) = o.seed {
            self.engines.mc.seed = s;
        }
        self.validate()?;
        Ok(self)
    }

    /// Strikes for `skew`.
    pub fn skew_strikes(&self) -> Vec<f64> {
        if self.skew.strikes.is_empty() {
            (0..9)
                .map(|i| self.model.x0 * (0.80 + 0.05 * i as f64))
                .collect()
        } else {
            self.skew.strikes.clone()
        }
    }

    /// Time grid for the Gaussian path modes.
    pub fn gaussian_times(&self) -> Vec<f64> {
        if !self.paths.times.is_empty() {
            return self.paths.times.clone();
        }
        let n = self.engines.mc.n_steps;
        let t_end = self.contracts[0].maturity;
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }
}
