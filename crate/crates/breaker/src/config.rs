//! JSON experiment configuration shared by every subcommand.

use std::fs;
use std::path::Path;

use breaker_core::data::SyntheticConfig;
use breaker_core::eval::EvalOptions;
use breaker_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Evaluate ranking metrics on the test split after every epoch.
    pub per_epoch: bool,
    /// Compute silhouette, ARI and tower correlation in reports.
    pub representation: bool,
    pub silhouette_cap: usize,
    /// Users written by `export-reps`.
    pub export_cap: usize,
    pub seed: u64,
    /// Fill the `seconds` column of the epoch log. Off by default so that
    /// logs are reproducible byte for byte.
    pub timing: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            per_epoch: true,
            representation: true,
            silhouette_cap: 3000,
            export_cap: 3000,
            seed: 0,
            timing: false,
        }
    }
}

impl EvalConfig {
    pub fn options(&self) -> EvalOptions {
        EvalOptions {
            silhouette_cap: self.silhouette_cap,
            seed: self.seed,
            representation: self.representation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.silhouette_cap == 0 || self.export_cap == 0 {
            return Err(Error::Config("eval caps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub data: Option<SyntheticConfig>,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: CliConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(d) = &cfg.data {
            d.validate()?;
        }
        cfg.train.validate()?;
        cfg.eval.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
