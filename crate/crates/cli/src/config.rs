//! JSON configuration: the four model scalars plus optional defaults.

use std::path::Path;

use mmm_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::grid::GridSpec;

/// The reference calibration shipped as `fixtures/sp500_2009-01-27.json`.
pub const REFERENCE_FIXTURE: &str = include_str!("../../../fixtures/sp500_2009-01-27.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "S")]
    pub spot: f64,
    #[serde(rename = "r")]
    pub rate: f64,
    pub alpha: f64,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Defaults::is_empty")]
    pub defaults: Defaults,
}

/// Optional defaults for commands that take grids or path counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strikes: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expiries: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Defaults {
    fn is_empty(&self) -> bool {
        *self == Defaults::default()
    }
}

impl Config {
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_FIXTURE).expect("reference fixture is valid")
    }

    /// Parses and validates a configuration.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Config = serde_json::from_str(text).map_err(CliError::Config)?;
        config.params()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        Ok(ModelParams::new(
            self.spot, self.rate, self.alpha, self.eta,
        )?)
    }

    pub fn with_overrides(
        mut self,
        spot: Option<f64>,
        rate: Option<f64>,
        alpha: Option<f64>,
        eta: Option<f64>,
    ) -> Result<Self, CliError> {
        self.spot = spot.unwrap_or(self.spot);
        self.rate = rate.unwrap_or(self.rate);
        self.alpha = alpha.unwrap_or(self.alpha);
        self.eta = eta.unwrap_or(self.eta);
        self.params()?;
        Ok(self)
    }
}
