//! Experiment configuration: JSON in, validated, echoed into the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mather_core::model::TrigPotential;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A single JSON configuration format; no environment variables take part,
/// so the manifest echo is the complete record of a run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scenario name (informational; the CLI subcommand decides what runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    /// Path to a potential JSON file `{"d": .., "modes": [..]}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<f64>>,
    /// Grid nodes per dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar_list: Option<Vec<f64>>,
    /// DP horizon for value tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// Number of random systems for the identity scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Largest orbit length for the identity scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Orbit length for the growth-rate scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Named tolerance overrides for in-run assertions.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = &self.potential {
            if !p.exists() {
                return Err(CliError::Config(format!(
                    "potential file {} does not exist",
                    p.display()
                )));
            }
        }
        for (name, list) in [
            ("beta_list", self.beta_list.as_deref()),
            ("hbar_list", self.hbar_list.as_deref()),
        ] {
            if let Some(l) = list {
                if l.is_empty() {
                    return Err(CliError::Config(format!("{name} must be nonempty")));
                }
                if l.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                    return Err(CliError::Config(format!(
                        "{name} entries must be positive"
                    )));
                }
            }
        }
        if let Some(w) = &self.omega {
            if w.is_empty() || w.len() > 2 || w.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config(
                    "omega must be a finite 1- or 2-vector".into(),
                ));
            }
        }
        Ok(())
    }

    /// Read the referenced potential, or fall back to the given default.
    pub fn potential_or(&self, default: TrigPotential) -> Result<TrigPotential, CliError> {
        match &self.potential {
            None => Ok(default),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                TrigPotential::from_json(&text)
                    .map_err(|e| CliError::Config(format!("bad potential {}: {e}", p.display())))
            }
        }
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}
