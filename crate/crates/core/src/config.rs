//! One JSON document configuring every stage, with a SHA-256 fingerprint
//! of its canonical serialization.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::harness::EvaluationConfig;
use crate::preprocess::PreprocessConfig;
use crate::signal::population::PopulationSpec;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub seed: u64,
    /// Worker threads for generation, preprocessing, extraction and
    /// per-target evaluation; 0 uses every core. Training itself is serial.
    pub threads: usize,
    pub population: PopulationSpec,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub evaluation: EvaluationConfig,
    /// Write SVG charts next to the CSV reports.
    pub svg: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            threads: 0,
            population: PopulationSpec::default(),
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
            evaluation: EvaluationConfig::default(),
            svg: true,
        }
    }
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Re-root an error raised by a sub-config so it names the full key path.
fn nest(prefix: &str, e: Error) -> Error {
    match e {
        Error::Config { path, message } => {
            let tail = path.split_once('.').map_or(path.as_str(), |(_, t)| t).to_string();
            config_error(&format!("{prefix}.{tail}"), message)
        }
        Error::InvalidSchedule(m) => config_error(&format!("{prefix}.pruning"), m),
        other => config_error(prefix, other.to_string()),
    }
}

impl PipelineConfig {
    /// Parse JSON; unknown keys and type errors are reported with the
    /// offending key path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(config_error(
                "version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.version),
            ));
        }
        let ev = &self.evaluation;
        ev.network.validate().map_err(|e| nest("evaluation.network", e))?;
        ev.pruning.validate().map_err(|e| nest("evaluation", e))?;
        for (key, t) in [("evaluation.general", &ev.general), ("evaluation.fine_tune", &ev.fine_tune)] {
            if t.batch_size == 0 {
                return Err(config_error(&format!("{key}.batch_size"), "must be positive"));
            }
            if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
                return Err(config_error(&format!("{key}.learning_rate"), "must be positive"));
            }
        }
        if !(ev.target_minutes >= 0.0 && ev.target_minutes.is_finite()) {
            return Err(config_error("evaluation.target_minutes", "must be non-negative"));
        }
        if !(ev.gsi_epsilon >= 0.0) {
            return Err(config_error("evaluation.gsi_epsilon", "must be non-negative"));
        }
        let p = &self.population;
        if p.persons == 0 {
            return Err(config_error("population.persons", "must be positive"));
        }
        if !(p.minutes_per_person > 0.0) {
            return Err(config_error("population.minutes_per_person", "must be positive"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Hex SHA-256 of the compact JSON serialization. The thread count is
    /// left out because results do not depend on it.
    pub fn fingerprint(&self) -> String {
        let canonical = Self {
            threads: 0,
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
