//! Engine configuration from TOML with `ASKGRAPH_*` environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::BuilderConfig;

pub const BUNDLED_CONFIG: &str = include_str!("../data/askgraph.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid value {value:?} for {key}")]
    Env { key: String, value: String },
}

/// File locations and tuning knobs. Unset paths fall back to the bundled data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub dataset: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub viz_model: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub triggers: Option<PathBuf>,
    /// Year relative phrases count from; the current year when unset.
    pub reference_year: Option<i32>,
    pub session_ttl_secs: u64,
    /// Number of ranked visualization forms per answer.
    pub viz_top_n: usize,
    pub builder: BuilderConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            schema: None,
            registry: None,
            embeddings: None,
            viz_model: None,
            stopwords: None,
            triggers: None,
            reference_year: None,
            session_ttl_secs: 3600,
            viz_top_n: 3,
            builder: BuilderConfig::default(),
        }
    }
}

impl EngineConfig {
    /// The configuration shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED_CONFIG).expect("bundled config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    /// Applies overrides from the process environment.
    pub fn with_env(self) -> Result<Self, ConfigError> {
        self.with_overrides(std::env::vars())
    }

    /// Applies `ASKGRAPH_*` pairs; unrelated keys are ignored.
    pub fn with_overrides<I, K, V>(mut self, vars: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let (key, value) = (k.as_ref(), v.as_ref());
            let Some(name) = key.strip_prefix("ASKGRAPH_") else { continue };
            let bad = || ConfigError::Env { key: key.to_string(), value: value.to_string() };
            let path = || Some(PathBuf::from(value));
            match name {
                "DATASET" => self.dataset = path(),
                "SCHEMA" => self.schema = path(),
                "REGISTRY" => self.registry = path(),
                "EMBEDDINGS" => self.embeddings = path(),
                "VIZ_MODEL" => self.viz_model = path(),
                "STOPWORDS" => self.stopwords = path(),
                "TRIGGERS" => self.triggers = path(),
                "REFERENCE_YEAR" => self.reference_year = Some(value.parse().map_err(|_| bad())?),
                "SESSION_TTL_SECS" => self.session_ttl_secs = value.parse().map_err(|_| bad())?,
                "VIZ_TOP_N" => self.viz_top_n = value.parse().map_err(|_| bad())?,
                "TAU_FN" => self.builder.tau_fn = value.parse().map_err(|_| bad())?,
                "TAU_DATA" => self.builder.tau_data = value.parse().map_err(|_| bad())?,
                "BEAM_WIDTH" => self.builder.beam_width = value.parse().map_err(|_| bad())?,
                "MAX_DEPTH" => self.builder.max_depth = value.parse().map_err(|_| bad())?,
                "ANOMALY_THRESHOLD" => self.builder.anomaly_threshold = value.parse().map_err(|_| bad())?,
                "USE_EMBEDDINGS" => self.builder.use_embeddings = value.parse().map_err(|_| bad())?,
                _ => {}
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_pins_reference_year() {
        let c = EngineConfig::bundled();
        assert_eq!(c.reference_year, Some(2020));
        assert_eq!(c.builder.beam_width, 8);
        assert_eq!(c.builder.max_depth, 6);
    }

    #[test]
    fn env_overrides() {
        let c = EngineConfig::default()
            .with_overrides([("ASKGRAPH_BEAM_WIDTH", "3"), ("ASKGRAPH_REFERENCE_YEAR", "2011"), ("HOME", "/x")])
            .unwrap();
        assert_eq!(c.builder.beam_width, 3);
        assert_eq!(c.reference_year, Some(2011));
        assert!(EngineConfig::default().with_overrides([("ASKGRAPH_TAU_FN", "high")]).is_err());
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let c = EngineConfig::from_toml("[builder]\nbeam_width = 2\n").unwrap();
        assert_eq!(c.builder.beam_width, 2);
        assert_eq!(c.builder.max_depth, 6);
        assert_eq!(c.session_ttl_secs, 3600);
    }
}
