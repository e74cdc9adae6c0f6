//! Versioned TOML configuration. Every section and field is optional and
//! falls back to the library defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tlnn::learner::TrainConfig;
use tlnn::signals::{PreprocessConfig, SplitConfig, SynthConfig};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    /// Seed of synthesis and of the one-vs-rest split.
    pub seed: u64,
    pub synth: SynthConfig,
    pub split: SplitConfig,
    pub preprocess: PreprocessConfig,
    pub train: TrainConfig<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            synth: SynthConfig::default(),
            split: SplitConfig::default(),
            preprocess: PreprocessConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::from_toml(&text).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                    other => other,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn default_round_trips() {
        let cfg = Config::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn shipped_default_file_matches() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
        assert_eq!(Config::load(Some(Path::new(path))).unwrap(), Config::default());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg = Config::from_toml("seed = 4\n[train]\nepochs = 3\n[train.network]\nhidden = 4\n").unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.network.hidden, 4);
        assert_eq!(cfg.train.learning_rate, TrainConfig::<f64>::default().learning_rate);
    }

    #[test]
    fn version_and_unknown_keys_are_rejected() {
        assert!(Config::from_toml("version = 2").is_err());
        assert!(Config::from_toml("epochs = 3").is_err());
    }
}
