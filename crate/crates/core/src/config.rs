//! Tool configuration: provider settings, paths, and tuning knobs. A TOML
//! config file supplies defaults that command-line flags override. Unknown
//! keys are rejected.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::llm_gateway::{ModelConfig, ProviderKind, DEFAULT_MATCH_THRESHOLD};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Invalid { path: String, message: String },
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub provider: Option<String>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub threshold: Option<f64>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub verbose: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&raw).map_err(|e| ConfigError::Invalid {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Fully resolved settings used by the assess pipeline.
#[derive(Debug, Clone)]
pub struct Config {
    pub model: ModelConfig,
    pub threshold: f64,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub verbose: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            model: ModelConfig::default(),
            threshold: DEFAULT_MATCH_THRESHOLD,
            out_dir: PathBuf::from("."),
            workers: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            verbose: false,
        }
    }
}

pub fn parse_provider(name: &str) -> Result<ProviderKind, ConfigError> {
    match name {
        "mock" | "mock_oracle" => Ok(ProviderKind::MockOracle),
        "remote" | "remote_api" => Ok(ProviderKind::RemoteApi),
        other => Err(ConfigError::Invalid {
            path: "<flags>".to_string(),
            message: format!("unknown provider '{other}' (expected mock or remote)"),
        }),
    }
}

/// Values supplied on the command line; `None` defers to the config file,
/// which in turn defers to the built-in defaults.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub provider: Option<String>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub threshold: Option<f64>,
    pub out_dir: Option<std::path::PathBuf>,
    pub workers: Option<usize>,
    pub verbose: bool,
}

impl Config {
    /// Layers flag values over file config over built-in defaults.
    pub fn resolve(file: Option<FileConfig>, flags: FlagOverrides) -> Result<Config, ConfigError> {
        let file = file.unwrap_or_default();
        let mut config = Config::default();
        let provider_name = flags
            .provider
            .or(file.provider)
            .unwrap_or_else(|| "mock".to_string());
        config.model.provider = parse_provider(&provider_name)?;
        if let Some(m) = flags.model.or(file.model) {
            config.model.model_name = m;
        }
        config.model.endpoint = flags.endpoint.or(file.endpoint);
        if let Some(r) = file.max_retries {
            config.model.max_retries = r;
        }
        if let Some(t) = file.timeout_secs {
            config.model.timeout = Duration::from_secs(t);
        }
        config.threshold = flags
            .threshold
            .or(file.threshold)
            .unwrap_or(DEFAULT_MATCH_THRESHOLD);
        if !(0.0..=1.0).contains(&config.threshold) {
            return Err(ConfigError::Invalid {
                path: "<flags>".to_string(),
                message: format!("threshold {} outside [0, 1]", config.threshold),
            });
        }
        if let Some(dir) = flags.out_dir.or(file.out_dir) {
            config.out_dir = dir;
        }
        if let Some(w) = flags.workers.or(file.workers) {
            if w == 0 {
                return Err(ConfigError::Invalid {
                    path: "<flags>".to_string(),
                    message: "workers must be at least 1".to_string(),
                });
            }
            config.workers = w;
        }
        config.verbose = flags.verbose || file.verbose.unwrap_or(false);
        Ok(config)
    }
}
