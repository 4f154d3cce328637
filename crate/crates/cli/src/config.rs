use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use speechfuse::bench::{ExperimentConfig, GridConfig};
use speechfuse::ctc::TrainConfig;
use speechfuse::{SyntheticSpec, WindowConfig};

/// Sections of a config file. Every section and field is optional; missing
/// values keep their defaults and command-line flags win over both.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub synth: Option<SyntheticSpec>,
    pub train: Option<TrainConfig>,
    pub window: Option<WindowConfig>,
    pub grid: Option<GridConfig>,
    pub experiment: Option<ExperimentConfig>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| crate::commands::usage(format!("config {}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| crate::commands::usage(format!("config {}: {e}", path.display())))?
    };
    Ok(parsed)
}
