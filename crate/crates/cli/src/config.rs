//! Optional config file (JSON or TOML) mirroring the command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use usd_core::ExperimentConfig;

use crate::Format;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub dim: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub theta_deg: Option<Vec<f64>>,
    pub theta_grid: Option<String>,
    pub overlap: Option<f64>,
    pub epsilon: Option<f64>,
    pub error_per_cell: Option<f64>,
    pub sigma_spiral: Option<f64>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    /// Base experiment parameters; `dim`, `theta_rad`, `crosstalk_epsilon`
    /// and `rng_seed` are replaced per sweep point.
    pub experiment: Option<ExperimentConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed = if is_toml {
            toml::from_str(&text).map_err(anyhow::Error::from)
        } else {
            serde_json::from_str(&text).map_err(anyhow::Error::from)
        };
        parsed.with_context(|| format!("parsing config {}", path.display()))
    }
}
