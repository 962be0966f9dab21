//! Pipeline configuration file.
//!
//! ```toml
//! workers = 4
//!
//! [paths]
//! corpus = "out/corpus"
//! store = "out/sessions"
//!
//! [synth]
//! seed = 7
//! double_column_share = 0.5
//!
//! [eval]
//! iou_threshold = 0.8
//! ```
//!
//! Command-line flags override file values. The file is taken from
//! `--config`, else from `$FIGHARVEST_CONFIG`, else defaults apply.

use std::path::{Path, PathBuf};

use figharvest_core::catalog::CatalogConfig;
use figharvest_core::detect::BaselineConfig;
use figharvest_core::eval::EvalConfig;
use figharvest_core::synth::PageSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_ENV: &str = "FIGHARVEST_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub assets: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ports {
    pub curate: u16,
    pub catalog: u16,
}

impl Default for Ports {
    fn default() -> Self {
        Ports {
            curate: 8301,
            catalog: 8302,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Parallel workers for every stage; 0 means one per logical CPU.
    pub workers: usize,
    pub paths: Paths,
    pub synth: PageSpec,
    pub baseline: BaselineConfig,
    pub eval: EvalConfig,
    pub catalog: CatalogConfig,
    pub ports: Ports,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("{origin}: {e}")))
    }

    /// Loads the explicit path, else the env var path, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> CliResult<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(from_env) {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(path.display(), e))?;
                let cfg = Self::from_toml_str(&text, &path.display().to_string())?;
                cfg.synth
                    .validate()
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                cfg.eval
                    .validate()
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                Ok(cfg)
            }
            None => Ok(PipelineConfig::default()),
        }
    }
}
