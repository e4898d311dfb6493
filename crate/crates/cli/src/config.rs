//! Pipeline configuration: a TOML file with `[paths]` and `[params]`
//! sections. Command-line flags override config values; config values
//! override built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub params: ParamsSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub manifest: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub descriptors: Option<PathBuf>,
    pub codebook: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub inventory: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub images_root: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    /// Part schema, outermost first.
    pub parts: Option<Vec<String>>,
    /// Codebook size K.
    pub k: Option<usize>,
    /// CNNC neighborhood size.
    pub neighbors: Option<usize>,
    /// GMM component count M.
    pub components: Option<usize>,
    /// MCL topic count T.
    pub topics: Option<usize>,
    /// MCL topic prior.
    pub alpha: Option<f64>,
    /// MCL transition smoothing.
    pub eta: Option<f64>,
    /// Solid classifier threshold.
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub metric: Option<String>,
    pub topk: Option<usize>,
    /// Patches sampled per bag-of-words descriptor.
    pub patches: Option<usize>,
}

pub mod defaults {
    pub const K: usize = 32;
    pub const NEIGHBORS: usize = 5;
    pub const COMPONENTS: usize = 8;
    pub const TOPICS: usize = 4;
    pub const ALPHA: f64 = 1.0;
    pub const ETA: f64 = 0.1;
    pub const SEED: u64 = 42;
    pub const TOPK: usize = 10;
    pub const PATCHES: usize = 200;
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::MissingArtifact(path.to_path_buf())
            } else {
                CliError::Data(format!("failed to read {}: {e}", path.display()))
            }
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn part_schema(&self, flag: Option<&Vec<String>>) -> CliResult<outfit_core::corpus::PartSchema> {
        let names = flag
            .or(self.params.parts.as_ref())
            .cloned()
            .unwrap_or_else(|| vec!["top".to_string(), "bottom".to_string()]);
        outfit_core::corpus::PartSchema::new(names).map_err(|e| CliError::Usage(e.to_string()))
    }
}

/// Flag beats config; a missing required path is a usage error naming both
/// spellings.
pub fn resolve_path(
    flag: Option<PathBuf>,
    cfg: Option<&PathBuf>,
    flag_name: &str,
    cfg_name: &str,
) -> CliResult<PathBuf> {
    flag.or_else(|| cfg.cloned()).ok_or_else(|| {
        CliError::Usage(format!(
            "missing required --{flag_name} (or config paths.{cfg_name})"
        ))
    })
}

pub fn resolve_opt_path(flag: Option<PathBuf>, cfg: Option<&PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| cfg.cloned())
}

pub fn resolve<T: Copy>(flag: Option<T>, cfg: Option<T>, default: T) -> T {
    flag.or(cfg).unwrap_or(default)
}
