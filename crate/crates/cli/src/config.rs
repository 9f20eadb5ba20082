//! JSON run configuration. Values are layered: built-in defaults, then the
//! `--config` file, then command-line flags.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use stainbench_core::harness::ValidationConfig;
use stainbench_core::metrics::SsimParams;
use stainbench_core::patch::{AlignmentConfig, TissueConfig, DEFAULT_PATCH_SIZE};
use stainbench_core::registration::RegistrationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchSettings {
    pub size: usize,
    /// Defaults to `size` when absent.
    pub stride: Option<usize>,
}

impl Default for PatchSettings {
    fn default() -> Self {
        Self { size: DEFAULT_PATCH_SIZE, stride: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSettings {
    pub size: usize,
    pub patch_size: usize,
}

impl Default for DemoSettings {
    fn default() -> Self {
        let d = stainbench_core::demo::DemoConfig::default();
        Self { size: d.size, patch_size: d.patch_size }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub registration: RegistrationConfig,
    pub patch: PatchSettings,
    pub tissue: TissueConfig,
    pub alignment: AlignmentConfig,
    pub ssim: SsimParams,
    pub validation: ValidationConfig,
    pub demo: DemoSettings,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
