//! Service configuration and credential handling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use piqos_core::DEFAULT_MAX_HOPS;

/// Settings for the long-running gateway service. Every field has a default
/// so a config file only needs to state what it overrides; command-line
/// flags in turn override the file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    /// Registry document the service loads at startup and persists to.
    pub registry_path: PathBuf,
    /// Address the HTTP listener binds.
    pub listen_address: String,
    /// Hop budget applied to queries that do not state one.
    pub default_max_hops: usize,
    /// Whether queries without an explicit choice get obfuscated scores.
    pub obfuscate_default: bool,
    /// Shared secrets, one per domain, checked on mutations and raw reads.
    pub domain_credentials: BTreeMap<String, String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            registry_path: PathBuf::from("registry.json"),
            listen_address: "127.0.0.1:8080".to_string(),
            default_max_hops: DEFAULT_MAX_HOPS,
            obfuscate_default: false,
            domain_credentials: BTreeMap::new(),
        }
    }
}

impl ServiceConfig {
    /// Reads a config file, which may state any subset of the fields.
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: Self = serde_json::from_str(&text)
            .with_context(|| format!("malformed config file {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.default_max_hops >= 1, "default_max_hops must be at least 1");
        Ok(())
    }
}

/// Reads a credentials file: a JSON object mapping domain ids to secrets.
pub fn load_credentials(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read credentials file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("malformed credentials file {}", path.display()))
}
