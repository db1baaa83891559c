use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::commands::ConfigError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub sblr: String,
    pub cli: String,
}

/// Record of one command invocation, written once per output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub versions: Versions,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_seconds: f64,
    /// Peak heap bytes observed by the process allocator.
    pub peak_memory_bytes: usize,
}

pub struct ManifestBuilder {
    command: String,
    started: Instant,
}

impl ManifestBuilder {
    pub fn start(command: &str) -> Self {
        ManifestBuilder { command: command.to_string(), started: Instant::now() }
    }

    pub fn finish<C: Serialize>(
        self,
        config: &C,
        seed: u64,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        output_dir: &Path,
    ) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            config: serde_json::to_value(config)?,
            seed,
            versions: Versions {
                sblr: sblr::VERSION.to_string(),
                cli: env!("CARGO_PKG_VERSION").to_string(),
            },
            inputs,
            outputs,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            peak_memory_bytes: crate::allocator().peak(),
        };
        let path = output_dir.join(MANIFEST_FILE);
        write_json(&path, &manifest)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

/// Loads a command config from a plain config file or from the `config`
/// field of a manifest written by `command`.
pub fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> anyhow::Result<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let inner = match (value.get("command"), value.get("config")) {
        (Some(c), Some(cfg)) => {
            if c != command {
                return Err(ConfigError(format!("{} is a manifest for '{}', not '{command}'", path.display(), c)).into());
            }
            cfg.clone()
        }
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
}
