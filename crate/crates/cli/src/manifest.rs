//! Sidecar record of how an artifact was produced.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use beamfair::{Error, NetworkConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// The resolved configuration, in the same TOML form `--config` accepts.
    pub config_toml: String,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
    /// The subcommand's arguments after defaults were applied.
    pub arguments: serde_json::Value,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub outputs: Vec<PathBuf>,
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new<A: Serialize>(command: &str, cfg: &NetworkConfig, seed: Option<u64>, threads: Option<usize>, args: &A) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_toml: cfg.to_toml(),
            master_seed: seed,
            threads,
            arguments: serde_json::to_value(args).unwrap_or(serde_json::Value::Null),
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            outputs: Vec::new(),
        }
    }

    /// `<artifact>.manifest.json` next to the artifact.
    pub fn path_for(artifact: &Path) -> PathBuf {
        let mut name = artifact.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    /// Stamps the finish time and writes next to the first output.
    pub fn finish(mut self, outputs: Vec<PathBuf>) -> beamfair::Result<PathBuf> {
        self.finished_unix_ms = now_ms();
        self.outputs = outputs;
        let path = Self::path_for(self.outputs.first().map(PathBuf::as_path).unwrap_or(Path::new("run")));
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        Ok(path)
    }

    pub fn load(path: &Path) -> beamfair::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            line: e.line(),
            msg: e.to_string(),
        })
    }
}
