use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::report::TOOL_VERSION;

/// Record of one CLI run, written as `manifest.json` next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub instance: String,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub wall_time_ms: u64,
    /// Arguments after the program name; replaying them reproduces the outputs.
    #[serde(default)]
    pub argv: Vec<String>,
}

pub fn config_digest(config: &impl Serialize) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(command: &str, instance: &str, config: &impl Serialize, seed: u64) -> Result<Self> {
        Ok(RunManifest {
            command: command.into(),
            instance: instance.into(),
            config_digest: config_digest(config)?,
            seed,
            tool_version: TOOL_VERSION.into(),
            outputs: vec![],
            wall_time_ms: 0,
            argv: vec![],
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
