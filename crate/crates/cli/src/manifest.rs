//! Run manifests: what a stage read, wrote and counted, with the settings
//! and seed needed to repeat it. No wall-clock values are recorded.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let digest = Sha256::digest(&data);
        Ok(Self {
            path: path.to_owned(),
            bytes: data.len() as u64,
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: String,
    pub arguments: Vec<String>,
    pub seed: u64,
    pub settings: serde_json::Value,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub counts: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, arguments: Vec<String>, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            library_version: tkgforge::VERSION,
            command: command.to_owned(),
            arguments,
            seed,
            settings: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: BTreeMap::new(),
        }
    }

    pub fn count(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("counts serialize");
        self.counts.insert(key.to_owned(), v);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
    }
}
