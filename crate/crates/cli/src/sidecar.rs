//! JSON sidecars: parameters, input hashes and creation time of every
//! artifact, stored next to it as `<artifact>.meta.json`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub created_at: DateTime<Utc>,
    pub parameters: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub artifact: FileHash,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `SOURCE_DATE_EPOCH` when set, so that reruns can be byte-identical;
/// otherwise the current time.
pub fn creation_time() -> Result<DateTime<Utc>> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => {
            let secs: i64 = v
                .trim()
                .parse()
                .with_context(|| format!("SOURCE_DATE_EPOCH is not an integer: {v:?}"))?;
            DateTime::from_timestamp(secs, 0).context("SOURCE_DATE_EPOCH out of range")
        }
        Err(_) => Ok(Utc::now()),
    }
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    artifact.with_file_name(name)
}

/// Records provenance of a run's artifacts.
pub struct Provenance {
    command: String,
    parameters: serde_json::Value,
    inputs: Vec<FileHash>,
    created_at: DateTime<Utc>,
}

impl Provenance {
    pub fn new(command: &str, parameters: serde_json::Value, inputs: &[&Path]) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(FileHash {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            command: command.to_string(),
            parameters,
            inputs,
            created_at: creation_time()?,
        })
    }

    /// Writes `bytes` to `path` followed by its sidecar.
    pub fn write(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let meta = Sidecar {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.clone(),
            created_at: self.created_at,
            parameters: self.parameters.clone(),
            inputs: self.inputs.clone(),
            artifact: FileHash {
                path: path.display().to_string(),
                sha256: hex::encode(Sha256::digest(bytes)),
            },
        };
        let mut json = serde_json::to_vec_pretty(&meta)?;
        json.push(b'\n');
        let side = sidecar_path(path);
        fs::write(&side, json).with_context(|| format!("writing {}", side.display()))
    }
}

pub fn read_sidecar(artifact: &Path) -> Result<Option<Sidecar>> {
    let side = sidecar_path(artifact);
    if !side.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&side).with_context(|| format!("reading {}", side.display()))?;
    let meta =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", side.display()))?;
    Ok(Some(meta))
}
