//! Run manifests: enough information to re-execute a search exactly and to
//! detect when its inputs changed.

use std::fs;
use std::path::{Path, PathBuf};

use dbarcode_core::SearchConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }

    /// Recomputes the digest and compares it with the recorded one.
    pub fn verify(&self) -> Result<(), CliError> {
        let now = sha256_file(&self.path)?;
        if now != self.sha256 {
            return Err(CliError::Data(format!(
                "digest mismatch for {}: manifest has {}, file has {now}",
                self.path.display(),
                self.sha256
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub train_features: FileDigest,
    pub test_features: FileDigest,
    pub train_labels: FileDigest,
    pub test_labels: FileDigest,
}

impl Inputs {
    pub fn all(&self) -> [&FileDigest; 4] {
        [
            &self.train_features,
            &self.test_features,
            &self.train_labels,
            &self.test_labels,
        ]
    }
}

/// Wall-clock milliseconds per stage. Not part of the deterministic output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load_ms: f64,
    pub search_ms: f64,
    pub evaluate_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub config: SearchConfig,
    pub inputs: Inputs,
    pub results: FileDigest,
    pub report: FileDigest,
    pub timings: Timings,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(CliError::Data(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn verify_inputs(&self) -> Result<(), CliError> {
        self.inputs
            .all()
            .into_iter()
            .try_for_each(FileDigest::verify)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}
