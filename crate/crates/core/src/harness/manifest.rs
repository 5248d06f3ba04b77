use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the run root.
    pub path: String,
    pub sha256: String,
}

/// Record of one stage run: what went in, what came out and the config
/// that drove it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    #[serde(default)]
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io { path: path.to_path_buf(), message: e.to_string() }
}

pub fn digest_file(root: &Path, path: &Path) -> Result<FileDigest, HarnessError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => HarnessError::MissingArtifact { path: path.to_path_buf() },
        _ => io_err(path, e),
    })?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    Ok(FileDigest { path: rel.to_string_lossy().replace('\\', "/"), sha256: sha256_hex(&bytes) })
}

pub fn digest_files(root: &Path, paths: &[PathBuf]) -> Result<Vec<FileDigest>, HarnessError> {
    paths.iter().map(|p| digest_file(root, p)).collect()
}

impl Manifest {
    pub fn path(dir: &Path, stage: &str) -> PathBuf {
        dir.join(format!("{stage}.json"))
    }

    pub fn load(path: &Path) -> Result<Option<Self>, HarnessError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Ok(serde_json::from_str(&text).ok()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(path, e)),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(path, text.as_bytes())
    }

    /// True when this manifest describes a run with the same config and
    /// inputs whose outputs are still on disk unchanged.
    pub fn is_current(&self, root: &Path, config_hash: &str, inputs: &[FileDigest]) -> bool {
        self.config_hash == config_hash
            && self.inputs == inputs
            && self.outputs.iter().all(|o| {
                digest_file(root, &root.join(&o.path)).is_ok_and(|d| d.sha256 == o.sha256)
            })
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}
