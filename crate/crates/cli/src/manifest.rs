//! Run manifest: which stages completed under which configuration, and the digest of every
//! file each stage wrote.

use crate::cache::{file_digest, write_atomic};
use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory, '/'-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub complete: bool,
    pub config_hash: String,
    pub wall_clock_s: f64,
    pub files: Vec<FileRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    /// Hash of the configuration of the most recent run.
    pub config_hash: String,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(out: &Path) -> CliResult<Self> {
        let path = out.join(MANIFEST_FILE);
        match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| CliError::Corrupt {
                path: path.display().to_string(),
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(CliError::io(path.display())(e)),
        }
    }

    pub fn save(&self, out: &Path) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&out.join(MANIFEST_FILE), &bytes)
    }

    /// True when `stage` completed under `config_hash` and every listed file still has its
    /// recorded digest.
    pub fn is_current(&self, stage: &str, config_hash: &str, out: &Path) -> bool {
        let Some(rec) = self.stages.get(stage) else {
            return false;
        };
        rec.complete
            && rec.config_hash == config_hash
            && rec
                .files
                .iter()
                .all(|f| file_digest(&out.join(&f.path)).is_ok_and(|d| d == f.sha256))
    }

    pub fn record(&mut self, stage: &str, config_hash: &str, wall_clock_s: f64, files: Vec<FileRecord>) {
        self.stages.insert(
            stage.to_string(),
            StageRecord {
                complete: true,
                config_hash: config_hash.to_string(),
                wall_clock_s,
                files,
            },
        );
    }
}

pub fn file_record(out: &Path, rel: &str) -> CliResult<FileRecord> {
    let path = out.join(rel);
    let bytes = std::fs::metadata(&path).map_err(CliError::io(path.display()))?.len();
    Ok(FileRecord {
        path: rel.to_string(),
        sha256: file_digest(&path)?,
        bytes,
    })
}
