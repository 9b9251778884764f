// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fqnv::io::atomic_write;
use fqnv::Result;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub version: &'static str,
}

impl Provenance {
    pub fn new(config_bytes: &[u8], seed: Option<u64>) -> Self {
        Provenance {
            config_sha256: format!("{:x}", Sha256::digest(config_bytes)),
            seed,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    /// Comment line placed at the top of every text output.
    pub fn comment(&self, prefix: &str) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!("{prefix} fqnv {} config_sha256={} seed={seed}\n", self.version, self.config_sha256)
    }
}

/// Collects output files and writes them all at the end.
pub struct Outputs {
    dir: PathBuf,
    provenance: Provenance,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path, provenance: Provenance) -> Self {
        Outputs { dir: dir.to_path_buf(), provenance, files: Vec::new() }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// CSV body prefixed with the provenance comment.
    pub fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = self.provenance.comment("#").into_bytes();
        write(&mut buf)?;
        self.files.push((self.dir.join(name), buf));
        Ok(())
    }

    pub fn raw(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    /// Metadata JSON; the only output carrying a timestamp.
    pub fn meta(&mut self, name: &str, command: &str, details: Value) -> Result<()> {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let outputs: Vec<String> = self
            .files
            .iter()
            .filter_map(|(p, _)| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        let meta = serde_json::json!({
            "command": command,
            "provenance": self.provenance,
            "created_unix": created,
            "outputs": outputs,
            "details": details,
        });
        let mut bytes = serde_json::to_vec_pretty(&meta)?;
        bytes.push(b'\n');
        self.files.push((self.dir.join(name), bytes));
        Ok(())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.dir)?;
        let mut written = Vec::new();
        for (path, bytes) in self.files {
            atomic_write(&path, &bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}
