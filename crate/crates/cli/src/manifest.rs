//! Run manifests written next to every output file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputChecksum {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<OutputChecksum>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        RunManifest {
            command: command.into(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: Vec::new(),
        }
    }

    /// Writes `body` to `path` and records its checksum.
    pub fn write_output(&mut self, path: &Path, body: &str) -> std::io::Result<()> {
        fs::write(path, body)?;
        self.outputs.push(OutputChecksum {
            path: path.display().to_string(),
            sha256: sha256_hex(body.as_bytes()),
        });
        Ok(())
    }

    /// Saved as `<first output>.manifest.json`.
    pub fn save(&self) -> std::io::Result<()> {
        if let Some(first) = self.outputs.first() {
            let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
            fs::write(manifest_path(Path::new(&first.path)), text + "\n")?;
        }
        Ok(())
    }
}
