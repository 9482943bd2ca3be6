//! Output directory with a hashed manifest.

use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Emitter {
    dir: PathBuf,
    files: Vec<(String, String, usize)>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push((name.to_string(), sha256_hex(bytes), bytes.len()));
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` listing every file emitted so far.
    pub fn finish(mut self, command: &str, config: &[u8], passed: bool) -> Result<(), CliError> {
        self.files.sort();
        let outputs: Vec<_> = self
            .files
            .iter()
            .map(|(name, hash, bytes)| json!({ "path": name, "sha256": hash, "bytes": bytes }))
            .collect();
        let manifest = json!({
            "command": command,
            "config_sha256": sha256_hex(config),
            "versions": { "bondmix": bondmix::VERSION, "cli": env!("CARGO_PKG_VERSION") },
            "passed": passed,
            "outputs": outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("json serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
