use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Record of one command invocation, written once per output directory.
/// Only the two timestamps vary between identical invocations.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template_hash: Option<String>,
    pub seed: u64,
    pub exit_code: i32,
    /// SHA-256 of every file written, keyed by path relative to `output_dir`.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, output_dir: &Path, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_path: None,
            output_dir: output_dir.to_path_buf(),
            started_at_ms: now_ms(),
            finished_at_ms: 0,
            template_hash: None,
            seed,
            exit_code: 0,
            files: BTreeMap::new(),
        }
    }

    pub fn add_files(&mut self, paths: &[PathBuf]) -> Result<(), String> {
        for p in paths {
            let bytes = std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let rel = p.strip_prefix(&self.output_dir).unwrap_or(p);
            let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            let digest = Sha256::digest(&bytes);
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            self.files.insert(key, hex);
        }
        Ok(())
    }

    pub fn write(mut self, exit_code: i32) -> Result<(), String> {
        self.exit_code = exit_code;
        self.finished_at_ms = now_ms();
        let path = self.output_dir.join(MANIFEST_FILE);
        let mut body = serde_json::to_string_pretty(&self).expect("manifest serializes");
        body.push('\n');
        std::fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Prepares an output directory. An existing non-empty directory is only
/// reused when it holds a previous manifest and `force` is set.
pub fn prepare_out_dir(dir: &Path, force: bool) -> Result<(), String> {
    if dir.exists() {
        let non_empty = std::fs::read_dir(dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .next()
            .is_some();
        if non_empty {
            if !force {
                return Err(format!("{} is not empty (use --force to replace earlier output)", dir.display()));
            }
            if !dir.join(MANIFEST_FILE).is_file() {
                return Err(format!("{} has no {MANIFEST_FILE}; refusing to clear it", dir.display()));
            }
            std::fs::remove_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))
}
