//! Output directory handling. Files are written to a temporary name and
//! renamed into place; the manifest goes last.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use phaseseed::rng::sha256_hex;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub phaseseed: String,
    pub cli: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub seed: u64,
    pub scenario: String,
    pub versions: Versions,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(config_json: &str, seed: u64, scenario: String) -> Self {
        RunManifest {
            config_sha256: sha256_hex(config_json.as_bytes()),
            seed,
            scenario,
            versions: Versions {
                phaseseed: phaseseed::VERSION.to_string(),
                cli: env!("CARGO_PKG_VERSION").to_string(),
            },
            files: Vec::new(),
        }
    }
}

/// Writes into one output directory and records what it wrote.
pub struct OutputDir {
    root: PathBuf,
    pub manifest: RunManifest,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

impl OutputDir {
    pub fn create(root: &Path, manifest: RunManifest) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            manifest,
        })
    }

    /// Writes `rel` under the root and lists it in the manifest.
    pub fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.root.join(rel), bytes)?;
        self.manifest.files.push(FileEntry {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Lists files a nested run already wrote under `prefix`.
    pub fn adopt(&mut self, prefix: &str, files: &[FileEntry]) {
        for f in files {
            self.manifest.files.push(FileEntry {
                path: format!("{prefix}/{}", f.path),
                ..f.clone()
            });
        }
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let mut json = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises");
        json.push('\n');
        write_atomic(&self.root.join("manifest.json"), json.as_bytes())?;
        Ok(self.manifest)
    }
}
