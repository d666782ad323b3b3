//! Run directories: CSV and JSON outputs plus the manifest that lists them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::Check;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "BBM_OUT_ROOT";
pub const DEFAULT_OUT_ROOT: &str = "runs";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CODE_VERSION: &str = concat!("bbm-cli ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Identifier of a (command, config, code version) triple. Every CSV row
/// carries it, so a table can be traced back to its manifest.
pub fn run_id(command: &str, cfg: &RunConfig) -> String {
    let text = format!("{command}\n{CODE_VERSION}\n{}", cfg.to_kv());
    sha256_hex(text.as_bytes())[..16].to_string()
}

pub fn default_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub run_id: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub replicas: u64,
    pub horizons: Vec<f64>,
    pub code_version: String,
    pub rng_algorithm: String,
    pub timestamp: String,
    pub outputs: Vec<OutputFile>,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("bad manifest {}: {e}", path.display())))
    }

    /// `(path, sha256)` pairs, sorted by path.
    pub fn digests(&self) -> Vec<(String, String)> {
        let mut out: Vec<_> = self.outputs.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect();
        out.sort();
        out
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub struct RunDir {
    root: PathBuf,
    run_id: String,
    files: Vec<String>,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>, run_id: String) -> CliResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            run_id,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    fn target(&mut self, name: &str) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(path)
    }

    /// Writes a CSV table; a leading `run_id` column is added to the header
    /// and to every row.
    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut out = String::from("run_id");
        for h in header {
            out.push(',');
            out.push_str(h);
        }
        out.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len(), "{name}: row width");
            out.push_str(&self.run_id);
            for cell in row {
                out.push(',');
                out.push_str(&csv_cell(&cell));
            }
            out.push('\n');
        }
        let path = self.target(name)?;
        fs::write(path, out)?;
        Ok(())
    }

    /// Writes CSV text produced elsewhere, prefixing the `run_id` column.
    pub fn csv_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let mut out = String::with_capacity(text.len() + 32 * text.lines().count());
        for (i, line) in text.lines().enumerate() {
            out.push_str(if i == 0 { "run_id" } else { &self.run_id });
            out.push(',');
            out.push_str(line);
            out.push('\n');
        }
        let path = self.target(name)?;
        fs::write(path, out)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        let path = self.target(name)?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn inventory(&self) -> CliResult<Vec<OutputFile>> {
        let mut files = self.files.clone();
        files.sort();
        files
            .into_iter()
            .map(|name| {
                let bytes = fs::read(self.root.join(&name))?;
                Ok(OutputFile {
                    path: name,
                    bytes: bytes.len() as u64,
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect()
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        let mut f = fs::File::create(self.root.join(MANIFEST_FILE))?;
        f.write_all(text.as_bytes())?;
        Ok(())
    }
}
