//! CSV tables and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};

/// Nine significant digits.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        x.to_string().to_lowercase()
    }
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    /// Effective configuration; `config.toml` in the same directory holds the same text.
    pub config_toml: String,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    /// Command-specific metadata (q lists, protocols actually run, ...).
    pub details: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: cfg.seed,
            config_toml: cfg.to_toml(),
            config: cfg.clone(),
            outputs: Vec::new(),
            warnings: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    /// Writes `manifest.json` and `config.toml` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::write(dir.join("config.toml"), &self.config_toml)?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
