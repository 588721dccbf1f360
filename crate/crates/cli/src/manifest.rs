use std::path::{Path, PathBuf};

use ctp_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const FILE: &str = "manifest.json";

/// Everything needed to repeat a run that produced an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub args: Vec<String>,
    pub config: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: &[String], output_dir: &Path) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            args: args.to_vec(),
            config: None,
            inputs: Vec::new(),
            output_dir: output_dir.to_path_buf(),
            seed: None,
        }
    }

    pub fn write(&self) -> Result<()> {
        let path = self.output_dir.join(FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(FILE);
        let text =
            std::fs::read_to_string(&path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Absolute form of an input path, so the manifest works from any directory.
pub fn absolute(path: &Path) -> PathBuf {
    std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}
