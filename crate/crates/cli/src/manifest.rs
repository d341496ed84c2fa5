use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: Value,
    /// sha256 of the compact config JSON; also written into mesh headers.
    pub config_hash: String,
    pub outputs: Vec<OutputFile>,
    pub results: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new<C: Serialize>(config: &C) -> Result<Manifest, CliError> {
        let config = serde_json::to_value(config)?;
        let config_hash = sha256_hex(serde_json::to_string(&config)?.as_bytes());
        Ok(Manifest {
            tool: "cwtori",
            version: env!("CARGO_PKG_VERSION"),
            config,
            config_hash,
            outputs: Vec::new(),
            results: Value::Null,
        })
    }

    pub fn record_output(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path)?;
        self.outputs.push(OutputFile { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }
}

/// `--manifest` if given, else `<out>.manifest.json`.
pub fn manifest_path(out: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}
