//! Resolved configuration and input digests written next to outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    inputs: Vec<InputDigest>,
    outputs: &'a [String],
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data_io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Output directory of one command run.
pub struct RunDir {
    pub dir: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::data_io(dir, e))?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        std::fs::write(&p, contents).map_err(|e| CliError::data_io(&p, e))?;
        self.record(name);
        Ok(p)
    }

    pub fn record(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    /// Writes `resolved_config.toml` and `provenance.json`.
    pub fn finish(
        mut self,
        command: &str,
        seed: u64,
        config: &toml::Table,
        inputs: &[&Path],
    ) -> Result<(), CliError> {
        let text = toml::to_string(config)
            .map_err(|e| CliError::Usage(format!("cannot record configuration: {e}")))?;
        let cfg = self.path("resolved_config.toml");
        std::fs::write(&cfg, text).map_err(|e| CliError::data_io(&cfg, e))?;
        self.outputs.sort();
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let prov = Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            inputs,
            outputs: &self.outputs,
        };
        let json = serde_json::to_string_pretty(&prov).expect("plain data serializes");
        let p = self.path("provenance.json");
        std::fs::write(&p, json + "\n").map_err(|e| CliError::data_io(&p, e))
    }
}
