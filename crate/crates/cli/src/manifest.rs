//! Output directory bookkeeping and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub version: String,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub steps: Vec<StepResult>,
    pub warnings: Vec<String>,
    pub outputs: Vec<OutputEntry>,
    pub pass: bool,
}

/// Collects outputs and step verdicts for one run.
pub struct Run {
    command: String,
    config: ExperimentConfig,
    dir: PathBuf,
    started: Instant,
    started_unix: u64,
    files: Vec<String>,
    pub steps: Vec<StepResult>,
    pub warnings: Vec<String>,
}

impl Run {
    pub fn start(command: &str, config: &ExperimentConfig) -> Result<Self, CliError> {
        let dir = config.output_dir.clone();
        std::fs::create_dir_all(&dir)?;
        Ok(Run {
            command: command.to_string(),
            config: config.clone(),
            dir,
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            files: Vec::new(),
            steps: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write `name` through `fill` and record it for the manifest.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        std::fs::write(self.dir.join(name), &buf)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, |b| {
            b.extend_from_slice(text.as_bytes());
            b.push(b'\n');
            Ok(())
        })
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        let detail = detail.into();
        log::info!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.steps.push(StepResult {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::info!("warning: {message}");
        self.warnings.push(message);
    }

    pub fn passed(&self) -> bool {
        self.steps.iter().all(|s| s.pass)
    }

    /// Hash every output and write the manifest.
    pub fn finish(self) -> Result<RunManifest, CliError> {
        let mut outputs = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let bytes = std::fs::read(self.dir.join(name))?;
            outputs.push(OutputEntry {
                path: name.clone(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        let pass = self.passed();
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            steps: self.steps,
            warnings: self.warnings,
            outputs,
            pass,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.dir.join(MANIFEST_NAME), text + "\n")?;
        Ok(manifest)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
