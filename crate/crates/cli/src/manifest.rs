//! Run manifest tying every artifact to the configuration and seed that
//! produced it.

use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the resolved configuration (sorted-key JSON).
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    /// Emitted files, relative to the output directory.
    pub artifact_paths: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_digest: String, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_digest,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            artifact_paths: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &str) {
        self.artifact_paths.push(path.to_string());
    }

    /// Writes `manifest.json` with sorted keys and no volatile fields, so a
    /// re-run with the same inputs is byte-identical.
    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        for artifact in &self.artifact_paths {
            if !out_dir.join(artifact).exists() {
                return Err(CliError::Numerical(format!(
                    "manifest lists missing artifact {artifact}"
                )));
            }
        }
        let value = serde_json::to_value(self).expect("manifest serializes");
        let mut text = serde_json::to_string_pretty(&value).expect("manifest renders");
        text.push('\n');
        std::fs::write(out_dir.join("manifest.json"), text)?;
        Ok(())
    }
}
