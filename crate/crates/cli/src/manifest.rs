//! Run manifest: every invocation that writes files also records what it ran
//! and what it produced.

use std::path::Path;

use serde::Serialize;

use crate::Failure;

#[derive(Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub out_dir: String,
    /// File names written into `out_dir`, manifest included.
    pub artifacts: Vec<String>,
    /// Full merged configuration; reloading the echoed config file reproduces
    /// this run.
    pub effective_config: serde_json::Value,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn write(mut self, out_dir: &Path) -> Result<(), Failure> {
        self.artifacts.push("manifest.json".to_string());
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self)
            .map_err(|e| Failure::Run(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, json)?;
        Ok(())
    }
}
