use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{write_atomic, PipelineError, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Provenance record written last, once every output exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the normalized config text.
    pub config_hash: String,
    pub seed: u64,
    /// The normalized config, enough to rerun.
    pub config: String,
    pub timings: Vec<StageTiming>,
    /// Output file names relative to the run directory.
    pub outputs: Vec<String>,
}

/// Hash of the serialized config, insensitive to formatting and comments.
pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: config_hash(cfg),
            seed: cfg.solver.imperfection_seed,
            config: cfg.to_toml(),
            timings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(StageTiming { stage: stage.to_string(), seconds: t.elapsed().as_secs_f64() });
        out
    }

    /// Writes `bytes` to `dir/name` atomically and lists it.
    pub fn emit(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        write_atomic(&dir.join(name), bytes)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&dir.join("manifest.json"), text.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config { path: path.display().to_string(), msg: e.to_string() })
    }

    /// The config the run used.
    pub fn run_config(&self) -> Result<RunConfig, PipelineError> {
        RunConfig::from_toml(&self.config)
    }
}
