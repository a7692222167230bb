//! Run configuration, manifests and the end-to-end pipeline behind the CLI.

pub mod config;
pub mod manifest;
pub mod pipeline;

use std::io::Write;
use std::path::Path;

use crate::analysis::AnalysisError;
use crate::fem::FemError;
use crate::materials::MaterialError;
use crate::meshing::MeshError;
use crate::pattern::PatternError;

pub use config::{LoadBlock, MeshBlock, OutputBlock, RunConfig, SweepBlock};
pub use manifest::{config_hash, RunManifest, StageTiming};
pub use pipeline::{
    output_dir, radius_of, run_mesh, run_pattern, run_simulate, run_sweep, MeshOutcome, PatternOutcome, SimulateOutcome,
    SweepOutcome, OUT_ENV,
};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const PATTERN: i32 = 3;
    pub const MESH: i32 = 4;
    pub const SOLVER: i32 = 5;
    pub const IO: i32 = 6;
    /// Continuation stopped short of the requested load factor.
    pub const STALL: i32 = 10;
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {msg}")]
    Config { path: String, msg: String },
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Material(MaterialError::Io(_)) => exit::IO,
            PipelineError::Config { .. } | PipelineError::Material(_) | PipelineError::Analysis(_) => exit::USAGE,
            PipelineError::Pattern(PatternError::Io(_)) => exit::IO,
            PipelineError::Pattern(_) => exit::PATTERN,
            PipelineError::Mesh(MeshError::Io(_)) => exit::IO,
            PipelineError::Mesh(_) => exit::MESH,
            PipelineError::Fem(FemError::Stall { .. }) => exit::STALL,
            PipelineError::Fem(_) => exit::SOLVER,
            PipelineError::Io { .. } => exit::IO,
        }
    }
}

/// Write-temp-then-rename in the target directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(PipelineError::io(path, e));
    }
    Ok(())
}
