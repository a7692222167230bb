//! Shape metrics, analytic oracles and parameter sweeps.

pub mod metrics;
pub mod sweep;

pub use metrics::{fit_circle, fit_midline_curvature, height_at, measure_height, profile_curvature, timoshenko_curvature, Height};
pub use sweep::{sweep_gamma, CaseSpec, Sweep, SweepRow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("curvature fit needs at least 5 centreline samples, found {0}")]
    TooFewPoints(usize),
    #[error("invalid analysis input: {0}")]
    Input(String),
}
