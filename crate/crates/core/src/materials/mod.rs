//! Constitutive parameters, modulus fitting and oven telemetry.

mod curve;
mod model;
mod templog;

use thiserror::Error;

pub use curve::{fit_linear_modulus, parse_stress_strain_csv, read_stress_strain_csv, StressStrainCurve, DEFAULT_EPS_M};
pub use model::{contraction_stress, preset, presets, thermal_eigenstrain, EigenstrainMode, MaterialModel, ThermalLoad, DEFAULT_NU};
pub use templog::{
    celsius_to_kelvin, fahrenheit_to_kelvin, ingest_temperature_log, kelvin_to_fahrenheit, parse_temperature_log,
    LogSummary, TempUnit, TemperatureLog,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("invalid material `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("strain {eps_m} outside the sampled range [0, {max}]")]
    Range { eps_m: f64, max: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("unknown material preset `{0}`")]
    UnknownPreset(String),
}
