use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::analysis::CaseSpec;
use crate::fem::SolveConfig;
use crate::materials::{preset, EigenstrainMode, MaterialModel, ThermalLoad};
use crate::meshing::LayerSpec;
use crate::pattern::PatternSpec;

fn default_min_angle() -> f64 {
    20.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshBlock {
    pub h_target_mm: f64,
    #[serde(default = "default_min_angle")]
    pub min_angle_deg: f64,
    /// Bottom to top.
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadBlock {
    #[serde(rename = "delta_T_K")]
    pub delta_t: f64,
    #[serde(default)]
    pub eigenstrain_mode: EigenstrainMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Relative paths resolve against the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "yes")]
    pub vtk: bool,
    /// Deformed kirigami-layer surface as binary STL.
    #[serde(default)]
    pub stl: bool,
    #[serde(default = "yes")]
    pub convergence_csv: bool,
    /// One VTK file per load-grid point.
    #[serde(default)]
    pub snapshots: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: None, vtk: true, stl: false, convergence_csv: true, snapshots: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub gammas: Vec<f64>,
}

/// One pipeline run: pattern → mesh → solve → measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pattern: PatternSpec,
    pub mesh: MeshBlock,
    pub load: LoadBlock,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub output: OutputBlock,
    /// Extra or overriding materials, keyed by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub materials: BTreeMap<String, MaterialModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

fn invalid(path: impl Into<String>, msg: impl Into<String>) -> PipelineError {
    PipelineError::Config { path: path.into(), msg: msg.into() }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let path = match e.span() {
                Some(span) => format!("line {}", text[..span.start].lines().count().max(1)),
                None => "config".to_string(),
            };
            invalid(path, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Material by name: config table first, then presets.
    pub fn material(&self, name: &str) -> Option<MaterialModel> {
        if let Some(m) = self.materials.get(name) {
            let mut m = m.clone();
            m.name = name.to_string();
            return Some(m);
        }
        preset(name).ok()
    }

    /// Reference checks with the offending field path in the message.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.mesh.h_target_mm > 0.0) {
            return Err(invalid("mesh.h_target_mm", "must be positive"));
        }
        if !(0.0..=33.0).contains(&self.mesh.min_angle_deg) {
            return Err(invalid("mesh.min_angle_deg", "must lie in [0, 33]"));
        }
        if self.mesh.layers.is_empty() {
            return Err(invalid("mesh.layers", "at least one layer is required"));
        }
        for (name, m) in &self.materials {
            m.validate().map_err(|e| invalid(format!("materials.{name}"), e.to_string()))?;
        }
        for (i, l) in self.mesh.layers.iter().enumerate() {
            if self.material(&l.material).is_none() {
                return Err(invalid(format!("mesh.layers[{i}].material"), format!("unknown material `{}`", l.material)));
            }
            if !(l.thickness > 0.0) {
                return Err(invalid(format!("mesh.layers[{i}].thickness_mm"), "must be positive"));
            }
            if l.subdivisions == 0 {
                return Err(invalid(format!("mesh.layers[{i}].subdivisions"), "must be at least 1"));
            }
        }
        if !self.load.delta_t.is_finite() {
            return Err(invalid("load.delta_T_K", "must be finite"));
        }
        self.solver.validate().map_err(|e| invalid("solver", e.to_string()))?;
        if let Some(s) = &self.sweep {
            if s.gammas.is_empty() {
                return Err(invalid("sweep.gammas", "must not be empty"));
            }
            if let Some(g) = s.gammas.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
                return Err(invalid("sweep.gammas", format!("{g} outside (0, 1]")));
            }
            if self.pattern.gamma().is_none() {
                return Err(invalid("pattern.kind", "a sweep needs a lotus or spoon pattern"));
            }
        }
        Ok(())
    }

    /// Materials in layer order.
    pub fn layer_materials(&self) -> Vec<MaterialModel> {
        self.mesh.layers.iter().map(|l| self.material(&l.material).expect("validated")).collect()
    }

    pub fn thermal_load(&self) -> ThermalLoad {
        ThermalLoad::new(self.load.delta_t, self.solver.n_load_steps.max(1))
    }

    pub fn case_spec(&self) -> CaseSpec {
        CaseSpec {
            pattern: self.pattern.clone(),
            h_target: self.mesh.h_target_mm,
            min_angle_deg: self.mesh.min_angle_deg,
            layers: self.mesh.layers.clone(),
            materials: self.layer_materials(),
            mode: self.load.eigenstrain_mode,
        }
    }
}
