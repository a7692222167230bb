use serde::{Deserialize, Serialize};

use super::MaterialError;

/// Default Poisson ratio: just below incompressible so the elasticity tensor stays invertible.
pub const DEFAULT_NU: f64 = 0.49;

/// Linear isotropic elasticity with a thermal strain coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialModel {
    #[serde(default)]
    pub name: String,
    /// Young's modulus, MPa.
    #[serde(rename = "E_MPa")]
    pub young: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// Thermal coefficient, 1/K. Negative means contraction on heating.
    #[serde(rename = "alpha_per_K")]
    pub alpha: f64,
}

fn default_nu() -> f64 {
    DEFAULT_NU
}

impl MaterialModel {
    pub fn new(name: impl Into<String>, young: f64, nu: f64, alpha: f64) -> Result<Self, MaterialError> {
        let m = Self { name: name.into(), young, nu, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |reason: &str| Err(MaterialError::Invalid { name: self.name.clone(), reason: reason.into() });
        if !(self.young > 0.0 && self.young.is_finite()) {
            return bad("E must be positive");
        }
        if !(0.0..0.5).contains(&self.nu) {
            return bad("nu must satisfy 0 <= nu < 0.5");
        }
        if !self.alpha.is_finite() {
            return bad("alpha must be finite");
        }
        Ok(())
    }

    /// Lamé constants (λ, μ), MPa.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young, self.nu);
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }
}

/// Shipped material table. Values from the characterization of shrink film
/// and printed ABS; `shrinky_dink` carries the thermal coefficient fitted for
/// simulation, `shrinky_dink_measured` the oven measurement.
pub fn presets() -> Vec<MaterialModel> {
    vec![
        MaterialModel { name: "shrinky_dink".into(), young: 404.2082, nu: DEFAULT_NU, alpha: -0.01 },
        MaterialModel { name: "shrinky_dink_measured".into(), young: 404.2082, nu: DEFAULT_NU, alpha: -0.005 },
        MaterialModel { name: "abs_kirigami".into(), young: 761.6368, nu: DEFAULT_NU, alpha: 0.0 },
        MaterialModel { name: "abs_kirigami_measured".into(), young: 761.6368, nu: DEFAULT_NU, alpha: -0.0001 },
    ]
}

pub fn preset(name: &str) -> Result<MaterialModel, MaterialError> {
    presets()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| MaterialError::UnknownPreset(name.to_string()))
}

/// Temperature change and the number of continuation steps used to apply it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalLoad {
    #[serde(rename = "delta_T_K")]
    pub delta_t: f64,
    pub n_steps: usize,
}

impl ThermalLoad {
    pub fn new(delta_t: f64, n_steps: usize) -> Self {
        assert!(n_steps >= 1, "thermal load needs at least one step");
        Self { delta_t, n_steps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenstrainMode {
    /// diag(αΔT, αΔT, 0): biaxial in-plane contraction.
    #[default]
    InPlane,
    /// αΔT·I, used for element patch tests.
    Isotropic,
}

/// Equivalent biaxial contraction stress σ = −α·E·ΔT, MPa (diagnostic only).
pub fn contraction_stress(mat: &MaterialModel, delta_t: f64) -> f64 {
    -mat.alpha * mat.young * delta_t
}

/// Stress-free strain tensor, row-major 3×3.
pub fn thermal_eigenstrain(mat: &MaterialModel, delta_t: f64, mode: EigenstrainMode) -> [[f64; 3]; 3] {
    let e = mat.alpha * delta_t;
    let ez = match mode {
        EigenstrainMode::InPlane => 0.0,
        EigenstrainMode::Isotropic => e,
    };
    [[e, 0.0, 0.0], [0.0, e, 0.0], [0.0, 0.0, ez]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_stress_of_fitted_preset() {
        let s = preset("shrinky_dink").unwrap();
        assert!((contraction_stress(&s, 110.0) - 444.62902).abs() < 1e-5);
        assert_eq!(contraction_stress(&s, 0.0), 0.0);
        let k = preset("abs_kirigami").unwrap();
        assert_eq!(contraction_stress(&k, 110.0), 0.0);
    }

    #[test]
    fn eigenstrain_modes() {
        let s = preset("shrinky_dink").unwrap();
        let e = thermal_eigenstrain(&s, 110.0, EigenstrainMode::InPlane);
        assert!((e[0][0] + 1.1).abs() < 1e-12 && (e[1][1] + 1.1).abs() < 1e-12 && e[2][2] == 0.0);
        let m = preset("shrinky_dink_measured").unwrap();
        let e = thermal_eigenstrain(&m, 110.0, EigenstrainMode::Isotropic);
        for i in 0..3 {
            assert!((e[i][i] + 0.55).abs() < 1e-12);
        }
        assert_eq!(thermal_eigenstrain(&s, 0.0, EigenstrainMode::Isotropic), [[0.0; 3]; 3]);
    }

    #[test]
    fn poisson_bounds() {
        assert!(MaterialModel::new("x", 1.0, 0.5, 0.0).is_err());
        assert!(MaterialModel::new("x", -1.0, 0.3, 0.0).is_err());
        assert!(MaterialModel::new("x", 1.0, 0.49, 0.0).is_ok());
    }
}
