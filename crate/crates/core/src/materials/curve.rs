use std::path::Path;

use super::MaterialError;

/// Default strain limit for the energy-equivalent modulus fit.
pub const DEFAULT_EPS_M: f64 = 0.05;

/// Uniaxial tensile samples (strain, stress MPa), strictly increasing strain from (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct StressStrainCurve {
    samples: Vec<(f64, f64)>,
}

impl StressStrainCurve {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, MaterialError> {
        let perr = |msg: &str| MaterialError::Parse { line: 0, msg: msg.into() };
        if samples.len() < 2 {
            return Err(perr("curve needs at least two samples"));
        }
        if samples[0] != (0.0, 0.0) {
            return Err(perr("curve must start at (0, 0)"));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(perr("strain must be strictly increasing"));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn max_strain(&self) -> f64 {
        self.samples.last().map(|s| s.0).unwrap_or(0.0)
    }

    /// Stress at `eps` by linear interpolation.
    pub fn stress_at(&self, eps: f64) -> f64 {
        let i = self.samples.partition_point(|s| s.0 < eps);
        if i == 0 {
            return self.samples[0].1;
        }
        if i >= self.samples.len() {
            return self.samples.last().unwrap().1;
        }
        let (e0, s0) = self.samples[i - 1];
        let (e1, s1) = self.samples[i];
        s0 + (s1 - s0) * (eps - e0) / (e1 - e0)
    }
}

/// Energy-equivalent linear modulus: E = 2/ε_m² · ∫₀^ε_m σ dε, trapezoidal
/// on the samples with the last panel cut at ε_m.
pub fn fit_linear_modulus(curve: &StressStrainCurve, eps_m: f64) -> Result<f64, MaterialError> {
    let max = curve.max_strain();
    if !(eps_m > 0.0 && eps_m <= max) {
        return Err(MaterialError::Range { eps_m, max });
    }
    let mut energy = 0.0;
    for w in curve.samples.windows(2) {
        let (e0, s0) = w[0];
        if e0 >= eps_m {
            break;
        }
        let (e1, s1) = if w[1].0 > eps_m { (eps_m, curve.stress_at(eps_m)) } else { w[1] };
        energy += 0.5 * (s0 + s1) * (e1 - e0);
    }
    Ok(2.0 * energy / (eps_m * eps_m))
}

/// CSV with header `strain,stress_mpa`.
pub fn parse_stress_strain_csv(text: &str) -> Result<StressStrainCurve, MaterialError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(MaterialError::Parse { line: 1, msg: "empty file".into() })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["strain", "stress_mpa"] {
        return Err(MaterialError::Parse { line: 1, msg: format!("expected header `strain,stress_mpa`, got `{header}`") });
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let mut f = line.split(',').map(str::trim);
        let mut num = || -> Result<f64, MaterialError> {
            f.next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or(MaterialError::Parse { line: i + 1, msg: format!("bad row `{line}`") })
        };
        samples.push((num()?, num()?));
    }
    StressStrainCurve::new(samples)
}

pub fn read_stress_strain_csv(path: &Path) -> Result<StressStrainCurve, MaterialError> {
    let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io(format!("{}: {e}", path.display())))?;
    parse_stress_strain_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_curve_is_a_fixed_point() {
        let c = StressStrainCurve::new((0..=10).map(|i| (i as f64 * 0.01, 500.0 * i as f64 * 0.01)).collect()).unwrap();
        let e = fit_linear_modulus(&c, 0.05).unwrap();
        assert!((e - 500.0).abs() < 1e-9, "{e}");
        // cut inside a panel
        assert!((fit_linear_modulus(&c, 0.037).unwrap() - 500.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_range() {
        let c = StressStrainCurve::new(vec![(0.0, 0.0), (0.01, 5.0)]).unwrap();
        assert!(matches!(fit_linear_modulus(&c, 0.02), Err(MaterialError::Range { .. })));
        assert!(fit_linear_modulus(&c, 0.0).is_err());
    }

    #[test]
    fn csv_header_and_order() {
        assert!(parse_stress_strain_csv("strain,stress_mpa\n0,0\n0.01,5\n").is_ok());
        assert!(parse_stress_strain_csv("eps,s\n0,0\n").is_err());
        assert!(parse_stress_strain_csv("strain,stress_mpa\n0,0\n0.01,5\n0.005,6\n").is_err());
    }
}
