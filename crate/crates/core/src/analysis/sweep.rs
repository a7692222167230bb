use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::height_at;
use super::AnalysisError;
use crate::fem::{solve_static, FemError, MorphResult, SolveConfig};
use crate::materials::{EigenstrainMode, MaterialModel, ThermalLoad};
use crate::meshing::{extrude, triangulate, LayerSpec};
use crate::pattern::{removed_fraction, PatternSpec};

/// Everything except γ that defines one sweep case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    /// Must be γ-parametric (lotus or spoon).
    pub pattern: PatternSpec,
    pub h_target: f64,
    pub min_angle_deg: f64,
    pub layers: Vec<LayerSpec>,
    /// One material per entry of `layers`.
    pub materials: Vec<MaterialModel>,
    pub mode: EigenstrainMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub alpha: f64,
    /// Height at the common load factor, mm.
    pub h_mm: f64,
    pub h_over_2r: f64,
    /// Common load factor the height refers to.
    pub lambda: f64,
    /// Last load factor this case converged to on its own.
    pub final_lambda: f64,
    pub runtime_s: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Largest load-grid point every successful case reached.
    pub common_lambda: f64,
}

struct CaseRun {
    alpha: f64,
    radius: f64,
    outcome: Result<MorphResult, String>,
    runtime_s: f64,
}

fn run_case(spec: &CaseSpec, gamma: f64, load: &ThermalLoad, cfg: &SolveConfig) -> CaseRun {
    let start = Instant::now();
    let mut alpha = f64::NAN;
    let radius = spec.pattern.radius().unwrap_or(f64::NAN);
    let outcome = (|| -> Result<MorphResult, String> {
        let pattern = spec
            .pattern
            .with_gamma(gamma)
            .ok_or_else(|| "pattern has no gamma parameter".to_string())?;
        let layout = pattern.build().map_err(|e| e.to_string())?;
        alpha = removed_fraction(&layout).map_err(|e| e.to_string())?;
        let tri = triangulate(&layout, spec.h_target, spec.min_angle_deg).map_err(|e| e.to_string())?;
        let mesh = extrude(&tri, &spec.layers).map_err(|e| e.to_string())?;
        match solve_static(&mesh, &spec.materials, load, spec.mode, cfg) {
            Ok(r) => Ok(r),
            Err(FemError::Stall { result, .. }) => Ok(*result),
            Err(e) => Err(e.to_string()),
        }
    })();
    CaseRun { alpha, radius, outcome, runtime_s: start.elapsed().as_secs_f64() }
}

/// Runs pattern → mesh → solve → measure for each γ concurrently and compares
/// heights at the largest load-grid point all successful cases reached.
/// Failed cases keep their row with the error recorded.
pub fn sweep_gamma(
    spec: &CaseSpec,
    gammas: &[f64],
    load: &ThermalLoad,
    cfg: &SolveConfig,
) -> Result<Sweep, AnalysisError> {
    if gammas.is_empty() {
        return Err(AnalysisError::Input("no gamma values".into()));
    }
    if let Some(g) = gammas.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
        return Err(AnalysisError::Input(format!("gamma {g} outside (0, 1]")));
    }
    if spec.pattern.gamma().is_none() {
        return Err(AnalysisError::Input("sweep needs a lotus or spoon pattern".into()));
    }
    let runs: Vec<CaseRun> = gammas.par_iter().map(|&g| run_case(spec, g, load, cfg)).collect();
    let common = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(MorphResult::last_grid_lambda)
        .fold(f64::INFINITY, f64::min);
    let common = if common.is_finite() { common } else { 0.0 };
    let rows = gammas
        .iter()
        .zip(runs)
        .map(|(&gamma, run)| {
            let mut row = SweepRow {
                gamma,
                alpha: run.alpha,
                h_mm: f64::NAN,
                h_over_2r: f64::NAN,
                lambda: common,
                final_lambda: f64::NAN,
                runtime_s: run.runtime_s,
                error: None,
            };
            match run.outcome {
                Ok(result) => {
                    row.final_lambda = result.lambda;
                    match height_at(&result, common, run.radius) {
                        Some(h) => {
                            row.h_mm = h.h_mm;
                            row.h_over_2r = h.h_over_2r;
                        }
                        None => row.error = Some(format!("no converged state at load factor {common}")),
                    }
                }
                Err(e) => row.error = Some(e),
            }
            row
        })
        .collect();
    Ok(Sweep { rows, common_lambda: common })
}

fn field(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

impl Sweep {
    /// `gamma,alpha,H_mm,H_over_2R,lambda,runtime_s`; failed cases leave the
    /// measured fields empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gamma,alpha,H_mm,H_over_2R,lambda,runtime_s\n");
        for r in &self.rows {
            let lambda = if r.error.is_none() { field(r.lambda) } else { String::new() };
            s.push_str(&format!(
                "{},{},{},{},{},{:.3}\n",
                r.gamma,
                field(r.alpha),
                field(r.h_mm),
                field(r.h_over_2r),
                lambda,
                r.runtime_s
            ));
        }
        s
    }

    /// Two whitespace-separated columns, γ and H/2R, for plotting.
    pub fn to_plot(&self) -> String {
        let mut s = format!("# radius ratio gamma vs normalized height H/2R at load factor {}\n", self.common_lambda);
        for r in self.rows.iter().filter(|r| r.error.is_none()) {
            s.push_str(&format!("{} {}\n", r.gamma, r.h_over_2r));
        }
        s
    }

    /// H/2R strictly decreases with γ over the successful rows, sorted by γ.
    pub fn is_monotone_decreasing(&self) -> bool {
        let mut ok: Vec<&SweepRow> = self.rows.iter().filter(|r| r.error.is_none()).collect();
        ok.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        ok.windows(2).all(|w| w[0].gamma == w[1].gamma || w[1].h_over_2r < w[0].h_over_2r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(gamma: f64, h: f64, error: Option<&str>) -> SweepRow {
        SweepRow {
            gamma,
            alpha: 0.5 * (1.0 - gamma * gamma),
            h_mm: h,
            h_over_2r: h / 60.0,
            lambda: 0.25,
            final_lambda: 0.3,
            runtime_s: 1.23456,
            error: error.map(String::from),
        }
    }

    #[test]
    fn csv_leaves_failed_measurements_empty() {
        let s = Sweep { rows: vec![row(0.2, 12.0, None), row(0.4, f64::NAN, Some("mesh failed"))], common_lambda: 0.25 };
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "gamma,alpha,H_mm,H_over_2R,lambda,runtime_s");
        assert_eq!(lines[1], "0.2,0.48,12,0.2,0.25,1.235");
        assert_eq!(lines[2], "0.4,0.42,,,,1.235");
        let plot = s.to_plot();
        assert!(plot.starts_with('#'));
        assert_eq!(plot.lines().nth(1), Some("0.2 0.2"));
        assert_eq!(plot.lines().count(), 2);
    }

    #[test]
    fn monotonicity_ignores_failed_rows_and_order() {
        let ok = Sweep { rows: vec![row(0.6, 6.0, None), row(0.2, 12.0, None), row(0.4, 1.0, Some("x"))], common_lambda: 0.25 };
        assert!(ok.is_monotone_decreasing());
        let tie = Sweep { rows: vec![row(0.2, 6.0, None), row(0.6, 6.0, None)], common_lambda: 0.25 };
        assert!(!tie.is_monotone_decreasing());
    }
}
