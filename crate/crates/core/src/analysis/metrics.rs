use serde::{Deserialize, Serialize};

use crate::fem::MorphResult;
use crate::meshing::LayeredMesh;
use crate::pattern::{Axis, SUBSTRATE};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Height {
    pub h_mm: f64,
    pub h_over_2r: f64,
}

/// Peak rise of the substrate reference plane above z = 0.
pub fn measure_height(result: &MorphResult, radius: f64) -> Height {
    let h = result.base_nodes.iter().map(|&n| result.deformed[n as usize][2]).fold(0.0, f64::max);
    Height { h_mm: h, h_over_2r: h / (2.0 * radius) }
}

/// Height at a grid load factor the run passed through.
pub fn height_at(result: &MorphResult, lambda: f64, radius: f64) -> Option<Height> {
    let state = result.state_at(lambda)?;
    let h = result
        .base_nodes
        .iter()
        .map(|&n| result.reference[n as usize][2] + state.displacement[n as usize][2])
        .fold(0.0, f64::max);
    Some(Height { h_mm: h, h_over_2r: h / (2.0 * radius) })
}

/// Bimorph curvature under interlayer mismatch strain.
pub fn timoshenko_curvature(e1: f64, t1: f64, e2: f64, t2: f64, mismatch: f64) -> f64 {
    let m = t1 / t2;
    let n = e1 / e2;
    let h = t1 + t2;
    6.0 * mismatch * (1.0 + m).powi(2) / (h * (3.0 * (1.0 + m).powi(2) + (1.0 + m * n) * (m * m + 1.0 / (m * n))))
}

/// Least-squares circle `(cx, cy, r)`: algebraic start, then geometric Gauss–Newton.
pub fn fit_circle(pts: &[[f64; 2]]) -> Option<(f64, f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut suu, mut svv, mut suv, mut suuu, mut svvv, mut suvv, mut svuu) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let (u, v) = (p[0] - mx, p[1] - my);
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-300 {
        return None;
    }
    let r1 = 0.5 * (suuu + suvv);
    let r2 = 0.5 * (svvv + svuu);
    let (mut cx, mut cy) = ((r1 * svv - r2 * suv) / det + mx, (suu * r2 - suv * r1) / det + my);
    let mut r = pts.iter().map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()).sum::<f64>() / n;
    for _ in 0..50 {
        // normal equations of d_i = |p_i - c| - r
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for p in pts {
            let (dx, dy) = (p[0] - cx, p[1] - cy);
            let d = (dx * dx + dy * dy).sqrt();
            if d == 0.0 {
                return None;
            }
            let j = [-dx / d, -dy / d, -1.0];
            let res = d - r;
            for a in 0..3 {
                jtr[a] += j[a] * res;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let m = solve3(jtj, jtr)?;
        cx -= m[0];
        cy -= m[1];
        r -= m[2];
        if m.iter().map(|v| v.abs()).fold(0.0, f64::max) <= 1e-15 * r.abs().max(1.0) {
            break;
        }
    }
    Some((cx, cy, r))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d.abs() < 1e-300 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *o = det(&m) / d;
    }
    Some(out)
}

/// Signed curvature of `(s, z)` samples; positive when the circle centre lies above.
pub fn profile_curvature(pts: &[[f64; 2]]) -> Result<f64, AnalysisError> {
    if pts.len() < 5 {
        return Err(AnalysisError::TooFewPoints(pts.len()));
    }
    let mean_z = pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64;
    let span = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) - pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    // a nearly straight profile: compare against a line fit before trusting the circle
    let (a, b) = line_fit(pts);
    let line_rms = (pts.iter().map(|p| (p[1] - a - b * p[0]).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    if line_rms <= 1e-12 * span.max(1.0) {
        return Ok(0.0);
    }
    match fit_circle(pts) {
        Some((_, cz, r)) if r.is_finite() && r > 0.0 => Ok(if cz > mean_z { 1.0 / r } else { -1.0 / r }),
        _ => Ok(0.0),
    }
}

fn line_fit(pts: &[[f64; 2]]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p[0] - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Curvature of the deformed substrate mid-surface along the strip centreline.
///
/// Samples lie within a tenth of the strip width of the centreline; one total
/// thickness is trimmed from each end.
pub fn fit_midline_curvature(mesh: &LayeredMesh, result: &MorphResult, axis: Axis) -> Result<f64, AnalysisError> {
    let li = mesh.layer_id(SUBSTRATE).ok_or_else(|| AnalysisError::Input("mesh has no substrate layer".into()))?;
    let [lo, hi] = mesh.layer_levels[li as usize];
    let (s_ax, w_ax) = match axis {
        Axis::X => (0, 1),
        Axis::Y => (1, 0),
    };
    let n2 = mesh.node_2d.iter().map(|&v| v as usize + 1).max().unwrap_or(0);
    let mut bot = vec![u32::MAX; n2];
    let mut top = vec![u32::MAX; n2];
    for (i, (&v, &l)) in mesh.node_2d.iter().zip(&mesh.node_level).enumerate() {
        if l == lo {
            bot[v as usize] = i as u32;
        } else if l == hi {
            top[v as usize] = i as u32;
        }
    }
    let pairs: Vec<(u32, u32)> =
        bot.iter().zip(&top).filter(|(b, t)| **b != u32::MAX && **t != u32::MAX).map(|(&b, &t)| (b, t)).collect();
    let coord = |n: u32, k: usize| result.reference[n as usize][k];
    let (smin, smax, wmin, wmax) = pairs.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(n, _)| (a.min(coord(n, s_ax)), b.max(coord(n, s_ax)), c.min(coord(n, w_ax)), d.max(coord(n, w_ax))),
    );
    let wc = 0.5 * (wmin + wmax);
    let band = 0.1 * (wmax - wmin);
    let trim = mesh.total_height();
    let pts: Vec<[f64; 2]> = pairs
        .iter()
        .filter(|&&(b, _)| {
            let s = coord(b, s_ax);
            (coord(b, w_ax) - wc).abs() <= band + 1e-12 && s >= smin + trim && s <= smax - trim
        })
        .map(|&(b, t)| {
            let (pb, pt) = (result.deformed[b as usize], result.deformed[t as usize]);
            [0.5 * (pb[s_ax] + pt[s_ax]), 0.5 * (pb[2] + pt[2])]
        })
        .collect();
    profile_curvature(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::GridState;
    use crate::meshing::{extrude, triangulate, LayerSpec};
    use crate::pattern::{PatternSpec, KIRIGAMI};
    use proptest::prelude::*;

    fn result(reference: Vec<[f64; 3]>, deformed: Vec<[f64; 3]>, base_nodes: Vec<u32>) -> MorphResult {
        let displacement: Vec<[f64; 3]> =
            reference.iter().zip(&deformed).map(|(x, y)| [y[0] - x[0], y[1] - x[1], y[2] - x[2]]).collect();
        MorphResult {
            grid_states: vec![GridState { lambda: 1.0, displacement: displacement.clone() }],
            reference,
            displacement,
            deformed,
            lambda: 1.0,
            completed: true,
            element_stress: vec![],
            max_stress: 0.0,
            history: vec![],
            strain_energy: 0.0,
            base_nodes,
            halvings: 0,
            negative_pivots: 0,
        }
    }

    #[test]
    fn equal_layers_give_the_classic_bimetal_curvature() {
        // equal thickness and modulus: κ = 3ε / (2h)
        let k = timoshenko_curvature(500.0, 0.5, 500.0, 0.5, 1e-3);
        assert!((k - 1.5e-3).abs() < 1e-15);
        assert_eq!(timoshenko_curvature(500.0, 0.5, 500.0, 0.5, 0.0), 0.0);
    }

    #[test]
    fn circle_sign_follows_the_centre() {
        let r = 25.0;
        let up: Vec<[f64; 2]> = (0..21).map(|i| (i as f64 - 10.0) * 0.05).map(|t| [r * t.sin(), r - r * t.cos()]).collect();
        let down: Vec<[f64; 2]> = up.iter().map(|p| [p[0], -p[1]]).collect();
        assert!((profile_curvature(&up).unwrap() - 1.0 / r).abs() < 1e-9);
        assert!((profile_curvature(&down).unwrap() + 1.0 / r).abs() < 1e-9);
        let flat: Vec<[f64; 2]> = (0..9).map(|i| [i as f64, 0.3 * i as f64 + 1.0]).collect();
        assert_eq!(profile_curvature(&flat).unwrap(), 0.0);
        assert_eq!(profile_curvature(&flat[..4]), Err(AnalysisError::TooFewPoints(4)));
    }

    #[test]
    fn midline_fit_recovers_an_imposed_cylinder() {
        let layout = PatternSpec::Strip { length: 60.0, width: 10.0, margin: 0.0 }.build().unwrap();
        let tri = triangulate(&layout, 1.25, 20.0).unwrap();
        let mesh = extrude(&tri, &[LayerSpec::new(SUBSTRATE, 0.1, "s"), LayerSpec::new(KIRIGAMI, 1.8, "k")]).unwrap();
        let cx = 30.0;
        for radius in [80.0, -150.0] {
            // bend about a y-parallel axis at height `radius`
            let deformed: Vec<[f64; 3]> = mesh
                .nodes
                .iter()
                .map(|p| {
                    let t = (p[0] - cx) / radius;
                    [cx + (radius - p[2]) * t.sin(), p[1], radius - (radius - p[2]) * t.cos()]
                })
                .collect();
            let r = result(mesh.nodes.clone(), deformed, vec![]);
            let k = fit_midline_curvature(&mesh, &r, Axis::X).unwrap();
            // substrate mid-surface sits at z = 0.05
            let oracle = 1.0 / (radius - 0.05);
            assert!((k - oracle).abs() <= 1e-3 * oracle.abs(), "{k} vs {oracle}");
        }
    }

    #[test]
    fn height_is_measured_on_the_base_plane_only() {
        let reference = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]];
        let deformed = vec![[0.0, 0.0, 0.5], [1.0, 0.0, -0.2], [0.0, 0.0, 9.0]];
        let r = result(reference, deformed, vec![0, 1]);
        let h = measure_height(&r, 10.0);
        assert_eq!(h, Height { h_mm: 0.5, h_over_2r: 0.025 });
        assert_eq!(height_at(&r, 1.0, 10.0), Some(h));
        assert_eq!(height_at(&r, 0.5, 10.0), None);
    }

    proptest! {
        #[test]
        fn timoshenko_is_linear_in_mismatch_and_scale_free_in_moduli(
            e1 in 1.0..5000.0f64, e2 in 1.0..5000.0f64, t1 in 0.01..5.0f64, t2 in 0.01..5.0f64,
            eps in -0.05..0.05f64, a in 0.1..10.0f64, s in 0.01..100.0f64,
        ) {
            let k = timoshenko_curvature(e1, t1, e2, t2, eps);
            let tol = 1e-12 * k.abs().max(1e-300);
            prop_assert!((timoshenko_curvature(e1, t1, e2, t2, a * eps) - a * k).abs() <= 1e-12 * (a * k).abs() + tol);
            prop_assert!((timoshenko_curvature(s * e1, t1, s * e2, t2, eps) - k).abs() <= 1e-12 * k.abs() + tol);
        }

        #[test]
        fn circle_fit_recovers_exact_arcs(
            cx in -50.0..50.0f64, cy in -50.0..50.0f64, r in 0.5..200.0f64, t0 in -3.0..3.0f64, span in 0.3..6.0f64,
        ) {
            let pts: Vec<[f64; 2]> = (0..15)
                .map(|i| t0 + span * i as f64 / 14.0)
                .map(|t| [cx + r * t.cos(), cy + r * t.sin()])
                .collect();
            let (fx, fy, fr) = fit_circle(&pts).unwrap();
            prop_assert!((fx - cx).abs() < 1e-6 * r && (fy - cy).abs() < 1e-6 * r && (fr - r).abs() < 1e-6 * r);
        }

        #[test]
        fn height_is_invariant_under_in_plane_rigid_motion(
            zs in proptest::collection::vec(-2.0..5.0f64, 6), theta in -3.2..3.2f64, dx in -40.0..40.0f64, dy in -40.0..40.0f64,
        ) {
            let reference: Vec<[f64; 3]> = (0..6).map(|i| [i as f64, (i * i) as f64 * 0.3, 0.0]).collect();
            let deformed: Vec<[f64; 3]> = reference.iter().zip(&zs).map(|(p, &z)| [p[0] + 0.1, p[1], z]).collect();
            let (c, s) = (theta.cos(), theta.sin());
            let moved: Vec<[f64; 3]> = deformed.iter().map(|p| [c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] + dy, p[2]]).collect();
            let base: Vec<u32> = (0..6).collect();
            let h0 = measure_height(&result(reference.clone(), deformed, base.clone()), 30.0);
            let h1 = measure_height(&result(reference, moved, base), 30.0);
            prop_assert_eq!(h0, h1);
        }
    }
}
