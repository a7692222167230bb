//! Six-node wedge, total Lagrangian, St. Venant–Kirchhoff on `E − ε*` with a
//! logarithmic volumetric term.
//!
//! Voigt order is `[11, 22, 33, 12, 23, 13]` with engineering shears. The
//! shear-modulus part of the energy uses 3 in-plane × 2 through-thickness
//! points. The volumetric part optionally uses one in-plane point. A single
//! enhanced mode `ζ·(detJ₀/detJ)·α` on `E_zz` is condensed out by a local
//! Newton solve, which lets one element through a thin layer bend without
//! Poisson thickness locking.

use super::FemError;

const G: f64 = 0.577_350_269_189_625_8;
const IN_PLANE: [([f64; 2], f64); 3] = [([1.0 / 6.0, 1.0 / 6.0], 1.0 / 6.0), ([2.0 / 3.0, 1.0 / 6.0], 1.0 / 6.0), ([1.0 / 6.0, 2.0 / 3.0], 1.0 / 6.0)];

pub type Mat18 = [[f64; 18]; 18];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

impl Lame {
    pub fn from_young(young: f64, nu: f64) -> Self {
        Self { lambda: young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), mu: young / (2.0 * (1.0 + nu)) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementOptions {
    /// One in-plane point for the λ-part of the energy.
    pub reduced_volumetric: bool,
    /// Condensed enhanced thickness strain.
    pub enhanced_thickness: bool,
}

impl Default for ElementOptions {
    fn default() -> Self {
        Self { reduced_volumetric: true, enhanced_thickness: true }
    }
}

/// Inputs for one element evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementState {
    pub id: usize,
    /// Reference coordinates: bottom triangle then top triangle, mm.
    pub x_ref: [[f64; 3]; 6],
    /// Nodal displacements, node-major, mm.
    pub u: [f64; 18],
    pub material: usize,
    /// Stress-free strain at the current load factor.
    pub eigenstrain: [[f64; 3]; 3],
}

#[derive(Debug, Clone)]
pub struct ElementResponse {
    /// Strain energy, N·mm.
    pub energy: f64,
    pub force: [f64; 18],
    pub tangent: Option<Box<Mat18>>,
    /// Condensed enhanced-mode amplitude.
    pub alpha: f64,
}

#[derive(Clone, Copy)]
enum Part {
    Shear,
    Volumetric,
    Full,
}

struct Qp {
    grad: [[f64; 3]; 6],
    wdet: f64,
    /// Coefficient of α in the enhanced E_zz.
    enh: f64,
    part: Part,
}

fn shape_derivs(xi: f64, eta: f64, zeta: f64) -> [[f64; 3]; 6] {
    let l = [1.0 - xi - eta, xi, eta];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut d = [[0.0; 3]; 6];
    for i in 0..3 {
        let (lo, hi) = (0.5 * (1.0 - zeta), 0.5 * (1.0 + zeta));
        d[i] = [dl[i][0] * lo, dl[i][1] * lo, -0.5 * l[i]];
        d[i + 3] = [dl[i][0] * hi, dl[i][1] * hi, 0.5 * l[i]];
    }
    d
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Reference Jacobian `J[j][k] = ∂X_j/∂ξ_k`, its determinant and the
/// physical shape gradients.
fn reference_map(x: &[[f64; 3]; 6], xi: f64, eta: f64, zeta: f64) -> (f64, [[f64; 3]; 6]) {
    let d = shape_derivs(xi, eta, zeta);
    let mut j = [[0.0; 3]; 3];
    for a in 0..6 {
        for r in 0..3 {
            for c in 0..3 {
                j[r][c] += x[a][r] * d[a][c];
            }
        }
    }
    let det = det3(&j);
    // inverse of J; grad N = J^{-T} dN/dξ
    let inv = [
        [
            (j[1][1] * j[2][2] - j[1][2] * j[2][1]) / det,
            (j[0][2] * j[2][1] - j[0][1] * j[2][2]) / det,
            (j[0][1] * j[1][2] - j[0][2] * j[1][1]) / det,
        ],
        [
            (j[1][2] * j[2][0] - j[1][0] * j[2][2]) / det,
            (j[0][0] * j[2][2] - j[0][2] * j[2][0]) / det,
            (j[0][2] * j[1][0] - j[0][0] * j[1][2]) / det,
        ],
        [
            (j[1][0] * j[2][1] - j[1][1] * j[2][0]) / det,
            (j[0][1] * j[2][0] - j[0][0] * j[2][1]) / det,
            (j[0][0] * j[1][1] - j[0][1] * j[1][0]) / det,
        ],
    ];
    let mut g = [[0.0; 3]; 6];
    for a in 0..6 {
        for k in 0..3 {
            g[a][k] = (0..3).map(|m| inv[m][k] * d[a][m]).sum();
        }
    }
    (det, g)
}

/// Reference volume, mm³.
pub fn wedge_volume(x: &[[f64; 3]; 6]) -> f64 {
    let mut v = 0.0;
    for &([xi, eta], w) in &IN_PLANE {
        for zeta in [-G, G] {
            v += w * reference_map(x, xi, eta, zeta).0;
        }
    }
    v
}

fn quadrature(x: &[[f64; 3]; 6], opts: ElementOptions, id: usize) -> Result<Vec<Qp>, FemError> {
    let det0 = reference_map(x, 1.0 / 3.0, 1.0 / 3.0, 0.0).0;
    let mut qps = Vec::with_capacity(8);
    let mut push = |xi: f64, eta: f64, zeta: f64, w: f64, part: Part| -> Result<(), FemError> {
        let (det, grad) = reference_map(x, xi, eta, zeta);
        if !(det > 0.0) {
            return Err(FemError::InvertedElement { element: id });
        }
        let enh = if opts.enhanced_thickness { zeta * det0 / det } else { 0.0 };
        qps.push(Qp { grad, wdet: w * det, enh, part });
        Ok(())
    };
    let full_part = if opts.reduced_volumetric { Part::Shear } else { Part::Full };
    for &([xi, eta], w) in &IN_PLANE {
        for zeta in [-G, G] {
            push(xi, eta, zeta, w, full_part)?;
        }
    }
    if opts.reduced_volumetric {
        for zeta in [-G, G] {
            push(1.0 / 3.0, 1.0 / 3.0, zeta, 0.5, Part::Volumetric)?;
        }
    }
    Ok(qps)
}

/// Material law on Voigt Green strain: `μ|E − ε*|² + ½λ(ln J − ln J*)²`,
/// where `J = √det(I + 2E)` and `J*` is the same for `ε*`. Equal to
/// St. Venant–Kirchhoff to first order; the logarithmic volumetric term keeps
/// thin layers from collapsing through the thickness.
struct Law {
    lambda: f64,
    mu: f64,
    eig: [f64; 6],
    ln_js: f64,
}

/// Stress state of the law at one point.
struct LawPoint {
    energy: f64,
    s: [f64; 6],
    /// Voigt components of `C⁻¹`.
    cinv: [[f64; 3]; 3],
    g: f64,
}

const VOIGT: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)];

fn metric(e: &[f64; 6]) -> [[f64; 3]; 3] {
    [
        [1.0 + 2.0 * e[0], e[3], e[5]],
        [e[3], 1.0 + 2.0 * e[1], e[4]],
        [e[5], e[4], 1.0 + 2.0 * e[2]],
    ]
}

fn inverse3(m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            r[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    r
}

/// `½ ln det(I + 2E)` for a tensor strain, or `None` if the metric is not
/// positive.
fn half_log_det(e: &[[f64; 3]; 3]) -> Option<f64> {
    let c = metric(&voigt(e));
    let d = det3(&c);
    (d > 0.0).then(|| 0.5 * d.ln())
}

impl Law {
    fn new(m: Lame, eigenstrain: &[[f64; 3]; 3]) -> Option<Self> {
        Some(Self { lambda: m.lambda, mu: m.mu, eig: voigt(eigenstrain), ln_js: half_log_det(eigenstrain)? })
    }

    fn moduli(&self, part: Part) -> (f64, f64) {
        match part {
            Part::Shear => (0.0, self.mu),
            Part::Volumetric => (self.lambda, 0.0),
            Part::Full => (self.lambda, self.mu),
        }
    }

    fn eval(&self, part: Part, e: &[f64; 6]) -> Option<LawPoint> {
        let (l, mu) = self.moduli(part);
        let c = metric(e);
        let det = det3(&c);
        if !(det > 0.0) {
            return None;
        }
        let cinv = inverse3(&c, det);
        let g = 0.5 * det.ln() - self.ln_js;
        let eb: [f64; 6] = std::array::from_fn(|i| e[i] - self.eig[i]);
        let mut s = [0.0; 6];
        for (k, &(i, j)) in VOIGT.iter().enumerate() {
            let shear = if k < 3 { 2.0 } else { 1.0 };
            s[k] = shear * mu * eb[k] + l * g * cinv[i][j];
        }
        let energy = mu * (eb[0] * eb[0] + eb[1] * eb[1] + eb[2] * eb[2] + 0.5 * (eb[3] * eb[3] + eb[4] * eb[4] + eb[5] * eb[5]))
            + 0.5 * l * g * g;
        Some(LawPoint { energy, s, cinv, g })
    }

    /// `∂S/∂E` in Voigt form.
    fn tangent(&self, part: Part, p: &LawPoint) -> [[f64; 6]; 6] {
        let (l, mu) = self.moduli(part);
        let ci = &p.cinv;
        let mut d = [[0.0; 6]; 6];
        for (a, &(i, j)) in VOIGT.iter().enumerate() {
            for (b, &(k, m)) in VOIGT.iter().enumerate() {
                let dcinv = -(ci[i][k] * ci[m][j] + ci[i][m] * ci[k][j]);
                d[a][b] = l * (ci[i][j] * ci[k][m] + p.g * dcinv);
            }
            d[a][a] += if a < 3 { 2.0 * mu } else { mu };
        }
        d
    }
}

fn deformation_gradient(grad: &[[f64; 3]; 6], u: &[f64; 18]) -> [[f64; 3]; 3] {
    let mut f = [[0.0; 3]; 3];
    for (k, row) in f.iter_mut().enumerate() {
        row[k] = 1.0;
        for a in 0..6 {
            for j in 0..3 {
                row[j] += u[3 * a + k] * grad[a][j];
            }
        }
    }
    f
}

fn green_voigt(f: &[[f64; 3]; 3]) -> [f64; 6] {
    let c = |i: usize, j: usize| (0..3).map(|k| f[k][i] * f[k][j]).sum::<f64>();
    [0.5 * (c(0, 0) - 1.0), 0.5 * (c(1, 1) - 1.0), 0.5 * (c(2, 2) - 1.0), c(0, 1), c(1, 2), c(0, 2)]
}

fn b_matrix(f: &[[f64; 3]; 3], grad: &[[f64; 3]; 6]) -> [[f64; 18]; 6] {
    let mut b = [[0.0; 18]; 6];
    for a in 0..6 {
        let g = grad[a];
        for k in 0..3 {
            let c = 3 * a + k;
            let fk = f[k];
            b[0][c] = fk[0] * g[0];
            b[1][c] = fk[1] * g[1];
            b[2][c] = fk[2] * g[2];
            b[3][c] = fk[0] * g[1] + fk[1] * g[0];
            b[4][c] = fk[1] * g[2] + fk[2] * g[1];
            b[5][c] = fk[0] * g[2] + fk[2] * g[0];
        }
    }
    b
}

fn voigt(t: &[[f64; 3]; 3]) -> [f64; 6] {
    [t[0][0], t[1][1], t[2][2], t[0][1] + t[1][0], t[1][2] + t[2][1], t[0][2] + t[2][0]]
}

/// Energy, internal force and (optionally) consistent tangent of one wedge.
pub fn element_force_tangent(
    state: &ElementState,
    mat: Lame,
    opts: ElementOptions,
    want_tangent: bool,
) -> Result<ElementResponse, FemError> {
    let inverted = FemError::InvertedElement { element: state.id };
    let qps = quadrature(&state.x_ref, opts, state.id)?;
    let law = Law::new(mat, &state.eigenstrain).ok_or_else(|| inverted.clone())?;
    let mut fs = Vec::with_capacity(qps.len());
    let mut es = Vec::with_capacity(qps.len());
    for q in &qps {
        let f = deformation_gradient(&q.grad, &state.u);
        if det3(&f) <= 0.0 {
            return Err(inverted);
        }
        es.push(green_voigt(&f));
        fs.push(f);
    }
    let enhanced = |alpha: f64| -> Result<Vec<LawPoint>, FemError> {
        qps.iter()
            .zip(&es)
            .map(|(q, e)| {
                let mut e = *e;
                e[2] += q.enh * alpha;
                law.eval(q.part, &e).ok_or_else(|| inverted.clone())
            })
            .collect()
    };

    // condense the enhanced mode: minimise the element energy over α
    let mut alpha = 0.0;
    let mut pts = enhanced(alpha)?;
    for _ in 0..30 {
        let (mut h, mut k) = (0.0, 0.0);
        for (q, p) in qps.iter().zip(&pts) {
            if q.enh != 0.0 {
                h += q.wdet * q.enh * p.s[2];
                k += q.wdet * q.enh * q.enh * law.tangent(q.part, p)[2][2];
            }
        }
        if !(k > 0.0) {
            break;
        }
        let step = -h / k;
        if step.abs() <= 1e-15 * (1.0 + alpha.abs()) {
            break;
        }
        alpha += step;
        pts = enhanced(alpha)?;
    }

    let mut energy = 0.0;
    let mut force = [0.0; 18];
    let mut kmat = if want_tangent { Some(Box::new([[0.0; 18]; 18])) } else { None };
    let mut k_ua = [0.0; 18];
    let mut k_aa = 0.0;
    for ((q, p), f) in qps.iter().zip(&pts).zip(&fs) {
        let s = p.s;
        energy += q.wdet * p.energy;
        let b = b_matrix(f, &q.grad);
        for c in 0..18 {
            force[c] += q.wdet * (0..6).map(|i| b[i][c] * s[i]).sum::<f64>();
        }
        let Some(k) = kmat.as_deref_mut() else { continue };
        let d = law.tangent(q.part, p);
        // material part Bᵀ D B
        let mut db = [[0.0; 18]; 6];
        for c in 0..18 {
            for i in 0..6 {
                db[i][c] = (0..6).map(|j| d[i][j] * b[j][c]).sum();
            }
        }
        if q.enh != 0.0 {
            for c in 0..18 {
                k_ua[c] += q.wdet * q.enh * db[2][c];
            }
            k_aa += q.wdet * q.enh * q.enh * d[2][2];
        }
        for r in 0..18 {
            for c in r..18 {
                let v: f64 = (0..6).map(|i| b[i][r] * db[i][c]).sum();
                k[r][c] += q.wdet * v;
            }
        }
        // geometric part (g_aᵀ S g_b) I
        let sm = [[s[0], s[3], s[5]], [s[3], s[1], s[4]], [s[5], s[4], s[2]]];
        for a in 0..6 {
            let sg: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| sm[i][j] * q.grad[a][j]).sum());
            for bn in a..6 {
                let v = q.wdet * (0..3).map(|i| sg[i] * q.grad[bn][i]).sum::<f64>();
                for dd in 0..3 {
                    k[3 * a + dd][3 * bn + dd] += v;
                }
            }
        }
    }
    if let Some(k) = kmat.as_deref_mut() {
        if k_aa > 0.0 {
            for r in 0..18 {
                for c in r..18 {
                    k[r][c] -= k_ua[r] * k_ua[c] / k_aa;
                }
            }
        }
        for r in 0..18 {
            for c in 0..r {
                k[r][c] = k[c][r];
            }
        }
    }
    Ok(ElementResponse { energy, force, tangent: kmat, alpha })
}

/// Von Mises value of the Cauchy stress at the element centre, MPa.
pub fn centre_von_mises(state: &ElementState, mat: Lame) -> f64 {
    let (_, grad) = reference_map(&state.x_ref, 1.0 / 3.0, 1.0 / 3.0, 0.0);
    let f = deformation_gradient(&grad, &state.u);
    let Some(p) = Law::new(mat, &state.eigenstrain).and_then(|law| law.eval(Part::Full, &green_voigt(&f))) else {
        return f64::NAN;
    };
    let s = p.s;
    let sm = [[s[0], s[3], s[5]], [s[3], s[1], s[4]], [s[5], s[4], s[2]]];
    let j = det3(&f);
    let mut sig = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            sig[i][k] = (0..3)
                .flat_map(|a| (0..3).map(move |b| (a, b)))
                .map(|(a, b)| f[i][a] * sm[a][b] * f[k][b])
                .sum::<f64>()
                / j;
        }
    }
    let d = [sig[0][0] - sig[1][1], sig[1][1] - sig[2][2], sig[2][2] - sig[0][0]];
    (0.5 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        + 3.0 * (sig[0][1] * sig[0][1] + sig[1][2] * sig[1][2] + sig[0][2] * sig[0][2]))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn wedge() -> [[f64; 3]; 6] {
        let b = [[0.0, 0.0, 0.0], [1.3, 0.1, 0.0], [0.2, 0.9, 0.0]];
        let t = 0.4;
        [b[0], b[1], b[2], [b[0][0], b[0][1], t], [b[1][0], b[1][1], t], [b[2][0], b[2][1], t]]
    }

    fn state(u: [f64; 18], eig: f64) -> ElementState {
        ElementState { id: 0, x_ref: wedge(), u, material: 0, eigenstrain: [[eig, 0.0, 0.0], [0.0, eig, 0.0], [0.0, 0.0, eig]] }
    }

    const MAT: Lame = Lame { lambda: 6000.0, mu: 130.0 };

    fn variants() -> [ElementOptions; 3] {
        [
            ElementOptions::default(),
            ElementOptions { reduced_volumetric: false, enhanced_thickness: false },
            ElementOptions { reduced_volumetric: false, enhanced_thickness: true },
        ]
    }

    #[test]
    fn volume_of_prism() {
        let v = wedge_volume(&wedge());
        let a = 0.5 * (1.3 * 0.9 - 0.2 * 0.1);
        assert!((v - a * 0.4).abs() < 1e-14);
    }

    #[test]
    fn reference_state_has_six_rigid_modes() {
        for opts in variants() {
            let r = element_force_tangent(&state([0.0; 18], 0.0), MAT, opts, true).unwrap();
            assert!(r.force.iter().all(|f| f.abs() < 1e-12));
            let k = r.tangent.unwrap();
            let m = nalgebra::DMatrix::from_fn(18, 18, |i, j| k[i][j]);
            assert!((&m - m.transpose()).amax() < 1e-9);
            let ev = m.symmetric_eigenvalues();
            let scale = ev.amax();
            let near_zero = ev.iter().filter(|v| v.abs() < 1e-9 * scale).count();
            assert_eq!(near_zero, 6, "{ev}");
            assert!(ev.iter().all(|&v| v > -1e-9 * scale));
        }
    }

    #[test]
    fn matching_stretch_is_stress_free() {
        let e: f64 = 1e-2;
        let s = (1.0 + 2.0 * e).sqrt() - 1.0;
        let x = wedge();
        let mut u = [0.0; 18];
        for a in 0..6 {
            for k in 0..3 {
                u[3 * a + k] = s * x[a][k];
            }
        }
        for opts in variants() {
            let r = element_force_tangent(&state(u, e), MAT, opts, false).unwrap();
            let tol = 1e-10 * 2.0 * MAT.mu * wedge_volume(&x).powf(2.0 / 3.0);
            assert!(r.force.iter().all(|f| f.abs() < tol), "{:?}", r.force);
            assert!(r.energy.abs() < 1e-20);
        }
    }

    #[test]
    fn tangent_and_force_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let u: [f64; 18] = std::array::from_fn(|_| rng.gen_range(-0.05..0.05));
            let eig = rng.gen_range(-0.05..0.0);
            let opts = variants()[trial % 3];
            let st = state(u, eig);
            let r = element_force_tangent(&st, MAT, opts, true).unwrap();
            let k = r.tangent.unwrap();
            let h = 1e-6;
            let mut err_k: f64 = 0.0;
            let mut err_f: f64 = 0.0;
            let kscale = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let fscale = r.force.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for c in 0..18 {
                let mut up = st.clone();
                let mut dn = st.clone();
                up.u[c] += h;
                dn.u[c] -= h;
                let rp = element_force_tangent(&up, MAT, opts, false).unwrap();
                let rm = element_force_tangent(&dn, MAT, opts, false).unwrap();
                err_f = err_f.max(((rp.energy - rm.energy) / (2.0 * h) - r.force[c]).abs() / fscale);
                for i in 0..18 {
                    err_k = err_k.max(((rp.force[i] - rm.force[i]) / (2.0 * h) - k[i][c]).abs() / kscale);
                }
            }
            assert!(err_f < 1e-6, "force fd error {err_f}");
            assert!(err_k < 1e-6, "tangent fd error {err_k}");
        }
    }

    #[test]
    fn energy_is_objective() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let u: [f64; 18] = std::array::from_fn(|_| rng.gen_range(-0.05..0.05));
        let st = state(u, -0.02);
        let e0 = element_force_tangent(&st, MAT, ElementOptions::default(), false).unwrap().energy;
        // rigid rotation of the deformed configuration about an arbitrary axis
        let q = nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::y_axis(), 0.7)
            * nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::x_axis(), -1.1);
        let mut rot = st.clone();
        for a in 0..6 {
            let x = nalgebra::Vector3::from(st.x_ref[a]);
            let y = x + nalgebra::Vector3::new(u[3 * a], u[3 * a + 1], u[3 * a + 2]);
            let d = q * y - x;
            rot.u[3 * a..3 * a + 3].copy_from_slice(d.as_slice());
        }
        let e1 = element_force_tangent(&rot, MAT, ElementOptions::default(), false).unwrap().energy;
        assert!((e1 - e0).abs() <= 1e-10 * e0.abs(), "{e0} {e1}");
    }

    #[test]
    fn inverted_element_is_reported() {
        let mut x = wedge();
        x.swap(1, 2);
        x.swap(4, 5);
        let st = ElementState { x_ref: x, id: 7, ..state([0.0; 18], 0.0) };
        assert_eq!(
            element_force_tangent(&st, MAT, ElementOptions::default(), true).unwrap_err(),
            FemError::InvertedElement { element: 7 }
        );
    }

    fn law() -> Law {
        let eig = [[-0.01, 0.0, 0.0], [0.0, -0.01, 0.0], [0.0, 0.0, 0.0]];
        Law::new(MAT, &eig).unwrap()
    }

    #[test]
    fn law_reduces_to_svk_at_small_strain() {
        let l = law();
        let e = [-0.0093, -0.0104, 0.0021, 0.0007, -0.0003, 0.0005];
        let p = l.eval(Part::Full, &e).unwrap();
        let eb: [f64; 6] = std::array::from_fn(|i| e[i] - l.eig[i]);
        let tr = eb[0] + eb[1] + eb[2];
        for k in 0..6 {
            let svk = if k < 3 { MAT.lambda * tr + 2.0 * MAT.mu * eb[k] } else { MAT.mu * eb[k] };
            // agreement to first order in the strain
            assert!((p.s[k] - svk).abs() < 0.05 * MAT.lambda * 0.01, "{k}: {} vs {svk}", p.s[k]);
        }
    }

    #[test]
    fn law_tangent_matches_stress_differences() {
        let l = law();
        let e = [0.05, -0.02, -0.11, 0.03, -0.04, 0.02];
        let p = l.eval(Part::Full, &e).unwrap();
        let d = l.tangent(Part::Full, &p);
        for b in 0..6 {
            let h = 1e-6;
            let (mut ep, mut em) = (e, e);
            ep[b] += h;
            em[b] -= h;
            let (sp, sm) = (l.eval(Part::Full, &ep).unwrap().s, l.eval(Part::Full, &em).unwrap().s);
            for a in 0..6 {
                let fd = (sp[a] - sm[a]) / (2.0 * h);
                assert!((fd - d[a][b]).abs() <= 1e-6 * (1.0 + d[a][b].abs()), "{a}{b}: {fd} vs {}", d[a][b]);
            }
            // energy gradient is the stress
            let fd = (l.eval(Part::Full, &ep).unwrap().energy - l.eval(Part::Full, &em).unwrap().energy) / (2.0 * h);
            assert!((fd - p.s[b]).abs() <= 1e-6 * (1.0 + p.s[b].abs()));
        }
    }

    #[test]
    fn energy_grows_without_bound_under_thickness_collapse() {
        let opts = ElementOptions { reduced_volumetric: false, enhanced_thickness: false };
        let energy = |stretch: f64| {
            let mut u = [0.0; 18];
            for a in 3..6 {
                u[3 * a + 2] = -0.4 * (1.0 - stretch);
            }
            element_force_tangent(&state(u, 0.0), MAT, opts, false).unwrap().energy
        };
        let e: Vec<f64> = [0.5, 1e-2, 1e-4, 1e-8].iter().map(|&s| energy(s)).collect();
        assert!(e.windows(2).all(|w| w[1] > w[0]), "{e:?}");
        // the plain quadratic Green-strain energy would stay below μ·V/4 + λ·V/8 here
        let v = wedge_volume(&wedge());
        assert!(e[3] > 2.0 * (0.25 * MAT.mu + 0.125 * MAT.lambda) * v, "{e:?}");
    }
}
