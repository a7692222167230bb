use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::materials::{thermal_eigenstrain, EigenstrainMode, MaterialModel, ThermalLoad};
use crate::meshing::LayeredMesh;
use crate::pattern::SUBSTRATE;

use super::constraints::{build_constraints_with, footprint_boundary, BoundaryMode, ConstraintSet};
use super::element::{centre_von_mises, element_force_tangent, ElementOptions, ElementResponse, ElementState, Lame};
use super::sparse::{LinearSolverKind, ReducedSystem, SparseSym};
use super::FemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Bias {
    #[default]
    #[serde(rename = "+z")]
    Up,
    #[serde(rename = "-z")]
    Down,
}

impl Bias {
    pub fn sign(self) -> f64 {
        match self {
            Bias::Up => 1.0,
            Bias::Down => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    /// Residual norm relative to the out-of-balance force at the start of the step.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub n_load_steps: usize,
    /// Maximum number of successive step halvings.
    pub halving_depth: usize,
    /// Defaults to 1e-3 of the substrate thickness.
    #[serde(rename = "imperfection_amplitude_mm", skip_serializing_if = "Option::is_none")]
    pub imperfection_amplitude: Option<f64>,
    pub imperfection_seed: u64,
    pub imperfection_bias: Bias,
    pub linear_solver: LinearSolverKind,
    pub boundary: BoundaryMode,
    /// Continuation stops at this load factor.
    pub max_load_factor: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-8,
            max_newton_iters: 30,
            n_load_steps: 20,
            halving_depth: 6,
            imperfection_amplitude: None,
            imperfection_seed: 0,
            imperfection_bias: Bias::Up,
            linear_solver: LinearSolverKind::Direct,
            boundary: BoundaryMode::PinnedRim,
            max_load_factor: 1.0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), FemError> {
        let bad = |m: &str| Err(FemError::Config(m.to_string()));
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive");
        }
        if self.max_newton_iters == 0 || self.n_load_steps == 0 {
            return bad("max_newton_iters and n_load_steps must be at least 1");
        }
        if let Some(a) = self.imperfection_amplitude {
            if !(a >= 0.0 && a.is_finite()) {
                return bad("imperfection_amplitude_mm must be non-negative");
            }
        }
        if !(self.max_load_factor > 0.0 && self.max_load_factor <= 1.0) {
            return bad("max_load_factor must lie in (0, 1]");
        }
        Ok(())
    }
}

/// One Newton iteration of an accepted continuation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub lambda: f64,
    pub iter: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphResult {
    /// Reference coordinates including the seeded imperfection, mm.
    pub reference: Vec<[f64; 3]>,
    pub displacement: Vec<[f64; 3]>,
    pub deformed: Vec<[f64; 3]>,
    /// Last converged load factor.
    pub lambda: f64,
    /// The requested load factor was reached.
    pub completed: bool,
    /// Von Mises value of the Cauchy stress at each element centre, MPa.
    pub element_stress: Vec<f64>,
    pub max_stress: f64,
    pub history: Vec<StepRecord>,
    /// N·mm.
    pub strain_energy: f64,
    /// Nodes on the substrate reference plane.
    pub base_nodes: Vec<u32>,
    pub halvings: usize,
    /// Negative pivots of the last factored tangent (direct mode).
    pub negative_pivots: usize,
    /// Converged displacements at each load-step grid point `k/n_load_steps`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid_states: Vec<GridState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub lambda: f64,
    pub displacement: Vec<[f64; 3]>,
}

impl MorphResult {
    /// Converged state at grid load factor `lambda`, if the run reached it.
    pub fn state_at(&self, lambda: f64) -> Option<&GridState> {
        self.grid_states.iter().find(|g| (g.lambda - lambda).abs() < 1e-9)
    }

    /// Largest grid load factor reached.
    pub fn last_grid_lambda(&self) -> f64 {
        self.grid_states.last().map_or(0.0, |g| g.lambda)
    }
}

/// Element data and sparsity needed to evaluate the global system.
pub struct FeModel<'a> {
    mesh: &'a LayeredMesh,
    pub reference: Vec<[f64; 3]>,
    lame: Vec<Lame>,
    opts: Vec<ElementOptions>,
    /// Eigenstrain per layer at load factor 1.
    eig: Vec<[[f64; 3]; 3]>,
    pattern: SparseSym,
    scatter: Vec<Vec<u32>>,
}

pub struct Evaluation {
    pub energy: f64,
    pub residual: Vec<f64>,
    pub tangent: Option<SparseSym>,
}

impl<'a> FeModel<'a> {
    pub fn new(
        mesh: &'a LayeredMesh,
        materials: &[MaterialModel],
        load: &ThermalLoad,
        mode: EigenstrainMode,
    ) -> Result<Self, FemError> {
        if materials.len() != mesh.layer_names.len() {
            return Err(FemError::Config(format!(
                "{} materials given for {} layers",
                materials.len(),
                mesh.layer_names.len()
            )));
        }
        for m in materials {
            m.validate().map_err(|e| FemError::Config(e.to_string()))?;
        }
        let n = mesh.nodes.len();
        let mut nb: Vec<Vec<u32>> = vec![Vec::new(); n];
        for el in &mesh.elements {
            for &a in el {
                nb[a as usize].extend_from_slice(el);
            }
        }
        let mut rows = Vec::with_capacity(3 * n);
        for list in &mut nb {
            list.sort_unstable();
            list.dedup();
            let cols: Vec<u32> = list.iter().flat_map(|&m| (0..3).map(move |j| 3 * m + j)).collect();
            for _ in 0..3 {
                rows.push(cols.clone());
            }
        }
        let pattern = SparseSym::from_pattern(rows);
        let scatter = mesh
            .elements
            .iter()
            .map(|el| {
                let dofs: Vec<usize> = el.iter().flat_map(|&a| (0..3).map(move |j| 3 * a as usize + j)).collect();
                dofs.iter().flat_map(|&r| dofs.iter().map(move |&c| (r, c))).map(|(r, c)| pattern.find(r, c).unwrap() as u32).collect()
            })
            .collect();
        Ok(Self {
            mesh,
            reference: mesh.nodes.clone(),
            lame: materials.iter().map(|m| Lame::from_young(m.young, m.nu)).collect(),
            opts: materials
                .iter()
                .map(|m| ElementOptions { reduced_volumetric: m.nu >= 0.45, enhanced_thickness: true })
                .collect(),
            eig: materials.iter().map(|m| thermal_eigenstrain(m, load.delta_t, mode)).collect(),
            pattern,
            scatter,
        })
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.mesh.nodes.len()
    }

    pub fn pattern(&self) -> &SparseSym {
        &self.pattern
    }

    pub fn element_state(&self, e: usize, u: &[f64], lambda: f64) -> ElementState {
        let el = self.mesh.elements[e];
        let layer = self.mesh.element_layer[e] as usize;
        let mut us = [0.0; 18];
        for (a, &n) in el.iter().enumerate() {
            us[3 * a..3 * a + 3].copy_from_slice(&u[3 * n as usize..3 * n as usize + 3]);
        }
        ElementState {
            id: e,
            x_ref: el.map(|n| self.reference[n as usize]),
            u: us,
            material: layer,
            eigenstrain: self.eig[layer].map(|r| r.map(|v| v * lambda)),
        }
    }

    pub fn evaluate(&self, u: &[f64], lambda: f64, want_tangent: bool) -> Result<Evaluation, FemError> {
        let out: Vec<Result<ElementResponse, FemError>> = (0..self.mesh.elements.len())
            .into_par_iter()
            .map(|e| {
                let s = self.element_state(e, u, lambda);
                element_force_tangent(&s, self.lame[s.material], self.opts[s.material], want_tangent)
            })
            .collect();
        let mut energy = 0.0;
        let mut residual = vec![0.0; self.n_dofs()];
        let mut k = want_tangent.then(|| self.pattern.clone());
        for (e, r) in out.into_iter().enumerate() {
            let r = r?;
            energy += r.energy;
            let el = self.mesh.elements[e];
            for (a, &n) in el.iter().enumerate() {
                for j in 0..3 {
                    residual[3 * n as usize + j] += r.force[3 * a + j];
                }
            }
            if let (Some(k), Some(t)) = (k.as_mut(), r.tangent.as_ref()) {
                let map = &self.scatter[e];
                for i in 0..18 {
                    for j in 0..18 {
                        k.val[map[18 * i + j] as usize] += t[i][j];
                    }
                }
            }
        }
        Ok(Evaluation { energy, residual, tangent: k })
    }

    pub fn element_stress(&self, u: &[f64], lambda: f64) -> Vec<f64> {
        (0..self.mesh.elements.len())
            .into_par_iter()
            .map(|e| {
                let s = self.element_state(e, u, lambda);
                centre_von_mises(&s, self.lame[s.material])
            })
            .collect()
    }
}

/// Global residual (internal force) and tangent at load factor `lambda`.
pub fn assemble(
    mesh: &LayeredMesh,
    u: &[f64],
    lambda: f64,
    load: &ThermalLoad,
    mode: EigenstrainMode,
    materials: &[MaterialModel],
) -> Result<(Vec<f64>, SparseSym), FemError> {
    check_len(mesh, u)?;
    let ev = FeModel::new(mesh, materials, load, mode)?.evaluate(u, lambda, true)?;
    Ok((ev.residual, ev.tangent.unwrap()))
}

/// Total strain energy, N·mm.
pub fn strain_energy(
    mesh: &LayeredMesh,
    u: &[f64],
    lambda: f64,
    load: &ThermalLoad,
    mode: EigenstrainMode,
    materials: &[MaterialModel],
) -> Result<f64, FemError> {
    check_len(mesh, u)?;
    Ok(FeModel::new(mesh, materials, load, mode)?.evaluate(u, lambda, false)?.energy)
}

fn check_len(mesh: &LayeredMesh, u: &[f64]) -> Result<(), FemError> {
    if u.len() != 3 * mesh.nodes.len() {
        return Err(FemError::Config(format!("displacement has {} entries, expected {}", u.len(), 3 * mesh.nodes.len())));
    }
    Ok(())
}

/// Solve `K x = rhs` with constrained entries of `x` fixed at their prescribed values.
pub fn linear_solve(
    k: &SparseSym,
    rhs: &[f64],
    constraints: &ConstraintSet,
    kind: LinearSolverKind,
) -> Result<Vec<f64>, FemError> {
    let mask = constraints.mask(k.n);
    let mut sys = ReducedSystem::new(k, &mask)?;
    sys.solve(k, rhs, &constraints.values(k.n), kind)
}

/// Seeded reference-geometry perturbation: every column of nodes above an
/// interior substrate node is lifted by the same offset.
pub fn seed_imperfection(mesh: &LayeredMesh, amplitude: f64, seed: u64, bias: Bias) -> Vec<[f64; 3]> {
    let mut out = mesh.nodes.clone();
    if amplitude == 0.0 {
        return out;
    }
    let rim = footprint_boundary(mesh);
    let n2 = rim.len();
    let mut on_sub = vec![false; n2];
    if let Some(li) = mesh.layer_id(SUBSTRATE) {
        for (e, el) in mesh.elements.iter().enumerate() {
            if mesh.element_layer[e] == li {
                for &n in el {
                    on_sub[mesh.node_2d[n as usize] as usize] = true;
                }
            }
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let offset: Vec<f64> = (0..n2)
        .map(|v| {
            let r: f64 = rng.gen_range(-1.0..1.0);
            if on_sub[v] && !rim[v] {
                amplitude * (0.5 * bias.sign() + 0.5 * r)
            } else {
                0.0
            }
        })
        .collect();
    for (p, &v) in out.iter_mut().zip(&mesh.node_2d) {
        p[2] += offset[v as usize];
    }
    out
}

fn substrate_thickness(mesh: &LayeredMesh) -> f64 {
    mesh.layer_id(SUBSTRATE).map_or(mesh.layer_thickness[0], |i| mesh.layer_thickness[i as usize])
}

fn norm_free(r: &[f64], mask: &[bool]) -> f64 {
    r.iter().zip(mask).filter(|(_, &c)| !c).map(|(v, _)| v * v).sum::<f64>().sqrt()
}

struct Newton {
    u: Vec<f64>,
    residuals: Vec<f64>,
}

/// Load-stepping Newton continuation from the flat state.
pub fn solve_static(
    mesh: &LayeredMesh,
    materials: &[MaterialModel],
    load: &ThermalLoad,
    mode: EigenstrainMode,
    cfg: &SolveConfig,
) -> Result<MorphResult, FemError> {
    cfg.validate()?;
    let constraints = build_constraints_with(mesh, cfg.boundary)?;
    let mut model = FeModel::new(mesh, materials, load, mode)?;
    let amp = cfg.imperfection_amplitude.unwrap_or(1e-3 * substrate_thickness(mesh));
    model.reference = seed_imperfection(mesh, amp, cfg.imperfection_seed, cfg.imperfection_bias);
    let n = model.n_dofs();
    let mask = constraints.mask(n);
    let mut sys = ReducedSystem::new(model.pattern(), &mask)?;

    let e_max = materials.iter().map(|m| m.young).fold(0.0, f64::max);
    let volume: f64 = (0..mesh.elements.len()).map(|e| mesh.element_volume(e)).sum();
    let floor = 1e-12 * e_max * volume.powf(2.0 / 3.0);

    let end = cfg.max_load_factor;
    let dl0 = 1.0 / cfg.n_load_steps as f64;
    let mut lam = 0.0;
    let mut u = constraints.values(n);
    let mut u_prev: Option<(Vec<f64>, f64)> = None;
    let mut dl = dl0;
    let mut depth = 0usize;
    let mut streak = 0usize;
    let mut history = Vec::new();
    let mut halvings = 0usize;
    let mut step = 0usize;
    let mut stalled = None;

    let mut grid_states = vec![GridState { lambda: 0.0, displacement: u.chunks(3).map(|c| [c[0], c[1], c[2]]).collect() }];
    let to_vec3 = |u: &[f64]| -> Vec<[f64; 3]> { u.chunks(3).map(|c| [c[0], c[1], c[2]]).collect() };

    while lam < end - 1e-12 {
        // never step across a grid point, so every run passes through the same load factors
        let next_grid = ((lam / dl0 + 1e-9).floor() + 1.0) * dl0;
        let stop = next_grid.min(end);
        let target = if stop - lam - dl < 1e-12 { stop } else { lam + dl };
        let r0 = model.evaluate(&u, target, false).map(|ev| norm_free(&ev.residual, &mask));
        let attempt = r0.and_then(|r0| {
            let r_ref = r0.max(floor);
            let predicted = u_prev.as_ref().map(|(up, dlp)| {
                let s = (target - lam) / dlp;
                u.iter().zip(up).map(|(a, b)| a + s * (a - b)).collect::<Vec<f64>>()
            });
            match predicted {
                Some(p) => newton(&model, &mut sys, p, target, r_ref, &mask, cfg)
                    .or_else(|_| newton(&model, &mut sys, u.clone(), target, r_ref, &mask, cfg)),
                None => newton(&model, &mut sys, u.clone(), target, r_ref, &mask, cfg),
            }
        });
        match attempt {
            Ok(nw) => {
                step += 1;
                for (i, &r) in nw.residuals.iter().enumerate() {
                    history.push(StepRecord { step, lambda: target, iter: i, residual: r });
                }
                u_prev = Some((std::mem::replace(&mut u, nw.u), target - lam));
                lam = target;
                if (lam / dl0 - (lam / dl0).round()).abs() < 1e-9 {
                    grid_states.push(GridState { lambda: (lam / dl0).round() * dl0, displacement: to_vec3(&u) });
                }
                streak += 1;
                let aligned = ((lam / (2.0 * dl)) - (lam / (2.0 * dl)).round()).abs() < 1e-9;
                if depth > 0 && streak >= 2 && aligned {
                    depth -= 1;
                    dl *= 2.0;
                    streak = 0;
                }
            }
            Err(e) => {
                streak = 0;
                if depth >= cfg.halving_depth {
                    stalled = Some(e);
                    break;
                }
                depth += 1;
                halvings += 1;
                dl *= 0.5;
            }
        }
    }

    let stress = model.element_stress(&u, lam);
    let energy = model.evaluate(&u, lam, false)?.energy;
    let displacement = to_vec3(&u);
    let result = MorphResult {
        deformed: model.reference.iter().zip(&displacement).map(|(x, d)| [x[0] + d[0], x[1] + d[1], x[2] + d[2]]).collect(),
        reference: model.reference.clone(),
        displacement,
        lambda: lam,
        completed: stalled.is_none(),
        max_stress: stress.iter().copied().fold(0.0, f64::max),
        element_stress: stress,
        history,
        strain_energy: energy,
        base_nodes: (0..mesh.nodes.len() as u32).filter(|&i| mesh.node_level[i as usize] == 0).collect(),
        halvings,
        negative_pivots: sys.last_negative_pivots,
        grid_states,
    };
    match stalled {
        None => Ok(result),
        Some(cause) => Err(FemError::Stall { result: Box::new(result), cause: cause.to_string() }),
    }
}

fn newton(
    model: &FeModel,
    sys: &mut ReducedSystem,
    mut u: Vec<f64>,
    lambda: f64,
    r_ref: f64,
    mask: &[bool],
    cfg: &SolveConfig,
) -> Result<Newton, FemError> {
    let zero = vec![0.0; u.len()];
    let mut residuals = Vec::new();
    for _ in 0..=cfg.max_newton_iters {
        let ev = model.evaluate(&u, lambda, true)?;
        let rel = norm_free(&ev.residual, mask) / r_ref;
        residuals.push(rel);
        if !rel.is_finite() || rel > 1e8 {
            return Err(FemError::Diverged(format!("residual {rel:e} at load factor {lambda}")));
        }
        if rel <= cfg.newton_tol {
            return Ok(Newton { u, residuals });
        }
        if residuals.len() > cfg.max_newton_iters {
            break;
        }
        let rhs: Vec<f64> = ev.residual.iter().map(|r| -r).collect();
        let du = sys.solve(ev.tangent.as_ref().unwrap(), &rhs, &zero, cfg.linear_solver)?;
        for (a, d) in u.iter_mut().zip(&du) {
            *a += d;
        }
    }
    Err(FemError::Diverged(format!(
        "no convergence in {} iterations at load factor {lambda}",
        cfg.max_newton_iters
    )))
}

/// `step,lambda,iter,residual` rows.
pub fn convergence_csv(result: &MorphResult) -> String {
    let mut s = String::from("step,lambda,iter,residual\n");
    for r in &result.history {
        s.push_str(&format!("{},{},{},{:e}\n", r.step, r.lambda, r.iter, r.residual));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::testmesh::{grid, materials};
    use crate::fem::Dof;
    use crate::meshing::{extrude, LayerSpec, TriMesh2D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u(n: usize, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
    }

    fn stacked_pair() -> LayeredMesh {
        let tri = TriMesh2D {
            nodes: vec![[0.0, 0.0], [2.0, 0.2], [0.4, 1.7]],
            triangles: vec![[0, 1, 2]],
            coverage: vec![0b11],
            layer_names: vec!["substrate".into(), "kirigami".into()],
            boundary_edges: vec![[0, 1], [1, 2], [2, 0]],
            warnings: vec![],
        };
        extrude(&tri, &[LayerSpec::new("substrate", 0.1, "s"), LayerSpec::new("kirigami", 0.6, "k")]).unwrap()
    }

    #[test]
    fn assembly_equals_dense_scatter_of_element_matrices() {
        let mesh = stacked_pair();
        assert_eq!((mesh.elements.len(), mesh.nodes.len()), (2, 9));
        let mats = materials(-0.01);
        let load = ThermalLoad::new(1.0, 1);
        let u = random_u(27, 0.01, 1);
        let (r, k) = assemble(&mesh, &u, 0.7, &load, EigenstrainMode::InPlane, &mats).unwrap();
        let model = FeModel::new(&mesh, &mats, &load, EigenstrainMode::InPlane).unwrap();
        let mut kd = vec![vec![0.0; 27]; 27];
        let mut rd = vec![0.0; 27];
        for e in 0..2 {
            let s = model.element_state(e, &u, 0.7);
            let opts = ElementOptions { reduced_volumetric: true, enhanced_thickness: true };
            let lame = Lame::from_young(mats[s.material].young, mats[s.material].nu);
            let resp = element_force_tangent(&s, lame, opts, true).unwrap();
            let t = resp.tangent.unwrap();
            let dofs: Vec<usize> = mesh.elements[e].iter().flat_map(|&a| (0..3).map(move |j| 3 * a as usize + j)).collect();
            for i in 0..18 {
                rd[dofs[i]] += resp.force[i];
                for j in 0..18 {
                    kd[dofs[i]][dofs[j]] += t[i][j];
                }
            }
        }
        let dense = k.to_dense();
        for i in 0..27 {
            assert!((r[i] - rd[i]).abs() < 1e-12 * (1.0 + rd[i].abs()));
            for j in 0..27 {
                assert!((dense[i][j] - kd[i][j]).abs() < 1e-9 * (1.0 + kd[i][j].abs()), "{i},{j}");
            }
        }
        // the interface nodes 3..6 couple the two layers
        assert!(dense[0][3 * 6].abs() == 0.0 && dense[3 * 3][3 * 6].abs() > 0.0);
    }

    #[test]
    fn residual_and_tangent_are_energy_derivatives() {
        let mesh = grid(2, 1.5);
        let mats = materials(-0.01);
        let load = ThermalLoad::new(20.0, 1);
        let model = FeModel::new(&mesh, &mats, &load, EigenstrainMode::InPlane).unwrap();
        let n = model.n_dofs();
        let u = random_u(n, 0.02, 2);
        let ev = model.evaluate(&u, 1.0, true).unwrap();
        let k = ev.tangent.unwrap().to_dense();
        let h = 1e-6;
        for i in (0..n).step_by(5) {
            let (mut up, mut um) = (u.clone(), u.clone());
            up[i] += h;
            um[i] -= h;
            let (ep, em) = (model.evaluate(&up, 1.0, false).unwrap(), model.evaluate(&um, 1.0, false).unwrap());
            let g = (ep.energy - em.energy) / (2.0 * h);
            assert!((g - ev.residual[i]).abs() <= 1e-5 * (1.0 + ev.residual[i].abs()), "{i}: {g} vs {}", ev.residual[i]);
            let kmax = k[i].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for j in 0..n {
                let fd = (ep.residual[j] - em.residual[j]) / (2.0 * h);
                assert!((fd - k[j][i]).abs() <= 1e-5 * kmax, "{j},{i}: {fd} vs {}", k[j][i]);
            }
        }
    }

    #[test]
    fn linear_solve_matches_dense_oracle_with_prescribed_values() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { n as f64 } else { 0.0 }).collect())
            .collect();
        let k = SparseSym::from_dense(&a);
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut cs = ConstraintSet::new();
        cs.push(2, Dof::Y, 0.25).unwrap();
        cs.push(10, Dof::X, -0.5).unwrap();
        let fixed = cs.mask(n);
        let vals = cs.values(n);
        for kind in [LinearSolverKind::Direct, LinearSolverKind::Iterative] {
            let x = linear_solve(&k, &rhs, &cs, kind).unwrap();
            let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
            let m = nalgebra::DMatrix::from_fn(free.len(), free.len(), |i, j| a[free[i]][free[j]]);
            let r = nalgebra::DVector::from_fn(free.len(), |i, _| {
                rhs[free[i]] - (0..n).filter(|&j| fixed[j]).map(|j| a[free[i]][j] * vals[j]).sum::<f64>()
            });
            let oracle = m.lu().solve(&r).unwrap();
            for (i, &f) in free.iter().enumerate() {
                assert!((x[f] - oracle[i]).abs() < 1e-8, "{kind:?}");
            }
            assert_eq!((x[7], x[30]), (0.25, -0.5));
        }
    }

    fn strip_cfg(n_steps: usize) -> SolveConfig {
        SolveConfig { n_load_steps: n_steps, boundary: BoundaryMode::Free, ..Default::default() }
    }

    #[test]
    fn zero_load_leaves_only_the_imperfection() {
        let mesh = grid(4, 1.0);
        let cfg = SolveConfig { imperfection_amplitude: Some(0.01), ..strip_cfg(2) };
        let r = solve_static(&mesh, &materials(-0.01), &ThermalLoad::new(0.0, 2), EigenstrainMode::InPlane, &cfg).unwrap();
        assert!(r.completed && r.lambda == 1.0);
        assert!(r.displacement.iter().flatten().all(|d| d.abs() < 1e-9));
        let h = r.base_nodes.iter().map(|&n| r.deformed[n as usize][2]).fold(0.0, f64::max);
        assert!(h <= 2.0 * 0.01);
    }

    #[test]
    fn newton_converges_quadratically() {
        let mesh = grid(4, 2.0);
        let mats = materials(-1e-3);
        // well below the plate's spherical-to-cylindrical bifurcation, where K is nearly singular
        let r = solve_static(&mesh, &mats, &ThermalLoad::new(2.0, 1), EigenstrainMode::InPlane, &strip_cfg(1)).unwrap();
        let res: Vec<f64> = r.history.iter().map(|h| h.residual).collect();
        assert!(res.len() >= 3, "{res:?}");
        let tail: Vec<f64> = res.iter().copied().filter(|&v| v < 2e-3).collect();
        assert!(tail.len() >= 2, "{res:?}");
        for w in tail.windows(2) {
            // r_{k+1} ≤ C r_k² down to the round-off floor of the cancelling element forces
            assert!(w[1] <= 10.0 * w[0] * w[0] + 1e-9, "{res:?}");
        }
        assert!(*res.last().unwrap() <= 1e-8);
    }

    #[test]
    fn continuation_records_every_grid_point() {
        let mesh = grid(3, 2.0);
        let r = solve_static(&mesh, &materials(-1e-3), &ThermalLoad::new(20.0, 4), EigenstrainMode::InPlane, &strip_cfg(4)).unwrap();
        let lams: Vec<f64> = r.grid_states.iter().map(|g| g.lambda).collect();
        assert_eq!(lams, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(r.last_grid_lambda(), 1.0);
        assert_eq!(r.state_at(1.0).unwrap().displacement, r.displacement);
        assert!(r.state_at(0.6).is_none());
        let csv = convergence_csv(&r);
        assert!(csv.starts_with("step,lambda,iter,residual\n"));
        assert_eq!(csv.lines().count(), r.history.len() + 1);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let mesh = grid(1, 1.0);
        let load = ThermalLoad::new(1.0, 1);
        assert!(matches!(
            assemble(&mesh, &[0.0; 3], 1.0, &load, EigenstrainMode::InPlane, &materials(0.0)),
            Err(FemError::Config(_))
        ));
        let one = &materials(0.0)[..1];
        assert!(matches!(FeModel::new(&mesh, one, &load, EigenstrainMode::InPlane), Err(FemError::Config(_))));
        let bad = SolveConfig { n_load_steps: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
