use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::meshing::LayeredMesh;
use crate::pattern::SUBSTRATE;

use super::FemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dof {
    X,
    Y,
    Z,
}

impl Dof {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub node: u32,
    pub dof: Dof,
    /// Prescribed displacement, mm.
    pub value: f64,
}

/// Prescribed displacements; at most one entry per (node, dof).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: u32, dof: Dof, value: f64) -> Result<(), FemError> {
        if self.items.iter().any(|c| c.node == node && c.dof == dof) {
            return Err(FemError::Constraint(format!("duplicate constraint on node {node} dof {dof:?}")));
        }
        self.items.push(Constraint { node, dof, value });
        Ok(())
    }

    pub fn items(&self) -> &[Constraint] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn mask(&self, n_dofs: usize) -> Vec<bool> {
        let mut m = vec![false; n_dofs];
        for c in &self.items {
            m[3 * c.node as usize + c.dof.index()] = true;
        }
        m
    }

    /// Full-length vector holding the prescribed values.
    pub fn values(&self, n_dofs: usize) -> Vec<f64> {
        let mut v = vec![0.0; n_dofs];
        for c in &self.items {
            v[3 * c.node as usize + c.dof.index()] = c.value;
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Footprint-boundary substrate nodes held at z = 0, plus an in-plane anchor.
    #[default]
    PinnedRim,
    /// Statically determinate 3-2-1 support; the body deforms freely.
    Free,
}

/// Per 2D node: on the outer boundary of the meshed footprint.
pub fn footprint_boundary(mesh: &LayeredMesh) -> Vec<bool> {
    let n2 = mesh.node_2d.iter().map(|&v| v as usize + 1).max().unwrap_or(0);
    let mut tris: Vec<(u32, [u32; 3])> =
        mesh.elements.iter().zip(&mesh.element_tri).map(|(e, &t)| (t, [0, 1, 2].map(|k| mesh.node_2d[e[k] as usize]))).collect();
    tris.sort_unstable_by_key(|x| x.0);
    tris.dedup_by_key(|x| x.0);
    let mut directed = HashSet::new();
    for (_, t) in &tris {
        for k in 0..3 {
            directed.insert((t[k], t[(k + 1) % 3]));
        }
    }
    let mut on = vec![false; n2];
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) {
            on[a as usize] = true;
            on[b as usize] = true;
        }
    }
    on
}

/// Nodes of the substrate layer, at its own z-levels.
fn substrate_nodes(mesh: &LayeredMesh) -> Result<Vec<bool>, FemError> {
    let li = mesh.layer_id(SUBSTRATE).ok_or_else(|| FemError::Constraint("mesh has no substrate layer".into()))?;
    let mut on = vec![false; mesh.nodes.len()];
    for (e, el) in mesh.elements.iter().enumerate() {
        if mesh.element_layer[e] == li {
            for &n in el {
                on[n as usize] = true;
            }
        }
    }
    Ok(on)
}

pub fn build_constraints(mesh: &LayeredMesh) -> Result<ConstraintSet, FemError> {
    build_constraints_with(mesh, BoundaryMode::PinnedRim)
}

pub fn build_constraints_with(mesh: &LayeredMesh, mode: BoundaryMode) -> Result<ConstraintSet, FemError> {
    let sub = substrate_nodes(mesh)?;
    let rim2 = footprint_boundary(mesh);
    let base: Vec<u32> = (0..mesh.nodes.len() as u32).filter(|&n| sub[n as usize] && mesh.node_level[n as usize] == 0).collect();
    let mut cs = ConstraintSet::new();
    match mode {
        BoundaryMode::PinnedRim => {
            let rim: Vec<u32> =
                (0..mesh.nodes.len() as u32).filter(|&n| sub[n as usize] && rim2[mesh.node_2d[n as usize] as usize]).collect();
            let rim_base: Vec<u32> = rim.iter().copied().filter(|&n| mesh.node_level[n as usize] == 0).collect();
            if rim_base.len() < 2 {
                return Err(FemError::Constraint("fewer than two boundary substrate nodes".into()));
            }
            for &n in &rim {
                cs.push(n, Dof::Z, 0.0)?;
            }
            let (a, b) = anchor_pair(mesh, &rim_base);
            cs.push(a, Dof::X, 0.0)?;
            cs.push(a, Dof::Y, 0.0)?;
            cs.push(b, Dof::Y, 0.0)?;
        }
        BoundaryMode::Free => {
            if base.len() < 3 {
                return Err(FemError::Constraint("fewer than three substrate base nodes".into()));
            }
            let (a, b) = anchor_pair(mesh, &base);
            let p = |n: u32| mesh.nodes[n as usize];
            let (pa, pb) = (p(a), p(b));
            let off_line = |n: &u32| {
                let q = p(*n);
                ((pb[0] - pa[0]) * (q[1] - pa[1]) - (pb[1] - pa[1]) * (q[0] - pa[0])).abs()
            };
            let c = *base.iter().max_by(|x, y| off_line(x).total_cmp(&off_line(y)).then(y.cmp(x))).unwrap();
            if off_line(&c) == 0.0 {
                return Err(FemError::Constraint("substrate base nodes are collinear".into()));
            }
            for (n, dofs) in [(a, &[Dof::X, Dof::Y, Dof::Z][..]), (b, &[Dof::Y, Dof::Z][..]), (c, &[Dof::Z][..])] {
                for &d in dofs {
                    cs.push(n, d, 0.0)?;
                }
            }
        }
    }
    Ok(cs)
}

/// Leftmost node, and the rightmost node nearest its y.
fn anchor_pair(mesh: &LayeredMesh, cand: &[u32]) -> (u32, u32) {
    let p = |n: u32| mesh.nodes[n as usize];
    let a = *cand.iter().min_by(|&&x, &&y| p(x)[0].total_cmp(&p(y)[0]).then(p(x)[1].total_cmp(&p(y)[1]))).unwrap();
    let ya = p(a)[1];
    let xmax = cand.iter().map(|&n| p(n)[0]).fold(f64::NEG_INFINITY, f64::max);
    let span = xmax - p(a)[0];
    let b = *cand
        .iter()
        .filter(|&&n| n != a && p(n)[0] >= xmax - 1e-6 * span.max(1e-12))
        .min_by(|&&x, &&y| (p(x)[1] - ya).abs().total_cmp(&(p(y)[1] - ya).abs()).then(x.cmp(&y)))
        .unwrap_or_else(|| cand.iter().find(|&&n| n != a).unwrap());
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::sparse::ReducedSystem;
    use crate::fem::testmesh::{grid, materials};
    use crate::fem::FeModel;
    use crate::materials::{EigenstrainMode, ThermalLoad};

    #[test]
    fn rim_pins_every_boundary_substrate_node_plus_three() {
        let mesh = grid(3, 1.0);
        let cs = build_constraints(&mesh).unwrap();
        // 12 boundary columns, substrate spans levels 0 and 1
        let z = cs.items().iter().filter(|c| c.dof == Dof::Z).count();
        assert_eq!(z, 24);
        assert_eq!(cs.len(), 24 + 3);
        for c in cs.items() {
            assert!(mesh.node_level[c.node as usize] <= 1);
        }
    }

    #[test]
    fn free_support_is_statically_determinate() {
        let mesh = grid(3, 1.0);
        let cs = build_constraints_with(&mesh, BoundaryMode::Free).unwrap();
        assert_eq!(cs.len(), 6);
        assert!(cs.items().iter().all(|c| mesh.node_level[c.node as usize] == 0));
    }

    #[test]
    fn both_modes_remove_all_rigid_motions() {
        let mesh = grid(3, 1.0);
        let model = FeModel::new(&mesh, &materials(0.0), &ThermalLoad::new(0.0, 1), EigenstrainMode::InPlane).unwrap();
        let u = vec![0.0; model.n_dofs()];
        let k = model.evaluate(&u, 0.0, true).unwrap().tangent.unwrap();
        for mode in [BoundaryMode::PinnedRim, BoundaryMode::Free] {
            let mask = build_constraints_with(&mesh, mode).unwrap().mask(k.n);
            let mut sys = ReducedSystem::new(&k, &mask).unwrap();
            sys.solve(&k, &vec![1.0; k.n], &vec![0.0; k.n], crate::fem::LinearSolverKind::Direct).unwrap();
            assert_eq!(sys.last_negative_pivots, 0);
        }
    }

    #[test]
    fn duplicate_constraint_is_rejected() {
        let mut cs = ConstraintSet::new();
        cs.push(3, Dof::Y, 0.0).unwrap();
        assert!(cs.push(3, Dof::Y, 1.0).is_err());
        assert_eq!(cs.values(12)[10], 0.0);
        assert!(cs.mask(12)[10]);
    }
}
