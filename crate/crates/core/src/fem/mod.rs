//! Finite-strain static equilibrium of layered wedge meshes under thermal eigenstrain.

pub mod constraints;
pub mod element;
pub mod solver;
pub mod sparse;

pub use constraints::{build_constraints, build_constraints_with, footprint_boundary, BoundaryMode, Constraint, ConstraintSet, Dof};
pub use element::{element_force_tangent, wedge_volume, ElementOptions, ElementResponse, ElementState, Lame};
pub use solver::{
    assemble, convergence_csv, linear_solve, seed_imperfection, solve_static, strain_energy, Bias, FeModel, GridState, MorphResult,
    SolveConfig, StepRecord,
};
pub use sparse::{LinearSolverKind, SparseSym};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FemError {
    #[error("element {element} is inverted")]
    InvertedElement { element: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("newton iteration failed: {0}")]
    Diverged(String),
    #[error("constraint error: {0}")]
    Constraint(String),
    #[error("solver configuration: {0}")]
    Config(String),
    #[error("continuation stalled at load factor {:.4}: {cause}", result.lambda)]
    Stall { result: Box<solver::MorphResult>, cause: String },
}

impl FemError {
    /// Partial result carried by a continuation stall.
    pub fn partial(&self) -> Option<&solver::MorphResult> {
        match self {
            FemError::Stall { result, .. } => Some(result),
            _ => None,
        }
    }
}

#[cfg(test)]
pub(crate) mod testmesh {
    use crate::materials::MaterialModel;
    use crate::meshing::{extrude, LayerSpec, LayeredMesh, TriMesh2D};

    /// `n × n` squares of side `h`, each split into two triangles, covered by
    /// substrate and kirigami.
    pub fn grid(n: usize, h: f64) -> LayeredMesh {
        let id = |i: usize, j: usize| (j * (n + 1) + i) as u32;
        let mut nodes = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut boundary_edges = Vec::new();
        for k in 0..n {
            boundary_edges.extend([[id(k, 0), id(k + 1, 0)], [id(n, k), id(n, k + 1)], [id(k + 1, n), id(k, n)], [id(0, k + 1), id(0, k)]]);
        }
        let tri = TriMesh2D {
            coverage: vec![0b11; triangles.len()],
            nodes,
            triangles,
            layer_names: vec!["substrate".into(), "kirigami".into()],
            boundary_edges,
            warnings: vec![],
        };
        extrude(&tri, &[LayerSpec::new("substrate", 0.1, "s"), LayerSpec::new("kirigami", 0.6, "k")]).unwrap()
    }

    pub fn materials(alpha: f64) -> Vec<MaterialModel> {
        vec![MaterialModel::new("s", 404.2082, 0.49, alpha).unwrap(), MaterialModel::new("k", 761.6368, 0.49, 0.0).unwrap()]
    }
}
