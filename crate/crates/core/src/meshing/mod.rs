//! Planar triangulation and layered wedge meshes.

mod delaunay;
pub mod extrude;
pub mod export;
pub mod refine;
pub mod trimesh;

pub use extrude::{extrude, mesh_report, LayerSpec, LayeredMesh, MeshReport};
pub use export::{stl_layer_surface, stl_open_edges, to_vtk, write_stl, write_vtk};
pub use refine::{triangulate, triangulate_with, MeshOptions};
pub use trimesh::{format_trimesh, parse_trimesh, AuditLimits, AuditReport, TriMesh2D};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("invalid meshing parameter: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unknown layer '{0}'")]
    UnknownLayer(String),
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}
