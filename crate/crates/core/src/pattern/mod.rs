//! Planar layer geometry for kirigami/substrate composites.

pub mod builders;
pub mod geometry;
pub mod layout;
pub mod textfmt;
pub mod transform;

use thiserror::Error;

pub use builders::{
    build_annulus_rim, build_lotus, build_pyramid_cross, build_spoon, build_strip, LotusParams, PatternSpec,
    DEFAULT_CHORD_TOL, SUBSTRATE_TOP,
};
pub use geometry::{Location, Point, Polygon};
pub use layout::{Layer, PlanarLayout, KIRIGAMI, SUBSTRATE};
pub use textfmt::{format_polygons, import_polygons, parse_polygons, to_svg};
pub use transform::{reflect_layer, removed_fraction, rotate_layout, scale_layer_aspect, Axis, MirrorLine};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("parameter `{field}` out of domain: {reason}")]
    ParameterDomain { field: String, reason: String },
    #[error("geometry conflict: {0}")]
    Conflict(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("layer `{layer}` polygon {polygon} ring {ring}: {reason}")]
    InvalidRing { layer: String, polygon: usize, ring: usize, reason: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown layer `{0}`")]
    UnknownLayer(String),
    #[error("layer `{layer}` has no polygon {index}")]
    NoSuchPolygon { layer: String, index: usize },
    #[error("i/o: {0}")]
    Io(String),
}
