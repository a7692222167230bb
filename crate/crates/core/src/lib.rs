//! Shape-morphing simulator for kirigami / shrink-film composites.
//!
//! Pipeline: [`pattern`] builds planar layer geometry, [`meshing`] turns it
//! into a stacked wedge mesh, [`fem`] solves finite-strain equilibrium under
//! a thermal eigenstrain, and [`analysis`] measures the morphed shape.

pub mod pattern;
pub mod materials;
pub mod meshing;
pub mod fem;
pub mod analysis;
pub mod interface;
