//! Bragg-edge neutron strain tomography in two dimensions.
//!
//! Nodal strain fields on quadrilateral meshes are reconstructed from
//! path-averaged normal strain measurements (the longitudinal ray
//! transform), constrained by integrated plane-stress equilibrium and
//! optionally Tikhonov-regularized.

pub mod equilibrium;
pub mod error;
pub mod fields;
pub mod forward;
pub mod mesh;
pub mod raytrace;
pub mod solver;
pub mod sparse;
pub mod strain;

pub use error::{Error, Result};
pub use mesh::{DomainKind, Point2, QuadMesh};
pub use strain::{Component, NodalStrainField, StrainTensor};
