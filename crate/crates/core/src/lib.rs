//! Surface finite elements on triangulated level-set surfaces with
//! gradient and normal recovery.

// `!(x > tol)` is used on purpose so that NaN takes the failure branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod mesh;
pub mod recovery;
pub mod scalar_fem;
pub mod sparse;
pub mod surface;
pub mod vector_fem;

pub use error::{Error, Result};
pub use mesh::{TriMesh, Vec3};
