//! Exact level-set geometries and the meshes built on them.
//!
//! * [`Surface`]: closed-form `phi`, gradient and Hessian for the sphere,
//!   the torus and the quartic surface.
//! * [`project_to_surface`]: damped Newton or a single first-order step.
//! * [`interpolation_mesh`] and friends: meshes whose vertices lie on the
//!   surface, plus the quartic refinement pipeline.
//! * [`perturb_mesh`]: seeded deviations along normal/tangent directions.
//! * [`pair_transform`] / [`supercloseness_report`]: element-pair
//!   Jacobians, metrics and area ratios between two meshes.

mod levelset;
mod mesher;
mod perturb;
mod transform;

pub use levelset::{project_to_surface, tangent_basis, ProjectionMode, Surface};
pub use mesher::{
    chevron_torus, icosphere, icosphere_sequence, interpolation_mesh, quartic_base_mesh,
    quartic_sequence, surface_nets, MeshGenerator, QUARTIC_BASE_CELLS, TORUS_BASE_GRID,
};
pub use perturb::{perturb_mesh, PerturbationSpec};
pub use transform::{
    edge_length_deviation, pair_transform, supercloseness_report, SuperclosenessReport,
    TrianglePairTransform,
};
