//! Penalty finite elements for the vector Laplacian of tangential fields.
//!
//! Unknowns are ambient 3-vectors at the vertices (dof `3 v + k`). On each
//! flat element the field is projected onto the element plane before its
//! componentwise gradient is taken; the normal component is penalized with
//! weight `beta / h^2` against a chosen normal field.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{mesh_stats, TriMesh, Vec3};
use crate::recovery::{averaged_normals, face_normals, recover_geometry, recover_normal, RecoveryOptions, Scheme};
use crate::scalar_fem::{element_gradients, local_mass, local_stiffness, SparseSystem};
use crate::sparse::{csr_from_triplets, pcg, CgOptions};
use crate::surface::{project_to_surface, ProjectionMode, Surface};

/// Symmetric 6-point rule, exact for degree 4 (barycentric points, weights sum to 1).
const DEGREE4_RULE: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445_948_490_915_965;
    const WA: f64 = 0.223_381_589_678_011;
    const B: f64 = 0.091_576_213_509_771;
    const WB: f64 = 0.109_951_743_655_322;
    [
        ([A, A, 1.0 - 2.0 * A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([1.0 - 2.0 * A, A, A], WA),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([1.0 - 2.0 * B, B, B], WB),
    ]
};

/// Normal field used in the penalty term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalSource {
    /// Constant face normals.
    Elementwise,
    /// Area-weighted vertex averages, interpolated linearly.
    Averaged,
    /// Normals from the recovered Jacobian, interpolated linearly.
    Recovered,
}

impl FromStr for NormalSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elementwise" => Ok(Self::Elementwise),
            "averaged" => Ok(Self::Averaged),
            "recovered" => Ok(Self::Recovered),
            _ => Err(Error::Invalid(format!("unknown normal source '{s}'"))),
        }
    }
}

impl fmt::Display for NormalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Elementwise => "elementwise",
            Self::Averaged => "averaged",
            Self::Recovered => "recovered",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub beta: f64,
    pub normal_source: NormalSource,
    /// Recovery scheme behind `NormalSource::Recovered`.
    pub scheme: Scheme,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self { beta: 1.0, normal_source: NormalSource::Recovered, scheme: Scheme::Pppr }
    }
}

impl PenaltyConfig {
    pub fn new(beta: f64, normal_source: NormalSource) -> Self {
        Self { beta, normal_source, ..Self::default() }
    }

    /// `beta / h^2`.
    pub fn mu(&self, h: f64) -> f64 {
        self.beta / (h * h)
    }
}

/// One ambient 3-vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorNodalField {
    pub values: Vec<Vec3>,
}

impl VectorNodalField {
    pub fn interpolate(mesh: &TriMesh, f: impl Fn(&Vec3) -> Vec3 + Sync + Send) -> Self {
        Self { values: mesh.vertices().par_iter().map(f).collect() }
    }

    pub fn from_dofs(x: &[f64]) -> Self {
        Self { values: x.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect() }
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
    }
}

/// Penalty normals: face constants or vertex values.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyNormals {
    Faces(Vec<Vec3>),
    Vertices(Vec<Vec3>),
}

impl PenaltyNormals {
    pub fn compute(mesh: &TriMesh, cfg: &PenaltyConfig) -> Result<Self> {
        Ok(match cfg.normal_source {
            NormalSource::Elementwise => Self::Faces(face_normals(mesh)?),
            NormalSource::Averaged => Self::Vertices(averaged_normals(mesh, true)?),
            NormalSource::Recovered => {
                Self::Vertices(recover_normal(&recover_geometry(mesh, &RecoveryOptions::with_scheme(cfg.scheme))?))
            }
        })
    }

    /// Normal at barycentric point `w` of face `f`.
    pub fn at(&self, mesh: &TriMesh, f: usize, w: &[f64; 3]) -> Vec3 {
        match self {
            Self::Faces(n) => n[f],
            Self::Vertices(n) => {
                let [a, b, c] = mesh.face(f);
                w[0] * n[a] + w[1] * n[b] + w[2] * n[c]
            }
        }
    }
}

type Block = [[Matrix3<f64>; 3]; 3];

/// Local 9x9 matrix as 3x3 blocks of 3x3: stiffness `K_ab P_T` plus penalty
/// `mu ∫ phi_a phi_b n n^T`.
fn local_block(mesh: &TriMesh, f: usize, normals: &PenaltyNormals, mu: f64) -> Result<Block> {
    let p = mesh.face_points(f);
    let k = local_stiffness(&p).ok_or(Error::DegenerateFace { face: f })?;
    let (n, area) = mesh.face_normal_area(f)?;
    let proj = Matrix3::identity() - n * n.transpose();
    let mut out = [[Matrix3::zeros(); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            out[a][b] = proj * k[a][b];
        }
    }
    match normals {
        PenaltyNormals::Faces(fnorm) => {
            let m = local_mass(&p, false).ok_or(Error::DegenerateFace { face: f })?;
            let nn = fnorm[f] * fnorm[f].transpose();
            for a in 0..3 {
                for b in 0..3 {
                    out[a][b] += nn * (mu * m[a][b]);
                }
            }
        }
        PenaltyNormals::Vertices(_) => {
            for (w, wq) in DEGREE4_RULE {
                let nq = normals.at(mesh, f, &w);
                let nn = nq * nq.transpose() * (mu * wq * area);
                for a in 0..3 {
                    for b in 0..3 {
                        out[a][b] += nn * (w[a] * w[b]);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// System matrix and load `M f` (consistent mass, per component).
pub fn assemble_vector_system(mesh: &TriMesh, cfg: &PenaltyConfig, f: &[Vec3]) -> Result<SparseSystem> {
    if !(cfg.beta > 0.0) {
        return Err(Error::Invalid(format!("penalty beta {} must be positive", cfg.beta)));
    }
    if f.len() != mesh.num_vertices() {
        return Err(Error::Invalid("load length differs from vertex count".into()));
    }
    let normals = PenaltyNormals::compute(mesh, cfg)?;
    assemble_with_normals(mesh, &normals, cfg.mu(mesh_stats(mesh).h), f)
}

/// Assembly with precomputed penalty normals and penalty weight `mu`.
pub fn assemble_with_normals(mesh: &TriMesh, normals: &PenaltyNormals, mu: f64, f: &[Vec3]) -> Result<SparseSystem> {
    let blocks = (0..mesh.num_faces())
        .into_par_iter()
        .map(|t| local_block(mesh, t, normals, mu))
        .collect::<Result<Vec<_>>>()?;
    let mut triplets = Vec::with_capacity(81 * blocks.len());
    let mut rhs = vec![0.0; 3 * mesh.num_vertices()];
    for (t, blk) in blocks.iter().enumerate() {
        let idx = mesh.face(t);
        let m = local_mass(&mesh.face_points(t), false).ok_or(Error::DegenerateFace { face: t })?;
        for a in 0..3 {
            for b in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        triplets.push((3 * idx[a] + i, 3 * idx[b] + j, blk[a][b][(i, j)]));
                    }
                    rhs[3 * idx[a] + i] += m[a][b] * f[idx[b]][i];
                }
            }
        }
    }
    Ok(SparseSystem { matrix: csr_from_triplets(3 * mesh.num_vertices(), &triplets), rhs, mean_zero: false })
}

pub fn solve_vector_laplace(mesh: &TriMesh, cfg: &PenaltyConfig, f: &[Vec3]) -> Result<VectorNodalField> {
    let sys = assemble_vector_system(mesh, cfg, f)?;
    let (x, _) = pcg(&sys.matrix, &sys.rhs, &CgOptions::default()).map_err(|e| e.context("vector Laplace solve"))?;
    Ok(VectorNodalField::from_dofs(&x))
}

/// Tangential test field on the unit sphere with its load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereTangentialField;

impl SphereTangentialField {
    /// `u = (-(y+z)x + y²+z², -(x+z)y + x²+z², -(x+y)z + x²+y²)`.
    pub fn value(&self, p: &Vec3) -> Vec3 {
        let (x, y, z) = (p.x, p.y, p.z);
        Vec3::new(-(y + z) * x + y * y + z * z, -(x + z) * y + x * x + z * z, -(x + y) * z + x * x + y * y)
    }

    /// Ambient Jacobian of the polynomial extension (row = component).
    pub fn jacobian(&self, p: &Vec3) -> Matrix3<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        Matrix3::new(
            -(y + z),
            -x + 2.0 * y,
            -x + 2.0 * z,
            -y + 2.0 * x,
            -(x + z),
            -y + 2.0 * z,
            -z + 2.0 * x,
            -z + 2.0 * y,
            -(x + y),
        )
    }

    /// Load of the vector Laplacian at a sphere point. On the unit sphere
    /// `u = P (1,1,1)` is the gradient of a degree-one harmonic, for which
    /// `-P div(P ∇u P) = u`.
    pub fn rhs(&self, p: &Vec3) -> Vec3 {
        self.value(p)
    }
}

/// Manufactured solution for the vector problem; only the unit sphere is supported.
pub fn manufactured_vector_problem(surface: &Surface) -> Result<SphereTangentialField> {
    match surface {
        Surface::Sphere => Ok(SphereTangentialField),
        s => Err(Error::UnknownSurface(format!("no manufactured vector field on {}", s.name()))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VectorErrors {
    /// `‖u_h - I_h u‖` in L².
    pub l2: f64,
    /// Componentwise L² norm of `∇(u_h - I_h u)`.
    pub h1: f64,
}

/// Errors against the interpolant of `u_exact`, integrated exactly for
/// piecewise-linear differences.
pub fn vector_errors(mesh: &TriMesh, uh: &VectorNodalField, u_exact: impl Fn(&Vec3) -> Vec3 + Sync) -> Result<VectorErrors> {
    if uh.values.len() != mesh.num_vertices() {
        return Err(Error::Invalid("field length differs from vertex count".into()));
    }
    let diff: Vec<Vec3> = mesh.vertices().iter().zip(&uh.values).map(|(p, u)| u - u_exact(p)).collect();
    let parts = (0..mesh.num_faces())
        .into_par_iter()
        .map(|t| {
            let p = mesh.face_points(t);
            let m = local_mass(&p, false).ok_or(Error::DegenerateFace { face: t })?;
            let k = local_stiffness(&p).ok_or(Error::DegenerateFace { face: t })?;
            let idx = mesh.face(t);
            let (mut l2, mut h1) = (0.0, 0.0);
            for a in 0..3 {
                for b in 0..3 {
                    let d = diff[idx[a]].dot(&diff[idx[b]]);
                    l2 += m[a][b] * d;
                    h1 += k[a][b] * d;
                }
            }
            Ok((l2, h1))
        })
        .collect::<Result<Vec<_>>>()?;
    let (l2, h1) = parts.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    Ok(VectorErrors { l2: l2.max(0.0).sqrt(), h1: h1.max(0.0).sqrt() })
}

/// `‖∇_h u_h - ∇_Γ u‖` with the componentwise tangential Jacobian of the
/// exact field evaluated at the closest surface point of each midedge
/// quadrature point.
pub fn vector_gradient_error(
    mesh: &TriMesh,
    surface: &Surface,
    uh: &VectorNodalField,
    jacobian: impl Fn(&Vec3) -> Matrix3<f64> + Sync,
) -> Result<f64> {
    let parts = (0..mesh.num_faces())
        .into_par_iter()
        .map(|t| {
            let p = mesh.face_points(t);
            let (g, area) = element_gradients(&p).ok_or(Error::DegenerateFace { face: t })?;
            let idx = mesh.face(t);
            let mut jh = Matrix3::zeros();
            for a in 0..3 {
                jh += uh.values[idx[a]] * g[a].transpose();
            }
            crate::scalar_fem::MIDEDGE_RULE.iter().try_fold(0.0, |acc, w| {
                let q = w[0] * p[0] + w[1] * p[1] + w[2] * p[2];
                let y = project_to_surface(surface, &q, ProjectionMode::Newton)?;
                let nu = surface.normal(&y);
                let proj = Matrix3::identity() - nu * nu.transpose();
                Ok(acc + area / 3.0 * (jh - jacobian(&y) * proj).norm_squared())
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests;
