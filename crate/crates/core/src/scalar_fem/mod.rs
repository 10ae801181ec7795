//! Linear surface finite elements for `-Δ_Γ u = f` (mean-zero) and
//! `-Δ_Γ u + u = f` on flat triangulations.

mod norms;

use nalgebra::Matrix3;
use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{triangle_normal_area, TriMesh, Vec3};
use crate::sparse::{csr_from_triplets, pcg, spmv, CgOptions};
use crate::surface::{project_to_surface, ProjectionMode, Surface};

pub use norms::{
    gradient_error, interpolant_gradient_error, recovered_gradient_error, tangential_gradient, MIDEDGE_RULE,
};

/// Piecewise-linear field given by its vertex values.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn interpolate(mesh: &TriMesh, f: impl Fn(&Vec3) -> f64 + Sync + Send) -> Self {
        Self { values: mesh.vertices().par_iter().map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Constant gradient of the field on face `f`.
    pub fn face_gradient(&self, mesh: &TriMesh, f: usize) -> Result<Vec3> {
        let (grads, _) = element_gradients(&mesh.face_points(f)).ok_or(Error::DegenerateFace { face: f })?;
        let [a, b, c] = mesh.face(f);
        Ok(self.values[a] * grads[0] + self.values[b] * grads[1] + self.values[c] * grads[2])
    }
}

/// Matrix, right-hand side and whether constants span the kernel.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix<f64>,
    pub rhs: Vec<f64>,
    pub mean_zero: bool,
}

/// Gradients of the barycentric coordinates of a flat triangle (tangent to
/// its plane) and its area; `None` for a degenerate triangle.
pub fn element_gradients(p: &[Vec3; 3]) -> Option<([Vec3; 3], f64)> {
    let (n, area) = triangle_normal_area(&p[0], &p[1], &p[2])?;
    let s = 1.0 / (2.0 * area);
    Some((
        [n.cross(&(p[2] - p[1])) * s, n.cross(&(p[0] - p[2])) * s, n.cross(&(p[1] - p[0])) * s],
        area,
    ))
}

fn assemble(mesh: &TriMesh, local: impl Fn(&[Vec3; 3]) -> Option<[[f64; 3]; 3]> + Sync) -> Result<CsrMatrix<f64>> {
    let blocks = (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| local(&mesh.face_points(f)).ok_or(Error::DegenerateFace { face: f }))
        .collect::<Result<Vec<_>>>()?;
    let mut triplets = Vec::with_capacity(9 * blocks.len());
    for (f, k) in blocks.iter().enumerate() {
        let idx = mesh.face(f);
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((idx[a], idx[b], k[a][b]));
            }
        }
    }
    Ok(csr_from_triplets(mesh.num_vertices(), &triplets))
}

pub fn local_stiffness(p: &[Vec3; 3]) -> Option<[[f64; 3]; 3]> {
    let (g, area) = element_gradients(p)?;
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = area * g[a].dot(&g[b]);
        }
    }
    Some(k)
}

pub fn local_mass(p: &[Vec3; 3], lumped: bool) -> Option<[[f64; 3]; 3]> {
    let (_, area) = triangle_normal_area(&p[0], &p[1], &p[2])?;
    let mut m = [[0.0; 3]; 3];
    for (a, row) in m.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = match (lumped, a == b) {
                (true, true) => area / 3.0,
                (true, false) => 0.0,
                (false, true) => area / 6.0,
                (false, false) => area / 12.0,
            };
        }
    }
    Some(m)
}

pub fn assemble_stiffness(mesh: &TriMesh) -> Result<CsrMatrix<f64>> {
    assemble(mesh, local_stiffness)
}

pub fn assemble_mass(mesh: &TriMesh, lumped: bool) -> Result<CsrMatrix<f64>> {
    assemble(mesh, |p| local_mass(p, lumped))
}

/// Lumped mass diagonal (area / 3 per incident face).
pub fn lumped_mass_diagonal(mesh: &TriMesh) -> Result<Vec<f64>> {
    let mut d = vec![0.0; mesh.num_vertices()];
    for f in 0..mesh.num_faces() {
        let (_, area) = mesh.face_normal_area(f)?;
        for v in mesh.face(f) {
            d[v] += area / 3.0;
        }
    }
    Ok(d)
}

/// Consistent mass matrix times vertex samples.
pub fn load_vector(mesh: &TriMesh, f: &[f64]) -> Result<Vec<f64>> {
    Ok(spmv(&assemble_mass(mesh, false)?, f))
}

/// Solves `A u = b` on the complement of constants. `b` is first made
/// compatible by subtracting its total spread as `weights`, and the result
/// is normalized to zero `weights`-weighted mean.
pub fn solve_mean_zero(a: &CsrMatrix<f64>, b: &[f64], weights: &[f64]) -> Result<NodalField> {
    let total_w: f64 = weights.iter().sum();
    let total_b: f64 = b.iter().sum();
    let rhs: Vec<f64> = b.iter().zip(weights).map(|(b, w)| b - total_b * w / total_w).collect();
    let opts = CgOptions { remove_constant: true, ..Default::default() };
    let (mut u, _) = pcg(a, &rhs, &opts).map_err(|e| e.context("mean-zero solve"))?;
    let mean = u.iter().zip(weights).map(|(u, w)| u * w).sum::<f64>() / total_w;
    u.iter_mut().for_each(|x| *x -= mean);
    Ok(NodalField::new(u))
}

/// Mean-zero Laplace–Beltrami solve with load `M f`.
pub fn solve_laplace(mesh: &TriMesh, f: &[f64]) -> Result<NodalField> {
    let k = assemble_stiffness(mesh)?;
    let b = load_vector(mesh, f)?;
    solve_mean_zero(&k, &b, &lumped_mass_diagonal(mesh)?)
}

/// Solves `(K + M) u = M f`.
pub fn solve_reaction(mesh: &TriMesh, f: &[f64]) -> Result<NodalField> {
    let k = assemble_stiffness(mesh)?;
    let m = assemble_mass(mesh, false)?;
    let b = spmv(&m, f);
    let a = &k + &m;
    let (u, _) = pcg(&a, &b, &CgOptions::default()).map_err(|e| e.context("reaction solve"))?;
    Ok(NodalField::new(u))
}

/// Smooth ambient function with closed-form derivatives.
pub trait ScalarFunction: Sync {
    fn value(&self, p: &Vec3) -> f64;
    fn gradient(&self, p: &Vec3) -> Vec3;
    fn hessian(&self, p: &Vec3) -> Matrix3<f64>;
}

/// Exact solutions used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactSolution {
    /// `x1 * x2`
    ProductX1X2,
    /// `exp(x^2 + y^2 + z^2)`
    ExpRadiusSquared,
    Constant(f64),
}

impl ScalarFunction for ExactSolution {
    fn value(&self, p: &Vec3) -> f64 {
        match self {
            Self::ProductX1X2 => p.x * p.y,
            Self::ExpRadiusSquared => p.norm_squared().exp(),
            Self::Constant(c) => *c,
        }
    }

    fn gradient(&self, p: &Vec3) -> Vec3 {
        match self {
            Self::ProductX1X2 => Vec3::new(p.y, p.x, 0.0),
            Self::ExpRadiusSquared => 2.0 * p.norm_squared().exp() * p,
            Self::Constant(_) => Vec3::zeros(),
        }
    }

    fn hessian(&self, p: &Vec3) -> Matrix3<f64> {
        match self {
            Self::ProductX1X2 => Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            Self::ExpRadiusSquared => {
                let e = p.norm_squared().exp();
                e * (2.0 * Matrix3::identity() + 4.0 * p * p.transpose())
            }
            Self::Constant(_) => Matrix3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Laplace,
    Reaction,
}

/// Surface Laplacian of the ambient function `u` at a point `x` on the
/// surface: `Δu - H ∂_ν u - ν·D²u ν` with `H = div ν`.
pub fn laplace_beltrami(surface: &Surface, u: &dyn ScalarFunction, x: &Vec3) -> Result<f64> {
    let g = surface.grad(x);
    let gn = g.norm();
    if gn < 1e-12 {
        return Err(Error::VanishingGradient([x.x, x.y, x.z]));
    }
    let nu = g / gn;
    let h = surface.mean_curvature(x);
    let hu = u.hessian(x);
    Ok(hu.trace() - h * u.gradient(x).dot(&nu) - nu.dot(&(hu * nu)))
}

/// Right-hand side `f = -Δ_Γ u (+ u)` evaluated at the closest surface
/// point of `x`.
pub fn ambient_rhs(surface: &Surface, u: &dyn ScalarFunction, problem: Problem, x: &Vec3) -> Result<f64> {
    let y = project_to_surface(surface, x, ProjectionMode::Newton)?;
    let lap = laplace_beltrami(surface, u, &y)?;
    Ok(match problem {
        Problem::Laplace => -lap,
        Problem::Reaction => -lap + u.value(&y),
    })
}

/// `ambient_rhs` at every mesh vertex.
pub fn sample_rhs(mesh: &TriMesh, surface: &Surface, u: &dyn ScalarFunction, problem: Problem) -> Result<Vec<f64>> {
    mesh.vertices().par_iter().map(|x| ambient_rhs(surface, u, problem, x)).collect()
}
