//! Patch-based recovery of the surface geometry (local frames, Jacobians,
//! normals) and of surface gradients of piecewise-linear data.
//!
//! Every vertex gets an orthonormal frame whose third axis is the averaged
//! normal. Patch vertices are projected into the frame plane, giving
//! parameter coordinates `zeta` and heights `s`. A planar recovery operator
//! (quadratic least squares, or linear fit of element gradients) applied to
//! the heights gives the recovered Jacobian, and applied to nodal values
//! gives a parameter-domain gradient that is lifted to 3D through the
//! pseudo-inverse of that Jacobian.

mod fit;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix2x3, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{vertex_patch, vertex_patch_with_rings, TriMesh, Vec3, VertexPatch};
use crate::scalar_fem::NodalField;

pub use fit::{ppr_fit, spr_fit, triangle_gradient, RANK_TOL};

/// Planar recovery operator used inside the parametric scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Quadratic least-squares fit of nodal values (polynomial preserving).
    #[default]
    Pppr,
    /// Linear least-squares fit of element gradients at centroids.
    Pspr,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pppr" => Ok(Self::Pppr),
            "pspr" => Ok(Self::Pspr),
            _ => Err(Error::Invalid(format!("unknown recovery scheme '{s}'"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pppr => "pppr",
            Self::Pspr => "pspr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    pub scheme: Scheme,
    /// Patch vertices required besides the center.
    pub min_vertices: usize,
    /// Largest ring count tried when a fit is rank deficient.
    pub max_rings: usize,
    /// Weight face normals by area in the averaged normal (uniform otherwise).
    pub area_weighted: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self { scheme: Scheme::Pppr, min_vertices: 6, max_rings: 3, area_weighted: true }
    }
}

impl RecoveryOptions {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self { scheme, ..Self::default() }
    }
}

/// Orthonormal right-handed frame `(phi1, phi2, phi3)` at a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: Vec3,
    pub basis: [Vec3; 3],
}

impl LocalFrame {
    /// Frame with third axis `normal`; the first axis is the coordinate axis
    /// least aligned with `normal`, orthogonalized against it.
    pub fn from_normal(origin: Vec3, normal: Vec3) -> Self {
        let n = normal.normalize();
        let k = (0..3).min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
        let mut e = Vec3::zeros();
        e[k] = 1.0;
        let phi1 = (e - n * n.dot(&e)).normalize();
        let phi2 = n.cross(&phi1);
        Self { origin, basis: [phi1, phi2, n] }
    }

    /// `(zeta, s)` coordinates of `p` relative to the origin.
    pub fn local(&self, p: &Vec3) -> (Vector2<f64>, f64) {
        let d = p - self.origin;
        (Vector2::new(d.dot(&self.basis[0]), d.dot(&self.basis[1])), d.dot(&self.basis[2]))
    }

    /// Ambient vector with frame components `c`.
    pub fn ambient(&self, c: &Vector3<f64>) -> Vec3 {
        c[0] * self.basis[0] + c[1] * self.basis[1] + c[2] * self.basis[2]
    }
}

/// Recovered Jacobian `(I, R_h s)^T` of the local parametrization, stored
/// as the recovered slope `R_h s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredJacobian {
    pub slope: Vector2<f64>,
}

impl RecoveredJacobian {
    /// Row form `[[1, 0, s1], [0, 1, s2]]`.
    pub fn rows(&self) -> Matrix2x3<f64> {
        Matrix2x3::new(1.0, 0.0, self.slope.x, 0.0, 1.0, self.slope.y)
    }

    /// `(J J^T)^{-1} J` for the row form `J`.
    pub fn pseudo_inverse(&self) -> Matrix2x3<f64> {
        let j = self.rows();
        let jjt: Matrix2<f64> = j * j.transpose();
        // I + s s^T is always invertible
        jjt.try_inverse().expect("I + s s^T is invertible") * j
    }

    /// Unit normal in frame coordinates: the normalized cross product of
    /// the two columns, `(-s1, -s2, 1)`.
    pub fn normal(&self) -> Vector3<f64> {
        Vector3::new(-self.slope.x, -self.slope.y, 1.0).normalize()
    }
}

/// Per-vertex recovered geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexGeometry {
    pub frame: LocalFrame,
    pub jacobian: RecoveredJacobian,
    /// Ring count of the patch that gave a full-rank fit.
    pub rings: usize,
}

impl VertexGeometry {
    pub fn normal(&self) -> Vec3 {
        self.frame.ambient(&self.jacobian.normal())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredGeometry {
    pub scheme: Scheme,
    pub vertices: Vec<VertexGeometry>,
}

/// Recovered vertex gradients, tangent to the recovered normals.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredGradientField {
    pub values: Vec<Vec3>,
}

/// Normalized (area-weighted or uniform) average of the incident face normals.
pub fn averaged_normal(mesh: &TriMesh, v: usize, area_weighted: bool) -> Result<Vec3> {
    let mut sum = Vec3::zeros();
    for &f in mesh.vertex_faces(v) {
        let (n, area) = mesh.face_normal_area(f)?;
        sum += if area_weighted { area * n } else { n };
    }
    let len = sum.norm();
    if !(len > 1e-300) {
        return Err(Error::ZeroNormal { vertex: v });
    }
    Ok(sum / len)
}

/// Parameter coordinates and heights of the patch vertices (center first,
/// then `patch.ring_vertices`).
pub fn project_patch(mesh: &TriMesh, patch: &VertexPatch, frame: &LocalFrame) -> Result<(Vec<Vector2<f64>>, Vec<f64>)> {
    let ids = std::iter::once(patch.center).chain(patch.ring_vertices.iter().copied());
    let (zeta, s): (Vec<_>, Vec<_>) = ids.map(|v| frame.local(&mesh.vertex(v))).unzip();
    let r = zeta.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..zeta.len() {
        for j in 0..i {
            if (zeta[i] - zeta[j]).norm() <= 1e-14 * r {
                return Err(Error::FoldOver { vertex: patch.center });
            }
        }
    }
    Ok((zeta, s))
}

/// Patch data reused by the geometry and gradient steps.
struct PatchCoords {
    patch: VertexPatch,
    zeta: Vec<Vector2<f64>>,
    heights: Vec<f64>,
    /// Patch-local index of `mesh.vertices` entries
    local: std::collections::HashMap<usize, usize>,
}

impl PatchCoords {
    fn build(mesh: &TriMesh, patch: VertexPatch, frame: &LocalFrame) -> Result<Self> {
        let (zeta, heights) = project_patch(mesh, &patch, frame)?;
        let local = std::iter::once(patch.center)
            .chain(patch.ring_vertices.iter().copied())
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        Ok(Self { patch, zeta, heights, local })
    }

    fn values(&self, u: &dyn Fn(usize) -> f64) -> Vec<f64> {
        std::iter::once(self.patch.center).chain(self.patch.ring_vertices.iter().copied()).map(u).collect()
    }

    /// Applies the planar recovery operator to patch-local data.
    fn recover(&self, mesh: &TriMesh, scheme: Scheme, data: &[f64]) -> Result<Option<Vector2<f64>>> {
        match scheme {
            Scheme::Pppr => Ok(ppr_fit(&self.zeta, data)),
            Scheme::Pspr => {
                let mut cents = Vec::with_capacity(self.patch.ring_faces.len());
                let mut grads = Vec::with_capacity(self.patch.ring_faces.len());
                for &f in &self.patch.ring_faces {
                    let idx = mesh.face(f).map(|v| self.local[&v]);
                    let p = idx.map(|i| self.zeta[i]);
                    cents.push((p[0] + p[1] + p[2]) / 3.0);
                    grads.push(triangle_gradient(p, idx.map(|i| data[i])).map_err(|_| Error::FoldOver { vertex: self.patch.center })?);
                }
                Ok(spr_fit(&cents, &grads))
            }
        }
    }
}

fn vertex_geometry(mesh: &TriMesh, v: usize, opts: &RecoveryOptions) -> Result<VertexGeometry> {
    let normal = averaged_normal(mesh, v, opts.area_weighted)?;
    let frame = LocalFrame::from_normal(mesh.vertex(v), normal);
    let mut patch = vertex_patch(mesh, v, opts.min_vertices)?;
    loop {
        let coords = PatchCoords::build(mesh, patch, &frame)?;
        if let Some(slope) = coords.recover(mesh, opts.scheme, &coords.heights)? {
            return Ok(VertexGeometry { frame, jacobian: RecoveredJacobian { slope }, rings: coords.patch.rings });
        }
        if coords.patch.rings >= opts.max_rings {
            return Err(Error::RankDeficient { vertex: v });
        }
        patch = vertex_patch_with_rings(mesh, v, coords.patch.rings + 1)?;
    }
}

/// Frames and recovered Jacobians at every vertex.
pub fn recover_geometry(mesh: &TriMesh, opts: &RecoveryOptions) -> Result<RecoveredGeometry> {
    let vertices = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| vertex_geometry(mesh, v, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveredGeometry { scheme: opts.scheme, vertices })
}

/// Recovered unit normals.
pub fn recover_normal(geometry: &RecoveredGeometry) -> Vec<Vec3> {
    geometry.vertices.iter().map(VertexGeometry::normal).collect()
}

/// Recovered surface gradient of the piecewise-linear field `u`.
pub fn recover_gradient(mesh: &TriMesh, geometry: &RecoveredGeometry, u: &NodalField) -> Result<RecoveredGradientField> {
    if u.len() != mesh.num_vertices() || geometry.vertices.len() != mesh.num_vertices() {
        return Err(Error::Invalid("field, geometry and mesh sizes differ".into()));
    }
    let values = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            let g = &geometry.vertices[v];
            let patch = vertex_patch_with_rings(mesh, v, g.rings)?;
            let coords = PatchCoords::build(mesh, patch, &g.frame)?;
            let data = coords.values(&|w| u.values[w]);
            let grad = coords.recover(mesh, geometry.scheme, &data)?.ok_or(Error::RankDeficient { vertex: v })?;
            let t = g.jacobian.pseudo_inverse().transpose() * grad;
            Ok(g.frame.ambient(&t))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveredGradientField { values })
}

/// Constant unit normal of every face.
pub fn face_normals(mesh: &TriMesh) -> Result<Vec<Vec3>> {
    (0..mesh.num_faces()).map(|f| mesh.face_normal_area(f).map(|(n, _)| n)).collect()
}

/// Averaged normal at every vertex.
pub fn averaged_normals(mesh: &TriMesh, area_weighted: bool) -> Result<Vec<Vec3>> {
    (0..mesh.num_vertices()).into_par_iter().map(|v| averaged_normal(mesh, v, area_weighted)).collect()
}
