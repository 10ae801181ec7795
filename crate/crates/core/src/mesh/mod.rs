//! Indexed triangle meshes of closed orientable surfaces.
//!
//! A [`TriMesh`] owns vertex positions and a shared, immutable topology
//! (faces, edge adjacency and vertex stars). Meshes that differ only by
//! vertex positions share their topology through an `Arc`, which is how the
//! deviated mesh and its interpolation counterpart are kept in lock-step.

mod generate;
mod io;
mod patch;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use generate::{chevron_grid, icosahedron, tetrahedron};
pub use io::{load_mesh, save_mesh, MeshFormat};
pub use patch::{vertex_patch, vertex_patch_with_rings, VertexPatch};

pub type Vec3 = Vector3<f64>;

/// Relative area threshold below which a face counts as degenerate.
pub(crate) const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Topology {
    pub faces: Vec<[usize; 3]>,
    /// Undirected edges as `(min, max)` pairs, in order of first appearance.
    pub edges: Vec<[usize; 2]>,
    /// Faces on each side of `edges[i]`; the second slot is `None` on a boundary.
    pub edge_faces: Vec<[Option<usize>; 2]>,
    pub vertex_faces: Vec<Vec<usize>>,
    /// One-ring neighbours in ascending index order.
    pub vertex_neighbors: Vec<Vec<usize>>,
    pub closed: bool,
}

/// Triangle surface mesh with adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    topo: Arc<Topology>,
}

impl TriMesh {
    /// Builds a closed, consistently oriented mesh. Open meshes are rejected.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, faces, false)
    }

    /// Like [`TriMesh::new`] but tolerates boundary edges. Only meant for
    /// small fixtures (flat patches and the like).
    pub fn new_open(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, faces, true)
    }

    fn build(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, allow_open: bool) -> Result<Self> {
        let nv = vertices.len();
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= nv {
                    return Err(Error::InvalidIndex { face: f, vertex: v });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::DegenerateFace { face: f });
            }
        }

        // directed edge (a, b) -> face; a second face using the same direction
        // means the orientation is inconsistent (or the edge is non-manifold).
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut edges = Vec::with_capacity(faces.len() * 3 / 2);
        let mut edge_faces: Vec<[Option<usize>; 2]> = Vec::with_capacity(faces.len() * 3 / 2);
        let mut edge_dir: Vec<(usize, usize)> = Vec::with_capacity(faces.len() * 3 / 2);
        let mut edge_count: Vec<usize> = Vec::with_capacity(faces.len() * 3 / 2);
        for (f, face) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                match edge_index.get(&key) {
                    None => {
                        edge_index.insert(key, edges.len());
                        edges.push([key.0, key.1]);
                        edge_faces.push([Some(f), None]);
                        edge_dir.push((a, b));
                        edge_count.push(1);
                    }
                    Some(&e) => {
                        edge_count[e] += 1;
                        if edge_count[e] > 2 {
                            continue;
                        }
                        if edge_dir[e] == (a, b) {
                            return Err(Error::InconsistentOrientation(key.0, key.1));
                        }
                        edge_faces[e][1] = Some(f);
                    }
                }
            }
        }
        if let Some(e) = edge_count.iter().position(|&c| c > 2) {
            return Err(Error::NonManifoldEdge(edges[e][0], edges[e][1], edge_count[e]));
        }
        let mut closed = true;
        if let Some(e) = edge_count.iter().position(|&c| c == 1) {
            if !allow_open {
                return Err(Error::BoundaryEdge(edges[e][0], edges[e][1]));
            }
            closed = false;
        }

        let mut vertex_faces = vec![Vec::new(); nv];
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                vertex_faces[v].push(f);
            }
        }
        let mut vertex_neighbors = vec![Vec::new(); nv];
        for e in &edges {
            vertex_neighbors[e[0]].push(e[1]);
            vertex_neighbors[e[1]].push(e[0]);
        }
        for n in &mut vertex_neighbors {
            n.sort_unstable();
        }

        let mesh = TriMesh {
            vertices,
            topo: Arc::new(Topology {
                faces,
                edges,
                edge_faces,
                vertex_faces,
                vertex_neighbors,
                closed,
            }),
        };
        for f in 0..mesh.num_faces() {
            mesh.face_normal_area(f)?;
        }
        Ok(mesh)
    }

    /// Same connectivity, new vertex positions. Faces are re-checked for
    /// degeneracy.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::ConnectivityMismatch(format!(
                "{} positions for {} vertices",
                vertices.len(),
                self.vertices.len()
            )));
        }
        let mesh = TriMesh {
            vertices,
            topo: Arc::clone(&self.topo),
        };
        for f in 0..mesh.num_faces() {
            mesh.face_normal_area(f)?;
        }
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.topo.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.topo.edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64
    }

    pub fn is_closed(&self) -> bool {
        self.topo.closed
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.topo.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.topo.faces[f]
    }

    pub fn face_points(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.topo.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.topo.edges
    }

    pub fn edge_faces(&self, e: usize) -> [Option<usize>; 2] {
        self.topo.edge_faces[e]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.topo.vertex_faces[v]
    }

    pub fn vertex_neighbors(&self, v: usize) -> &[usize] {
        &self.topo.vertex_neighbors[v]
    }

    /// True when both meshes were built from the same face list.
    pub fn same_connectivity(&self, other: &TriMesh) -> bool {
        Arc::ptr_eq(&self.topo, &other.topo) || self.topo.faces == other.topo.faces
    }

    /// Unit normal (following the face orientation) and area of face `f`.
    pub fn face_normal_area(&self, f: usize) -> Result<(Vec3, f64)> {
        let [p0, p1, p2] = self.face_points(f);
        triangle_normal_area(&p0, &p1, &p2).ok_or(Error::DegenerateFace { face: f })
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_faces())
            .map(|f| triangle_normal_area_raw(&self.face_points(f)).1)
            .sum()
    }
}

/// Cross-product normal and area without the degeneracy check.
pub(crate) fn triangle_normal_area_raw(p: &[Vec3; 3]) -> (Vec3, f64) {
    let c = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let n = c.norm();
    (c / n, 0.5 * n)
}

/// Unit normal and area of a triangle, `None` when it is degenerate
/// relative to its longest edge.
pub fn triangle_normal_area(p0: &Vec3, p1: &Vec3, p2: &Vec3) -> Option<(Vec3, f64)> {
    let c = (p1 - p0).cross(&(p2 - p0));
    let n = c.norm();
    let longest = (p1 - p0)
        .norm_squared()
        .max((p2 - p1).norm_squared())
        .max((p0 - p2).norm_squared());
    if !(n > DEGENERATE_AREA * longest) || !n.is_finite() {
        return None;
    }
    Some((c / n, 0.5 * n))
}

/// Summary of element sizes and shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    /// Largest element diameter.
    pub h: f64,
    /// Smallest element diameter.
    pub h_min: f64,
    /// Smallest interior angle, radians.
    pub min_angle: f64,
    /// `h / h_min`.
    pub quasi_uniformity: f64,
}

pub fn mesh_stats(mesh: &TriMesh) -> MeshStats {
    let mut h = 0.0f64;
    let mut h_min = f64::INFINITY;
    let mut min_angle = f64::INFINITY;
    for f in 0..mesh.num_faces() {
        let p = mesh.face_points(f);
        let len = [
            (p[1] - p[0]).norm(),
            (p[2] - p[1]).norm(),
            (p[0] - p[2]).norm(),
        ];
        let diam = len[0].max(len[1]).max(len[2]);
        h = h.max(diam);
        h_min = h_min.min(diam);
        for k in 0..3 {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            let ang = a.cross(&b).norm().atan2(a.dot(&b));
            min_angle = min_angle.min(ang);
        }
    }
    MeshStats {
        h,
        h_min,
        min_angle,
        quasi_uniformity: h / h_min,
    }
}

/// Splits every face into four through its edge midpoints.
///
/// Old vertices keep their indices; the midpoint of edge `e` (in
/// [`TriMesh::edges`] order) becomes vertex `V + e`.
pub fn uniform_refine(mesh: &TriMesh) -> Result<TriMesh> {
    let nv = mesh.num_vertices();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(mesh.num_edges());
    let mut vertices = mesh.vertices.clone();
    vertices.reserve(mesh.num_edges());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        midpoint.insert((a, b), nv + e);
        vertices.push(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    }
    let mid = |a: usize, b: usize| midpoint[&(a.min(b), a.max(b))];
    let mut faces = Vec::with_capacity(4 * mesh.num_faces());
    for &[a, b, c] in mesh.faces() {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        faces.push([a, ab, ca]);
        faces.push([ab, b, bc]);
        faces.push([ca, bc, c]);
        faces.push([ab, bc, ca]);
    }
    if mesh.is_closed() {
        TriMesh::new(vertices, faces)
    } else {
        TriMesh::new_open(vertices, faces)
    }
}

/// Heron's formula from the three side lengths.
pub fn heron_area(a: f64, b: f64, c: f64) -> f64 {
    // Kahan's stable ordering
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    0.25 * ((a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))).max(0.0).sqrt()
}
