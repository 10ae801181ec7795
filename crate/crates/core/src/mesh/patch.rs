use super::TriMesh;
use crate::error::{Error, Result};

/// Vertices and faces within a few edge rings of a centre vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPatch {
    pub center: usize,
    /// Patch vertices other than the centre, ascending.
    pub ring_vertices: Vec<usize>,
    /// Faces incident to the centre or to any vertex of the inner rings, ascending.
    pub ring_faces: Vec<usize>,
    pub rings: usize,
}

/// Smallest ring neighbourhood of `v` holding at least `min_vertices`
/// vertices besides `v` itself.
pub fn vertex_patch(mesh: &TriMesh, v: usize, min_vertices: usize) -> Result<VertexPatch> {
    let mut rings = 1;
    loop {
        let patch = vertex_patch_with_rings(mesh, v, rings)?;
        if patch.ring_vertices.len() >= min_vertices {
            return Ok(patch);
        }
        let next = vertex_patch_with_rings(mesh, v, rings + 1)?;
        if next.ring_vertices.len() == patch.ring_vertices.len() {
            return Err(Error::PatchTooSmall {
                center: v,
                wanted: min_vertices,
                found: patch.ring_vertices.len(),
            });
        }
        rings += 1;
    }
}

/// The `rings`-ring neighbourhood of `v`.
pub fn vertex_patch_with_rings(mesh: &TriMesh, v: usize, rings: usize) -> Result<VertexPatch> {
    if v >= mesh.num_vertices() {
        return Err(Error::Invalid(format!("vertex {v} out of range")));
    }
    let mut seen = vec![v];
    let mut frontier = vec![v];
    let mut inner = vec![v];
    for ring in 0..rings {
        let mut next = Vec::new();
        for &w in &frontier {
            for &n in mesh.vertex_neighbors(w) {
                if !seen.contains(&n) && !next.contains(&n) {
                    next.push(n);
                }
            }
        }
        seen.extend_from_slice(&next);
        if ring + 1 < rings {
            inner.extend_from_slice(&next);
        }
        frontier = next;
    }
    let mut ring_vertices: Vec<usize> = seen.into_iter().filter(|&w| w != v).collect();
    ring_vertices.sort_unstable();
    let mut ring_faces: Vec<usize> = inner
        .iter()
        .flat_map(|&w| mesh.vertex_faces(w).iter().copied())
        .collect();
    ring_faces.sort_unstable();
    ring_faces.dedup();
    Ok(VertexPatch {
        center: v,
        ring_vertices,
        ring_faces,
        rings,
    })
}
