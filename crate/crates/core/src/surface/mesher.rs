use serde::{Deserialize, Serialize};

use super::levelset::{project_to_surface, ProjectionMode, Surface};
use crate::error::{Error, Result};
use crate::mesh::{chevron_grid, icosahedron, uniform_refine, TriMesh, Vec3};

/// Columns and rows of the coarsest chevron torus grid (200 vertices).
pub const TORUS_BASE_GRID: (usize, usize) = (20, 10);

/// Surface-nets resolution (cells per axis) of the quartic base mesh.
pub const QUARTIC_BASE_CELLS: usize = 20;

/// Families of meshes whose vertices sit on a built-in surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshGenerator {
    /// Icosahedron refined `level` times, new vertices projected to the sphere.
    Icosphere { level: usize },
    /// Chevron grid with `20 * 2^level x 10 * 2^level` vertices wrapped onto the torus.
    ChevronTorus { level: usize },
    /// Surface-nets mesh of the quartic, refined `level` times.
    Quartic { level: usize },
}

/// Mesh with all vertices on `surface` (Newton projection).
pub fn interpolation_mesh(surface: &Surface, generator: MeshGenerator) -> Result<TriMesh> {
    match (surface, generator) {
        (Surface::Sphere, MeshGenerator::Icosphere { level }) => icosphere(level),
        (Surface::Torus, MeshGenerator::ChevronTorus { level }) => chevron_torus(level),
        (Surface::Quartic, MeshGenerator::Quartic { level }) => {
            let base = quartic_base_mesh(QUARTIC_BASE_CELLS)?;
            let seq = quartic_sequence(&base, level, ProjectionMode::Newton)?;
            Ok(seq.into_iter().last().expect("non-empty sequence"))
        }
        (s, g) => Err(Error::Invalid(format!("generator {g:?} does not fit surface {}", s.name()))),
    }
}

pub fn icosphere(level: usize) -> Result<TriMesh> {
    Ok(icosphere_sequence(level)?.pop().expect("non-empty"))
}

/// Icosphere levels `0..=max_level`.
pub fn icosphere_sequence(max_level: usize) -> Result<Vec<TriMesh>> {
    let mut out = vec![icosahedron()];
    for _ in 0..max_level {
        let next = refine_and_project(out.last().unwrap(), &Surface::Sphere, ProjectionMode::Newton)?;
        out.push(next);
    }
    Ok(out)
}

fn refine_and_project(mesh: &TriMesh, surface: &Surface, mode: ProjectionMode) -> Result<TriMesh> {
    let old = mesh.num_vertices();
    let fine = uniform_refine(mesh)?;
    let mut verts = fine.vertices().to_vec();
    for p in verts.iter_mut().skip(old) {
        *p = project_to_surface(surface, p, mode)?;
    }
    fine.with_vertices(verts)
}

pub fn chevron_torus(level: usize) -> Result<TriMesh> {
    let (nm, nn) = (TORUS_BASE_GRID.0 << level, TORUS_BASE_GRID.1 << level);
    let (params, faces) = chevron_grid(nm, nn);
    let verts = params
        .into_iter()
        .map(|(theta, phi)| {
            let r = 4.0 + phi.cos();
            let p = Vec3::new(r * theta.cos(), r * theta.sin(), phi.sin());
            project_to_surface(&Surface::Torus, &p, ProjectionMode::Newton)
        })
        .collect::<Result<Vec<_>>>()?;
    TriMesh::new(verts, faces)
}

/// Quartic levels `0..=levels`: the base mesh, then repeated uniform
/// refinement with only the new vertices moved onto the surface by `mode`.
pub fn quartic_sequence(base: &TriMesh, levels: usize, mode: ProjectionMode) -> Result<Vec<TriMesh>> {
    let mut out = vec![base.clone()];
    for _ in 0..levels {
        let next = refine_and_project(out.last().unwrap(), &Surface::Quartic, mode)?;
        out.push(next);
    }
    Ok(out)
}

/// Surface-nets mesh of the quartic with `cells` grid cells per axis,
/// Newton-projected and tangentially smoothed.
pub fn quartic_base_mesh(cells: usize) -> Result<TriMesh> {
    let raw = surface_nets(&Surface::Quartic, [-1.5, -1.5, -1.5], 3.0 / cells as f64, cells)?;
    smooth_on_surface(&raw, &Surface::Quartic, 10)
}

/// Dual contouring of `{phi = 0}` on a uniform grid of `cells^3` cubes of side
/// `spacing` starting at `origin`: one vertex per sign-changing cube (mean of
/// the edge crossings), one quad per sign-changing grid edge, each quad split
/// along its shorter diagonal. Faces are oriented along `grad phi`.
pub fn surface_nets(surface: &Surface, origin: [f64; 3], spacing: f64, cells: usize) -> Result<TriMesh> {
    let n = cells + 1;
    let corner = |i: usize, j: usize, k: usize| {
        Vec3::new(
            origin[0] + spacing * i as f64,
            origin[1] + spacing * j as f64,
            origin[2] + spacing * k as f64,
        )
    };
    let cid = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut val = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = surface.phi(&corner(i, j, k));
                // exact zeros count as outside
                val[cid(i, j, k)] = if v == 0.0 { f64::MIN_POSITIVE } else { v };
            }
        }
    }

    const CUBE_EDGES: [([usize; 3], [usize; 3]); 12] = [
        ([0, 0, 0], [1, 0, 0]),
        ([0, 1, 0], [1, 1, 0]),
        ([0, 0, 1], [1, 0, 1]),
        ([0, 1, 1], [1, 1, 1]),
        ([0, 0, 0], [0, 1, 0]),
        ([1, 0, 0], [1, 1, 0]),
        ([0, 0, 1], [0, 1, 1]),
        ([1, 0, 1], [1, 1, 1]),
        ([0, 0, 0], [0, 0, 1]),
        ([1, 0, 0], [1, 0, 1]),
        ([0, 1, 0], [0, 1, 1]),
        ([1, 1, 0], [1, 1, 1]),
    ];
    let cell_id = |i: usize, j: usize, k: usize| (i * cells + j) * cells + k;
    let mut cell_vertex = vec![usize::MAX; cells * cells * cells];
    let mut verts = Vec::new();
    for i in 0..cells {
        for j in 0..cells {
            for k in 0..cells {
                let mut sum = Vec3::zeros();
                let mut cnt = 0;
                for (a, b) in CUBE_EDGES {
                    let (pa, pb) = ([i + a[0], j + a[1], k + a[2]], [i + b[0], j + b[1], k + b[2]]);
                    let (va, vb) = (val[cid(pa[0], pa[1], pa[2])], val[cid(pb[0], pb[1], pb[2])]);
                    if (va < 0.0) != (vb < 0.0) {
                        let t = va / (va - vb);
                        let xa = corner(pa[0], pa[1], pa[2]);
                        let xb = corner(pb[0], pb[1], pb[2]);
                        sum += xa + t * (xb - xa);
                        cnt += 1;
                    }
                }
                if cnt > 0 {
                    cell_vertex[cell_id(i, j, k)] = verts.len();
                    verts.push(sum / cnt as f64);
                }
            }
        }
    }

    let mut faces = Vec::new();
    let mut push_quad = |q: [usize; 4], flip: bool, verts: &[Vec3]| {
        let q = if flip { [q[3], q[2], q[1], q[0]] } else { q };
        if (verts[q[0]] - verts[q[2]]).norm_squared() <= (verts[q[1]] - verts[q[3]]).norm_squared() {
            faces.push([q[0], q[1], q[2]]);
            faces.push([q[0], q[2], q[3]]);
        } else {
            faces.push([q[0], q[1], q[3]]);
            faces.push([q[1], q[2], q[3]]);
        }
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v0 = val[cid(i, j, k)];
                // x-directed edge
                if i + 1 < n && j >= 1 && k >= 1 && j < cells && k < cells {
                    let v1 = val[cid(i + 1, j, k)];
                    if (v0 < 0.0) != (v1 < 0.0) {
                        let q = [
                            cell_vertex[cell_id(i, j - 1, k - 1)],
                            cell_vertex[cell_id(i, j, k - 1)],
                            cell_vertex[cell_id(i, j, k)],
                            cell_vertex[cell_id(i, j - 1, k)],
                        ];
                        push_quad(q, v0 > 0.0, &verts);
                    }
                }
                if j + 1 < n && i >= 1 && k >= 1 && i < cells && k < cells {
                    let v1 = val[cid(i, j + 1, k)];
                    if (v0 < 0.0) != (v1 < 0.0) {
                        let q = [
                            cell_vertex[cell_id(i - 1, j, k - 1)],
                            cell_vertex[cell_id(i - 1, j, k)],
                            cell_vertex[cell_id(i, j, k)],
                            cell_vertex[cell_id(i, j, k - 1)],
                        ];
                        push_quad(q, v0 > 0.0, &verts);
                    }
                }
                if k + 1 < n && i >= 1 && j >= 1 && i < cells && j < cells {
                    let v1 = val[cid(i, j, k + 1)];
                    if (v0 < 0.0) != (v1 < 0.0) {
                        let q = [
                            cell_vertex[cell_id(i - 1, j - 1, k)],
                            cell_vertex[cell_id(i, j - 1, k)],
                            cell_vertex[cell_id(i, j, k)],
                            cell_vertex[cell_id(i - 1, j, k)],
                        ];
                        push_quad(q, v0 > 0.0, &verts);
                    }
                }
            }
        }
    }
    TriMesh::new(verts, faces).map_err(|e| e.context("surface nets produced an invalid mesh"))
}

/// Newton-projects every vertex, then runs `iterations` sweeps of
/// umbrella smoothing followed by re-projection.
fn smooth_on_surface(mesh: &TriMesh, surface: &Surface, iterations: usize) -> Result<TriMesh> {
    let mut verts = mesh
        .vertices()
        .iter()
        .map(|p| project_to_surface(surface, p, ProjectionMode::Newton))
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..iterations {
        let next = (0..verts.len())
            .map(|v| {
                let nb = mesh.vertex_neighbors(v);
                let c = nb.iter().fold(Vec3::zeros(), |acc, &w| acc + verts[w]) / nb.len() as f64;
                project_to_surface(surface, &c, ProjectionMode::Newton)
            })
            .collect::<Result<Vec<_>>>()?;
        verts = next;
    }
    mesh.with_vertices(verts)
}
