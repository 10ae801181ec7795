use super::{TriMesh, Vec3};

/// Regular tetrahedron inscribed in the unit sphere, outward orientation.
pub fn tetrahedron() -> TriMesh {
    let s = 1.0 / 3f64.sqrt();
    let vertices = vec![
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::new(vertices, faces).expect("tetrahedron is a valid closed mesh")
}

/// Regular icosahedron with vertices on the unit sphere, outward orientation.
pub fn icosahedron() -> TriMesh {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let vertices = raw
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    TriMesh::new(vertices, faces).expect("icosahedron is a valid closed mesh")
}

/// Doubly periodic grid of `n_major x n_minor` vertices triangulated in a
/// chevron pattern: the diagonal of each quad flips from one column to the
/// next. Returns the parameter coordinates `(theta, phi)` in `[0, 2pi)^2`
/// and the faces, oriented so that `d/dtheta x d/dphi` is the face normal.
pub fn chevron_grid(n_major: usize, n_minor: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    assert!(n_major >= 3 && n_minor >= 3 && n_major.is_multiple_of(2), "chevron grid needs an even number of columns");
    let tau = std::f64::consts::TAU;
    let idx = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut params = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            params.push((tau * i as f64 / n_major as f64, tau * j as f64 / n_minor as f64));
        }
    }
    let mut faces = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if i % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    (params, faces)
}
