use super::*;
use crate::mesh::icosahedron;
use crate::scalar_fem::lumped_mass_diagonal;
use crate::sparse::spmv;
use crate::surface::icosphere;
use nalgebra::{DMatrix, Rotation3};

fn dense(a: &nalgebra_sparse::CsrMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a.get_entry(i, j).map_or(0.0, |e| e.into_value()))
}

fn load(mesh: &TriMesh) -> Vec<Vec3> {
    mesh.vertices().iter().map(|p| SphereTangentialField.rhs(p)).collect()
}

#[test]
fn exact_field_is_tangent() {
    let u = manufactured_vector_problem(&Surface::Sphere).unwrap();
    assert_eq!(u.value(&Vec3::x()), Vec3::new(0.0, 1.0, 1.0));
    assert_eq!(u.value(&Vec3::z()), Vec3::new(1.0, 1.0, 0.0));
    for p in icosphere(2).unwrap().vertices() {
        assert!(p.dot(&u.value(p)).abs() < 1e-12);
        // u = P (1,1,1)
        let ones = Vec3::new(1.0, 1.0, 1.0);
        assert!((u.value(p) - (ones - p * p.dot(&ones))).norm() < 1e-12);
    }
    assert!(manufactured_vector_problem(&Surface::Torus).is_err());
}

#[test]
fn jacobian_matches_finite_differences() {
    let u = SphereTangentialField;
    let p = Vec3::new(0.3, -0.5, 0.8);
    let j = u.jacobian(&p);
    let eps = 1e-6;
    for k in 0..3 {
        let mut e = Vec3::zeros();
        e[k] = eps;
        let fd = (u.value(&(p + e)) - u.value(&(p - e))) / (2.0 * eps);
        for i in 0..3 {
            assert!((fd[i] - j[(i, k)]).abs() < 1e-8);
        }
    }
}

/// Consistency of the load with the discrete operator: for smooth tangent
/// test fields `v`, `a_h(I_h u, I_h v) - (f, I_h v)` must vanish under
/// refinement. A wrong load (here `2u`) leaves an O(1) residual.
#[test]
fn load_is_consistent_with_discrete_operator() {
    let tests: Vec<Box<dyn Fn(&Vec3) -> Vec3>> = vec![
        Box::new(|p: &Vec3| Vec3::x() - p * p.x),
        Box::new(|p: &Vec3| Vec3::new(0.0, 0.0, 1.0).cross(p)),
        Box::new(|p: &Vec3| Vec3::new(1.0, 1.0, 1.0) - p * (p.x + p.y + p.z)),
        Box::new(|p: &Vec3| Vec3::new(1.0, 0.0, 0.0).cross(p) * p.z),
    ];
    let mut res = vec![];
    let mut wrong = vec![];
    for level in 3..6 {
        let mesh = icosphere(level).unwrap();
        let f = load(&mesh);
        let sys = assemble_with_normals(&mesh, &PenaltyNormals::Faces(face_normals(&mesh).unwrap()), 0.0, &f).unwrap();
        let ui = VectorNodalField::interpolate(&mesh, |p| SphereTangentialField.value(p)).to_dofs();
        let au = spmv(&sys.matrix, &ui);
        let (mut r, mut w) = (0.0f64, 0.0f64);
        for v in &tests {
            let vi: Vec<f64> = mesh.vertices().iter().flat_map(|p| {
                let q = v(p);
                [q.x, q.y, q.z]
            }).collect();
            let a: f64 = au.iter().zip(&vi).map(|(x, y)| x * y).sum();
            let b: f64 = sys.rhs.iter().zip(&vi).map(|(x, y)| x * y).sum();
            r = r.max((a - b).abs());
            w = w.max((a - 2.0 * b).abs());
        }
        res.push(r);
        wrong.push(w);
    }
    assert!(res[2] < 0.1 * res[0], "{res:?}");
    assert!(res[2] < 1e-2, "{res:?}");
    assert!(wrong[2] > 0.5, "{wrong:?}");
}

/// Literal evaluation of the bilinear form at quadrature points.
fn brute_force(mesh: &TriMesh, normals: &PenaltyNormals, mu: f64) -> DMatrix<f64> {
    let n = 3 * mesh.num_vertices();
    let mut a = DMatrix::zeros(n, n);
    for t in 0..mesh.num_faces() {
        let p = mesh.face_points(t);
        let (g, area) = element_gradients(&p).unwrap();
        let (nt, _) = mesh.face_normal_area(t).unwrap();
        let proj = Matrix3::identity() - nt * nt.transpose();
        let idx = mesh.face(t);
        for (w, wq) in DEGREE4_RULE {
            let nq = normals.at(mesh, t, &w);
            for la in 0..3 {
                for lb in 0..3 {
                    for i in 0..3 {
                        for j in 0..3 {
                            let (mut ei, mut ej) = (Vec3::zeros(), Vec3::zeros());
                            ei[i] = 1.0;
                            ej[j] = 1.0;
                            let ga = (proj * ei) * g[la].transpose();
                            let gb = (proj * ej) * g[lb].transpose();
                            let stiff = ga.component_mul(&gb).sum();
                            let pen = mu * w[la] * w[lb] * ei.dot(&nq) * ej.dot(&nq);
                            a[(3 * idx[la] + i, 3 * idx[lb] + j)] += wq * area * (stiff + pen);
                        }
                    }
                }
            }
        }
    }
    a
}

#[test]
fn assembly_matches_dense_oracle() {
    let mesh = icosahedron();
    for source in [NormalSource::Elementwise, NormalSource::Averaged, NormalSource::Recovered] {
        let cfg = PenaltyConfig::new(1.0, source);
        let normals = PenaltyNormals::compute(&mesh, &cfg).unwrap();
        let mu = cfg.mu(mesh_stats(&mesh).h);
        let sys = assemble_with_normals(&mesh, &normals, mu, &load(&mesh)).unwrap();
        let a = dense(&sys.matrix);
        let b = brute_force(&mesh, &normals, mu);
        assert_eq!(a.nrows(), 36);
        assert!((&a - &b).amax() < 1e-12, "{source}: {}", (&a - &b).amax());
        assert!((&a - a.transpose()).amax() < 1e-14);
        assert!(a.symmetric_eigenvalues().min() > 0.0);
    }
}

#[test]
fn zero_load_gives_zero_field() {
    let mesh = icosphere(2).unwrap();
    let u = solve_vector_laplace(&mesh, &PenaltyConfig::default(), &vec![Vec3::zeros(); mesh.num_vertices()]).unwrap();
    assert!(u.values.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn penalty_block_is_positive() {
    let mesh = icosphere(1).unwrap();
    let cfg = PenaltyConfig::default();
    let normals = PenaltyNormals::compute(&mesh, &cfg).unwrap();
    let zero = vec![Vec3::zeros(); mesh.num_vertices()];
    let a = dense(&assemble_with_normals(&mesh, &normals, 1.0, &zero).unwrap().matrix);
    let s = dense(&assemble_with_normals(&mesh, &normals, 0.0, &zero).unwrap().matrix);
    let PenaltyNormals::Vertices(nv) = &normals else { unreachable!() };
    let mut x = nalgebra::DVector::zeros(a.nrows());
    for k in 0..3 {
        x[k] = nv[0][k];
    }
    assert!((x.transpose() * (a - s) * &x)[0] > 0.0);
}

#[test]
fn larger_beta_reduces_normal_component() {
    let mesh = icosphere(3).unwrap();
    let f = load(&mesh);
    let nv = recover_normal(&recover_geometry(&mesh, &RecoveryOptions::default()).unwrap());
    let w = lumped_mass_diagonal(&mesh).unwrap();
    let mut prev = f64::INFINITY;
    for beta in [1.0, 1e2, 1e4] {
        let u = solve_vector_laplace(&mesh, &PenaltyConfig::new(beta, NormalSource::Recovered), &f).unwrap();
        let nc = u.values.iter().zip(&nv).zip(&w).map(|((u, n), w)| w * u.dot(n).powi(2)).sum::<f64>().sqrt();
        assert!(nc < prev, "beta {beta}: {nc} vs {prev}");
        prev = nc;
    }
}

#[test]
fn rotation_equivariance() {
    let mesh = icosphere(3).unwrap();
    let rot = Rotation3::from_euler_angles(0.7, -0.2, 1.3);
    let moved = mesh.with_vertices(mesh.vertices().iter().map(|p| rot * p).collect()).unwrap();
    let f = load(&mesh);
    let fr: Vec<Vec3> = f.iter().map(|v| rot * v).collect();
    let cfg = PenaltyConfig::default();
    let u0 = solve_vector_laplace(&mesh, &cfg, &f).unwrap();
    let u1 = solve_vector_laplace(&moved, &cfg, &fr).unwrap();
    for (a, b) in u0.values.iter().zip(&u1.values) {
        assert!((rot * a - b).amax() < 1e-8);
    }
}

#[test]
fn errors_against_interpolant() {
    let mesh = icosphere(2).unwrap();
    let u = SphereTangentialField;
    let ui = VectorNodalField::interpolate(&mesh, |p| u.value(p));
    let e = vector_errors(&mesh, &ui, |p| u.value(p)).unwrap();
    assert_eq!((e.l2, e.h1), (0.0, 0.0));
    // shift by eps along the vertex normals: L2 error is eps times the
    // mass norm of the normal field
    let eps = 1e-3;
    let nv: Vec<Vec3> = mesh.vertices().iter().map(|p| p.normalize()).collect();
    let shifted = VectorNodalField { values: ui.values.iter().zip(&nv).map(|(v, n)| v + eps * n).collect() };
    let e = vector_errors(&mesh, &shifted, |p| u.value(p)).unwrap();
    let m = dense(&crate::scalar_fem::assemble_mass(&mesh, false).unwrap());
    let mut oracle = 0.0;
    for a in 0..mesh.num_vertices() {
        for b in 0..mesh.num_vertices() {
            oracle += m[(a, b)] * nv[a].dot(&nv[b]);
        }
    }
    assert!((e.l2 - eps * oracle.sqrt()).abs() < 1e-10 * e.l2);
    assert!(e.h1 >= 0.0);
}

#[test]
fn recovered_normals_converge_elementwise_stagnate() {
    let u = SphereTangentialField;
    let (mut rec, mut ele) = (vec![], vec![]);
    for level in 4..7 {
        let mesh = icosphere(level).unwrap();
        let f = load(&mesh);
        for (src, out) in [(NormalSource::Recovered, &mut rec), (NormalSource::Elementwise, &mut ele)] {
            let uh = solve_vector_laplace(&mesh, &PenaltyConfig::new(1.0, src), &f).unwrap();
            out.push(vector_errors(&mesh, &uh, |p| u.value(p)).unwrap().l2);
        }
    }
    for k in 0..rec.len() {
        assert!(rec[k] < ele[k]);
    }
    let order = (rec[1] / rec[2]).log2();
    assert!(order > 1.6, "{rec:?}");
    let stagnation = (ele[1] / ele[2]).log2();
    assert!(stagnation < 0.5, "{ele:?}");
}
