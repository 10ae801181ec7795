use nalgebra::{Matrix2, Matrix3x2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};

/// Affine map between two triangles with corresponding vertices, written in
/// an orthonormal frame attached to the first triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrianglePairTransform {
    pub jacobian: Matrix3x2<f64>,
    pub metric: Matrix2<f64>,
    pub sqrt_det: f64,
}

impl TrianglePairTransform {
    /// Max-abs entry of `jacobian - Id` with `Id` the 3x2 inclusion.
    pub fn jacobian_deviation(&self) -> f64 {
        (self.jacobian - Matrix3x2::identity()).amax()
    }

    /// Max-abs entry of `metric - I`.
    pub fn metric_deviation(&self) -> f64 {
        (self.metric - Matrix2::identity()).amax()
    }

    pub fn det_deviation(&self) -> f64 {
        (self.sqrt_det - 1.0).abs()
    }
}

/// Moves both triangles to their first vertex, expresses them in the frame
/// `(e1, e2, n)` of `tau1` and returns `Psi * Xi^-1` with its metric.
pub fn pair_transform(tau1: &[Vec3; 3], tau2: &[Vec3; 3]) -> Result<TrianglePairTransform> {
    let a1 = tau1[1] - tau1[0];
    let a2 = tau1[2] - tau1[0];
    let cross = a1.cross(&a2);
    let scale = a1.norm_squared().max(a2.norm_squared());
    if cross.norm() <= 1e-14 * scale {
        return Err(Error::Invalid("degenerate reference triangle in pair transform".into()));
    }
    let e1 = a1.normalize();
    let n = cross.normalize();
    let e2 = n.cross(&e1);
    let xi = Matrix2::new(a1.dot(&e1), a2.dot(&e1), 0.0, a2.dot(&e2));
    let b1 = tau2[1] - tau2[0];
    let b2 = tau2[2] - tau2[0];
    let psi = Matrix3x2::new(b1.dot(&e1), b2.dot(&e1), b1.dot(&e2), b2.dot(&e2), b1.dot(&n), b2.dot(&n));
    let xi_inv = xi.try_inverse().ok_or_else(|| Error::Invalid("singular reference edge matrix".into()))?;
    let jacobian = psi * xi_inv;
    let metric = jacobian.transpose() * jacobian;
    // |c1 x c2| equals sqrt(det g) without cancellation in the determinant
    let sqrt_det = jacobian.column(0).cross(&jacobian.column(1)).norm();
    Ok(TrianglePairTransform { jacobian, metric, sqrt_det })
}

/// Element-wise maxima of the three deviation measures between a mesh and
/// its perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SuperclosenessReport {
    pub jacobian: f64,
    pub metric: f64,
    pub det: f64,
}

pub fn supercloseness_report(mesh_star: &TriMesh, mesh_dev: &TriMesh) -> Result<SuperclosenessReport> {
    if !mesh_star.same_connectivity(mesh_dev) {
        return Err(Error::ConnectivityMismatch("supercloseness needs identical connectivity".into()));
    }
    (0..mesh_star.num_faces())
        .into_par_iter()
        .map(|f| {
            let t = pair_transform(&mesh_star.face_points(f), &mesh_dev.face_points(f))?;
            Ok(SuperclosenessReport {
                jacobian: t.jacobian_deviation(),
                metric: t.metric_deviation(),
                det: t.det_deviation(),
            })
        })
        .try_reduce(SuperclosenessReport::default, |a, b| {
            Ok(SuperclosenessReport {
                jacobian: a.jacobian.max(b.jacobian),
                metric: a.metric.max(b.metric),
                det: a.det.max(b.det),
            })
        })
}

/// Largest difference in length between corresponding edges.
pub fn edge_length_deviation(a: &TriMesh, b: &TriMesh) -> Result<f64> {
    if !a.same_connectivity(b) {
        return Err(Error::ConnectivityMismatch("edge lengths need identical connectivity".into()));
    }
    Ok(a
        .edges()
        .iter()
        .map(|&[i, j]| ((a.vertex(i) - a.vertex(j)).norm() - (b.vertex(i) - b.vertex(j)).norm()).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{heron_area, mesh_stats};
    use crate::surface::{icosphere_sequence, perturb_mesh, PerturbationSpec, Surface};
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn tri() -> [Vec3; 3] {
        [Vec3::new(0.3, -0.2, 1.0), Vec3::new(1.4, 0.1, 0.7), Vec3::new(0.5, 0.9, 1.3)]
    }

    fn area(t: &[Vec3; 3]) -> f64 {
        heron_area((t[1] - t[0]).norm(), (t[2] - t[1]).norm(), (t[0] - t[2]).norm())
    }

    fn slope(h: &[f64], e: &[f64]) -> f64 {
        let n = h.len() as f64;
        let (x, y): (Vec<f64>, Vec<f64>) = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).unzip();
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn identity_pair() {
        let t = tri();
        let shift = Vec3::new(2.0, -1.0, 0.5);
        let moved = [t[0] + shift, t[1] + shift, t[2] + shift];
        for other in [t, moved] {
            let p = pair_transform(&t, &other).unwrap();
            assert!(p.jacobian_deviation() <= 1e-14);
            assert!(p.metric_deviation() <= 1e-14);
            assert!(p.det_deviation() <= 1e-14);
        }
    }

    #[test]
    fn scaling_by_two() {
        let t = tri();
        let s = [t[0], t[0] + 2.0 * (t[1] - t[0]), t[0] + 2.0 * (t[2] - t[0])];
        let p = pair_transform(&t, &s).unwrap();
        assert!((p.metric - Matrix2::<f64>::identity() * 4.0).amax() < 1e-13);
        assert!((p.sqrt_det - 4.0).abs() < 1e-13);
    }

    #[test]
    fn in_plane_rotation_keeps_metric() {
        let t = tri();
        let n = (t[1] - t[0]).cross(&(t[2] - t[0])).normalize();
        let theta = 0.7_f64;
        let rot = Rotation3::new(n * theta);
        let r = [t[0], t[0] + rot * (t[1] - t[0]), t[0] + rot * (t[2] - t[0])];
        let p = pair_transform(&t, &r).unwrap();
        assert!(p.metric_deviation() < 1e-12);
        // in-plane part of the Jacobian is the 2D rotation by theta
        let (c, s) = (theta.cos(), theta.sin());
        let expect = Matrix3x2::new(c, -s, s, c, 0.0, 0.0);
        assert!((p.jacobian - expect).amax() < 1e-12);
        assert!(p.jacobian_deviation() > 0.1);
    }

    #[test]
    fn degenerate_reference_rejected() {
        let t = [Vec3::zeros(), Vec3::x(), 2.0 * Vec3::x()];
        assert!(pair_transform(&t, &tri()).is_err());
    }

    proptest! {
        #[test]
        fn area_identity(c in proptest::collection::vec(-1.0f64..1.0, 18)) {
            let v = |i: usize| Vec3::new(c[3 * i], c[3 * i + 1], c[3 * i + 2]);
            let t1 = [v(0), v(1), v(2)];
            let t2 = [v(3), v(4), v(5)];
            let nondeg = |t: &[Vec3; 3]| {
                let l = (t[1] - t[0]).norm().max((t[2] - t[0]).norm()).max((t[2] - t[1]).norm());
                (t[1] - t[0]).cross(&(t[2] - t[0])).norm() > 0.05 * l * l
            };
            prop_assume!(nondeg(&t1) && nondeg(&t2));
            let p = pair_transform(&t1, &t2).unwrap();
            let rel = (p.sqrt_det * area(&t1) - area(&t2)).abs() / area(&t2);
            prop_assert!(rel <= 1e-10, "rel {}", rel);
            prop_assert!((p.metric - p.metric.transpose()).amax() <= 1e-15 * p.metric.amax());
            prop_assert!(p.metric.determinant() > 0.0);
        }
    }

    #[test]
    fn identical_meshes_report_zero() {
        let m = &icosphere_sequence(2).unwrap()[2];
        let r = supercloseness_report(m, m).unwrap();
        assert!(r.jacobian <= 1e-14 && r.metric <= 1e-14 && r.det <= 1e-14, "{r:?}");
    }

    #[test]
    fn edge_length_difference_is_third_order() {
        let seq = icosphere_sequence(7).unwrap();
        let spec = PerturbationSpec::new(Some(2), Some(3)).with_seed(1);
        let (mut hs, mut es) = (vec![], vec![]);
        for m in &seq[4..8] {
            let p = perturb_mesh(m, &Surface::Sphere, &spec).unwrap();
            hs.push(mesh_stats(m).h);
            es.push(edge_length_deviation(m, &p).unwrap());
        }
        let s = slope(&hs, &es);
        assert!(s >= 2.7, "slope {s}");
    }

    #[test]
    fn random_tangential_second_order_breaks_jacobian() {
        let seq = icosphere_sequence(6).unwrap();
        let spec = PerturbationSpec::new(None, Some(2)).randomized(false, true).with_seed(5);
        let (mut hs, mut es) = (vec![], vec![]);
        for m in &seq[3..7] {
            let p = perturb_mesh(m, &Surface::Sphere, &spec).unwrap();
            hs.push(mesh_stats(m).h);
            es.push(supercloseness_report(m, &p).unwrap().jacobian);
        }
        let s = slope(&hs, &es);
        assert!(s <= 1.3, "slope {s}");
    }
}
