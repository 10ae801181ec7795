//! L² norms of gradient errors, integrated with the midedge rule on the
//! flat elements.

use rayon::prelude::*;

use super::{element_gradients, NodalField, ScalarFunction};
use crate::error::{Error, Result};
use crate::mesh::{TriMesh, Vec3};
use crate::surface::{project_to_surface, ProjectionMode, Surface};

/// Barycentric coordinates of the three edge midpoints (weights area/3 each).
pub const MIDEDGE_RULE: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];

/// Tangential gradient `(I - ν ν^T) ∇u` at a point on the surface.
pub fn tangential_gradient(surface: &Surface, u: &dyn ScalarFunction, y: &Vec3) -> Vec3 {
    let nu = surface.normal(y);
    let g = u.gradient(y);
    g - nu * nu.dot(&g)
}

/// `sqrt(sum_f ∫_f |e_f|²)` where `e_f` is evaluated at the midedge points.
fn integrate<F>(mesh: &TriMesh, per_face: F) -> Result<f64>
where
    F: Fn(usize, &[Vec3; 3], f64) -> Result<f64> + Sync,
{
    let parts = (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| {
            let (_, area) = mesh.face_normal_area(f)?;
            per_face(f, &mesh.face_points(f), area)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}

fn point(p: &[Vec3; 3], w: &[f64; 3]) -> Vec3 {
    w[0] * p[0] + w[1] * p[1] + w[2] * p[2]
}

/// `‖T_h ∇_g u - ∇_{g_h} u_h‖`: the exact tangential gradient is taken at
/// the closest surface point of each quadrature point.
pub fn gradient_error(mesh: &TriMesh, surface: &Surface, u: &dyn ScalarFunction, uh: &NodalField) -> Result<f64> {
    integrate(mesh, |f, p, area| {
        let gh = uh.face_gradient(mesh, f)?;
        MIDEDGE_RULE.iter().try_fold(0.0, |acc, w| {
            let y = project_to_surface(surface, &point(p, w), ProjectionMode::Newton)?;
            Ok(acc + area / 3.0 * (tangential_gradient(surface, u, &y) - gh).norm_squared())
        })
    })
}

/// `‖∇_{g_h} u_I - ∇_{g_h} u_h‖` (both fields piecewise linear on the mesh).
pub fn interpolant_gradient_error(mesh: &TriMesh, ui: &NodalField, uh: &NodalField) -> Result<f64> {
    if ui.len() != mesh.num_vertices() || uh.len() != mesh.num_vertices() {
        return Err(Error::Invalid("field length differs from vertex count".into()));
    }
    integrate(mesh, |f, p, area| {
        let (g, _) = element_gradients(p).ok_or(Error::DegenerateFace { face: f })?;
        let [a, b, c] = mesh.face(f);
        let d = |v: usize| ui.values[v] - uh.values[v];
        Ok(area * (d(a) * g[0] + d(b) * g[1] + d(c) * g[2]).norm_squared())
    })
}

/// `‖T_h ∇_g u - G_h u_h‖` with the recovered vertex gradients interpolated linearly.
pub fn recovered_gradient_error(mesh: &TriMesh, surface: &Surface, u: &dyn ScalarFunction, recovered: &[Vec3]) -> Result<f64> {
    if recovered.len() != mesh.num_vertices() {
        return Err(Error::Invalid("recovered field length differs from vertex count".into()));
    }
    integrate(mesh, |f, p, area| {
        let idx = mesh.face(f);
        let gv = [recovered[idx[0]], recovered[idx[1]], recovered[idx[2]]];
        MIDEDGE_RULE.iter().try_fold(0.0, |acc, w| {
            let y = project_to_surface(surface, &point(p, w), ProjectionMode::Newton)?;
            let g = point(&gv, w);
            Ok(acc + area / 3.0 * (tangential_gradient(surface, u, &y) - g).norm_squared())
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_fem::ExactSolution;
    use crate::surface::icosphere;

    #[test]
    fn midedge_rule_integrates_quadratics() {
        // ∫ x^2 over the unit right triangle is 1/12
        let p = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let s: f64 = MIDEDGE_RULE.iter().map(|w| 0.5 / 3.0 * point(&p, w).x.powi(2)).sum();
        assert!((s - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn identical_fields_have_zero_error() {
        let mesh = icosphere(2).unwrap();
        let ui = NodalField::interpolate(&mesh, |p| p.x * p.y);
        assert_eq!(interpolant_gradient_error(&mesh, &ui, &ui).unwrap(), 0.0);
    }

    #[test]
    fn interpolant_gradient_error_is_first_order() {
        let u = ExactSolution::ProductX1X2;
        let e: Vec<f64> = (2..6)
            .map(|l| {
                let mesh = icosphere(l).unwrap();
                let ui = NodalField::interpolate(&mesh, |p| u.value(p));
                gradient_error(&mesh, &Surface::Sphere, &u, &ui).unwrap()
            })
            .collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((0.9..1.1).contains(&order), "{e:?}");
        }
    }

    #[test]
    fn exact_recovered_field_error_is_second_order() {
        // vertex values of the exact tangential gradient: interpolation error only
        let u = ExactSolution::ProductX1X2;
        let e: Vec<f64> = (2..6)
            .map(|l| {
                let mesh = icosphere(l).unwrap();
                let g: Vec<Vec3> = mesh.vertices().iter().map(|p| tangential_gradient(&Surface::Sphere, &u, p)).collect();
                recovered_gradient_error(&mesh, &Surface::Sphere, &u, &g).unwrap()
            })
            .collect();
        for w in e.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9, "{e:?}");
        }
    }
}
