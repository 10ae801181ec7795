//! Planar least-squares recovery operators on a local parameter domain.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};

/// Relative singular value below which a fit counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() <= RANK_TOL * smax {
        return None;
    }
    svd.solve(&b, 0.0).ok()
}

fn radius(points: &[Vector2<f64>]) -> f64 {
    points.iter().map(|p| p.norm()).fold(0.0, f64::max)
}

/// Gradient at the origin of the least-squares quadratic through
/// `(zeta_j, values_j)`. Columns are scaled by the patch radius; `None`
/// if fewer than six points or the quadratic fit is rank deficient.
pub fn ppr_fit(zeta: &[Vector2<f64>], values: &[f64]) -> Option<Vector2<f64>> {
    if zeta.len() < 6 || zeta.len() != values.len() {
        return None;
    }
    let r = radius(zeta);
    if !(r > 0.0) {
        return None;
    }
    let a = DMatrix::from_fn(zeta.len(), 6, |j, k| {
        let (x, y) = (zeta[j].x / r, zeta[j].y / r);
        [1.0, x, y, x * x, x * y, y * y][k]
    });
    let c = least_squares(a, DVector::from_column_slice(values))?;
    Some(Vector2::new(c[1] / r, c[2] / r))
}

/// Value at the origin of the componentwise least-squares linear fit of
/// `gradients` sampled at `points`; `None` if fewer than three points or
/// they are collinear.
pub fn spr_fit(points: &[Vector2<f64>], gradients: &[Vector2<f64>]) -> Option<Vector2<f64>> {
    if points.len() < 3 || points.len() != gradients.len() {
        return None;
    }
    let r = radius(points);
    if !(r > 0.0) {
        return None;
    }
    let a = DMatrix::from_fn(points.len(), 3, |j, k| [1.0, points[j].x / r, points[j].y / r][k]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= RANK_TOL * smax {
        return None;
    }
    let mut out = Vector2::zeros();
    for comp in 0..2 {
        let b = DVector::from_iterator(points.len(), gradients.iter().map(|g| g[comp]));
        out[comp] = svd.solve(&b, 0.0).ok()?[0];
    }
    Some(out)
}

/// Gradient of the linear interpolant of `values` on a parameter-domain triangle.
pub fn triangle_gradient(p: [Vector2<f64>; 3], values: [f64; 3]) -> Result<Vector2<f64>> {
    let m = Matrix2::new(p[1].x - p[0].x, p[1].y - p[0].y, p[2].x - p[0].x, p[2].y - p[0].y);
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::Invalid("parameter-domain triangle is degenerate".into()))?;
    Ok(inv * Vector2::new(values[1] - values[0], values[2] - values[0]))
}
