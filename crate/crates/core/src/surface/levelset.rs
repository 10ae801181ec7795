use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Vec3;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Built-in closed surfaces given as zero level sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    /// Unit sphere, `phi = |x| - 1`.
    Sphere,
    /// Torus with major radius 4 and minor radius 1, given by its signed distance.
    Torus,
    /// `(x^2-1)^2 + (y^2-1)^2 + (z^2-1)^2 - 1.05`.
    Quartic,
}

impl std::str::FromStr for Surface {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Surface::Sphere),
            "torus" => Ok(Surface::Torus),
            "quartic" => Ok(Surface::Quartic),
            other => Err(Error::UnknownSurface(other.to_owned())),
        }
    }
}

impl Surface {
    pub fn name(&self) -> &'static str {
        match self {
            Surface::Sphere => "sphere",
            Surface::Torus => "torus",
            Surface::Quartic => "quartic",
        }
    }

    pub fn phi(&self, p: &Vec3) -> f64 {
        match self {
            Surface::Sphere => p.norm() - 1.0,
            Surface::Torus => {
                let rho = p.x.hypot(p.y);
                (rho - 4.0).hypot(p.z) - 1.0
            }
            Surface::Quartic => {
                p.iter().map(|c| (c * c - 1.0).powi(2)).sum::<f64>() - 1.05
            }
        }
    }

    pub fn grad(&self, p: &Vec3) -> Vec3 {
        match self {
            Surface::Sphere => p / p.norm(),
            Surface::Torus => {
                let rho = p.x.hypot(p.y);
                let w = Vec3::new((rho - 4.0) * p.x / rho, (rho - 4.0) * p.y / rho, p.z);
                w / (rho - 4.0).hypot(p.z)
            }
            Surface::Quartic => p.map(|c| 4.0 * c * (c * c - 1.0)),
        }
    }

    pub fn hessian(&self, p: &Vec3) -> Matrix3<f64> {
        match self {
            Surface::Sphere => {
                let r = p.norm();
                let n = p / r;
                (Matrix3::identity() - n * n.transpose()) / r
            }
            Surface::Torus => {
                let (x, y, z) = (p.x, p.y, p.z);
                let rho = x.hypot(y);
                let q = (rho - 4.0).hypot(z);
                let w = Vec3::new((rho - 4.0) * x / rho, (rho - 4.0) * y / rho, z);
                let (r2, r3, a) = (rho * rho, rho * rho * rho, rho - 4.0);
                let dw = Matrix3::new(
                    x * x / r2 + a * y * y / r3,
                    x * y / r2 - a * x * y / r3,
                    0.0,
                    x * y / r2 - a * x * y / r3,
                    y * y / r2 + a * x * x / r3,
                    0.0,
                    0.0,
                    0.0,
                    1.0,
                );
                (dw - w * w.transpose() / (q * q)) / q
            }
            Surface::Quartic => Matrix3::from_diagonal(&p.map(|c| 12.0 * c * c - 4.0)),
        }
    }

    /// Unit normal `grad phi / |grad phi|` (outward for all built-ins).
    pub fn normal(&self, p: &Vec3) -> Vec3 {
        self.grad(p).normalize()
    }

    /// `div(grad phi / |grad phi|)`, the sum of principal curvatures with
    /// the sign convention that the unit sphere has 2.
    pub fn mean_curvature(&self, p: &Vec3) -> f64 {
        let g = self.grad(p);
        let gn = g.norm();
        let n = g / gn;
        let hess = self.hessian(p);
        (hess.trace() - (n.transpose() * hess * n)[0]) / gn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    /// Damped Newton iteration along the gradient to `|phi| <= 1e-12`.
    Newton,
    /// A single step `x - phi grad phi / |grad phi|^2`.
    FirstOrder,
}

fn newton_step(surface: &Surface, p: &Vec3) -> Result<Vec3> {
    let g = surface.grad(p);
    let g2 = g.norm_squared();
    if !(g2 > 1e-24) {
        return Err(Error::VanishingGradient([p.x, p.y, p.z]));
    }
    Ok(-surface.phi(p) / g2 * g)
}

pub fn project_to_surface(surface: &Surface, point: &Vec3, mode: ProjectionMode) -> Result<Vec3> {
    match mode {
        ProjectionMode::FirstOrder => Ok(point + newton_step(surface, point)?),
        ProjectionMode::Newton => {
            let mut x = *point;
            let mut r = surface.phi(&x).abs();
            for _ in 0..NEWTON_MAX_ITER {
                if r <= NEWTON_TOL {
                    return Ok(x);
                }
                let step = newton_step(surface, &x)?;
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..30 {
                    let cand = x + t * step;
                    let rc = surface.phi(&cand).abs();
                    if rc < r {
                        x = cand;
                        r = rc;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            if r <= NEWTON_TOL {
                Ok(x)
            } else {
                Err(Error::ProjectionFailed {
                    point: [point.x, point.y, point.z],
                    residual: r,
                })
            }
        }
    }
}

/// Orthonormal tangent pair `(t1, t2)` with `t1 x t2 = n`; `t1` comes from
/// Gram-Schmidt against the coordinate axis least aligned with `n`.
pub fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let a = n.abs();
    let axis = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = (axis - axis.dot(n) * n).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}
