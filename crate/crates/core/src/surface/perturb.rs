use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::levelset::{tangent_basis, Surface};
use crate::error::{Error, Result};
use crate::mesh::{mesh_stats, triangle_normal_area, TriMesh, Vec3};

/// Vertex displacement rule `d_n * nu + d_t * t` with `|d_n| <= c h^p_n`,
/// `|d_t| <= c h^p_t`. An order of `None` switches that direction off.
/// A randomized direction draws its amplitude uniformly from `[-1, 1] * c h^p`;
/// a deterministic one uses exactly `c h^p` (outward for the normal part).
/// The tangent direction `t` is always a seeded random unit tangent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationSpec {
    pub normal_order: Option<u32>,
    pub tangential_order: Option<u32>,
    pub normal_random: bool,
    pub tangential_random: bool,
    pub magnitude: f64,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl PerturbationSpec {
    pub fn none() -> Self {
        Self {
            normal_order: None,
            tangential_order: None,
            normal_random: false,
            tangential_random: false,
            magnitude: 1.0,
            seed: 0,
        }
    }

    pub fn new(normal_order: Option<u32>, tangential_order: Option<u32>) -> Self {
        Self { normal_order, tangential_order, ..Self::none() }
    }

    pub fn randomized(mut self, normal: bool, tangential: bool) -> Self {
        self.normal_random = normal;
        self.tangential_random = tangential;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_magnitude(mut self, c: f64) -> Self {
        self.magnitude = c;
        self
    }

    pub fn is_none(&self) -> bool {
        self.normal_order.is_none() && self.tangential_order.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.normal_order, self.tangential_order].into_iter().flatten() {
            if !(2..=3).contains(&p) {
                return Err(Error::Invalid(format!("perturbation order {p} not in {{2, 3}}")));
            }
        }
        if !(self.magnitude > 0.0 && self.magnitude.is_finite()) {
            return Err(Error::Invalid(format!("perturbation magnitude {} must be positive", self.magnitude)));
        }
        Ok(())
    }

    fn mode_name(&self) -> &'static str {
        match (self.normal_random, self.tangential_random) {
            (false, false) => "det",
            (true, true) => "rand",
            (true, false) => "rand-normal",
            (false, true) => "rand-tangential",
        }
    }
}

/// Textual form `normal:2,tangential:3,mode:rand-normal`; `none` or an
/// omitted direction means no displacement along it.
impl FromStr for PerturbationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = Self::none();
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(spec);
        }
        let order = |v: &str| -> Result<Option<u32>> {
            match v {
                "inf" | "none" => Ok(None),
                _ => v.parse().map(Some).map_err(|_| Error::Invalid(format!("bad perturbation order '{v}'"))),
            }
        };
        for item in s.split(',') {
            let (key, value) = item
                .split_once(':')
                .ok_or_else(|| Error::Invalid(format!("expected key:value, got '{item}'")))?;
            match key.trim() {
                "normal" => spec.normal_order = order(value.trim())?,
                "tangential" => spec.tangential_order = order(value.trim())?,
                "mode" => {
                    (spec.normal_random, spec.tangential_random) = match value.trim() {
                        "det" => (false, false),
                        "rand" => (true, true),
                        "rand-normal" => (true, false),
                        "rand-tangential" => (false, true),
                        m => return Err(Error::Invalid(format!("unknown perturbation mode '{m}'"))),
                    }
                }
                "c" | "magnitude" => {
                    spec.magnitude = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad magnitude '{value}'")))?
                }
                k => return Err(Error::Invalid(format!("unknown perturbation key '{k}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_none() {
            return write!(f, "none");
        }
        let o = |p: Option<u32>| p.map_or("inf".to_string(), |p| p.to_string());
        write!(
            f,
            "normal:{},tangential:{},mode:{}",
            o(self.normal_order),
            o(self.tangential_order),
            self.mode_name()
        )?;
        if self.magnitude != 1.0 {
            write!(f, ",c:{}", self.magnitude)?;
        }
        Ok(())
    }
}

/// Displaces every vertex of an interpolation mesh according to `spec`,
/// with `h` the longest edge of `mesh`. Connectivity is shared with the input.
pub fn perturb_mesh(mesh: &TriMesh, surface: &Surface, spec: &PerturbationSpec) -> Result<TriMesh> {
    spec.validate()?;
    if spec.is_none() {
        return Ok(mesh.clone());
    }
    let h = mesh_stats(mesh).h;
    let amp = |p: Option<u32>| p.map_or(0.0, |p| spec.magnitude * h.powi(p as i32));
    let (an, at) = (amp(spec.normal_order), amp(spec.tangential_order));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let verts: Vec<Vec3> = mesh
        .vertices()
        .iter()
        .map(|x| {
            // fixed draw pattern per vertex keeps streams aligned across specs
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let rn: f64 = rng.random_range(-1.0..=1.0);
            let rt: f64 = rng.random_range(-1.0..=1.0);
            let nu = surface.normal(x);
            let (t1, t2) = tangent_basis(&nu);
            let t = angle.cos() * t1 + angle.sin() * t2;
            let dn = if spec.normal_random { rn * an } else { an };
            let dt = if spec.tangential_random { rt * at } else { at };
            x + dn * nu + dt * t
        })
        .collect();
    for f in 0..mesh.num_faces() {
        let [a, b, c] = mesh.face(f);
        // signed against the unperturbed face so that inverted elements count as degenerate
        let n0 = triangle_normal_area(&mesh.vertex(a), &mesh.vertex(b), &mesh.vertex(c)).map_or(Vec3::zeros(), |(n, _)| n);
        let area = 0.5 * (verts[b] - verts[a]).cross(&(verts[c] - verts[a])).dot(&n0);
        if area < 1e-14 * h * h {
            return Err(Error::PerturbationTooLarge { face: f });
        }
    }
    mesh.with_vertices(verts)
}
