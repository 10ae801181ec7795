//! Refinement studies: mesh sequences, solves, error norms, fitted orders
//! and CSV output.

mod gate;
mod table;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

pub use gate::{check_gates, load_gates, parse_gates, Gate, GateOutcome, GATE_WINDOW};
pub use table::{emit_csv, fit_orders, read_csv, ConvergenceTable, OrderFit, TableRow};

use crate::error::{Error, Result};
use crate::mesh::{mesh_stats, TriMesh, Vec3};
use crate::recovery::{averaged_normals, face_normals, recover_geometry, recover_gradient, recover_normal};
use crate::recovery::{RecoveryOptions, Scheme};
use crate::scalar_fem::{
    gradient_error, interpolant_gradient_error, recovered_gradient_error, sample_rhs, solve_laplace, solve_reaction,
    ExactSolution, NodalField, Problem, ScalarFunction,
};
use crate::surface::{
    chevron_torus, icosphere_sequence, perturb_mesh, project_to_surface, quartic_base_mesh, quartic_sequence,
    supercloseness_report, PerturbationSpec, ProjectionMode, Surface, QUARTIC_BASE_CELLS,
};
use crate::vector_fem::{
    solve_vector_laplace, vector_errors, vector_gradient_error, NormalSource, PenaltyConfig, SphereTangentialField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Jacobian, metric and area deviations of a perturbed icosphere.
    Supercloseness,
    /// Laplace-Beltrami on the unit sphere with `u = x y`.
    ScalarSphere,
    /// `-Δu + u = f` on the quartic with `u = exp(|x|²)`.
    ScalarQuartic,
    /// Scalar sphere study on a mesh with random tangential O(h²) moves.
    Counterexample,
    /// Elementwise, averaged and recovered normals on the chevron torus.
    NormalsTorus,
    /// Penalty vector Laplacian on the unit sphere.
    VectorLaplace,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::Supercloseness,
        Self::ScalarSphere,
        Self::ScalarQuartic,
        Self::Counterexample,
        Self::NormalsTorus,
        Self::VectorLaplace,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Supercloseness => "supercloseness",
            Self::ScalarSphere => "scalar-sphere",
            Self::ScalarQuartic => "scalar-quartic",
            Self::Counterexample => "counterexample",
            Self::NormalsTorus => "normals-torus",
            Self::VectorLaplace => "vector-laplace",
        }
    }

    /// Error column names (each becomes `<name>_err, <name>_order`).
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Self::Supercloseness => &["jac", "det", "metric"],
            Self::ScalarSphere | Self::ScalarQuartic | Self::Counterexample => &["de", "de_i", "de_r"],
            Self::NormalsTorus => &["nu_h", "nu_bar", "nu_r"],
            Self::VectorLaplace => &["l2", "h1"],
        }
    }

    fn label_column(&self) -> Option<&'static str> {
        match self {
            Self::VectorLaplace => Some("normal_source"),
            _ => None,
        }
    }

    pub fn default_levels(&self) -> LevelRange {
        match self {
            Self::Supercloseness => LevelRange::new(3, 7),
            Self::ScalarSphere | Self::Counterexample | Self::VectorLaplace => LevelRange::new(3, 6),
            Self::ScalarQuartic => LevelRange::new(0, 4),
            Self::NormalsTorus => LevelRange::new(0, 5),
        }
    }

    /// Finest level allowed, chosen to keep studies at desk scale.
    pub fn max_level(&self) -> usize {
        match self {
            Self::ScalarQuartic => 4,
            Self::NormalsTorus => 5,
            _ => 7,
        }
    }

    pub fn default_perturbation(&self) -> PerturbationSpec {
        match self {
            Self::Supercloseness => PerturbationSpec::new(Some(2), Some(3)),
            Self::Counterexample => PerturbationSpec::new(None, Some(2)).randomized(false, true),
            _ => PerturbationSpec::none(),
        }
    }

    fn accepts_perturbation(&self) -> bool {
        matches!(self, Self::Supercloseness | Self::ScalarSphere | Self::Counterexample)
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown experiment '{s}'")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive level range written `A..B` (or a single level `A`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LevelRange {
    pub start: usize,
    pub end: usize,
}

impl LevelRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl FromStr for LevelRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| Error::Invalid(format!("bad level range '{s}'")));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
            None => (num(s)?, num(s)?),
        };
        if a > b {
            return Err(Error::Invalid(format!("level range '{s}' is empty")));
        }
        Ok(Self::new(a, b))
    }
}

impl TryFrom<String> for LevelRange {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LevelRange> for String {
    fn from(r: LevelRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub experiment: Experiment,
    pub levels: LevelRange,
    /// Planar recovery operator behind the recovered gradients and normals.
    pub scheme: Scheme,
    /// Vertex displacement of the sphere meshes; its own seed is replaced by `seed`.
    pub perturbation: PerturbationSpec,
    pub seed: u64,
    /// Penalty constant of the vector study, `mu = beta / h²`.
    pub beta: f64,
    pub normal_source: NormalSource,
    pub output: Option<PathBuf>,
}

impl StudyConfig {
    /// Defaults of the experiment: its usual levels and perturbation, PPPR,
    /// seed 0, beta 1 with recovered normals, no output file.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            levels: experiment.default_levels(),
            scheme: Scheme::Pppr,
            perturbation: experiment.default_perturbation(),
            seed: 0,
            beta: 1.0,
            normal_source: NormalSource::Recovered,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.experiment;
        if self.levels.start > self.levels.end {
            return Err(Error::Invalid(format!("level range {} is empty", self.levels)));
        }
        if self.levels.end > e.max_level() {
            return Err(Error::Invalid(format!("{e} supports levels up to {}, got {}", e.max_level(), self.levels)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Invalid(format!("beta must be positive, got {}", self.beta)));
        }
        self.perturbation.validate()?;
        if !self.perturbation.is_none() && !e.accepts_perturbation() {
            return Err(Error::Invalid(format!("{e} runs on exact-vertex meshes only; drop the perturbation")));
        }
        if e == Experiment::Supercloseness && self.perturbation.is_none() {
            return Err(Error::Invalid("supercloseness needs a perturbation".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        let mut cfg = Self::new(file.experiment);
        if let Some(v) = file.levels {
            cfg.levels = v;
        }
        if let Some(v) = file.scheme {
            cfg.scheme = v;
        }
        if let Some(v) = file.perturbation {
            cfg.perturbation = v.0;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.beta {
            cfg.beta = v;
        }
        if let Some(v) = file.normal_source {
            cfg.normal_source = v;
        }
        cfg.output = file.output;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text)
    }
}

/// On-disk form: everything but `experiment` falls back to the experiment defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Experiment,
    levels: Option<LevelRange>,
    scheme: Option<Scheme>,
    perturbation: Option<PerturbationField>,
    seed: Option<u64>,
    beta: Option<f64>,
    normal_source: Option<NormalSource>,
    output: Option<PathBuf>,
}

/// Accepts the perturbation either as a table or in its text form.
struct PerturbationField(PerturbationSpec);

impl<'de> Deserialize<'de> for PerturbationField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Text(String),
            Table(PerturbationSpec),
        }
        match Either::deserialize(d)? {
            Either::Text(s) => s.parse().map(Self).map_err(serde::de::Error::custom),
            Either::Table(p) => Ok(Self(p)),
        }
    }
}

/// Runs the study level by level and writes the CSV if `cfg.output` is set.
pub fn run_study(cfg: &StudyConfig) -> Result<ConvergenceTable> {
    run_study_with(cfg, |_| {})
}

/// Like [`run_study`], calling `on_row` after each level finishes.
pub fn run_study_with(cfg: &StudyConfig, mut on_row: impl FnMut(&TableRow)) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let e = cfg.experiment;
    let mut table = ConvergenceTable::new(e.columns(), e.label_column());
    let meshes = mesh_sequence(cfg).map_err(|err| err.context(format!("{e}: mesh generation")))?;
    for (level, mesh) in meshes {
        let ctx = |err: Error| err.context(format!("{e} level {level}"));
        let (mesh_used, h, errors) = level_errors(cfg, &mesh).map_err(ctx)?;
        let label = e.label_column().map(|_| cfg.normal_source.to_string());
        table.push(level, mesh_used.num_vertices(), h, errors, label).map_err(ctx)?;
        on_row(table.rows.last().expect("row just pushed"));
    }
    if let Some(path) = &cfg.output {
        emit_csv(&table, path)?;
    }
    Ok(table)
}

/// Exact-vertex meshes of the requested levels.
fn mesh_sequence(cfg: &StudyConfig) -> Result<Vec<(usize, TriMesh)>> {
    let levels = cfg.levels;
    let all = match cfg.experiment {
        Experiment::ScalarQuartic => {
            let base = quartic_base_mesh(QUARTIC_BASE_CELLS)?;
            quartic_sequence(&base, levels.end, ProjectionMode::FirstOrder)?
        }
        Experiment::NormalsTorus => return levels.levels().map(|l| Ok((l, chevron_torus(l)?))).collect(),
        _ => icosphere_sequence(levels.end)?,
    };
    Ok(all.into_iter().enumerate().filter(|(l, _)| *l >= levels.start).collect())
}

fn level_errors(cfg: &StudyConfig, exact: &TriMesh) -> Result<(TriMesh, f64, Vec<f64>)> {
    let perturbation = cfg.perturbation.with_seed(cfg.seed);
    let mesh = if perturbation.is_none() {
        exact.clone()
    } else {
        perturb_mesh(exact, &Surface::Sphere, &perturbation)?
    };
    let h = mesh_stats(exact).h;
    let errors = match cfg.experiment {
        Experiment::Supercloseness => {
            let r = supercloseness_report(exact, &mesh)?;
            vec![r.jacobian, r.det, r.metric]
        }
        Experiment::ScalarSphere | Experiment::Counterexample => scalar_errors(
            &mesh,
            &Surface::Sphere,
            &ExactSolution::ProductX1X2,
            Problem::Laplace,
            cfg.scheme,
        )?
        .to_vec(),
        Experiment::ScalarQuartic => scalar_errors(
            &mesh,
            &Surface::Quartic,
            &ExactSolution::ExpRadiusSquared,
            Problem::Reaction,
            cfg.scheme,
        )?
        .to_vec(),
        Experiment::NormalsTorus => normal_errors(&mesh, &Surface::Torus, cfg.scheme)?.to_vec(),
        Experiment::VectorLaplace => {
            let u = SphereTangentialField;
            let f: Vec<Vec3> = mesh.vertices().iter().map(|p| u.rhs(p)).collect();
            let pen = PenaltyConfig { beta: cfg.beta, normal_source: cfg.normal_source, scheme: cfg.scheme };
            let uh = solve_vector_laplace(&mesh, &pen, &f)?;
            let l2 = vector_errors(&mesh, &uh, |p| u.value(p))?.l2;
            let h1 = vector_gradient_error(&mesh, &Surface::Sphere, &uh, |p| u.jacobian(p))?;
            vec![l2, h1]
        }
    };
    Ok((mesh, h, errors))
}

/// `[De, De_I, De_r]` for the linear finite element solution on `mesh`.
/// The interpolant and the load use the closest surface point of each vertex.
pub fn scalar_errors(
    mesh: &TriMesh,
    surface: &Surface,
    u: &ExactSolution,
    problem: Problem,
    scheme: Scheme,
) -> Result<[f64; 3]> {
    let f = sample_rhs(mesh, surface, u, problem)?;
    let uh = match problem {
        Problem::Laplace => solve_laplace(mesh, &f)?,
        Problem::Reaction => solve_reaction(mesh, &f)?,
    };
    let projected: Vec<Vec3> = mesh
        .vertices()
        .par_iter()
        .map(|p| project_to_surface(surface, p, ProjectionMode::Newton))
        .collect::<Result<_>>()?;
    let ui = NodalField::new(projected.iter().map(|y| u.value(y)).collect());
    let de = gradient_error(mesh, surface, u, &uh)?;
    let de_i = interpolant_gradient_error(mesh, &ui, &uh)?;
    let geo = recover_geometry(mesh, &RecoveryOptions::with_scheme(scheme))?;
    let g = recover_gradient(mesh, &geo, &uh)?;
    let de_r = recovered_gradient_error(mesh, surface, u, &g.values)?;
    Ok([de, de_i, de_r])
}

/// Max-norm errors `[ν_h, ν̄, ν^r]` against the exact unit normal. Face
/// normals are compared at the closest surface point of the centroid.
pub fn normal_errors(mesh: &TriMesh, surface: &Surface, scheme: Scheme) -> Result<[f64; 3]> {
    let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    let fnorm = face_normals(mesh)?;
    let face = (0..mesh.num_faces())
        .into_par_iter()
        .map(|t| {
            let p = mesh.face_points(t);
            let c = (p[0] + p[1] + p[2]) / 3.0;
            let y = project_to_surface(surface, &c, ProjectionMode::Newton)?;
            Ok((surface.normal(&y) - fnorm[t]).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let vertex_err = |n: &[Vec3]| -> Result<f64> {
        let e = mesh
            .vertices()
            .par_iter()
            .zip(n)
            .map(|(p, n)| {
                let y = project_to_surface(surface, p, ProjectionMode::Newton)?;
                Ok((surface.normal(&y) - n).norm())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(max(e))
    };
    let avg = vertex_err(&averaged_normals(mesh, true)?)?;
    let geo = recover_geometry(mesh, &RecoveryOptions::with_scheme(scheme))?;
    let rec = vertex_err(&recover_normal(&geo))?;
    Ok([max(face), avg, rec])
}

/// Recovered gradients or normals as `vertex,x,y,z` rows.
pub fn emit_vector_field_csv(values: &[Vec3], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| Error::Invalid(format!("csv {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["vertex", "x", "y", "z"]).map_err(io)?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{:.16e}", v.x), format!("{:.16e}", v.y), format!("{:.16e}", v.z)])
            .map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_owned(), source })
}

#[cfg(test)]
mod tests;
