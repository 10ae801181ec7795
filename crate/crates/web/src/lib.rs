//! Browser bindings: small convergence studies and a mesh viewer payload.
//! The `*_json` functions are plain Rust so they can be tested natively;
//! the `#[wasm_bindgen]` wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use surfrec::harness::{run_study, Experiment, LevelRange, StudyConfig};
use surfrec::mesh::{mesh_stats, TriMesh, Vec3};
use surfrec::recovery::{averaged_normals, recover_geometry, recover_normal, RecoveryOptions};
use surfrec::surface::{chevron_torus, icosphere, perturb_mesh, project_to_surface, ProjectionMode, Surface};

/// Finest level the page may request, per experiment; keeps a study under a few seconds.
fn browser_cap(e: Experiment) -> usize {
    match e {
        Experiment::NormalsTorus => 3,
        Experiment::ScalarQuartic => 0,
        _ => 5,
    }
}

#[derive(Serialize)]
struct Row {
    level: usize,
    dof: usize,
    h: f64,
    errors: Vec<f64>,
    orders: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct StudyJson {
    experiment: String,
    columns: Vec<String>,
    rows: Vec<Row>,
    /// Regression slope of each column over all rows.
    slopes: Vec<f64>,
}

pub fn study_json(experiment: &str, levels: &str, scheme: &str, perturb: &str, seed: u64) -> Result<String, String> {
    let e: Experiment = experiment.parse().map_err(|e| format!("{e}"))?;
    if browser_cap(e) == 0 {
        return Err(format!("{e} is too large for the browser; use the command-line tool"));
    }
    let mut cfg = StudyConfig::new(e);
    cfg.levels = levels.parse::<LevelRange>().map_err(|e| e.to_string())?;
    if cfg.levels.end > browser_cap(e) {
        return Err(format!("{e} is limited to level {} here", browser_cap(e)));
    }
    cfg.scheme = scheme.parse().map_err(|e| format!("{e}"))?;
    if !perturb.trim().is_empty() {
        cfg.perturbation = perturb.parse().map_err(|e| format!("{e}"))?;
    }
    cfg.seed = seed;
    let table = run_study(&cfg).map_err(|e| e.to_string())?;
    let slopes = table
        .columns
        .iter()
        .map(|c| table.slope(c, table.rows.len()).unwrap_or(f64::NAN))
        .collect();
    let out = StudyJson {
        experiment: e.to_string(),
        columns: table.columns.clone(),
        rows: table
            .rows
            .into_iter()
            .map(|r| Row { level: r.level, dof: r.dof, h: r.h, errors: r.errors, orders: r.orders })
            .collect(),
        slopes,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct MeshJson {
    /// Flat `x, y, z` triples.
    vertices: Vec<f64>,
    /// Flat vertex-index triples.
    faces: Vec<usize>,
    /// Per-vertex `|nu - n|` of the chosen normal approximation.
    normal_error: Vec<f64>,
    h: f64,
    max_error: f64,
}

/// Mesh of the sphere or torus with per-vertex normal errors of the
/// averaged (`"averaged"`) or recovered (`"recovered"`) normal field.
pub fn mesh_view_json(surface: &str, level: usize, perturb: &str, normals: &str) -> Result<String, String> {
    let surface: Surface = surface.parse().map_err(|e| format!("{e}"))?;
    let mesh = match surface {
        Surface::Sphere if level <= 5 => icosphere(level),
        Surface::Torus if level <= 3 => chevron_torus(level),
        _ => return Err(format!("no browser mesh for {} at level {level}", surface.name())),
    }
    .map_err(|e| e.to_string())?;
    let spec = if perturb.trim().is_empty() { Default::default() } else { perturb.parse().map_err(|e| format!("{e}"))? };
    let mesh = perturb_mesh(&mesh, &surface, &spec).map_err(|e| e.to_string())?;
    let n = vertex_normals(&mesh, normals)?;
    let normal_error = mesh
        .vertices()
        .iter()
        .zip(&n)
        .map(|(p, n)| {
            let y = project_to_surface(&surface, p, ProjectionMode::Newton).map_err(|e| e.to_string())?;
            Ok((surface.normal(&y) - n).norm())
        })
        .collect::<Result<Vec<f64>, String>>()?;
    let out = MeshJson {
        vertices: mesh.vertices().iter().flat_map(|p| [p.x, p.y, p.z]).collect(),
        faces: mesh.faces().iter().flatten().copied().collect(),
        max_error: normal_error.iter().copied().fold(0.0, f64::max),
        normal_error,
        h: mesh_stats(&mesh).h,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn vertex_normals(mesh: &TriMesh, kind: &str) -> Result<Vec<Vec3>, String> {
    match kind {
        "averaged" => averaged_normals(mesh, true).map_err(|e| e.to_string()),
        "recovered" | "pppr" | "pspr" => {
            let scheme = if kind == "pspr" { "pspr" } else { "pppr" };
            let opts = RecoveryOptions::with_scheme(scheme.parse().expect("known scheme"));
            Ok(recover_normal(&recover_geometry(mesh, &opts).map_err(|e| e.to_string())?))
        }
        other => Err(format!("unknown normal field '{other}'")),
    }
}

#[wasm_bindgen]
pub fn study(experiment: &str, levels: &str, scheme: &str, perturb: &str, seed: u32) -> Result<String, JsError> {
    study_json(experiment, levels, scheme, perturb, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn mesh_view(surface: &str, level: u32, perturb: &str, normals: &str) -> Result<String, JsError> {
    mesh_view_json(surface, level as usize, perturb, normals).map_err(|e| JsError::new(&e))
}
