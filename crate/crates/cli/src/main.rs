use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use surfrec::harness::{
    check_gates, emit_vector_field_csv, load_gates, run_study_with, ConvergenceTable, Experiment, LevelRange,
    StudyConfig, TableRow,
};
use surfrec::mesh::{load_mesh, mesh_stats, save_mesh, MeshFormat, TriMesh};
use surfrec::recovery::{recover_geometry, recover_normal, RecoveryOptions, Scheme};
use surfrec::surface::{
    chevron_torus, icosphere, perturb_mesh, quartic_base_mesh, quartic_sequence, PerturbationSpec, ProjectionMode,
    Surface, QUARTIC_BASE_CELLS,
};
use surfrec::vector_fem::NormalSource;

/// Convergence studies for linear surface finite elements and gradient recovery.
#[derive(Parser)]
#[command(name = "surfrec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Jacobian, metric and area deviations of a perturbed icosphere
    Supercloseness(StudyArgs),
    /// Laplace-Beltrami on the unit sphere, u = x y
    ScalarSphere(StudyArgs),
    /// Reaction problem on the quartic surface, u = exp(|x|²)
    ScalarQuartic(StudyArgs),
    /// Scalar sphere study on randomly displaced meshes
    Counterexample(StudyArgs),
    /// Elementwise, averaged and recovered normals on the chevron torus
    NormalsTorus(StudyArgs),
    /// Penalty vector Laplacian on the unit sphere
    VectorLaplace(StudyArgs),
    /// Write a generated mesh as OFF or OBJ
    Mesh(MeshArgs),
    /// Recover vertex normals of a mesh file and write them as CSV
    Normals(NormalsArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// TOML study file; flags given on the command line take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inclusive refinement levels, e.g. 3..6
    #[arg(long)]
    levels: Option<LevelRange>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    seed: Option<u64>,
    /// Penalty constant, mu = beta / h²
    #[arg(long)]
    beta: Option<f64>,
    /// e.g. normal:2,tangential:3,mode:rand-normal or none
    #[arg(long)]
    perturb: Option<PerturbationSpec>,
    /// elementwise, averaged or recovered
    #[arg(long)]
    normal_source: Option<NormalSource>,
    /// CSV output file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gate file with lines "column min_order max_order"
    #[arg(long)]
    gate: Option<PathBuf>,
}

#[derive(Args)]
struct MeshArgs {
    /// sphere, torus or quartic
    #[arg(long)]
    surface: Surface,
    #[arg(long, default_value_t = 0)]
    level: usize,
    #[arg(long, default_value = "none")]
    perturb: PerturbationSpec,
    /// Output file; the extension picks the format (.off or .obj)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NormalsArgs {
    /// Closed triangle mesh in OFF or OBJ format
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value = "pppr")]
    scheme: Scheme,
    #[arg(long)]
    out: PathBuf,
}

fn study_config(experiment: Experiment, args: &StudyArgs) -> Result<StudyConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = StudyConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
            if cfg.experiment != experiment {
                bail!("{} describes a {} study, not {experiment}", path.display(), cfg.experiment);
            }
            cfg
        }
        None => StudyConfig::new(experiment),
    };
    if let Some(v) = args.levels {
        cfg.levels = v;
    }
    if let Some(v) = args.scheme {
        cfg.scheme = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.perturb {
        cfg.perturbation = v;
    }
    if let Some(v) = args.normal_source {
        cfg.normal_source = v;
    }
    if let Some(v) = &args.out {
        cfg.output = Some(v.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_header(table: &ConvergenceTable) {
    let mut line = format!("{:>5} {:>8}", "level", "dof");
    for c in &table.columns {
        line += &format!(" {:>11} {:>6}", c, "order");
    }
    println!("{line}");
}

fn print_row(row: &TableRow) {
    let mut line = format!("{:>5} {:>8}", row.level, row.dof);
    for (e, o) in row.errors.iter().zip(&row.orders) {
        let o = o.map_or("--".to_string(), |o| format!("{o:.2}"));
        line += &format!(" {e:>11.3e} {o:>6}");
    }
    println!("{line}");
}

/// Returns whether every gate passed.
fn run_experiment(experiment: Experiment, args: &StudyArgs) -> Result<bool> {
    let cfg = study_config(experiment, args)?;
    let gates = match &args.gate {
        Some(path) => load_gates(path).with_context(|| format!("reading gates {}", path.display()))?,
        None => Vec::new(),
    };
    println!("{experiment}: levels {}, scheme {}, perturbation {}", cfg.levels, cfg.scheme, cfg.perturbation);
    print_header(&surfrec::harness::ConvergenceTable::new(experiment.columns(), None));
    let table = run_study_with(&cfg, print_row)?;
    if let Some(out) = &cfg.output {
        println!("wrote {}", out.display());
    }
    let outcomes = check_gates(&table, &gates)?;
    for o in &outcomes {
        println!("{o}");
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn generate_mesh(surface: Surface, level: usize) -> Result<TriMesh> {
    Ok(match surface {
        Surface::Sphere => icosphere(level)?,
        Surface::Torus => chevron_torus(level)?,
        Surface::Quartic => {
            let base = quartic_base_mesh(QUARTIC_BASE_CELLS)?;
            quartic_sequence(&base, level, ProjectionMode::FirstOrder)?.pop().expect("non-empty sequence")
        }
    })
}

fn format_of(path: &std::path::Path) -> Result<MeshFormat> {
    MeshFormat::from_path(path).with_context(|| format!("{}: expected a .off or .obj extension", path.display()))
}

fn write_mesh(args: &MeshArgs) -> Result<()> {
    let format = format_of(&args.out)?;
    let mesh = generate_mesh(args.surface, args.level)?;
    let mesh = perturb_mesh(&mesh, &args.surface, &args.perturb)?;
    save_mesh(&mesh, &args.out, format)?;
    let s = mesh_stats(&mesh);
    println!(
        "{}: {} vertices, {} faces, h = {:.4e}, min angle {:.1} deg",
        args.out.display(),
        mesh.num_vertices(),
        mesh.num_faces(),
        s.h,
        s.min_angle.to_degrees()
    );
    Ok(())
}

fn write_normals(args: &NormalsArgs) -> Result<()> {
    let mesh = load_mesh(&args.mesh, format_of(&args.mesh)?)?;
    let geo = recover_geometry(&mesh, &RecoveryOptions::with_scheme(args.scheme))?;
    emit_vector_field_csv(&recover_normal(&geo), &args.out)?;
    println!("wrote {} normals to {}", mesh.num_vertices(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let study = |e: Experiment, a: &StudyArgs| run_experiment(e, a);
    match &cli.command {
        Command::Supercloseness(a) => study(Experiment::Supercloseness, a),
        Command::ScalarSphere(a) => study(Experiment::ScalarSphere, a),
        Command::ScalarQuartic(a) => study(Experiment::ScalarQuartic, a),
        Command::Counterexample(a) => study(Experiment::Counterexample, a),
        Command::NormalsTorus(a) => study(Experiment::NormalsTorus, a),
        Command::VectorLaplace(a) => study(Experiment::VectorLaplace, a),
        Command::Mesh(a) => write_mesh(a).map(|_| true),
        Command::Normals(a) => write_normals(a).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
