//! End-to-end checks across modules through the public API.

use surfrec::harness::{check_gates, parse_gates, read_csv, run_study, Experiment, LevelRange, StudyConfig};
use surfrec::mesh::{load_mesh, save_mesh, MeshFormat};
use surfrec::recovery::{recover_geometry, recover_gradient, RecoveryOptions, Scheme};
use surfrec::scalar_fem::{gradient_error, recovered_gradient_error, sample_rhs, solve_laplace, ExactSolution, Problem};
use surfrec::surface::{chevron_torus, icosphere, perturb_mesh, PerturbationSpec, Surface};

#[test]
fn saved_mesh_solves_like_the_original() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = icosphere(3).unwrap();
    let path = dir.path().join("s.off");
    save_mesh(&mesh, &path, MeshFormat::Off).unwrap();
    let back = load_mesh(&path, MeshFormat::Off).unwrap();
    assert_eq!(back.vertices(), mesh.vertices());
    assert_eq!(back.faces(), mesh.faces());

    let u = ExactSolution::ProductX1X2;
    let f = sample_rhs(&back, &Surface::Sphere, &u, Problem::Laplace).unwrap();
    let uh = solve_laplace(&back, &f).unwrap();
    let geo = recover_geometry(&back, &RecoveryOptions::default()).unwrap();
    let g = recover_gradient(&back, &geo, &uh).unwrap();
    let de = gradient_error(&back, &Surface::Sphere, &u, &uh).unwrap();
    let de_r = recovered_gradient_error(&back, &Surface::Sphere, &u, &g.values).unwrap();
    assert!(de_r < 0.5 * de, "{de_r} vs {de}");
}

#[test]
fn obj_round_trip_of_a_perturbed_torus() {
    let dir = tempfile::tempdir().unwrap();
    let torus = chevron_torus(3).unwrap();
    let spec = PerturbationSpec::new(Some(2), Some(2)).randomized(true, true).with_seed(5).with_magnitude(0.5);
    let moved = perturb_mesh(&torus, &Surface::Torus, &spec).unwrap();
    let path = dir.path().join("t.obj");
    save_mesh(&moved, &path, MeshFormat::Obj).unwrap();
    let back = load_mesh(&path, MeshFormat::Obj).unwrap();
    assert!(back.same_connectivity(&torus));
    assert_eq!(back.vertices(), moved.vertices());
}

#[test]
fn both_schemes_superconverge_on_the_sphere() {
    for scheme in [Scheme::Pppr, Scheme::Pspr] {
        let mut cfg = StudyConfig::new(Experiment::ScalarSphere);
        cfg.levels = LevelRange::new(2, 5);
        cfg.scheme = scheme;
        let t = run_study(&cfg).unwrap();
        let gates = parse_gates("de 0.9 1.1\nde_r 1.8 2.2\n").unwrap();
        for o in check_gates(&t, &gates).unwrap() {
            assert!(o.passed, "{scheme}: {o}");
        }
    }
}

#[test]
fn study_csv_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = StudyConfig::new(Experiment::NormalsTorus);
    cfg.levels = LevelRange::new(0, 2);
    cfg.output = Some(dir.path().join("n.csv"));
    let t = run_study(&cfg).unwrap();
    let back = read_csv(cfg.output.as_ref().unwrap()).unwrap();
    assert_eq!(back, t);
    let nu = back.column_index("nu_r").unwrap();
    let nh = back.column_index("nu_h").unwrap();
    assert!(back.rows.iter().all(|r| r.errors[nu] < r.errors[nh]));
}
