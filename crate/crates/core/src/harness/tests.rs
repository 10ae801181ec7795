use super::*;

fn quick(experiment: Experiment, levels: LevelRange) -> StudyConfig {
    StudyConfig { levels, ..StudyConfig::new(experiment) }
}

#[test]
fn experiment_names_round_trip() {
    for e in Experiment::ALL {
        assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
    }
    assert!("sphere".parse::<Experiment>().is_err());
}

#[test]
fn level_ranges() {
    assert_eq!("3..7".parse::<LevelRange>().unwrap(), LevelRange::new(3, 7));
    assert_eq!("2..=4".parse::<LevelRange>().unwrap(), LevelRange::new(2, 4));
    assert_eq!("5".parse::<LevelRange>().unwrap(), LevelRange::new(5, 5));
    assert!("7..3".parse::<LevelRange>().is_err());
    assert!("a..3".parse::<LevelRange>().is_err());
}

#[test]
fn config_from_toml_fills_defaults() {
    let cfg = StudyConfig::from_toml("experiment = \"counterexample\"\nseed = 9\n").unwrap();
    assert_eq!(cfg.levels, LevelRange::new(3, 6));
    assert_eq!(cfg.perturbation, Experiment::Counterexample.default_perturbation());
    assert_eq!(cfg.seed, 9);

    let text = r#"
        experiment = "supercloseness"
        levels = "2..4"
        scheme = "pspr"
        output = "out.csv"
        [perturbation]
        normal_order = 2
        tangential_order = 2
        normal_random = true
        tangential_random = true
    "#;
    let cfg = StudyConfig::from_toml(text).unwrap();
    assert_eq!(cfg.levels, LevelRange::new(2, 4));
    assert_eq!(cfg.scheme, Scheme::Pspr);
    assert_eq!(cfg.perturbation, PerturbationSpec::new(Some(2), Some(2)).randomized(true, true));
    assert_eq!(cfg.output.as_deref(), Some(Path::new("out.csv")));

    let cfg = StudyConfig::from_toml(
        "experiment = \"scalar-sphere\"\nperturbation = \"normal:2,tangential:3,mode:rand-normal\"\n",
    )
    .unwrap();
    assert_eq!(cfg.perturbation, PerturbationSpec::new(Some(2), Some(3)).randomized(true, false));
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(StudyConfig::from_toml("experiment = \"scalar-sphere\"\nbogus = 1\n").is_err());
    assert!(StudyConfig::from_toml("experiment = \"normals-torus\"\nlevels = \"0..6\"\n").is_err());
    assert!(StudyConfig::from_toml("experiment = \"vector-laplace\"\nbeta = 0.0\n").is_err());
    assert!(StudyConfig::from_toml("experiment = \"vector-laplace\"\nperturbation = \"normal:2\"\n").is_err());
    let mut cfg = StudyConfig::new(Experiment::Supercloseness);
    cfg.perturbation = PerturbationSpec::none();
    assert!(cfg.validate().is_err());
}

#[test]
fn sphere_dofs_follow_closed_form() {
    let t = run_study(&quick(Experiment::ScalarSphere, LevelRange::new(1, 3))).unwrap();
    let dofs: Vec<usize> = t.rows.iter().map(|r| r.dof).collect();
    let expected: Vec<usize> = (1..=3).map(|l| 10 * 4usize.pow(l) + 2).collect();
    assert_eq!(dofs, expected);
    assert_eq!(t.rows.iter().map(|r| r.level).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(t.rows[0].orders.iter().all(Option::is_none));
    assert!(t.rows[1..].iter().all(|r| r.orders.iter().all(Option::is_some)));
}

#[test]
fn torus_dofs_follow_closed_form() {
    let t = run_study(&quick(Experiment::NormalsTorus, LevelRange::new(0, 2))).unwrap();
    let dofs: Vec<usize> = t.rows.iter().map(|r| r.dof).collect();
    assert_eq!(dofs, vec![200, 800, 3200]);
}

#[test]
fn studies_are_byte_identical_under_a_seed() {
    let mut cfg = quick(Experiment::Counterexample, LevelRange::new(2, 4));
    cfg.seed = 42;
    let a = run_study(&cfg).unwrap().to_csv_string().unwrap();
    let b = run_study(&cfg).unwrap().to_csv_string().unwrap();
    assert_eq!(a, b);
    cfg.seed = 43;
    let c = run_study(&cfg).unwrap().to_csv_string().unwrap();
    assert_ne!(a, c);
}

#[test]
fn run_study_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick(Experiment::Supercloseness, LevelRange::new(1, 2));
    cfg.output = Some(dir.path().join("s.csv"));
    let t = run_study(&cfg).unwrap();
    let back = read_csv(cfg.output.as_ref().unwrap()).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.columns, vec!["jac", "det", "metric"]);
}

#[test]
fn vector_rows_carry_normal_source() {
    let mut cfg = quick(Experiment::VectorLaplace, LevelRange::new(1, 2));
    cfg.normal_source = NormalSource::Averaged;
    let t = run_study(&cfg).unwrap();
    assert_eq!(t.label_column.as_deref(), Some("normal_source"));
    assert!(t.rows.iter().all(|r| r.label.as_deref() == Some("averaged")));
}

#[test]
fn deterministic_normal_shift_scales_uniformly() {
    // an outward shift by h² scales each element, so metric and determinant
    // deviations stay comparable; the O(h³) tangential part accounts for the gap
    let t = run_study(&quick(Experiment::Supercloseness, LevelRange::new(2, 4))).unwrap();
    for r in &t.rows {
        let (jac, det, metric) = (r.errors[0], r.errors[1], r.errors[2]);
        assert!(jac > 0.0 && det > 0.0 && metric > 0.0);
        assert!(jac < 4.0 * r.h * r.h);
        assert!(det > 0.5 * metric && det < 1.5 * metric, "{det} vs {metric}");
    }
}

#[test]
fn errors_carry_level_context() {
    // a perturbation far too large for level 0 folds elements
    let mut cfg = quick(Experiment::Supercloseness, LevelRange::new(0, 1));
    cfg.perturbation = cfg.perturbation.with_magnitude(50.0);
    let err = run_study(&cfg).unwrap_err().to_string();
    assert!(err.contains("supercloseness level 0"), "{err}");
}

#[test]
fn vector_field_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n.csv");
    emit_vector_field_csv(&[Vec3::new(0.5, -1.0, 2.0)], &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "vertex,x,y,z\n0,5.0000000000000000e-1,-1.0000000000000000e0,2.0000000000000000e0\n");
}
