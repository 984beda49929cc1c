use qhs_core::grouprep::{extract_irreps, FiniteGroup};
use qhs_core::modcat::module_from_subgroup;
use qhs_core::numkit::{C64, DEFAULT_TOL};
use qhs_core::reconstruct::build_algebra;
use qhs_core::tensorcat::CategoryPresentation;
use qhs_core::Certificate;
use qhs_io::*;

const Z2: &str = r#"{
  "schema_version": "1.0",
  "name": "z2",
  "group": { "order": 2, "identity": 0, "mult_table": [[0, 1], [1, 0]] }
}"#;

fn s3_file() -> ProjectFile {
    let g = FiniteGroup::symmetric(3);
    let irreps = extract_irreps(&g, 0).unwrap();
    let cat = CategoryPresentation::from_group(&g, &irreps, DEFAULT_TOL).unwrap();
    ProjectFile {
        schema_version: SCHEMA_VERSION.into(),
        name: "s3".into(),
        group: GroupSection {
            order: 6,
            identity: g.identity(),
            mult_table: g.mult_table().to_vec(),
        },
        irreps: Some(irreps),
        cocycle: None,
        modules: vec![ModuleSection {
            name: "z2".into(),
            spec: ModuleSpec::Subgroup {
                elements: vec![0, 2],
                irreps: None,
            },
            category_fingerprint: cat.fingerprint(),
        }],
        morphisms: vec![],
        fingerprints: Fingerprints::default(),
    }
}

#[test]
fn minimal_z2_project_loads_with_two_irreps() {
    let p = parse_project("z2.json", Z2, LoadOptions::default()).unwrap();
    assert_eq!(p.category.len(), 2);
    assert!(p.modules.is_empty());
}

#[test]
fn future_versions_are_refused() {
    for v in ["1.1", "2.0", "one"] {
        let text = Z2.replace("\"1.0\"", &format!("\"{v}\""));
        let err = parse_project("z2.json", &text, LoadOptions::default()).unwrap_err();
        assert!(matches!(err, IoError::SchemaVersion { .. }), "{v}: {err}");
    }
}

#[test]
fn broken_latin_square_names_the_cell() {
    let text = Z2.replace("[[0, 1], [1, 0]]", "[[0, 1], [1, 1]]");
    let err = parse_project("z2.json", &text, LoadOptions::default()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.starts_with("group.mult_table"), "{msg}");
    assert!(msg.contains("cell (1, 1)") || msg.contains("cell (0, 1)"), "{msg}");
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let err = parse_project("bad.json", "{\n  \"schema_version\": \"1.0\",\n  oops\n}", LoadOptions::default()).unwrap_err();
    match err {
        IoError::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("{other}"),
    }
}

#[test]
fn stale_category_fingerprint_is_rejected() {
    let mut file = s3_file();
    file.modules[0].category_fingerprint = "0000".into();
    let err = build_project(file, LoadOptions::default()).unwrap_err();
    match err {
        IoError::Fingerprint { location, .. } => assert!(location.contains("modules[0]"), "{location}"),
        other => panic!("{other}"),
    }
}

#[test]
fn project_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s3.json");
    let project = build_project(s3_file(), LoadOptions::default()).unwrap();
    let file = project.to_file();
    save_project(&file, &path).unwrap();
    let again = load_project(&path, LoadOptions::default()).unwrap();
    assert_eq!(again.file, file);
    assert_eq!(again.category, project.category);
    assert_eq!(again.modules, project.modules);
    let bytes = std::fs::read(&path).unwrap();
    save_project(&again.to_file(), &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
}

#[test]
fn any_float_change_moves_the_category_fingerprint() {
    let mut file = s3_file();
    let base = build_project(file.clone(), LoadOptions::default()).unwrap().category.fingerprint();
    let table = file.irreps.as_mut().unwrap();
    // A phase change on the sign representation keeps it a valid irrep only
    // if applied consistently, so perturb a fusion-irrelevant bit instead:
    // conjugate the standard representation by a diagonal unitary.
    let phase = C64::from_polar(1.0, 0.25);
    for m in &mut table.irreps[2].matrices {
        let (a, b) = (m[(0, 1)], m[(1, 0)]);
        m[(0, 1)] = a * phase;
        m[(1, 0)] = b * phase.conj();
    }
    file.modules.clear();
    let moved = build_project(file, LoadOptions::default()).unwrap().category.fingerprint();
    assert_ne!(base, moved);
}

#[test]
fn irreps_algebra_and_certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = FiniteGroup::symmetric(3);
    let table = extract_irreps(&g, 0).unwrap();
    let p = dir.path().join("irreps.json");
    save_irreps(&table, &p).unwrap();
    assert_eq!(load_irreps(&p).unwrap(), table);

    let cat = CategoryPresentation::from_group(&g, &table, DEFAULT_TOL).unwrap();
    let m = module_from_subgroup(&cat, &g.subgroup(&[0]).unwrap(), 0, DEFAULT_TOL).unwrap();
    let alg = build_algebra(&cat, &m.functor, 0).unwrap();
    let p = dir.path().join("alg.json");
    save_algebra(&alg, &p).unwrap();
    assert_eq!(load_algebra(&p).unwrap(), alg);
    assert!(matches!(load_irreps(&p), Err(IoError::Kind { .. })));

    let mut cert = Certificate::new("c", "hash", 1e-9).with_seed(2);
    cert.residual("r", "a statement", 0.1 + 0.2, 1.0);
    let p = dir.path().join("cert.json");
    save_certificate(&cert, &p).unwrap();
    assert_eq!(load_certificate(&p).unwrap(), cert);
}
