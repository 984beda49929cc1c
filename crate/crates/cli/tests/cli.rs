use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qhs_io::{load_algebra, load_project, save_project, LoadOptions, MorphismSpec};

fn project(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../projects").join(name)
}

fn qhs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhs"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("run qhs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_projects_validate() {
    for name in ["s3.qhs", "s3_inclusion.qhs", "z4_pointed.qhs", "z4_twisted.qhs"] {
        let out = qhs(&["validate", path_str(&project(name))]);
        assert_eq!(code(&out), 0, "{name}: {}", stdout(&out));
    }
}

#[test]
fn corrupted_project_is_an_input_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.qhs");
    let text = std::fs::read_to_string(project("s3.qhs")).unwrap();
    std::fs::write(&path, text.replacen("\"order\": 6", "\"order\": 6,,", 1)).unwrap();
    let out = qhs(&["validate", path_str(&path)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn extreme_tolerance_is_honored() {
    let s3 = project("s3.qhs");
    let loose = qhs(&["validate", "--tol", "1e-6", path_str(&s3)]);
    assert_eq!(code(&loose), 0);
    let tight = qhs(&["validate", "--tol", "1e-30", path_str(&s3)]);
    assert_ne!(code(&tight), 0);
    assert_eq!(code(&qhs(&["validate", "--tol", "-1", path_str(&s3)])), 2);
}

#[test]
fn reconstruct_writes_a_deterministic_algebra_file() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let s3 = project("s3.qhs");
    for out in [&a, &b] {
        let run = qhs(&["reconstruct", path_str(&s3), "--module", "z2", "--base", "0", "--out", path_str(out)]);
        assert_eq!(code(&run), 0, "{}", stderr(&run));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(load_algebra(&a).unwrap().dim(), 3);
}

#[test]
fn reconstruct_to_stdout_keeps_logs_on_stderr() {
    let out = qhs(&["reconstruct", path_str(&project("s3.qhs")), "--module", "a3"]);
    assert_eq!(code(&out), 0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("alg.json");
    std::fs::write(&path, stdout(&out)).unwrap();
    assert_eq!(load_algebra(&path).unwrap().dim(), 2);
    assert!(stderr(&out).contains("algebra of dimension 2"));
}

#[test]
fn unknown_base_label_lists_valid_labels() {
    let out = qhs(&["reconstruct", path_str(&project("s3.qhs")), "--module", "z2", "--base", "7"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("valid labels: 0 (w0), 1 (w1)"), "{err}");
}

#[test]
fn unknown_module_and_suite_are_input_errors() {
    let s3 = project("s3.qhs");
    let out = qhs(&["reconstruct", path_str(&s3), "--module", "d4"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("available: 0 (trivial), 1 (z2), 2 (a3), 3 (s3)"));
    assert_eq!(code(&qhs(&["verify", path_str(&s3), "--suite", "module,bogus"])), 2);
    assert_eq!(code(&qhs(&["verify", path_str(&s3), "--format", "xml"])), 2);
}

#[test]
fn twisted_reconstruction_is_refused() {
    let out = qhs(&["reconstruct", path_str(&project("z4_twisted.qhs"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("associator"), "{}", stderr(&out));
}

#[test]
fn verify_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.json");
    let s3 = project("s3.qhs");
    let run = qhs(&["verify", path_str(&s3), "--suite", "module,algebra", "--out", path_str(&cert)]);
    assert_eq!(code(&run), 0, "{}", stdout(&run));
    let text = stdout(&run);
    assert!(text.contains("z2/algebra y=0/associativity"));
    assert!(!text.contains("positivity"));

    let again = qhs(&["report", path_str(&cert)]);
    assert_eq!(code(&again), 0);
    assert_eq!(stdout(&again), text);

    let json = qhs(&["report", path_str(&cert), "--format", "json"]);
    let value: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(value["checks"].as_array().unwrap().len(), text.lines().count() - 4);
}

#[test]
fn morphism_emits_theta_and_eigenvector_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("theta.json");
    let run = qhs(&[
        "morphism",
        path_str(&project("s3_inclusion.qhs")),
        "--eigenvector",
        "2",
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(code(&run), 0, "{}", stdout(&run));
    assert!(stdout(&run).contains("eigenvalue 2, residual vector [0, 0]"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["kind"], "morphism");
    assert_eq!(doc["payload"]["theta"]["source_basis"].as_array().unwrap().len(), 3);
    assert_eq!(doc["payload"]["theta"]["target_basis"].as_array().unwrap().len(), 6);
}

#[test]
fn broken_psi_fails_naming_the_coherence_diagram() {
    let p = load_project(project("s3_inclusion.qhs"), LoadOptions::default()).unwrap();
    let mut data = p.morphisms[0].data.clone();
    rephase_first_column(data.psi_mut(2, 0, 0));
    let mut file = p.to_file();
    file.morphisms[0].spec = MorphismSpec::Explicit { data };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.qhs");
    save_project(&file, &path).unwrap();
    let run = qhs(&["morphism", path_str(&path)]);
    assert_eq!(code(&run), 1, "{}", stdout(&run));
    assert!(stdout(&run).contains("FAIL morphism coherence"), "{}", stdout(&run));
}

/// Keeps ψ unitary but breaks its compatibility with the coherence maps.
fn rephase_first_column(m: &mut qhs_core::ComplexMatrix) {
    let phase = qhs_core::C64::from_polar(1.0, 0.7);
    for r in 0..m.rows() {
        m[(r, 0)] *= phase;
    }
}

#[test]
fn seed_does_not_change_reconstruction() {
    let s3 = project("s3.qhs");
    let a = qhs(&["reconstruct", path_str(&s3), "--module", "trivial", "--seed", "0"]);
    let b = qhs(&["reconstruct", path_str(&s3), "--module", "trivial", "--seed", "99"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}
