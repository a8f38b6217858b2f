use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_grushin-pme");

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out").arg(out).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn eigen_on_laplacian_preset() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("matrix.txt");
    let out = run(
        &["eigen", "--preset", "convergence-operator", "--dump-matrix", matrix.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("lambda1=1.96758728670920"));
    assert!(dir.path().join("eigenfield.csv").exists());
    assert!(dir.path().join("summary.csv").exists());
    let dump = std::fs::read_to_string(matrix).unwrap();
    assert!(dump.starts_with("0 0 -1.0240000000000000e3\n0 1 2.5600000000000000e2\n"));
}

#[test]
fn presets_subcommand() {
    let out = Command::new(BIN).arg("presets").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(
        names,
        ["blowup-p3", "global-linear", "heat-decay", "eigen-gamma-sweep", "convergence-operator"]
    );
    let out = Command::new(BIN).args(["presets", "--name", "blowup-p3"]).output().unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["preset"], "blowup-p3");
}

#[test]
fn zero_initial_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("zero.csv");
    let mut text = String::from("x1,y1,value\n");
    for i in 1..=3 {
        for j in 1..=3 {
            text.push_str(&format!("{},{},0\n", i as f64 * 0.25, j as f64 * 0.25));
        }
    }
    std::fs::write(&field, text).unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"preset": "heat-decay", "domain": {{"nodes": [3, 3]}},
                "solver": {{"initial": {{"kind": "file", "path": {:?}}}}}}}"#,
            field.to_string_lossy()
        ),
    );
    let out = run(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid initial data"));
}

#[test]
fn bad_documents_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"preset": "blowup-p3", "domain": {"gamma": -1}}"#);
    let out = run(&["eigen", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain.gamma"));

    let cfg = write_config(dir.path(), r#"{"preset": "blowup-p3", "extra": true}"#);
    assert_eq!(run(&["eigen", "--config", &cfg], dir.path()).status.code(), Some(2));

    let cfg = write_config(dir.path(), "not json");
    assert_eq!(run(&["eigen", "--config", &cfg], dir.path()).status.code(), Some(2));

    // mode does not match the pipeline
    let out = run(&["certify-global", "--preset", "blowup-p3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hypothesis_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"preset": "blowup-p3", "params": {"alpha": 8.0}, "domain": {"nodes": [9, 9]}}"#);
    assert_eq!(run(&["check-conditions", "--config", &cfg], dir.path()).status.code(), Some(3));
    let out = run(&["certify-blowup", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let text = std::fs::read_to_string(dir.path().join("certificate.txt")).unwrap();
    assert!(text.contains("verdict=inconclusive"));
    assert!(text.contains("outcome=not-run"));
}

#[test]
fn check_conditions_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["check-conditions", "--preset", "blowup-p3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["check-conditions", "--preset", "global-linear"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn simulate_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--preset", "heat-decay"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,dt,mass,grad_energy_l,J,E,E_prime,dissipation,max_u,concavity_defect\n"));
    assert!(dir.path().join("final_field.csv").exists());

    let quiet = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--preset", "heat-decay", "--no-csv"], quiet.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(!quiet.path().join("trace.csv").exists());

    let blow = tempfile::tempdir().unwrap();
    let code = run(&["simulate", "--preset", "blowup-p3"], blow.path()).status.code();
    assert!(matches!(code, Some(10) | Some(11)), "{code:?}");
}

#[test]
fn certify_blowup_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["certify-blowup", "--preset", "blowup-p3", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    for f in ["trace.csv", "certificate.txt", "certificate.json", "summary.csv", "final_field.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("certificate.json")).unwrap()).unwrap();
    assert_eq!(json["verdict"], "pass");
}

#[test]
fn convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["convergence", "--preset", "convergence-operator"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "n,h,lambda1,closed_form,delta,ratio");
    assert_eq!(lines.len(), 5);
    let ratio: f64 = lines[4].rsplit(',').next().unwrap().parse().unwrap();
    assert!((3.5..4.5).contains(&ratio));

    let out = run(&["convergence", "--preset", "blowup-p3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
