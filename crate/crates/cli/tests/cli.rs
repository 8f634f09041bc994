use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hybrid_moments::algebra::rational;
use hybrid_moments::oscillator::{analytic_centroid, OscillatorParams};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-moments"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Copies a shipped config into `dir`, applying text replacements.
fn config_in(dir: &Path, name: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = fs::read_to_string(repo_config(name)).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from), "{from} not in {name}");
        text = text.replace(from, to);
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bracket_examples() {
    let cases = [
        (["0c1q", "quantum", "d[2,0]", "d[0,2]"], "4*d[1,1]"),
        (["1c0q", "classical", "d[3,0]", "d[0,3]"], "9*d[2,2] - 9*d[2,0]*d[0,2]"),
        (["0c1q", "quantum", "d[1,1]", "d[1,1]"], "0"),
        (["0c1q", "quantum", "d[3,0]", "d[0,3]"], "9*d[2,2] - 9*d[2,0]*d[0,2] - 3/2*hb^2"),
        (["1c1q", "hybrid", "q1", "p1"], "1"),
    ];
    for ([sig, kind, a, b], expected) in cases {
        let o = run(&["bracket", "--sig", sig, "--kind", kind, a, b]);
        assert!(o.status.success());
        assert_eq!(stdout(&o).trim(), expected);
    }
}

#[test]
fn bracket_errors() {
    let o = run(&["bracket", "--sig", "0c1q", "--kind", "quantum", "d[1,1", "d[1,1]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("position 5"));
    let o = run(&["bracket", "--sig", "0c1q", "--kind", "quantum", "d[1,1;0,0]", "d[1,1]"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulated_centroids_match_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path(), "oscillator_centroids.json", &[]);
    let o = run(&["simulate", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let params = OscillatorParams::from_squares(rational(9, 1), rational(8, 1)).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("oscillator_centroids.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[1], "q1");
    assert_eq!(&header[3], "q2");
    let mut rows = 0;
    let mut err = 0.0f64;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|x| x.parse().unwrap()).collect();
        let exact = analytic_centroid(v[0], [1.0, 0.0, 2.0, 0.0], &params);
        for j in 0..4 {
            err = err.max((v[1 + j] - exact[j]).abs());
        }
        rows += 1;
    }
    assert_eq!(rows, 3001);
    assert!(err < 1e-6, "{err}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oscillator_centroids_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["rows"], 3001);
    assert_eq!(summary["final"]["time"], 30.0);
    assert!(summary["uncertainty"]["u_c"]["max"].is_number());
}

#[test]
fn zero_length_run_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path(), "oscillator_centroids.json", &[("\"t_end\": 30.0", "\"t_end\": 0.0")]);
    assert!(run(&["simulate", cfg.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(dir.path().join("oscillator_centroids.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("0.0,1.0,0.0,2.0,0.0"));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path(), "oscillator_moments.json", &[("\"t_end\": 30.0", "\"t_end\": 3.0")]);
    let csv = dir.path().join("oscillator_moments.csv");
    assert!(run(&["simulate", cfg.to_str().unwrap()]).status.success());
    let first = fs::read(&csv).unwrap();
    let o = run(&["simulate", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(first, fs::read(&csv).unwrap());
}

#[test]
fn csv_to_stdout_sends_summary_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(
        dir.path(),
        "oscillator_centroids.json",
        &[
            ("\"t_end\": 30.0", "\"t_end\": 0.01"),
            (
                "\"output\": { \"csv\": \"oscillator_centroids.csv\", \"summary\": \"oscillator_centroids_summary.json\" }",
                "\"output\": {}",
            ),
        ],
    );
    let o = run(&["simulate", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(summary["rows"], 2);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path(), "oscillator_moments.json", &[("d[0,0;2,0]", "d[2,0]")]);
    let o = run(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degrees of freedom"));
    let cfg = config_in(dir.path(), "oscillator_moments.json", &[("\"truncation\": 2", "\"truncation\": 1")]);
    assert_eq!(run(&["simulate", cfg.to_str().unwrap()]).status.code(), Some(2));
    let cfg = config_in(dir.path(), "oscillator_moments.json", &[("\"step\": 0.001", "\"step\": 0")]);
    assert_eq!(run(&["simulate", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = run(&["simulate", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn blow_up_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blowup.json");
    fs::write(
        &path,
        r#"{
            "signature": {"n_classical": 1, "n_quantum": 0, "hbar": 0.0},
            "hamiltonian": [{"exponents": [[3, 1]], "coefficient": "1"}],
            "kind": "classical",
            "truncation": 2,
            "initial": {"centroids": {"q1": 1e80}},
            "integrator": {"method": "rk4", "step": 1.0, "t_end": 10.0},
            "output": {"csv": "blowup.csv"}
        }"#,
    )
    .unwrap();
    let o = run(&["simulate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn eom_prints_equations() {
    let o = run(&["eom", repo_config("oscillator_moments.json").to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("d/dt p1 = -13/2*q1 - 5/2*q2"));
    assert!(text.contains("d/dt d[2,0;0,0] = 2*d[1,1;0,0]"));
    assert_eq!(text.lines().count(), 14);
}

#[test]
fn verify_examples() {
    let o = run(&["verify", "identities", "--max-exp", "4"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["passed"], true);
    assert_eq!(r["identities"]["max_exponent"], 4);

    let o = run(&["verify", "jacobi", "--kind", "quantum", "--max-order", "3"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["jacobi"]["checks"][0]["witness"].is_null());

    let o = run(&["verify", "jacobi", "--kind", "hybrid", "--max-order", "3"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let w = &r["jacobi"]["checks"][0]["witness"];
    assert_ne!(w["jacobiator"], "0");
    assert_eq!(w["keys"].as_array().unwrap().len(), 3);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("PASS jacobi 1c1q hybrid"));
}

#[test]
fn verify_brackets_small_grid() {
    let o = run(&["verify", "brackets", "--max-order", "2"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["brackets"]["grids"].as_array().unwrap().len(), 5);
    assert_eq!(run(&["verify", "brackets", "--max-order", "9"]).status.code(), Some(2));
}

#[test]
fn jacobi_expectation_mismatch_fails() {
    // a hybrid bracket without a classical sector obeys Jacobi, so no witness is expected
    let o = run(&["verify", "jacobi", "--kind", "hybrid", "--sig", "0c1q", "--max-order", "3"]);
    assert!(o.status.success());
    let o = run(&["verify", "identities", "--max-exp", "7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oscillator_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("osc.csv");
    let o = run(&[
        "oscillator",
        "--omega1",
        "3",
        "--omega2",
        "sqrt(8)",
        "--t-end",
        "10",
        "--samples",
        "50000",
        "--csv",
        csv.to_str().unwrap(),
        "--report",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,q,p,x,k,g,u_c,u_q");
    assert_eq!(text.lines().count(), 50_002);
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["gamma"], "1/2");
    assert_eq!(r["omega_sq"], "17/2");
    assert_eq!(r["heisenberg_violated"], true);

    let o = run(&["oscillator", "--omega1", "2", "--omega2", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn refuses_to_overwrite_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(
        dir.path(),
        "oscillator_moments.json",
        &[("\"summary\": \"oscillator_moments_summary.json\"", "\"summary\": \"oscillator_moments.json\"")],
    );
    let before = fs::read(&cfg).unwrap();
    assert_eq!(run(&["simulate", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(before, fs::read(&cfg).unwrap());
}
