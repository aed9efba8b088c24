use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, spec: &str, args: &[&str]) -> Output {
    let path = dir.join("problem.toml");
    fs::write(&path, spec).unwrap();
    Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .arg("--spec")
        .arg(&path)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const TORUS_ONE_POINT: &str = r#"
matrix = [["0", "2"], ["2", "0"]]
rho = ["2pi", "2pi"]

[profile]
strengths = ["1"]
points = [[0.5, 0.5]]
"#;

#[test]
fn degree_at_the_intrinsic_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"
matrix = [["0", "2"], ["2", "0"]]
rho = ["6pi", "6pi"]
[profile]
strengths = ["3"]
"#;
    let out = run(dir.path(), spec, &["degree"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["degree"], 2);
    assert_eq!(v["k"], 1);
    assert_eq!(v["ratio_over_8pi"], "3/2");
    assert_eq!(v["bounds"], serde_json::json!(["1", "2"]));
}

#[test]
fn sphere_region_zero_has_degree_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"
matrix = [["0", "2"], ["2", "0"]]
rho = ["2pi", "2pi"]
[topology]
kind = "sphere"
"#;
    let out = run(dir.path(), spec, &["degree"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["degree"], 1);
}

#[test]
fn zero_rho_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = TORUS_ONE_POINT.replace(r#"["2pi", "2pi"]"#, r#"["0", "0"]"#);
    let out = run(dir.path(), &spec, &["degree"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["kind"], "InvalidRho");
}

#[test]
fn critical_curve_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = TORUS_ONE_POINT.replace(r#"["2pi", "2pi"]"#, r#"["4pi", "4pi"]"#);
    for cmd in ["classify", "degree", "solve"] {
        let out = run(dir.path(), &spec, &[cmd]);
        assert_eq!(code(&out), 2, "{cmd}");
        let v = json(&out);
        assert_eq!(v["kind"], "OnCriticalSet");
        assert_eq!(v["k"], 1);
    }
}

#[test]
fn spectrum_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        // (1 − x)^{-2}(1 − x²)² = (1 + x)²
        (r#"["1", "1"]"#, "3", vec![("1", 2, 3), ("2", 1, 4), ("3", 0, 4)]),
        ("[]", "2", vec![("1", 0, 1), ("2", 0, 1)]),
        (r#"["1/2"]"#, "2", vec![("1", 1, 2), ("3/2", -1, 1), ("2", 1, 2)]),
    ];
    for (strengths, cutoff, rows) in cases {
        let spec = format!("[profile]\nstrengths = {strengths}\n");
        let out = run(dir.path(), &spec, &["spectrum", "--cutoff", cutoff]);
        assert_eq!(code(&out), 0);
        let v = json(&out);
        let got: Vec<(String, i64, i64)> = v
            .as_array()
            .unwrap()
            .iter()
            .map(|r| {
                (
                    r["n"].as_str().unwrap().to_string(),
                    r["b"].as_i64().unwrap(),
                    r["partial_sum"].as_i64().unwrap(),
                )
            })
            .collect();
        let want: Vec<(String, i64, i64)> =
            rows.into_iter().map(|(n, b, p)| (n.to_string(), b, p)).collect();
        assert_eq!(got, want, "{strengths}");
    }
}

#[test]
fn spectrum_as_csv_and_bad_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let spec = "[profile]\nstrengths = [\"1/2\"]\n";
    let out = run(dir.path(), spec, &["spectrum", "--cutoff", "2", "--format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "n,b,partial_sum\n1,1,2\n3/2,-1,1\n2,1,2\n");
    let out = run(dir.path(), spec, &["spectrum", "--cutoff=-1"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["kind"], "InvalidCutoff");
}

#[test]
fn symmetrize_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), r#"matrix = [["1", "3"], ["2", "2"]]"#, &["symmetrize"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["b11"], "3/2");
    assert_eq!(v["b12"], "3");
    assert_eq!(v["b22"], "2");
    let shift = v["shift"].as_f64().unwrap();
    assert_eq!(shift, (2.0f64 / 3.0).ln());
}

#[test]
fn hypothesis_violation_names_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), r#"matrix = [["3", "1"], ["2", "1"]]"#, &["symmetrize"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["kind"], "Hypothesis");
    assert_eq!(v["field"], "matrix");
    assert!(v["message"].as_str().unwrap().contains("a21 >= a11"));
}

#[test]
fn output_is_deterministic_and_can_go_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(dir.path(), TORUS_ONE_POINT, &["classify"]);
    let b = run(dir.path(), TORUS_ONE_POINT, &["classify"]);
    assert_eq!(a.stdout, b.stdout);
    let target = dir.path().join("report.json");
    let out = run(dir.path(), TORUS_ONE_POINT, &["classify", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read(&target).unwrap(), a.stdout);
    let v = json(&a);
    assert_eq!(v["Q"], "16*pi^2");
    assert_eq!(v["L"], "4*pi");
    assert_eq!(v["ratio_over_8pi"], "1/2");
}

#[test]
fn solve_writes_report_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let fields = dir.path().join("fields");
    let out = run(
        dir.path(),
        TORUS_ONE_POINT,
        &["solve", "--grid", "32", "--fields", fields.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["region"], 0);
    assert_eq!(v["local_masses"].as_array().unwrap().len(), 1);
    for m in v["reconstructed_mass"].as_array().unwrap() {
        assert!((m.as_f64().unwrap() - 1.0).abs() < 1e-8);
    }
    for name in ["u1.csv", "u2.csv", "u1_star.csv", "u2_star.csv"] {
        let text = fs::read_to_string(fields.join(name)).unwrap();
        assert!(text.starts_with("x1,x2,value\n"));
        assert_eq!(text.lines().count(), 32 * 32 + 1);
    }
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let spec = format!("{TORUS_ONE_POINT}\n[solver]\ntolerance = 1e-300\nmax_iterations = 5\n");
    let out = run(dir.path(), &spec, &["solve", "--grid", "16"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["kind"], "NonConvergence");
}

#[test]
fn sweep_in_region_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = format!(
        "{TORUS_ONE_POINT}\n[sweep]\nfrom = [\"2pi\", \"2pi\"]\nto = [\"3pi\", \"3pi\"]\nsteps = 10\n"
    );
    for extra in [&[][..], &["--parallel"][..]] {
        let mut args = vec!["sweep", "--grid", "32"];
        args.extend_from_slice(extra);
        let out = run(dir.path(), &spec, &args);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8(out.stdout).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "t,rho1,rho2,region,converged,residual,max_u1,max_u2,J,sigma_11,sigma_21"
        );
        assert_eq!(lines.len(), 11);
        assert!(lines[1..].iter().all(|l| l.split(',').nth(4) == Some("true")));
    }
    let out = run(dir.path(), &spec, &["sweep", "--grid", "32", "--format", "json"]);
    assert_eq!(json(&out).as_array().unwrap().len(), 10);
}

#[test]
fn usage_errors_exit_with_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .arg("degree")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let out = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(["degree", "--bogus"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let out = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(["degree", "--spec", "/nonexistent/problem.toml"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["kind"], "Io");
}

#[test]
fn json_specs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let spec = liouville_cli::ProblemSpec::parse(TORUS_ONE_POINT).unwrap();
    let path = dir.path().join("problem.json");
    fs::write(&path, spec.to_json()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(["degree", "--spec", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["degree"], 1);
}
