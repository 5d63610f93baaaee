use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fungible::discrepancy::f_ml;
use fungible::model::ModelFile;
use nalgebra::{DMatrix, DVector};

const MODEL: &str = r#"{
  "observed": ["x1", "x2", "x3", "x4"],
  "latent": ["f"],
  "directed": [
    {"row": "x1", "col": "f", "param": "l1"},
    {"row": "x2", "col": "f", "param": "l2"},
    {"row": "x3", "col": "f", "param": "l3"},
    {"row": "x4", "col": "f", "param": "l4"}
  ],
  "symmetric": [
    {"row": "f", "col": "f", "value": 1.0},
    {"row": "x1", "col": "x1", "param": "u1"},
    {"row": "x2", "col": "x2", "param": "u2"},
    {"row": "x3", "col": "x3", "param": "u3"},
    {"row": "x4", "col": "x4", "param": "u4"}
  ]
}"#;

const COV: &str = "1.0, 0.56, 0.48, 0.45\n0.56, 1.0, 0.42, 0.35\n0.48, 0.42, 1.0, 0.30\n0.45, 0.35, 0.30, 1.0\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fungible")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn value_of(csv: &str, key: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no {key} in {csv}"))
        .parse()
        .unwrap()
}

#[test]
fn fit_prints_estimates_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", MODEL);
    let cov = write(dir.path(), "s.csv", COV);
    let out = run(&["fit", "--model", &model, "--cov", &cov, "--n", "200"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("name,value\n"));
    for key in ["l1", "l4", "u1", "u4", "f_hat", "epsilon_hat"] {
        value_of(&text, key);
    }
    assert_eq!(value_of(&text, "df"), 2.0);
    assert!(value_of(&text, "f_hat") > 0.0);
    assert!(stderr(&out).is_empty());
}

#[test]
fn named_start_values_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", MODEL);
    let cov = write(dir.path(), "s.csv", COV);
    let start = write(dir.path(), "start.csv", "l1,0.9\nu1,0.2\n");
    let dest = dir.path().join("fit.csv");
    let out = run(&[
        "fit",
        "--model",
        &model,
        "--cov",
        &cov,
        "--n",
        "200",
        "--start",
        &start,
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let plain = stdout(&run(&["fit", "--model", &model, "--cov", &cov, "--n", "200"]));
    let from_file = fs::read_to_string(dest).unwrap();
    assert!((value_of(&plain, "f_hat") - value_of(&from_file, "f_hat")).abs() < 1e-10);
}

#[test]
fn domain_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", MODEL);
    let asym = write(dir.path(), "a.csv", &COV.replacen("0.56", "0.57", 1));
    let singular = write(dir.path(), "z.csv", "1,1,0,0\n1,1,0,0\n0,0,1,0\n0,0,0,1\n");
    for cov in [asym, singular] {
        let out = run(&["fit", "--model", &model, "--cov", &cov, "--n", "200"]);
        assert_eq!(out.status.code(), Some(1));
        let err = stderr(&out);
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(stdout(&out).is_empty());
    }
    let out =
        run(&["fit", "--model", &model, "--cov", &write(dir.path(), "s.csv", COV), "--n", "200", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["fit", "--n", "200"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["fit", "--model", "/nonexistent.json", "--cov", "/nonexistent.csv", "--n", "9"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["table-check"]).status.code(), Some(2));
}

#[test]
fn fpe_points_lie_on_the_contour() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = write(dir.path(), "m.json", MODEL);
    let cov = write(dir.path(), "s.csv", COV);
    let dest = dir.path().join("points.csv");
    let out = run(&[
        "fpe",
        "--model",
        &model_path,
        "--cov",
        &cov,
        "--n",
        "200",
        "--mode",
        "delta-f",
        "--scaling",
        "likelihood",
        "--focal",
        "l1,l2",
        "--directions",
        "16",
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dest).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "angle,r,theta_1,theta_2,theta_3,theta_4,theta_5,theta_6,theta_7,theta_8,f_value"
    );
    let model = ModelFile::from_json(MODEL).unwrap().to_spec::<f64>().unwrap();
    let s = DMatrix::from_row_slice(
        4,
        4,
        &COV.split([',', '\n']).filter_map(|x| x.trim().parse().ok()).collect::<Vec<f64>>(),
    );
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 16);
    for r in &rows {
        let theta = DVector::from_column_slice(&r[2..10]);
        assert!((f_ml(&model, &theta, &s).unwrap() - r[10]).abs() < 1e-12);
        assert!((r[10] - rows[0][10]).abs() < 1e-9);
    }

    let out = run(&["fpe", "--model", &model_path, "--cov", &cov, "--n", "200"]);
    assert_eq!(out.status.code(), Some(2), "focal is required for larger models");
}

#[test]
fn confset_reports_both_methods() {
    let out = run(&["confset", "--builtin", "sigma3", "--n", "1000", "--directions", "36"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["method", "major", "minor", "skipped", "partial"]);
    assert_eq!(rows[1][0], "quadratic");
    assert_eq!(rows[2][0], "exact");
    let q: f64 = rows[1][1].parse().unwrap();
    let e: f64 = rows[2][1].parse().unwrap();
    assert!((q / e - 1.0).abs() < 0.05);
}

#[test]
fn study_output_is_determined_by_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "design.json",
        r#"{"conditions": ["sigma2"], "sample_sizes": [500], "epsilons": [0.0, 0.03], "replications": 3, "directions": 16}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for dest in [&a, &b] {
        let out = run(&["study", "--config", &config, "--seed", "42", "--out", dest.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let cells = dir.path().join("cells.csv");
    let out = run(&[
        "study",
        "--config",
        &config,
        "--seed",
        "42",
        "--out",
        a.to_str().unwrap(),
        "--cells",
        cells.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let cells = fs::read_to_string(cells).unwrap();
    assert_eq!(cells.lines().count(), 1 + 5);
    for line in cells.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let total: usize = f[8].parse::<usize>().unwrap() + f[9].parse::<usize>().unwrap();
        assert_eq!(total, if f[3] == "confidence-set" { 1 } else { 3 });
    }

    let md = run(&["study", "--config", &config, "--seed", "42", "--format", "markdown"]);
    assert!(stdout(&md).starts_with("| Condition | N |"));
}

#[test]
fn table_check_on_published_table() {
    let out = run(&["table-check", "--fixture", "paper"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.ends_with("PASS")).count(), 8);
    assert!(text.contains("8/8"));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "t.csv",
        &fungible::simstudy::published_table().to_csv().replacen("Sigma1,200,0.43", "Sigma1,200,0.53", 1),
    );
    assert_eq!(run(&["table-check", "--table", &bad]).status.code(), Some(1));
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let ok = Command::new(env!("CARGO_BIN_EXE_fungible"))
        .args(["table-check", "--fixture", "paper"])
        .env("FC_THREADS", "1")
        .output()
        .unwrap();
    assert!(ok.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_fungible"))
        .args(["table-check", "--fixture", "paper"])
        .env("FC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
