//! Runs the `dbacf` binary end to end. Golden outputs live in `tests/golden`;
//! set `UPDATE_GOLDEN=1` to rewrite them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dbacf::estimators::{estimate, WeightRule};
use dbacf::Series;
use serde_json::Value;

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbacf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn json(args: &[&str]) -> Value {
    serde_json::from_slice(&ok(args)).unwrap()
}

/// Exit status and the diagnostic code from stderr.
fn fails(args: &[&str]) -> (i32, String) {
    let out = run(args);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    let v: Value = serde_json::from_str(stderr.trim()).unwrap();
    (out.status.code().unwrap(), v["error"].as_str().unwrap().to_string())
}

fn check_golden(name: &str, actual: &[u8]) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let want = fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {name}"));
    assert!(want == actual, "{name} differs from the recorded output");
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
    assert!(run(&["segment", "--help"]).status.success());
}

#[test]
fn argument_errors_exit_3() {
    let step = golden("step40.csv");
    assert_eq!(fails(&["estimate", "--input", path_str(&step)]), (3, "E_ARGS".into()));
    assert_eq!(fails(&["frobnicate"]), (3, "E_ARGS".into()));
    assert_eq!(fails(&[]), (3, "E_ARGS".into()));
    assert_eq!(
        fails(&["segment", "--input", path_str(&step), "--m", "1", "--alpha", "1.5"]),
        (3, "E_ARGS".into())
    );
    assert_eq!(
        fails(&["estimate", "--input", path_str(&step), "--m", "1", "--format", "xml"]),
        (3, "E_ARGS".into())
    );
}

#[test]
fn io_errors_exit_2() {
    assert_eq!(fails(&["estimate", "--input", "/nonexistent/y.csv", "--m", "1"]), (2, "E_IO".into()));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1\n2\nthree\n").unwrap();
    assert_eq!(fails(&["estimate", "--input", path_str(&bad), "--m", "1"]), (2, "E_IO".into()));
    let out = dir.path().join("missing-dir/out.json");
    assert_eq!(
        fails(&["estimate", "--input", path_str(&golden("step40.csv")), "--m", "1", "--output", path_str(&out)]),
        (2, "E_IO".into())
    );
}

#[test]
fn domain_errors_exit_3() {
    let step = golden("step40.csv");
    // n = 40 needs m < 19
    assert_eq!(fails(&["estimate", "--input", path_str(&step), "--m", "19"]), (3, "E_DOMAIN".into()));
    assert_eq!(
        fails(&["estimate", "--input", path_str(&step), "--m", "2", "--d", "0.5", "--h", "3"]),
        (3, "E_DOMAIN".into())
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "n = 100\nreps = 2\nm = 1\nestimators = [\"Q\"]\n").unwrap();
    assert_eq!(fails(&["bench", "--input", path_str(&cfg)]), (3, "E_ARGS".into()));
    // boundary MA(1) autocovariance: the fit creeps towards a unit root
    let acvf = dir.path().join("unit.json");
    fs::write(&acvf, r#"{"gamma":[1.0,0.5]}"#).unwrap();
    assert_eq!(fails(&["mafit", "--input", path_str(&acvf)]), (3, "E_NUMERIC".into()));
}

#[test]
fn estimate_constant_series_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let y = dir.path().join("c.csv");
    fs::write(&y, "3.5\n".repeat(30)).unwrap();
    let v = json(&["estimate", "--m", "2", "--input", path_str(&y)]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["acvf"]["gamma"], serde_json::json!([0.0, 0.0, 0.0]));
    assert!(v["acf"].is_null());
}

#[test]
fn estimate_matches_library_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let y_path = dir.path().join("y.csv");
    let values: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64 / 7.0).sin() + (i / 100) as f64).collect();
    fs::write(&y_path, values.iter().map(|v| format!("{v:?}\n")).collect::<String>()).unwrap();
    let y = Series::new(values).unwrap();
    let v = json(&["estimate", "--m", "1", "--d", "0", "--input", path_str(&y_path)]);
    let lib = estimate(&y, 1, WeightRule::Fixed(0.0)).unwrap();
    let got: Vec<f64> = serde_json::from_value(v["acvf"]["gamma"].clone()).unwrap();
    assert_eq!(got, lib.acvf.gamma());
    assert_eq!(v["weights_used"], serde_json::json!([0.0, 0.0]));
    let csv = String::from_utf8(ok(&["estimate", "--m", "1", "--input", path_str(&y_path), "--format", "csv"])).unwrap();
    assert!(csv.starts_with("lag,gamma,weight,acf\n0,"));
}

#[test]
fn estimate_golden() {
    check_golden("estimate_step40.json", &ok(&["estimate", "--m", "1", "--input", path_str(&golden("step40.csv"))]));
}

#[test]
fn project_behaviour() {
    let dir = tempfile::tempdir().unwrap();
    let valid = dir.path().join("valid.json");
    fs::write(&valid, r#"{"m":1,"gamma":[1.0,0.4]}"#).unwrap();
    let v = json(&["project", "--input", path_str(&valid)]);
    let row: Vec<f64> = serde_json::from_value(v["matrix"]["first_row"].clone()).unwrap();
    assert!((row[0] - 1.0).abs() < 1e-9 && (row[1] - 0.4).abs() < 1e-9, "{row:?}");
    assert_eq!(v["report"]["converged"], true);

    let bad = golden("acvf_invalid.json");
    let out = ok(&["project", "--input", path_str(&bad), "--project-dim", "8"]);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert!(v["report"]["min_eigenvalue"].as_f64().unwrap() >= -1e-8);
    assert_eq!(v["report"]["converged"], true);
    check_golden("project_invalid.json", &out);

    // stopping early is reported, not an error
    let v = json(&["project", "--input", path_str(&bad), "--max-iter", "1"]);
    assert_eq!(v["report"]["converged"], false);
    assert_eq!(v["report"]["iterations"], 1);
}

#[test]
fn mafit_golden() {
    let out = ok(&["mafit", "--input", path_str(&golden("acvf_ma1.json"))]);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert!((v["model"]["theta"][0].as_f64().unwrap() - 0.5).abs() < 1e-9);
    check_golden("mafit_ma1.json", &out);
}

#[test]
fn segment_noiseless_step() {
    let v = json(&["segment", "--m", "1", "--reps", "200", "--input", path_str(&golden("step40.csv"))]);
    assert_eq!(v["k_hat"], 1);
    assert_eq!(v["changepoints"], serde_json::json!([20]));
    assert_eq!(v["levels"], serde_json::json!([0.0, 2.0]));
    assert_eq!(v["alpha"], 0.05);
}

#[test]
fn simulate_and_segment_demo() {
    let sim = ok(&["simulate", "--input", path_str(&golden("demo.toml"))]);
    check_golden("demo_series.csv", &sim);
    assert_eq!(sim, ok(&["simulate", "--input", path_str(&golden("demo.toml"))]));

    let dir = tempfile::tempdir().unwrap();
    let y = dir.path().join("demo.csv");
    fs::write(&y, &sim).unwrap();
    let out = ok(&["segment", "--m", "6", "--intervals", "full", "--input", path_str(&y)]);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["k_hat"], 6);
    check_golden("segment_demo.json", &out);
}

#[test]
fn bench_smoke_and_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.toml");
    fs::write(&cfg, "n = 200\nm = 1\ngamma1 = 0.2\n").unwrap();
    let csv = String::from_utf8(ok(&["bench", "--input", path_str(&cfg), "--reps", "1"])).unwrap();
    assert!(csv.starts_with("gamma1,estimator,lag,mse,se,reps,n,seed,failures\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 2);

    let table = ok(&["bench", "--input", path_str(&golden("table1.toml"))]);
    assert_eq!(table, ok(&["bench", "--input", path_str(&golden("table1.toml"))]));
    check_golden("bench_table1.csv", &table);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est.json");
    let stdout = ok(&["estimate", "--m", "1", "--input", path_str(&golden("step40.csv")), "--output", path_str(&out)]);
    assert!(stdout.is_empty());
    assert_eq!(fs::read(&out).unwrap(), fs::read(golden("estimate_step40.json")).unwrap());
}
