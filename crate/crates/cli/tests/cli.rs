use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn vi() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vi"));
    cmd.env_remove("VI_OUTPUT_DIR");
    cmd
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn run_config(config: &Path, out: &Path) -> Output {
    vi().arg("run")
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL_LINEAR: &str = r#"{
    "experiment": "linear_corr",
    "n": 150, "n1": 100,
    "rho": [0.5],
    "seeds": [1, 2],
    "features": [1, 3],
    "network": {"hidden_widths": [8]},
    "train": {"epochs": 40},
    "lazy": {"lambda_grid": [0.1, 1.0], "cv_folds": 3}
}"#;

#[test]
fn missing_n1_exits_with_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"experiment": "linear_corr", "n": 100}"#);
    let out = run_config(&cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`n1`"));
}

#[test]
fn unreadable_or_unknown_config_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = run_config(&tmp.path().join("absent.json"), tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "linear_corr", "n": 100, "n1": 50, "epochs": 3}"#,
    );
    assert_eq!(run_config(&cfg, tmp.path()).status.code(), Some(2));
}

#[test]
fn same_config_gives_identical_results() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_LINEAR);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_success(&run_config(&cfg, &a));
    assert_success(&run_config(&cfg, &b));
    for name in ["results.csv", "results.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let rows = csv_rows(a.join("results.csv"));
    assert_eq!(
        rows[0],
        [
            "rho",
            "seed",
            "variable",
            "method",
            "vi",
            "se",
            "ci_lo",
            "ci_hi",
            "theoretical_gap"
        ]
    );
    // 2 seeds x 2 variables x 3 methods
    assert_eq!(rows.len(), 1 + 12);
    let gap_x1: f64 = rows[1][8].parse().unwrap();
    assert!((gap_x1 - 0.25 * 1.5 * 1.5).abs() < 1e-9);
}

#[test]
fn manifest_records_hash_seeds_and_timing() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_LINEAR);
    let out_dir = tmp.path().join("out");
    assert_success(&run_config(&cfg, &out_dir));
    let m = read_json(out_dir.join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["experiment"], "linear_corr");
    assert_eq!(m["seeds"], serde_json::json!([1, 2]));
    let hash = m["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    for method in ["dropout", "lazy", "retrain"] {
        assert!(m["method_seconds"][method].as_f64().unwrap() > 0.0, "{method}");
    }
    assert_eq!(m["rows"], 12);
    let results = read_json(out_dir.join("results.json"));
    assert_eq!(results["summary"]["coverage"][0]["rho"], 0.5);
}

#[test]
fn output_dir_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_LINEAR);
    let env_dir = tmp.path().join("from-env");
    let out = vi()
        .arg("run")
        .arg(&cfg)
        .env("VI_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_success(&out);
    assert!(env_dir.join("results.csv").exists());
    assert!(env_dir.join("manifest.json").exists());
}

#[test]
fn flags_override_config_fields() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL_LINEAR);
    let out_dir = tmp.path().join("out");
    let out = vi()
        .args([
            "run",
            cfg.to_str().unwrap(),
            "--rho",
            "0,0.2",
            "--seeds",
            "4",
            "--output-dir",
        ])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let rows = csv_rows(out_dir.join("results.csv"));
    assert_eq!(rows.len(), 1 + 2 * 2 * 3);
    assert!(rows[1..].iter().all(|r| r[1] == "4"));
    assert_eq!(
        rows[1..]
            .iter()
            .map(|r| r[0].as_str())
            .collect::<std::collections::BTreeSet<_>>(),
        ["0", "0.2"].into_iter().collect()
    );
}

#[test]
fn numerical_failure_exits_3_and_flushes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "highdim", "n": 120, "n1": 80, "network": {"hidden_widths": [16, 16]},
            "train": {"epochs": 50, "learning_rate": 1e100}}"#,
    );
    let out_dir = tmp.path().join("out");
    let out = run_config(&cfg, &out_dir);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_json(out_dir.join("manifest.json"));
    assert_eq!(m["status"], "failed");
    assert!(m["error"].as_str().unwrap().contains("numerical"));
    assert!(out_dir.join("results.csv").exists());
}

#[test]
fn binary_run_writes_a_coverage_table() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "binary", "n": 200, "n1": 130, "seeds": [0, 1, 2],
            "network": {"hidden_widths": [8]}, "train": {"epochs": 60},
            "methods": ["lazy", "retrain"], "lazy": {"lambda_grid": [1.0]}}"#,
    );
    let out_dir = tmp.path().join("out");
    assert_success(&run_config(&cfg, &out_dir));
    let rows = csv_rows(out_dir.join("results.csv"));
    assert_eq!(rows.len(), 1 + 3 * 2 * 2);
    let truth: f64 = rows[1][7].parse().unwrap();
    assert!((truth - 0.1360).abs() < 5e-4);
    let cov = csv_rows(out_dir.join("coverage.csv"));
    assert_eq!(cov[0], ["variable", "method", "sims", "coverage", "mean_bias"]);
    assert_eq!(cov.len(), 1 + 4);
    assert!(cov[1..].iter().all(|r| r[2] == "3"));
}

#[test]
fn csv_subcommand_names_variables() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data.csv");
    let mut text = String::from("signal,noise,y\n");
    for i in 0..90 {
        let a = ((i * 7) % 13) as f64 / 6.0 - 1.0;
        let b = ((i * 5) % 11) as f64 / 5.0 - 1.0;
        text.push_str(&format!("{a},{b},{}\n", 2.0 * a));
    }
    fs::write(&data, text).unwrap();
    let out_dir = tmp.path().join("out");
    let out = vi()
        .args([
            "csv",
            "--response",
            "y",
            "--method",
            "dropout,lazy",
            "--hidden",
            "8",
            "--epochs",
            "80",
        ])
        .arg("--data")
        .arg(&data)
        .arg("--output-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let rows = csv_rows(out_dir.join("results.csv"));
    assert_eq!(
        rows[0],
        ["seed", "variable", "method", "vi", "se", "ci_lo", "ci_hi", "lambda"]
    );
    let names: Vec<&str> = rows[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(names, ["signal", "signal", "noise", "noise"]);
    assert!(rows[1][7].is_empty());
    assert!(rows[2][7].parse::<f64>().unwrap() > 0.0);
    let signal: f64 = rows[2][3].parse().unwrap();
    let noise: f64 = rows[4][3].parse().unwrap();
    assert!(signal > noise);
}

#[test]
fn csv_with_missing_response_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data.csv");
    fs::write(&data, "a,b\n1,2\n3,4\n").unwrap();
    let out = vi()
        .args(["csv", "--response", "y", "--data"])
        .arg(&data)
        .arg("--output-dir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trace_check_subcommand_fits_a_line() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let out = vi()
        .args([
            "trace-check",
            "--n",
            "200",
            "--n1",
            "120",
            "--width",
            "16",
            "--test-sizes",
            "50,100,150",
        ])
        .arg("--output-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let rows = csv_rows(out_dir.join("results.csv"));
    assert_eq!(rows.len(), 1 + 3);
    let fit = csv_rows(out_dir.join("trace_fit.csv"));
    assert_eq!(fit[0], ["seed", "slope", "intercept", "r_squared"]);
    assert!(fit[1][1].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn roar_config_covers_every_point() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "roar", "n": 150, "n1": 100, "network": {"hidden_widths": [8]},
            "train": {"epochs": 20}, "lazy": {"lambda_grid": [1.0]}, "proportions": [0.0, 0.5, 1.0]}"#,
    );
    let out_dir = tmp.path().join("out");
    assert_success(&run_config(&cfg, &out_dir));
    let rows = csv_rows(out_dir.join("results.csv"));
    assert_eq!(rows[0], ["seed", "ordering", "t", "method", "mse"]);
    // grad and random orderings x 3 proportions x 3 methods
    assert_eq!(rows.len(), 1 + 18);
    let at_zero: Vec<&str> = rows[1..4].iter().map(|r| r[4].as_str()).collect();
    assert!(at_zero.iter().all(|m| *m == at_zero[0]));
}

#[test]
fn shapley_subcommand_reports_every_feature() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let out = vi()
        .args([
            "shapley",
            "--n",
            "150",
            "--n1",
            "100",
            "--permutations",
            "2",
            "--seeds",
            "3",
        ])
        .arg("--output-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_success(&out);
    let rows = csv_rows(out_dir.join("results.csv"));
    assert_eq!(rows[0], ["seed", "feature", "method", "psi", "se"]);
    assert_eq!(rows.len(), 1 + 100);
    assert!(rows[1..].iter().all(|r| r[2] == "lazy" && r[0] == "3"));
}

#[test]
fn exact_shapley_on_many_features_is_refused() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "shapley", "n": 150, "n1": 100, "network": {"hidden_widths": [4]}, "train": {"epochs": 5}}"#,
    );
    let out = run_config(&cfg, tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("permutations"));
}

/// At the scale of the correlated linear simulation the lazy estimator,
/// cross-validation included, is faster than retraining.
#[test]
fn lazy_is_faster_than_retraining_at_simulation_scale() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"experiment": "linear_corr", "n": 1000, "n1": 667, "rho": [0.5], "seeds": [0]}"#,
    );
    let out_dir = tmp.path().join("out");
    assert_success(&run_config(&cfg, &out_dir));
    let m = read_json(out_dir.join("manifest.json"));
    let secs = |k: &str| m["method_seconds"][k].as_f64().unwrap();
    assert!(secs("dropout") < secs("lazy"));
    assert!(secs("lazy") < secs("retrain"), "{}", m["method_seconds"]);
}

/// Every shipped config deserializes; forcing an invalid split makes the run
/// stop at validation, after parsing but before any work.
#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = TempDir::new().unwrap();
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let out = vi()
            .arg("run")
            .arg(&path)
            .args(["--n", "10", "--n1", "10", "--output-dir"])
            .arg(tmp.path())
            .output()
            .unwrap();
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{}: {stderr}", path.display());
        assert!(
            stderr.contains("`n1`") || stderr.contains("`data`"),
            "{}: {stderr}",
            path.display()
        );
        seen += 1;
    }
    assert_eq!(seen, 7);
}
