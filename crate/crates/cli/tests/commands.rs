use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rebalance(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rebalance")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) {
    let out = rebalance(args, cwd);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

/// Generates a synthetic file of `n` rows in `dir/gen`.
fn generated(dir: &Path, n: usize) -> PathBuf {
    let cfg = dir.join("gen.json");
    fs::write(&cfg, format!(r#"{{"synthetic": {{"n": {n}}}}}"#)).unwrap();
    ok(&["generate", "-c", "gen.json", "-o", "gen"], dir);
    dir.join("gen/data.csv")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

fn header(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().map(str::to_string).collect()
}

#[test]
fn generate_writes_data_labels_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), 300);
    assert_eq!(header(&data), ["row_id", "x1", "x2", "x3", "x4", "x5", "y"]);
    assert_eq!(csv_rows(&data).len(), 300);
    assert_eq!(csv_rows(&dir.path().join("gen/labels.csv")).len(), 300);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("gen/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["config"]["synthetic"]["n"], 300);
}

#[test]
fn cluster_only_generation_has_no_shell_labels() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"synthetic": {"n": 200, "cluster_fraction": 1.0}}"#).unwrap();
    ok(&["generate", "-c", "c.json", "-o", "gen"], dir.path());
    let labels = csv_rows(&dir.path().join("gen/labels.csv"));
    assert!(labels.iter().all(|r| r[1] == "cluster"));
}

#[test]
fn sample_sizes_and_provenance_tags() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), 1000);
    ok(&["sample", "--input", data.to_str().unwrap(), "--target", "y", "-o", "s"], dir.path());
    let s = dir.path().join("s");
    assert_eq!(csv_rows(&s.join("sample_density.csv")).len(), 100);
    let one = csv_rows(&s.join("sample_1point.csv"));
    assert_eq!(one.len(), 200);
    let mut tags: Vec<String> = csv_rows(&s.join("sample_1point.provenance.csv")).into_iter().map(|r| r[1].clone()).collect();
    tags.dedup();
    tags.sort();
    tags.dedup();
    assert_eq!(tags, ["edge-1nn", "random"]);
    assert_eq!(csv_rows(&s.join("density_scores.csv")).len(), 1000);
}

#[test]
fn invalid_target_column_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), 100);
    let out = rebalance(&["sample", "--input", data.to_str().unwrap(), "--target", "yield", "-o", "s"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let line: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(line["error"]["kind"], "validation");
    assert!(line["error"]["message"].as_str().unwrap().contains("yield"));
}

#[test]
fn malformed_config_exits_with_two_and_missing_model_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"iteratons": 3}"#).unwrap();
    assert_eq!(rebalance(&["experiment", "-c", "bad.json"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("frac.json"), r#"{"split": {"test_fraction": 1.5}}"#).unwrap();
    assert_eq!(rebalance(&["experiment", "-c", "frac.json"], dir.path()).status.code(), Some(2));
    let data = generated(dir.path(), 1000);
    let out = rebalance(&["evaluate", "--input", data.to_str().unwrap(), "--target", "y", "--model", "absent.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_evaluate_pca_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = generated(dir.path(), 1000);
    let input = data.to_str().unwrap();
    ok(&["fit", "--input", input, "--target", "y", "-o", "m"], dir.path());
    ok(&["fit", "--input", input, "--target", "y", "--strategy", "density", "-o", "m"], dir.path());
    ok(&["evaluate", "--input", input, "--target", "y", "--model", "m/model_all.json", "--model", "m/model_density.json", "-o", "e"], dir.path());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e/report_density.json")).unwrap()).unwrap();
    assert_eq!(report["sample_size"], 80);
    assert_eq!(report["n_underrepresented"], 20);

    ok(&["pca", "--input", input, "--target", "y", "-o", "p"], dir.path());
    let scores = dir.path().join("p/pca_scores.csv");
    assert_eq!(header(&scores), ["row_id", "pc1", "pc2", "pc3", "pc4", "batch_label"]);
    let ratios: Vec<f64> = csv_rows(&dir.path().join("p/pca_variance.csv")).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.windows(2).all(|w| w[0] >= w[1]));

    ok(
        &["pca", "--input", input, "--target", "y", "-o", "p2", "--residuals-a", "e/residuals_all.csv", "--residuals-b", "e/residuals_density.csv"],
        dir.path(),
    );
    let rows = csv_rows(&dir.path().join("p2/pca_scores.csv"));
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| ["a", "b", "tie"].contains(&r[6].as_str())));
}

#[test]
fn experiment_reports_baseline_and_three_strategies() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.json"), r#"{"synthetic": {"n": 1500}, "evaluation": {"iterations": 1}}"#).unwrap();
    ok(&["experiment", "-c", "x.json", "-o", "x"], dir.path());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("x/summary.json")).unwrap()).unwrap();
    let names: Vec<&str> = summary["strategies"].as_array().unwrap().iter().map(|s| s["strategy"].as_str().unwrap()).collect();
    assert_eq!(names, ["all", "1point", "mean", "density"]);
    for s in summary["strategies"].as_array().unwrap() {
        let b = &s["overall_rmse"];
        assert!(b["min"] == b["max"] && b["q1"] == b["median"] && b["median"] == b["q3"]);
    }
}
