use std::path::Path;
use std::process::{Command, Output};

fn espa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_espa")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_two_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = espa(&["generate", "toy1", "--D", "50", "--T", "600", "--sigma", "5", "--seed", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let features = std::fs::read_to_string(out.join("features.csv")).unwrap();
    let labels = std::fs::read_to_string(out.join("labels.csv")).unwrap();
    assert_eq!(features.lines().count(), 601);
    assert_eq!(features.lines().next().unwrap().split(',').count(), 50);
    assert_eq!(labels.lines().count(), 601);
    assert_eq!(labels.lines().next(), Some("label"));
}

#[test]
fn info_reports_the_feature_budget() {
    let o = espa(&["info", "--D", "500", "--T", "80"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("D_max = floor(T / 13.8) = 5"), "{text}");
    assert!(text.contains("2.552e11"), "{text}");
}

#[test]
fn missing_labels_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    espa(&["generate", "--D", "5", "--T", "40", "--out", s(dir.path())]);
    let missing = dir.path().join("absent.csv");
    let o = espa(&["fit", "--features", s(&dir.path().join("features.csv")), "--labels", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("espa fit: load dataset"), "{err}");
}

#[test]
fn usage_and_numeric_errors_map_to_exit_codes() {
    assert_eq!(espa(&["fit", "--K", "zero"]).status.code(), Some(1));
    assert_eq!(espa(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(espa(&["info", "--epsilon_CL", "-1"]).status.code(), Some(1));
}

#[test]
fn fit_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(espa(&["generate", "toy2", "--D", "6", "--T", "200", "--seed", "4", "--out", s(p)]).status.success());
    let f = p.join("features.csv");
    let l = p.join("labels.csv");
    let o = espa(&["fit", "--features", s(&f), "--labels", s(&l), "--K", "5", "--n_restarts", "2", "--out", s(p)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = espa(&["predict", "--model", s(&p.join("model.toml")), "--features", s(&f), "--out", s(p)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pred = std::fs::read_to_string(p.join("predictions.csv")).unwrap();
    assert_eq!(pred.lines().next(), Some("label,p_blue,p_red"));
    assert_eq!(pred.lines().count(), 201);
}

#[test]
fn cv_reports_are_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("cv.conf");
    std::fs::write(
        &conf,
        "D = 6\nT = 80\nn_replicates = 3\nn_restarts = 2\nK_grid = range(2,4)\nepsilon_e_grid = 0, 1e-3\nepsilon_CL_grid = 1e-2\n",
    )
    .unwrap();
    let mut reports = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("w{workers}"));
        let o = espa(&["cv", "--config", s(&conf), "--seed", "3", "--workers", workers, "--out", s(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        reports.push(std::fs::read(out.join("cv_report.toml")).unwrap());
        assert!(out.join("timing.toml").exists());
    }
    assert_eq!(reports[0], reports[1]);
}
