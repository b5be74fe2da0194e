use std::fs;
use std::path::Path;
use std::process::Command;

use mvmc::cli::RunManifest;
use mvmc::data::load_dataset;
use mvmc::metrics::ClusteringReport;
use tempfile::TempDir;

fn mvmc(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_mvmc"))
        .args(args)
        .output()
        .expect("binary runs");
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_spec(dir: &Path, n: usize, m: usize, labelings: usize, seed: u64) -> std::path::PathBuf {
    let dims = vec![6; m];
    let clusters = vec![2; labelings];
    let spec = serde_json::json!({
        "n": n, "m": m, "view_dims": dims, "num_labelings": labelings,
        "clusters_per_labeling": clusters, "noise_sigma": 0.1, "seed": seed
    });
    let path = dir.join(format!("spec_{n}_{m}_{labelings}.json"));
    fs::write(&path, spec.to_string()).unwrap();
    path
}

fn generated(tmp: &TempDir, n: usize, m: usize) -> std::path::PathBuf {
    let spec = write_spec(tmp.path(), n, m, m.min(2), 5);
    let data = tmp.path().join(format!("data_{n}_{m}"));
    assert_eq!(mvmc(&["generate", "--spec", p(&spec), "--out", p(&data)]), 0);
    data
}

fn read_report(path: &Path) -> ClusteringReport {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_round_trips_and_is_repeatable() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), 30, 2, 2, 1);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(mvmc(&["generate", "--spec", p(&spec), "--out", p(&a)]), 0);
    assert_eq!(mvmc(&["generate", "--spec", p(&spec), "--out", p(&b)]), 0);
    let ds = load_dataset(&a).unwrap();
    assert_eq!((ds.n(), ds.m()), (30, 2));
    assert!(a.join("spec.json").exists());
    for name in ["view_0.csv", "view_1.csv", "truth_0.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn generate_rejects_more_labelings_than_views() {
    let tmp = TempDir::new().unwrap();
    let spec = write_spec(tmp.path(), 30, 2, 3, 1);
    assert_eq!(mvmc(&["generate", "--spec", p(&spec), "--out", p(&tmp.path().join("x"))]), 2);
}

#[test]
fn missing_dataset_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let code = mvmc(&["mvmc", "--data", p(&tmp.path().join("nope")), "--out", p(tmp.path())]);
    assert_eq!(code, 5);
}

#[test]
fn mvmc_writes_labels_report_trace_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let data = generated(&tmp, 40, 2);
    let out = tmp.path().join("run");
    let code = mvmc(&["mvmc", "--data", p(&data), "--out", p(&out), "--no-shared", "--dump-graphs", "--snapshot"]);
    assert!(code == 0 || code == 3, "exit {code}");
    for k in 0..2 {
        let labels = fs::read_to_string(out.join(format!("labels_k{k}.csv"))).unwrap();
        assert_eq!(labels.lines().count(), 40);
    }
    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(!manifest.use_shared);
    assert_eq!(manifest.converged, code == 0);
    for file in &manifest.outputs {
        assert!(out.join(file).exists(), "{file}");
    }
    assert!(manifest.outputs.iter().any(|f| f == "laplacian.csv"));
    assert!(manifest.outputs.iter().any(|f| f == "D_k1.csv"));
    let report = read_report(&out.join("report.json"));
    assert_eq!(report.labelings.len(), 2);
}

#[test]
fn lambda1_sweep_writes_seven_runs_and_a_summary() {
    let tmp = TempDir::new().unwrap();
    let data = generated(&tmp, 30, 2);
    let out = tmp.path().join("sweep");
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"max_outer_iters": 20}"#).unwrap();
    let code = mvmc(&[
        "mvmc", "--data", p(&data), "--config", p(&cfg), "--out", p(&out),
        "--sweep", "lambda1=1e-3..1e3", "--threads", "2",
    ]);
    assert!(code == 0 || code == 3, "exit {code}");
    let runs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .collect();
    assert_eq!(runs.len(), 7);
    for run in &runs {
        assert!(run.path().join("report.json").exists());
    }
    let summary = fs::read_to_string(out.join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 8);
    assert!(summary.starts_with("run,lambda1,lambda2,h,mean_sc,mean_di,mean_nmi,mean_jc"));
}

#[test]
fn mvmcc_writes_per_view_labels_and_needs_row_counts() {
    let tmp = TempDir::new().unwrap();
    let data = generated(&tmp, 30, 3);
    let out = tmp.path().join("cc");
    assert_eq!(mvmc(&["mvmcc", "--data", p(&data), "--out", p(&out)]), 2);
    let cfg = tmp.path().join("cc.json");
    fs::write(&cfg, r#"{"c": [2], "r": [2], "max_outer_iters": 15}"#).unwrap();
    let code = mvmc(&["mvmcc", "--data", p(&data), "--config", p(&cfg), "--out", p(&out), "--report-rows"]);
    assert!(code == 0 || code == 3, "exit {code}");
    for v in 0..3 {
        assert!(out.join(format!("row_labels_v{v}.csv")).exists());
        assert!(out.join(format!("col_labels_v{v}.csv")).exists());
    }
    // diversity is over the column labelings
    let report = read_report(&out.join("report.json"));
    assert_eq!(report.labelings.len(), 3);
    assert!(report.labelings.iter().all(|l| l.len() == 30));
    assert!(out.join("row_report.json").exists());
}

#[test]
fn report_scores_external_label_files() {
    let tmp = TempDir::new().unwrap();
    let data = generated(&tmp, 30, 2);
    let truth = data.join("truth_0.csv");
    let out = tmp.path().join("same.json");
    let code = mvmc(&[
        "report", "--data", p(&data), "--labels", p(&truth), p(&truth),
        "--truth", p(&data.join("truth_1.csv")), "--out", p(&out),
    ]);
    assert_eq!(code, 0);
    let r = read_report(&out);
    assert_eq!(r.mean_nmi, Some(1.0));
    assert_eq!(r.mean_jc, Some(1.0));
    assert_eq!(r.truth_nmi.as_ref().map(|t| t.len()), Some(2));

    let out = tmp.path().join("one.json");
    assert_eq!(mvmc(&["report", "--data", p(&data), "--labels", p(&truth), "--out", p(&out)]), 0);
    let r = read_report(&out);
    assert_eq!(r.quality.len(), 1);
    assert_eq!(r.mean_nmi, None);

    let short = tmp.path().join("short.csv");
    fs::write(&short, "0\n1\n").unwrap();
    assert_eq!(mvmc(&["report", "--data", p(&data), "--labels", p(&short)]), 2);
}
