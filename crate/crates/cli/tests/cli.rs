//! End-to-end tests of the `cosmo` binary: file contracts, config
//! precedence, exit codes.

use std::path::Path;
use std::process::Command;

fn cosmo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cosmo"))
}

#[test]
fn experiment_smoke_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let out = cosmo()
        .args([
            "experiment",
            "--d", "5",
            "--k", "1",
            "--epochs", "2",
            "--n", "64",
            "--seeds", "7",
            "--name", "smoke",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(start.elapsed().as_secs() < 5, "smoke run took too long");

    let run = dir.path().join("smoke");
    assert!(run.join("config.toml").is_file());
    assert!(run.join("aggregate.csv").is_file());
    assert!(run.join("seed_7/report.json").is_file());
    assert!(run.join("seed_7/history.csv").is_file());
    assert!(run.join("seed_7/w_learned.csv").is_file());

    // The resolved config reproduces the run: every field materialized.
    let cfg = std::fs::read_to_string(run.join("config.toml")).unwrap();
    for key in ["model", "d = 5", "epochs = 2", "lr =", "t-start", "omega", "seeds = [7]"] {
        assert!(cfg.contains(key), "resolved config missing {key}: {cfg}");
    }
    // Two history rows, one per epoch.
    let history = std::fs::read_to_string(run.join("seed_7/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
}

fn read_aggregate(path: &Path) -> (Vec<String>, Vec<String>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let row: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    (header, row)
}

#[test]
fn aggregate_matches_recomputation_from_seed_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = cosmo()
        .args([
            "experiment",
            "--d", "6",
            "--k", "1",
            "--epochs", "25",
            "--n", "128",
            "--seeds", "1,2,3",
            "--name", "agg",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let run = dir.path().join("agg");
    let mut aucs = Vec::new();
    let mut nhds = Vec::new();
    for seed in [1u64, 2, 3] {
        let text = std::fs::read_to_string(run.join(format!("seed_{seed}/report.json"))).unwrap();
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        aucs.push(report["eval"]["auc"].as_f64().unwrap());
        nhds.push(report["eval"]["nhd"].as_f64().unwrap());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let std = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
    };

    let (header, row) = read_aggregate(&run.join("aggregate.csv"));
    let col = |name: &str| -> f64 {
        let idx = header.iter().position(|h| h == name).unwrap();
        row[idx].parse().unwrap()
    };
    // Same values, same arithmetic: exact equality.
    assert_eq!(col("auc_mean"), mean(&aucs));
    assert_eq!(col("auc_std"), std(&aucs));
    assert_eq!(col("nhd_mean"), mean(&nhds));
    assert_eq!(col("nhd_std"), std(&nhds));
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "d = 6\nk = 1\nepochs = 3\nn = 32\nlr = 0.002\nseeds = [4]\n")
        .unwrap();
    let out = cosmo()
        .arg("experiment")
        .arg("--config")
        .arg(&cfg_path)
        .args(["--lr", "0.003", "--name", "prec"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let resolved = std::fs::read_to_string(dir.path().join("prec/config.toml")).unwrap();
    assert!(resolved.contains("d = 6"), "file value lost: {resolved}");
    assert!(resolved.contains("lr = 0.003"), "flag override lost: {resolved}");
    assert!(resolved.contains("epochs = 3"));
}

#[test]
fn generate_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = cosmo()
        .args(["generate", "--d", "6", "--k", "2", "--n", "128", "--seed", "9"])
        .arg("--out")
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(data.join("data.csv").is_file());
    assert!(data.join("meta.json").is_file());

    let out = cosmo()
        .args(["train", "--d", "6", "--k", "2", "--epochs", "40", "--seed", "9", "--name", "t"])
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report = cosmo()
        .arg("eval")
        .arg("--w")
        .arg(dir.path().join("t/w_learned.csv"))
        .arg("--truth")
        .arg(data.join("meta.json"))
        .output()
        .unwrap();
    assert!(report.status.success());
    let text = String::from_utf8(report.stdout).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["schema"], "cosmo-eval-v1");
    assert!(value["eval"]["auc"].as_f64().unwrap() >= 0.0);
}

#[test]
fn exit_codes_follow_the_contract() {
    // Config error: zero benchmark repetitions.
    let out = cosmo().args(["bench", "--d-list", "8", "--reps", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Config error: unknown enum value (rejected by the parser).
    let out = cosmo().args(["experiment", "--graph", "zzz"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Numerical abort: absurd learning rate blows the loss up.
    let dir = tempfile::tempdir().unwrap();
    let out = cosmo()
        .args([
            "train", "--d", "5", "--k", "1", "--epochs", "10", "--n", "64", "--lr", "1e300",
            "--name", "blow",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // I/O error: output root under a regular file.
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = cosmo()
        .args(["experiment", "--d", "5", "--k", "1", "--epochs", "2", "--n", "32", "--seeds", "1"])
        .arg("--out")
        .arg(blocker.join("sub"))
        .args(["--name", "x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bench_times_grow_with_node_count() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("bench.csv");
    let out = cosmo()
        .args(["bench", "--d-list", "50,100,200", "--reps", "3", "--epochs", "1"])
        .arg("--out")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,repetitions,mean_epoch_ms,min_epoch_ms");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // Each doubling quadruples the work; means stay ordered even on a noisy
    // host.
    assert!(rows[0][2] < rows[1][2] && rows[1][2] < rows[2][2], "means not monotone: {rows:?}");
    assert!(rows[0][3] < rows[1][3] && rows[1][3] < rows[2][3], "mins not monotone: {rows:?}");
}

#[test]
fn env_var_provides_default_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = cosmo()
        .args([
            "experiment", "--d", "5", "--k", "1", "--epochs", "2", "--n", "32", "--seeds", "1",
            "--name", "env",
        ])
        .env("COSMO_OUT_ROOT", dir.path())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("env/aggregate.csv").is_file());
}
