use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qapnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qapnet"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) {
    let out = qapnet(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        "seed = 3\n[data]\nnum_sets = 2\ntrain_per_set = 3\ntest_per_set = 3\ninliers = 6\nsigma2 = 5e-3\nsigma_n = 0.05\n[train]\nepochs = 2\n{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn csv_header(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().map(String::from).collect()
}

fn manifest_hash(dir: &Path) -> String {
    let text = std::fs::read_to_string(dir.join("manifest.toml")).unwrap();
    let v: toml::Table = toml::from_str(&text).unwrap();
    v["config_sha256"].as_str().unwrap().to_string()
}

fn qaplib_fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/qaplib")
}

#[test]
fn synth_writes_the_dataset_layout() {
    let t = TempDir::new().unwrap();
    let cfg = small_config(t.path(), "");
    ok(&["synth", "--config", cfg.to_str().unwrap(), "--out", "d"], t.path());
    for set in 0..2 {
        for split in ["train", "test"] {
            for idx in 0..3 {
                assert!(t.path().join(format!("d/set{set}/{split}/{idx}/instance.txt")).is_file());
            }
        }
    }
    assert!(!t.path().join("d/set2").exists());
}

#[test]
fn fixed_seed_gives_identical_manifest_hash() {
    let t = TempDir::new().unwrap();
    let cfg = small_config(t.path(), "");
    let c = cfg.to_str().unwrap();
    ok(&["synth", "--config", c, "--out", "a"], t.path());
    ok(&["synth", "--config", c, "--out", "b"], t.path());
    ok(&["synth", "--config", c, "--seed", "4", "--out", "c"], t.path());
    assert_eq!(manifest_hash(&t.path().join("a")), manifest_hash(&t.path().join("b")));
    assert_ne!(manifest_hash(&t.path().join("a")), manifest_hash(&t.path().join("c")));
    let read = |d: &str| std::fs::read_to_string(t.path().join(d).join("set1/test/2/instance.txt")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn manifest_reproduces_the_run() {
    let t = TempDir::new().unwrap();
    let cfg = small_config(t.path(), "");
    ok(&["synth", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", "a"], t.path());
    ok(&["synth", "--config", "a/manifest.toml", "--out", "b"], t.path());
    assert_eq!(manifest_hash(&t.path().join("a")), manifest_hash(&t.path().join("b")));
    let read = |d: &str| std::fs::read_to_string(t.path().join(d).join("set0/train/1/instance.txt")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn three_inlier_run_completes() {
    let t = TempDir::new().unwrap();
    let cfg = small_config(t.path(), "");
    let c = cfg.to_str().unwrap();
    std::fs::write(&cfg, std::fs::read_to_string(&cfg).unwrap().replace("inliers = 6", "inliers = 3")).unwrap();
    ok(&["synth", "--config", c, "--out", "d"], t.path());
    ok(&["train", "d", "--config", c, "--out", "m"], t.path());
    ok(&["eval", "d", "--config", c, "--out", "e", "--solvers", "sm,rrwm,ngm=m/model.ckpt"], t.path());
    assert_eq!(csv_rows(&t.path().join("e/eval.csv")).len(), 3);
}

#[test]
fn invalid_config_and_missing_inputs_fail() {
    let t = TempDir::new().unwrap();
    std::fs::write(t.path().join("bad.toml"), "[data]\ninliers = 0\n").unwrap();
    assert!(!qapnet(&["synth", "--config", "bad.toml", "--out", "d"], t.path()).status.success());
    std::fs::write(t.path().join("typo.toml"), "[data]\ninlier = 4\n").unwrap();
    assert!(!qapnet(&["synth", "--config", "typo.toml", "--out", "d"], t.path()).status.success());
    assert!(!qapnet(&["train", "nowhere", "--out", "m"], t.path()).status.success());
    assert!(!qapnet(&["eval", "--out", "e", "--solvers", "ngm=missing.ckpt"], t.path()).status.success());
}

#[test]
fn unknown_variant_is_a_usage_error() {
    let t = TempDir::new().unwrap();
    let out = qapnet(&["train", "d", "--out", "m", "--variant", "gcn"], t.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gcn"));
}

#[test]
fn every_variant_trains() {
    let t = TempDir::new().unwrap();
    let cfg = small_config(t.path(), "");
    let c = cfg.to_str().unwrap();
    ok(&["synth", "--config", c, "--out", "d", "--graphs", "3"], t.path());
    for v in ["ngm", "ngm-v", "ngm+", "nhgm", "nmgm"] {
        let out = format!("m-{v}");
        ok(&["train", "d", "--config", c, "--out", &out, "--variant", v], t.path());
        let log = csv_rows(&t.path().join(&out).join("loss.csv"));
        assert_eq!(log.len(), 2, "{v}");
        let ck = std::fs::read_to_string(t.path().join(&out).join("model.ckpt")).unwrap();
        assert!(ck.contains(&format!("meta variant {v}")), "{v}");
    }
}

#[test]
fn resume_reproduces_the_next_step_loss() {
    let t = TempDir::new().unwrap();
    let cfg = small_config(t.path(), "");
    let c = cfg.to_str().unwrap();
    ok(&["synth", "--config", c, "--out", "d"], t.path());
    ok(&["train", "d", "--config", c, "--out", "full", "--epochs", "3"], t.path());
    ok(&["train", "d", "--config", c, "--out", "part", "--epochs", "2"], t.path());
    ok(&["train", "d", "--config", c, "--out", "part", "--epochs", "1", "--resume", "part/model.ckpt"], t.path());
    let full = csv_rows(&t.path().join("full/loss.csv"));
    let part = csv_rows(&t.path().join("part/loss.csv"));
    assert_eq!(full, part);
    let params = |d: &str| {
        std::fs::read_to_string(t.path().join(d).join("model.ckpt"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("meta") && !l.starts_with("adam config"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(params("full"), params("part"));
}

#[test]
fn single_sample_overfits_to_full_accuracy() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("one.toml");
    std::fs::write(
        &cfg,
        "seed = 9\n[data]\nnum_sets = 1\ntrain_per_set = 1\ntest_per_set = 1\ninliers = 10\nsigma2 = 5e-3\n[train]\nepochs = 200\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    ok(&["synth", "--config", c, "--out", "d"], t.path());
    ok(&["train", "d", "--config", c, "--out", "m"], t.path());
    ok(&["eval", "d", "--config", c, "--out", "e", "--train-split", "--solvers", "ngm=m/model.ckpt"], t.path());
    let rows = csv_rows(&t.path().join("e/eval.csv"));
    assert_eq!(&rows[0][5], "1.000000");
}

#[test]
fn eval_sweeps_noise_levels_without_checkpoints() {
    let t = TempDir::new().unwrap();
    let cfg = small_config(t.path(), "");
    ok(
        &["eval", "--config", cfg.to_str().unwrap(), "--out", "e", "--solvers", "sm", "--sigma-n", "0,0.05,0.1", "--outliers", "0,2"],
        t.path(),
    );
    let path = t.path().join("e/eval.csv");
    assert_eq!(csv_header(&path), ["source", "solver", "sigma_n", "outliers", "samples", "accuracy", "accuracy_std"]);
    let rows = csv_rows(&path);
    assert_eq!(rows.len(), 6);
    let levels: Vec<(&str, &str)> = rows.iter().map(|r| (&r[2], &r[3])).collect();
    assert_eq!(levels, [("0.0", "0"), ("0.0", "2"), ("0.05", "0"), ("0.05", "2"), ("0.1", "0"), ("0.1", "2")]);
    for r in &rows {
        let acc: f64 = r[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
        assert_eq!(&r[4], "6");
    }
    assert_eq!(&rows[0][5], "1.000000");
}

#[test]
fn qaplib_solve_needs_no_training() {
    let t = TempDir::new().unwrap();
    let dir = qaplib_fixtures();
    ok(&["qaplib", dir.to_str().unwrap(), "--out", "q", "--mode", "solve", "--solvers", "sm,rrwm", "--max-n", "12"], t.path());
    let path = t.path().join("q/qaplib_scores.csv");
    assert_eq!(csv_header(&path), ["instance", "category", "n", "solver", "objective", "bound", "rel_score"]);
    let rows = csv_rows(&path);
    assert_eq!(rows.len(), 2 * 5);
    for r in &rows {
        let obj: f64 = r[4].parse().unwrap();
        let bound: f64 = r[5].parse().unwrap();
        let rel: f64 = r[6].parse().unwrap();
        assert!((rel - (obj - bound) / obj).abs() < 1e-6);
    }
    assert!(!t.path().join("q/confusion.csv").exists());
    assert!(!t.path().join("q/model_gen.ckpt").exists());
}

#[test]
fn qaplib_train_emits_square_confusion_grid() {
    let t = TempDir::new().unwrap();
    let dir = qaplib_fixtures();
    ok(
        &["qaplib", dir.to_str().unwrap(), "--out", "q", "--mode", "train", "--solvers", "sm", "--max-n", "12", "--epochs", "2"],
        t.path(),
    );
    let grid = t.path().join("q/confusion.csv");
    assert_eq!(csv_header(&grid), ["test_category", "chr", "gen"]);
    let rows = csv_rows(&grid);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "chr");
    assert_eq!(&rows[1][0], "gen");
    assert!(rows.iter().all(|r| r.len() == 3));
    assert!(t.path().join("q/model_chr.ckpt").is_file());
    let scores = csv_rows(&t.path().join("q/qaplib_scores.csv"));
    assert_eq!(scores.iter().filter(|r| &r[3] == "ngm").count(), 5);
}

#[test]
fn qaplib_category_filter() {
    let t = TempDir::new().unwrap();
    let dir = qaplib_fixtures();
    ok(&["qaplib", dir.to_str().unwrap(), "--out", "q", "--solvers", "sm", "--category", "chr"], t.path());
    let rows = csv_rows(&t.path().join("q/qaplib_scores.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "chr12c");
    let out = qapnet(&["qaplib", dir.to_str().unwrap(), "--out", "q2", "--category", "tai"], t.path());
    assert!(!out.status.success());
}

#[test]
fn sync_requires_a_checkpoint_and_reports_each_graph_count() {
    let t = TempDir::new().unwrap();
    let cfg = small_config(t.path(), "");
    let c = cfg.to_str().unwrap();
    ok(&["synth", "--config", c, "--out", "d", "--graphs", "4"], t.path());
    let out = qapnet(&["sync", "d", "--config", c, "--out", "s", "--mode", "nmgm-t"], t.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--checkpoint"));

    ok(&["train", "d", "--config", c, "--out", "m", "--epochs", "3"], t.path());
    ok(&["sync", "d", "--config", c, "--out", "s", "--mode", "nmgm-t", "--checkpoint", "m/model.ckpt", "--graphs", "2,3,4"], t.path());
    let path = t.path().join("s/sync.csv");
    assert_eq!(csv_header(&path), ["mode", "graphs", "samples", "accuracy", "pairwise_accuracy", "fallbacks"]);
    let rows = csv_rows(&path);
    let ms: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    assert_eq!(ms, ["2", "3", "4"]);

    // pairwise accuracy at m = 2 is the NGM accuracy on graphs 0 and 1
    ok(&["eval", "d", "--config", c, "--out", "e", "--solvers", "ngm=m/model.ckpt"], t.path());
    let eval = csv_rows(&t.path().join("e/eval.csv"));
    assert_eq!(&rows[0][4], &eval[0][5]);

    let too_many = qapnet(&["sync", "d", "--out", "s2", "--checkpoint", "m/model.ckpt", "--graphs", "5"], t.path());
    assert!(!too_many.status.success());
}

#[test]
fn two_graph_sync_matches_pairwise_accuracy_within_noise() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("sync.toml");
    std::fs::write(
        &cfg,
        "seed = 5\n[data]\nnum_sets = 1\ntrain_per_set = 20\ntest_per_set = 20\ninliers = 8\nsigma2 = 5e-3\nsigma_n = 0.03\n[train]\nepochs = 15\nlr = 3e-3\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    ok(&["synth", "--config", c, "--out", "d", "--graphs", "2"], t.path());
    ok(&["train", "d", "--config", c, "--out", "m"], t.path());
    ok(&["sync", "d", "--config", c, "--out", "s", "--mode", "nmgm-t", "--checkpoint", "m/model.ckpt", "--graphs", "2"], t.path());
    let row = &csv_rows(&t.path().join("s/sync.csv"))[0];
    let synced: f64 = row[3].parse().unwrap();
    let pairwise: f64 = row[4].parse().unwrap();
    assert!(pairwise > 0.5, "model too weak for the comparison: {pairwise}");
    assert!((synced - pairwise).abs() <= 0.05, "{synced} vs {pairwise}");
}
