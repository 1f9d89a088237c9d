use std::path::Path;
use std::process::{Command, Output};

use dmgd::cli::{parse_config, run, CommandName, RunConfig};
use dmgd::graph::load_edge_list;

fn dmgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmgd"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = dmgd(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FAST: &[&str] = &["--pretrain-epochs", "5", "--t-outer", "2", "--gamma", "1", "--m", "4"];

#[test]
fn generate_then_train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["generate", "--out", s(&data), "--sizes", "20,20", "--p-intra", "0.4", "--p-inter", "0.05"]);
    for f in ["graph.txt", "labels.txt", "config.ini"] {
        assert!(data.join(f).exists(), "{f}");
    }
    assert_eq!(load_edge_list(&data.join("graph.txt")).unwrap().graph.n_nodes(), 40);

    let seeded = dir.path().join("seeded");
    let graph = data.join("graph.txt");
    let before = std::fs::read(&graph).unwrap();
    ok(&["seed", "--graph", s(&graph), "--labels", s(&data.join("labels.txt")), "--out", s(&seeded), "--outlier-fraction", "0.1"]);
    assert_eq!(std::fs::read(&graph).unwrap(), before, "input graph was modified");
    let flags = std::fs::read_to_string(seeded.join("outliers.txt")).unwrap();
    assert_eq!(flags.lines().count(), 4);

    let ckpt = dir.path().join("ckpt");
    let seeded_graph = seeded.join("graph.txt");
    let mut args = vec!["train", "--graph", s(&seeded_graph), "--out", s(&ckpt), "--k", "2"];
    args.extend_from_slice(FAST);
    ok(&args);
    for f in ["model.txt", "spheres.txt", "embeddings.csv", "outliers.csv", "communities.csv", "loss_trace.csv", "config.ini"] {
        assert!(ckpt.join(f).exists(), "{f}");
    }

    let report = dir.path().join("report");
    ok(&[
        "eval", "--checkpoint", s(&ckpt), "--labels", s(&seeded.join("labels.txt")), "--flags",
        s(&seeded.join("outliers.txt")), "--out", s(&report), "--recall-l-list", "0.1,0.25", "--train-frac-list", "0.5",
    ]);
    let metrics = std::fs::read_to_string(report.join("metrics.txt")).unwrap();
    for key in ["recall@0.1=", "recall@0.25=", "clustering_accuracy=", "macro_f1@0.5=", "micro_f1@0.5="] {
        assert!(metrics.contains(key), "{key} missing from\n{metrics}");
    }
    assert!(std::fs::read_to_string(report.join("metrics.csv")).unwrap().starts_with("metric,setting,value\n"));
}

#[test]
fn train_without_graph_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dmgd(&["train", "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--graph"));
}

#[test]
fn bad_config_reports_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, "[train]\nlearning_rate = 0.1\n").unwrap();
    let out = dmgd(&["train", "--config", s(&cfg)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("train.learning_rate") && err.contains("train.lr"), "{err}");

    let out = dmgd(&["train", "--beta", "heavy"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("train.beta"));
}

#[test]
fn nu_resolves_alpha() {
    let cfg = parse_config(["dmgd", "train", "--nu", "0.05", "--k", "3"]).unwrap();
    assert!((cfg.train.alpha.resolve(cfg.train.k, 600).unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn snapshot_reproduces_training() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["generate", "--out", s(&data), "--sizes", "15,15", "--p-intra", "0.5"]);
    let graph = data.join("graph.txt");
    let first = dir.path().join("first");
    let mut args = vec!["train", "--graph", s(&graph), "--out", s(&first), "--k", "2", "--seed-model", "9"];
    args.extend_from_slice(FAST);
    ok(&args);
    let second = dir.path().join("second");
    ok(&["train", "--config", s(&first.join("config.ini")), "--out", s(&second)]);
    let third = dir.path().join("third");
    ok(&args.iter().map(|a| if *a == s(&first) { s(&third) } else { a }).collect::<Vec<_>>());
    let emb = |d: &Path| std::fs::read(d.join("embeddings.csv")).unwrap();
    assert_eq!(emb(&first), emb(&second));
    assert_eq!(emb(&first), emb(&third));
}

#[test]
fn pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut cfg = RunConfig::new(CommandName::Pipeline);
    cfg.set("paths", "out", s(&out)).unwrap();
    for (k, v) in [("pretrain_epochs", "5"), ("t_outer", "2"), ("gamma", "1")] {
        cfg.set("train", k, v).unwrap();
    }
    run(&cfg).unwrap();
    for f in ["graph.txt", "labels.txt", "outliers.txt", "metrics.txt", "metrics.csv", "config.ini"] {
        assert!(out.join(f).exists(), "{f}");
    }
    for f in ["embeddings.csv", "outliers.csv", "communities.csv", "loss_trace.csv", "model.txt", "spheres.txt"] {
        assert!(out.join("checkpoint").join(f).exists(), "{f}");
    }
    let outliers = std::fs::read_to_string(out.join("checkpoint/outliers.csv")).unwrap();
    assert!(outliers.starts_with("node_id,lambda,xi,category\n"));
    assert_eq!(outliers.lines().count(), 151);
}

/// A 5-class planted partition with 877 nodes and about 2.9k edges, written
/// to disk and driven through train and eval.
#[test]
fn eval_at_medium_scale() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    // Expected edges: 5 * C(175.4, 2) * p_in + C(5, 2) * 175.4^2 * p_out ~ 2900.
    ok(&["generate", "--out", s(&data), "--sizes", "176,176,175,175,175", "--p-intra", "0.03", "--p-inter", "0.0015"]);
    let g = load_edge_list(&data.join("graph.txt")).unwrap().graph;
    assert_eq!(g.n_nodes(), 877);
    assert!((2500..3300).contains(&g.n_edges()), "{} edges", g.n_edges());
    let ckpt = dir.path().join("ckpt");
    let start = std::time::Instant::now();
    ok(&[
        "train", "--graph", s(&data.join("graph.txt")), "--out", s(&ckpt), "--k", "5", "--pretrain-epochs", "10",
        "--t-outer", "2", "--gamma", "1",
    ]);
    ok(&["eval", "--checkpoint", s(&ckpt), "--labels", s(&data.join("labels.txt"))]);
    assert!(start.elapsed() < std::time::Duration::from_secs(300));
    let metrics = std::fs::read_to_string(ckpt.join("metrics.txt")).unwrap();
    assert!(metrics.contains("clustering_accuracy=") && !metrics.contains("recall@"));
}
