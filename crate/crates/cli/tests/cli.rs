// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::Command;

use graphrecov::graph::write_edge_list;
use graphrecov::synthetic::{community_graph, CommunityGraph};

const WALK: [&str; 8] = [
    "--walk-length",
    "10",
    "--walk-times",
    "4",
    "--window",
    "3",
    "--dimension",
    "16",
];

fn run(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_graphrecov"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_graph(dir: &Path) -> PathBuf {
    let g = community_graph(
        &CommunityGraph {
            nodes: 120,
            communities: 4,
            mean_degree: 10.0,
            ..CommunityGraph::default()
        },
        3,
    );
    let path = dir.join("g.edges");
    write_edge_list(&g, &path).unwrap();
    path
}

/// The staged commands, run into `dir`.
fn stages(g: &Path, dir: &Path) {
    let f = |name: &str| dir.join(name);
    run(&[
        "anonymize", "--mechanism", "kda", "--k", "5", "--seed", "1", "--in", p(g),
        "--out", p(&f("ga.edges")), "--meta", p(&f("ga.json")),
    ]);
    let (ga_edges, ga_bin) = (f("ga.edges"), f("ga.bin"));
    let mut embed = vec!["embed", "--in", p(&ga_edges), "--out", p(&ga_bin), "--seed", "1", "--deterministic"];
    embed.extend(WALK);
    run(&embed);
    run(&[
        "score", "--in", p(&f("ga.edges")), "--embedding", p(&f("ga.bin")), "--out",
        p(&f("scores.csv")),
    ]);
    run(&["fit-gmm", "--scores", p(&f("scores.csv")), "--out", p(&f("gmm.json"))]);
    run(&[
        "recover", "--in", p(&f("ga.edges")), "--scores", p(&f("scores.csv")), "--params",
        p(&f("gmm.json")), "--out", p(&f("gr.edges")), "--posteriors", p(&f("post.csv")),
    ]);
    run(&[
        "eval", "--original", p(g), "--anonymized", p(&f("ga.edges")), "--scores",
        p(&f("scores.csv")), "--recovered", p(&f("gr.edges")), "--out", p(&f("eval.json")),
        "--roc", p(&f("roc.csv")), "--histogram", p(&f("hist.csv")),
    ]);
}

#[test]
fn staged_pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        std::fs::create_dir(d).unwrap();
        stages(&g, d);
    }
    for name in [
        "ga.edges", "ga.json", "ga.bin", "scores.csv", "gmm.json", "gr.edges", "post.csv",
        "eval.json", "roc.csv", "hist.csv",
    ] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name} differs");
    }

    let scores = std::fs::read_to_string(a.join("scores.csv")).unwrap();
    assert!(scores.starts_with("u,v,score,metric\n"));
    let eval: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("eval.json")).unwrap()).unwrap();
    let auc = eval["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc), "{eval}");
    let gmm: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("gmm.json")).unwrap()).unwrap();
    for key in ["w0", "mu0", "sigma0", "w1", "mu1", "sigma1"] {
        assert!(gmm[key].is_number(), "{key} missing from {gmm}");
    }
}

#[test]
fn structural_metric_needs_no_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let out = dir.path().join("jac.csv");
    run(&["score", "--in", p(&g), "--metric", "jaccard", "--out", p(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",jaccard")));
}

#[test]
fn enhanced_anonymization_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let f = |name: &str| dir.path().join(name);
    let emb = f("g.bin");
    let mut embed = vec!["embed", "--in", p(&g), "--out", p(&emb), "--deterministic"];
    embed.extend(WALK);
    run(&embed);
    run(&["enhance", "--in", p(&g), "--embedding", p(&emb), "--out", p(&f("prior.json"))]);
    run(&[
        "anonymize", "--mechanism", "kda", "--k", "5", "--in", p(&g), "--out",
        p(&f("gf.edges")), "--meta", p(&f("gf.json")), "--enhanced", "--embedding", p(&emb),
        "--prior", p(&f("prior.json")),
    ]);
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(f("gf.json")).unwrap()).unwrap();
    assert_eq!(meta["enhanced"], serde_json::Value::Bool(true));
}

#[test]
fn attack_writes_report_and_timings() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let out = dir.path().join("run");
    let mut args = vec![
        "attack", "--in", p(&g), "--mechanism", "saladp", "--epsilon", "10", "--samples", "2",
        "--out-dir", p(&out), "--deterministic", "--enhanced",
    ];
    args.extend(WALK);
    run(&args);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["auc"]["cosine"].is_number(), "{report}");
    assert_eq!(report["privacy"]["samples"], 2);
    assert!(report["enhanced"]["auc"].is_number());
    assert!(report.get("timings").is_none());
    assert!(out.join("timings.json").exists());
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let g = small_graph(dir.path());
    let out = dir.path().join("sweep.csv");
    run(&[
        "sweep", "--in", p(&g), "--mechanism", "kda", "--k", "5", "--l", "5,10", "--t", "3",
        "--d", "8", "--window", "3", "--deterministic", "--out", p(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.starts_with("l,t,d,auc"));
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_graphrecov"))
        .args(["anonymize", "--mechanism", "kda", "--in", "x", "--out", "y"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--k"));
}
