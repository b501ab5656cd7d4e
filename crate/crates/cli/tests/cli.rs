use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fcmmsb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcmmsb"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = fcmmsb(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, "n_groups = 2\nn_iters = 40\nseeds = [0, 1]\n").unwrap();
    path
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["generate", "--benchmark", "synthetic-3x2", "--seed", "4", "--out", s(&a)]);
    ok(&["generate", "--benchmark", "synthetic-3x2", "--seed", "4", "--out", s(&b)]);
    for f in ["edges.txt", "truth.json", "latents.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    ok(&["generate", "--entities", "6", "--slices", "2", "--out", s(&dir.path().join("prior"))]);
}

#[test]
fn fit_resume_predict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    ok(&["generate", "--entities", "8", "--slices", "2", "--seed", "1", "--out", s(&data)]);
    let edges = data.join("edges.txt");
    let config = small_config(d);
    let full = d.join("full");
    ok(&["fit", "--data", s(&edges), "--config", s(&config), "--out", s(&full)]);
    let part = d.join("part");
    ok(&["fit", "--data", s(&edges), "--config", s(&config), "--stop-after", "13", "--out", s(&part)]);
    let resumed = d.join("resumed");
    ok(&["fit", "--resume", s(&part.join("checkpoint.json")), "--out", s(&resumed)]);
    for f in ["checkpoint.json", "trace.jsonl", "summary.json"] {
        assert_eq!(fs::read(full.join(f)).unwrap(), fs::read(resumed.join(f)).unwrap(), "{f}");
    }
    let effective = fs::read_to_string(full.join("config.toml")).unwrap();
    assert!(effective.contains("n_iters = 40"));

    let pairs = d.join("pairs.txt");
    fs::write(&pairs, "0 1 2\n1 3 0\n").unwrap();
    let out = ok(&[
        "predict",
        "--checkpoint",
        s(&full.join("checkpoint.json")),
        "--pairs",
        s(&pairs),
        "--entities",
        s(&full.join("entities.txt")),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "t\ti\tj\tprobability");
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let p: f64 = row.split('\t').nth(3).unwrap().parse().unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
}

#[test]
fn multiple_chains_write_separate_directories() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    ok(&["generate", "--entities", "6", "--slices", "2", "--out", s(&data)]);
    let out = d.join("fit");
    let config = small_config(d);
    ok(&["fit", "--data", s(&data.join("edges.txt")), "--config", s(&config), "--chains", "2", "--out", s(&out)]);
    let a = fs::read(out.join("chain-0/summary.json")).unwrap();
    let b = fs::read(out.join("chain-1/summary.json")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn evaluate_writes_tables_with_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    ok(&["generate", "--entities", "10", "--slices", "2", "--seed", "2", "--out", s(&data)]);
    let out = d.join("eval");
    let stdout = ok(&[
        "evaluate",
        "--data",
        s(&data.join("edges.txt")),
        "--truth",
        s(&data.join("truth.json")),
        "--config",
        s(&small_config(d)),
        "--out",
        s(&out),
    ])
    .stdout;
    let summary = fs::read_to_string(out.join("summary.tsv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("# ") && l.contains("n_iters")));
    assert!(summary.contains(" ± "));
    assert!(fs::read_to_string(out.join("seeds.tsv")).unwrap().lines().count() > 3);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["report"]["results"].as_array().unwrap().len() >= 2);
    assert!(!stdout.is_empty());
}

#[test]
fn prior_oracle_sums_to_one() {
    let out = ok(&["enumerate-oracle", "prior", "--entities", "3", "--slices", "2", "--zeta", "0.7"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let chains = v["chains"].as_array().unwrap();
    let total: f64 = chains.iter().map(|c| c["probability"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn posterior_oracle_runs_on_a_tiny_network() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    fs::write(&edges, "0 0 1\n1 1 0\n").unwrap();
    let config = dir.path().join("k1.toml");
    fs::write(&config, "n_groups = 1\n").unwrap();
    let out = ok(&["enumerate-oracle", "posterior", "--data", s(&edges), "--directed", "true", "--config", s(&config)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let total: f64 = v["coarse_chains"].as_array().unwrap().iter().map(|c| c["probability"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(v["predictive"].as_array().unwrap().len(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad = d.join("bad.toml");
    fs::write(&bad, "n_group = 2\n").unwrap();
    let edges = d.join("edges.txt");
    fs::write(&edges, "0 0 1\n").unwrap();
    let out = fcmmsb(&["fit", "--data", s(&edges), "--config", s(&bad), "--out", s(&d.join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = fcmmsb(&["fit", "--data", s(&d.join("missing.txt")), "--out", s(&d.join("o"))]);
    assert_eq!(out.status.code(), Some(3));
    let out = fcmmsb(&["enumerate-oracle", "prior", "--entities", "9", "--slices", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
