use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ladnas(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ladnas"))
        .current_dir(dir)
        .env_remove("LADNAS_SEED")
        .args(args)
        .output()
        .expect("spawn ladnas")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ladnas(dir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = ladnas(dir, args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

fn collect(dir: &Path, out: &str, n: &str, seed: &str) {
    ok(dir, &["collect", "--oracle", "synthetic", "--n", n, "--repeats", "20", "--seed", seed, "--out", out]);
}

fn tiny_model(dir: &Path) -> PathBuf {
    collect(dir, "ds.jsonl", "300", "1");
    ok(dir, &["train-lpm", "--data", "ds.jsonl", "--epochs", "3", "--batch", "50", "--seed", "1", "--out", "lpm.json"]);
    dir.join("lpm.json")
}

#[test]
fn space_count() {
    let dir = TempDir::new().unwrap();
    assert_eq!(ok(dir.path(), &["space", "--count"]).trim(), "1037664180");
    assert_eq!(ok(dir.path(), &["space", "--count", "--nodes", "2", "--ops", "2"]).trim(), "48");
}

#[test]
fn decode_encode_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut bits = vec!['0'; 112];
    for i in [1, 12, 20, 38, 42, 49, 93, 107] {
        bits[i] = '1';
    }
    let bits: String = bits.into_iter().collect();
    let json = ok(dir.path(), &["decode", "--bits", &bits]);
    std::fs::write(dir.path().join("arch.json"), &json).unwrap();
    assert_eq!(ok(dir.path(), &["encode", "--arch", "arch.json"]).trim(), bits);

    let (c, err) = code(dir.path(), &["decode", "--bits", &bits[..111]]);
    assert_eq!(c, 1);
    assert!(err.contains("expected 112 bits, found 111"), "{err}");
    let (c, err) = code(dir.path(), &["decode", "--bits", &"0".repeat(112)]);
    assert_eq!(c, 1);
    assert!(err.contains("expected 8 set bits, found 0"), "{err}");
}

#[test]
fn collect_writes_header_and_records_deterministically() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    collect(d, "a.jsonl", "100", "7");
    collect(d, "b.jsonl", "100", "7");
    let a = read(d, "a.jsonl");
    assert_eq!(a, read(d, "b.jsonl"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.lines().next().unwrap().contains("\"meta\""));
    assert!(d.join("a.jsonl.manifest.json").exists());

    assert_eq!(code(d, &["collect", "--oracle", "synthetic", "--n", "0", "--out", "c.jsonl"]).0, 2);
    assert_eq!(code(d, &["collect", "--oracle", "quantum", "--n", "3", "--out", "c.jsonl"]).0, 2);
    assert_eq!(code(d, &["collect", "--oracle", "external", "--n", "3", "--out", "c.jsonl"]).0, 2);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let run = |out: &str| {
        let st = Command::new(env!("CARGO_BIN_EXE_ladnas"))
            .current_dir(d)
            .env("LADNAS_SEED", "7")
            .args(["collect", "--oracle", "synthetic", "--n", "20", "--out", out])
            .status()
            .unwrap();
        assert!(st.success());
    };
    run("env.jsonl");
    collect(d, "flag.jsonl", "20", "7");
    assert_eq!(read(d, "env.jsonl"), read(d, "flag.jsonl"));
}

#[test]
fn external_oracle_failures_exit_one() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let (c, err) = code(
        d,
        &["collect", "--oracle", "external", "--adapter", "exit 3", "--n", "5", "--max-failures", "2", "--out", "x.jsonl"],
    );
    assert_eq!(c, 1, "{err}");
    assert!(d.join("x.jsonl").exists());

    let adapter = format!("{} adapter --constant 10", env!("CARGO_BIN_EXE_ladnas"));
    ok(d, &["collect", "--oracle", "external", "--adapter", &adapter, "--n", "4", "--out", "y.jsonl"]);
    let text = String::from_utf8(read(d, "y.jsonl")).unwrap();
    assert_eq!(text.lines().skip(1).filter(|l| l.contains("\"latency_ms\":10.0")).count(), 4);
}

#[test]
fn train_and_eval_lpm() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    collect(d, "ds.jsonl", "300", "1");
    let line = ok(d, &["train-lpm", "--data", "ds.jsonl", "--epochs", "1", "--batch", "50", "--seed", "2", "--out", "m.json"]);
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert!(v["final_train_mse"].is_number());
    assert!(v["eval"]["kendall_tau"].is_number());
    assert_eq!(v["eval"]["n_test"], 60);

    let report = ok(d, &["eval-lpm", "--model", "m.json", "--data", "ds.jsonl", "--pairs", "100", "--seed", "3"]);
    let v: serde_json::Value = serde_json::from_str(report.trim()).unwrap();
    let tau = v["kendall_tau"].as_f64().unwrap();
    if v["ties"] == 0 {
        assert_eq!(v["concordant_fraction"].as_f64().unwrap(), (tau + 1.0) / 2.0);
    }

    assert_eq!(code(d, &["train-lpm", "--data", "ds.jsonl", "--split", "1.0", "--out", "z.json"]).0, 2);
    assert_eq!(code(d, &["train-lpm", "--data", "missing.jsonl", "--out", "z.json"]).0, 1);
    std::fs::write(d.join("bad.jsonl"), "{not json\n").unwrap();
    assert_eq!(code(d, &["train-lpm", "--data", "bad.jsonl", "--out", "z.json"]).0, 1);
    assert_eq!(code(d, &["eval-lpm", "--model", "m.json", "--data", "ds.jsonl", "--pairs", "1"]).0, 2);
    assert_eq!(code(d, &["eval-lpm", "--data", "ds.jsonl"]).0, 2);
}

#[test]
fn identity_adapter_gives_perfect_ranking() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    collect(d, "ds.jsonl", "60", "4");
    let adapter = format!("{} adapter --oracle synthetic", env!("CARGO_BIN_EXE_ladnas"));
    let report = ok(d, &["eval-lpm", "--adapter", &adapter, "--data", "ds.jsonl", "--pairs", "60"]);
    let v: serde_json::Value = serde_json::from_str(report.trim()).unwrap();
    assert_eq!(v["mean_absolute_error_ms"], 0.0);
    let tau = v["kendall_tau"].as_f64().unwrap();
    let ties = v["ties"].as_f64().unwrap();
    assert!((tau + ties / 1770.0 - 1.0).abs() < 1e-12, "{v}");
}

#[test]
fn search_modes_and_usage_errors() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    tiny_model(d);
    let base = ["search", "--lpm", "lpm.json", "--epochs", "1", "--seed", "3", "--task-seed", "4"];
    let run = |extra: &[&str], out: &str, hist: &str| {
        let mut args: Vec<&str> = base.to_vec();
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", out, "--history", hist]);
        ok(d, &args)
    };
    let line = run(&["--lambda", "0.2"], "a.json", "a.csv");
    assert!(line.contains("final probe latency"), "{line}");
    run(&["--lambda", "0.2"], "b.json", "b.csv");
    assert_eq!(read(d, "a.json"), read(d, "b.json"));
    assert_eq!(read(d, "a.csv"), read(d, "b.csv"));

    run(&["--lambda", "0"], "l0.json", "l0.csv");
    ok(
        d,
        &["search", "--eta", "0", "--epochs", "1", "--seed", "3", "--task-seed", "4", "--out", "e0.json", "--history", "e0.csv"],
    );
    let strip = |name: &str| {
        let v: serde_json::Value = serde_json::from_slice(&read(d, name)).unwrap();
        (v["bits"].clone(), v["edges"].clone())
    };
    assert_eq!(strip("l0.json"), strip("e0.json"));

    let (c, err) = code(d, &["search", "--lpm", "lpm.json", "--lambda", "0.2", "--eta", "0.1", "--out", "x", "--history", "y"]);
    assert_eq!(c, 2, "{err}");
    assert_eq!(code(d, &["search", "--lpm", "nope.json", "--out", "x", "--history", "y"]).0, 1);
    assert_eq!(code(d, &["search", "--lpm", "lpm.json", "--m", "0", "--out", "x", "--history", "y"]).0, 2);
}

#[test]
fn report_aggregates_histories() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    tiny_model(d);
    std::fs::create_dir(d.join("runs")).unwrap();
    for lam in ["0.2", "0", "0.1"] {
        let hist = format!("runs/h{lam}.csv");
        let out = format!("a{lam}.json");
        ok(
            d,
            &["search", "--lpm", "lpm.json", "--lambda", lam, "--epochs", "1", "--out", &out, "--history", &hist],
        );
    }
    let table = ok(d, &["report", "--history", "runs", "--out", "rep"]);
    assert_eq!(table.lines().count(), 4, "{table}");
    let summary = String::from_utf8(read(d, "rep/summary.csv")).unwrap();
    let lambdas: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(lambdas, ["0", "0.1", "0.2"]);
    let curves = String::from_utf8(read(d, "rep/curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 4);

    let single = ok(d, &["report", "--history", "runs/h0.csv", "--out", "rep1"]);
    assert_eq!(single.lines().count(), 2);

    std::fs::create_dir(d.join("empty")).unwrap();
    assert_eq!(code(d, &["report", "--history", "empty", "--out", "r"]).0, 2);
    std::fs::write(
        d.join("bad.csv"),
        "epoch,train_loss,val_loss,lat_ms,total_loss,probe_latency_ms\n1,0.1,0.2,3,4\n",
    )
    .unwrap();
    let (c, err) = code(d, &["report", "--history", "bad.csv", "--out", "r"]);
    assert_eq!(c, 1);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(dir.path(), &["frobnicate"]).0, 2);
    assert_eq!(code(dir.path(), &["space"]).0, 2);
    assert_eq!(code(dir.path(), &["collect", "--n", "3"]).0, 2);
    assert_eq!(code(dir.path(), &["--help"]).0, 0);
}
