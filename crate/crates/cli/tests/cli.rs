use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gld_cli::run_from;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> i32 {
    run_from(std::iter::once("gld").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn bsc(dir: &Path) -> PathBuf {
    write(dir, "bsc.json", r#"{"matrix": [[0.9, 0.1], [0.1, 0.9]]}"#)
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    std::iter::once(header)
        .chain(r.records().map(|x| x.unwrap().iter().map(String::from).collect()))
        .collect()
}

#[test]
fn zchannel_figure_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.csv");
    let args = ["zchannel", "--w", "0.9", "--rates", "0.01:0.69:0.02", "--grid", "16", "--out", p(&out)];
    assert_eq!(run(&args), 0);
    let first = fs::read(&out).unwrap();
    let table = rows(&out);
    assert_eq!(table[0], ["rate", "e_gld", "e_ckm", "e_rc"]);
    assert_eq!(table.len(), 36);
    assert_eq!(table[1][0], "0.01");
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("MANIFEST.json")).unwrap()).unwrap();
    assert_eq!(manifest["verb"], "zchannel");
    assert_eq!(manifest["grid"], 16);
    assert_eq!(manifest["rates"].as_array().unwrap().len(), 35);
    assert_eq!(run(&args), 0);
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn malformed_channel_exits_2_naming_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"matrix": [[0.9, 0.1], [0.5, 0.4]]}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_gld"))
        .args(["rce", "--channel", p(&bad), "--rates", "0.1", "--out"])
        .arg(dir.path().join("x.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("row 1"), "{err}");
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn unknown_verb_prints_usage_and_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_gld")).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Usage"));
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn rce_writes_witnesses_and_full_precision_json() {
    let dir = tempfile::tempdir().unwrap();
    let ch = bsc(dir.path());
    let out = dir.path().join("rce.csv");
    assert_eq!(run(&["rce", "--channel", p(&ch), "--rates", "0.05:0.15:0.05", "--grid", "16", "--json", "--out", p(&out)]), 0);
    let table = rows(&out);
    assert_eq!(table[0], ["rate", "exponent", "witness_q", "witness_qprime"]);
    assert_eq!(table.len(), 4);
    assert_eq!(table[1][2].split(';').count(), 4);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("rce.json")).unwrap()).unwrap();
    let e: f64 = table[2][1].parse().unwrap();
    assert_eq!(json["points"][1]["exponent"].as_f64().unwrap(), e);

    let bits = dir.path().join("bits.csv");
    assert_eq!(run(&["rce", "--channel", p(&ch), "--rates", "0.05:0.15:0.05", "--grid", "16", "--bits", "--out", p(&bits)]), 0);
    let b: f64 = rows(&bits)[2][1].parse().unwrap();
    assert!((b - e / std::f64::consts::LN_2).abs() < 1e-15);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("MANIFEST.json")).unwrap()).unwrap();
    assert_eq!(manifest["units"], "bits");
    assert!(manifest["notes"]["critical_rate"]["r0"].as_f64().unwrap() > 0.0);
}

#[test]
fn metric_files_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let ch = bsc(dir.path());
    let out = dir.path().join("m.csv");
    let mmi = write(dir.path(), "mmi.json", r#"{"kind": "mmi", "beta": 1.0}"#);
    assert_eq!(run(&["rce", "--channel", p(&ch), "--metric", p(&mmi), "--rates", "0.1", "--grid", "8", "--out", p(&out)]), 0);
    let unknown = write(dir.path(), "u.json", r#"{"kind": "fancy"}"#);
    assert_eq!(run(&["rce", "--channel", p(&ch), "--metric", p(&unknown), "--rates", "0.1", "--out", p(&out)]), 2);
    let missing = write(dir.path(), "mm.json", r#"{"kind": "mismatched", "beta": 1.0}"#);
    assert_eq!(run(&["rce", "--channel", p(&ch), "--metric", p(&missing), "--rates", "0.1", "--out", p(&out)]), 2);
    assert_eq!(run(&["rce", "--channel", p(&ch), "--rates", "0.3:0.1:0.1", "--out", p(&out)]), 2);
    assert_eq!(run(&["rce", "--channel", "/nonexistent.json", "--rates", "0.1", "--out", p(&out)]), 2);
}

#[test]
fn expurgated_with_ckm_baseline_and_zchannel_shortcut() {
    let dir = tempfile::tempdir().unwrap();
    let ch = bsc(dir.path());
    let out = dir.path().join("ex.csv");
    assert_eq!(run(&["expurgated", "--channel", p(&ch), "--rates", "0.05,0.1", "--grid", "8", "--baseline", "ckm", "--out", p(&out)]), 0);
    let table = rows(&out);
    assert_eq!(table[0], ["rate", "exponent", "ckm"]);
    for row in &table[1..] {
        let (e, ckm): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!(e >= ckm - 1e-9, "{row:?}");
    }
    let z = dir.path().join("z.csv");
    assert_eq!(run(&["expurgated", "--zchannel", "0.9", "--rates", "0.1,0.6", "--grid", "16", "--out", p(&z)]), 0);
    assert_eq!(rows(&z)[0], ["rate", "e_gld", "e_ckm", "e_rc"]);
    assert_eq!(run(&["expurgated", "--rates", "0.1", "--out", p(&z)]), 2);
}

#[test]
fn jsc_emits_both_terms() {
    let dir = tempfile::tempdir().unwrap();
    let ch = bsc(dir.path());
    let src = write(dir.path(), "src.json", r#"{"table": [[0.45, 0.05], [0.05, 0.45]]}"#);
    let out = dir.path().join("jsc.csv");
    assert_eq!(run(&["jsc", "--source", p(&src), "--channel", p(&ch), "--rates", "0:1:0.25", "--grid", "4", "--out", p(&out)]), 0);
    let table = rows(&out);
    assert_eq!(table[0], ["rate", "e2", "e5", "e"]);
    assert_eq!(table[1][1], "0");
    for row in &table[1..] {
        let v: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[3], v[1].min(v[2]));
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("MANIFEST.json")).unwrap()).unwrap();
    assert!(manifest["notes"]["saturation_rate"].as_f64().is_some());
}

#[test]
fn simulate_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let ch = bsc(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path, threads: &'static str| {
        vec!["simulate".to_string(), "--channel".into(), p(&ch).into(), "--n".into(), "8,16".into(),
             "--rate".into(), "0.1".into(), "--trials".into(), "20000".into(), "--seed".into(), "42".into(),
             "--threads".into(), threads.into(), "--out".into(), p(out).into()]
    };
    assert_eq!(run_from(std::iter::once("gld".to_string()).chain(args(&a, "1"))), 0);
    assert_eq!(run_from(std::iter::once("gld".to_string()).chain(args(&b, "3"))), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let table = rows(&a);
    assert_eq!(table[0], ["n", "rate", "trials", "errors", "p_hat", "stderr", "emp_exponent"]);
    assert_eq!(table.len(), 3);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("MANIFEST.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
}

#[test]
fn oracle_matches_the_library_and_guards_size() {
    let dir = tempfile::tempdir().unwrap();
    let ch = bsc(dir.path());
    let out = dir.path().join("o.csv");
    let rate = format!("{}", (2f64).ln() / 4.0);
    assert_eq!(run(&["oracle", "--channel", p(&ch), "--n", "4", "--rate", &rate, "--out", p(&out)]), 0);
    let table = rows(&out);
    assert_eq!(table[0], ["n", "rate", "codebook_size", "p_exact"]);
    assert_eq!(table[1][2], "2");
    let w = gld_core::Channel::bsc(0.1).unwrap();
    let expect = gld_core::simulator::exact_ensemble_error(
        &gld_core::Distribution::uniform(2).unwrap(),
        4,
        2,
        &w,
        &gld_core::DecoderMetric::matched(&w, 1.0).unwrap(),
    )
    .unwrap();
    assert_eq!(table[1][3].parse::<f64>().unwrap(), expect);
    assert_eq!(run(&["oracle", "--channel", p(&ch), "--n", "12", "--rate", "0.1", "--out", p(&out)]), 3);
}

#[test]
fn invalid_thread_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ch = bsc(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_gld"))
        .env("GLD_THREADS", "many")
        .args(["rce", "--channel", p(&ch), "--rates", "0.1", "--grid", "8", "--out"])
        .arg(dir.path().join("t.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let ok = Command::new(env!("CARGO_BIN_EXE_gld"))
        .env("GLD_THREADS", "2")
        .args(["rce", "--channel", p(&ch), "--rates", "0.1", "--grid", "8", "--out"])
        .arg(dir.path().join("t.csv"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}
