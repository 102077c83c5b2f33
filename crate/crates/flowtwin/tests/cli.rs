use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_flowtwin");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("FLOWTWIN_SEED").output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const SMALL: &str = r#"{"simulation":{"duration":200},
 "model":{"path_width":16,"link_width":16,"node_width":16,"readout_hidden":[16,16]},
 "training":{"epochs":2}}"#;

fn setup(dir: &Path) {
    std::fs::write(dir.join("small.json"), SMALL).unwrap();
    ok(dir, &["gen-topo", "--out", "t5.json", "--seed", "3"]);
    ok(dir, &["gen-dataset", "--topology", "t5.json", "--samples", "8", "--seed", "1", "--config", "small.json", "--out", "train"]);
    ok(dir, &["gen-dataset", "--topology", "t5.json", "--samples", "4", "--seed", "2", "--config", "small.json", "--out", "test"]);
}

#[test]
fn four_samples_one_per_tier() {
    let d = tempfile::tempdir().unwrap();
    setup(d.path());
    let text = std::fs::read_to_string(d.path().join("test/samples.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 4);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("test/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["tier_counts"], serde_json::json!([1, 1, 1, 1]));
}

#[test]
fn seed_environment_overrides_flag() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["gen-topo", "--out", "a.json", "--seed", "7"]);
    ok(p, &["gen-topo", "--out", "b.json", "--seed", "8"]);
    let out = Command::new(BIN)
        .args(["gen-topo", "--out", "c.json", "--seed", "8"])
        .current_dir(p)
        .env("FLOWTWIN_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    let read = |f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(read("a.json"), read("c.json"));
    assert_ne!(read("a.json"), read("b.json"));
    let bad = Command::new(BIN).args(["gen-topo", "--out", "d.json"]).current_dir(p).env("FLOWTWIN_SEED", "x").output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    for args in [
        vec!["train", "--bogus"],
        vec!["frobnicate"],
        vec![],
        vec!["predict", "--checkpoint", "none.json", "--dataset", ".", "--out", "x.csv"],
        vec!["score", "none.csv", "--truth", "."],
        vec!["gen-dataset", "--topology", "none.json", "--samples", "4", "--out", "x"],
        vec!["train", "--dataset", "nowhere", "--out", "ck.json"],
        vec!["train", "--dataset", ".", "--variant", "mesh", "--out", "ck.json"],
    ] {
        let out = run(p, &args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
    assert_eq!(code(&run(p, &["--help"])), 0);
}

#[test]
fn unknown_topology_field_fails() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    std::fs::write(p.join("t.json"), r#"{"nodes":["a","b"],"links":[],"colour":"red"}"#).unwrap();
    let out = run(p, &["simulate", "--topology", "t.json", "--out", "s.json"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn simulate_writes_record_and_trace() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(p, &["gen-topo", "--out", "t.json"]);
    std::fs::write(p.join("c.json"), r#"{"simulation":{"duration":20,"trace":true}}"#).unwrap();
    let stdout = ok(p, &["simulate", "--topology", "t.json", "--config", "c.json", "--seed", "4", "--out", "s.jsonl"]);
    assert!(stdout.contains("in_flight 0"), "{stdout}");
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("s.jsonl")).unwrap()).unwrap();
    assert_eq!(rec["labels"].as_array().unwrap().len(), 20);
    let trace = std::fs::read_to_string(p.join("s.jsonl.trace")).unwrap();
    let first = trace.lines().next().unwrap();
    assert_eq!(first.split(' ').count(), 6);
    assert!(first.contains(" create "));
}

#[test]
fn train_predict_score_rank() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    setup(p);
    let log = ok(p, &["train", "--dataset", "train", "--dataset", "test", "--variant", "baseline", "--config", "small.json", "--out", "ck.json"]);
    assert!(log.contains("loss_mape") && log.contains("val_mape"), "{log}");
    ok(p, &["predict", "--checkpoint", "ck.json", "--dataset", "test", "--out", "p1.csv"]);
    ok(p, &["predict", "--checkpoint", "ck.json", "--dataset", "test", "--out", "p2.csv"]);
    let p1 = std::fs::read_to_string(p.join("p1.csv")).unwrap();
    assert_eq!(p1, std::fs::read_to_string(p.join("p2.csv")).unwrap());
    assert_eq!(p1.lines().count(), 1 + 80);
    assert!(p1.starts_with("sample_id,src,dst,delay\n"));

    let score = ok(p, &["score", "p1.csv", "--truth", "test"]);
    assert!(score.starts_with("MAPE "), "{score}");

    let mismatched = run(p, &["score", "p1.csv", "--truth", "train"]);
    assert_eq!(code(&mismatched), 1);
    assert!(String::from_utf8_lossy(&mismatched.stderr).contains("malformed submission"));

    std::fs::write(p.join("junk.csv"), "nope\n").unwrap();
    let board = ok(p, &["rank", "first=p1.csv", "p2.csv", "junk.csv", "--truth", "test", "--out", "board.csv"]);
    assert!(board.contains("1,first,") && board.contains("1,p2,"), "{board}");
    assert!(board.contains("unranked junk"), "{board}");
    assert!(std::fs::read_to_string(p.join("board.csv")).unwrap().starts_with("rank,team,mape\n"));
}

#[test]
fn tampered_checkpoint_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    setup(p);
    ok(p, &["train", "--dataset", "train", "--config", "small.json", "--out", "ck.json"]);
    let text = std::fs::read_to_string(p.join("ck.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["header"]["variant"], "node-augmented");
    v["config"]["iterations"] = serde_json::json!(2);
    std::fs::write(p.join("bad.json"), v.to_string()).unwrap();
    let out = run(p, &["predict", "--checkpoint", "bad.json", "--dataset", "test", "--out", "x.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hash"));
}

#[test]
fn selfcheck_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["selfcheck"]);
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 7, "{out}");
}
