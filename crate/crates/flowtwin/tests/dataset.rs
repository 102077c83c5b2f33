use std::path::Path;

use flowtwin::config::SimOptions;
use flowtwin::dataset::*;
use flowtwin::topo_io::TopologyFile;
use flowtwin_core::{make_synthetic_topology, Tier, TopologyKind};

fn topo(n: usize, seed: u64) -> TopologyFile {
    let t = make_synthetic_topology(TopologyKind::RandomConnected, n, (4000.0, 16000.0), seed).unwrap();
    TopologyFile::from_topology(&t, None)
}

fn gen(dir: &Path, n: u64, seed: u64) -> Manifest {
    let sim = SimOptions { duration: Some(200.0), ..Default::default() }.resolve(0).unwrap();
    generate_dataset(dir, "train", &[("t5".into(), topo(5, 1))], n, seed, &sim).unwrap()
}

#[test]
fn four_samples_cover_each_tier_once() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), 4, 1);
    assert_eq!(m.tier_counts, [1, 1, 1, 1]);
    assert_eq!(m.tier_proportions, [0.25; 4]);
    let tiers: Vec<Tier> = read_samples(dir.path(), true).unwrap().iter().map(|s| s.tier()).collect();
    assert_eq!(tiers, Tier::ALL);
    assert!(!dir.path().join(PARTIAL_MARKER).exists());
}

#[test]
fn remainder_goes_to_lowest_tiers() {
    assert_eq!(Tier::counts(6), [2, 2, 1, 1]);
    assert!(generate_dataset(
        tempfile::tempdir().unwrap().path(),
        "x",
        &[("t".into(), topo(4, 1))],
        3,
        1,
        &flowtwin_core::SimConfig::new(10.0, 0)
    )
    .is_err());
}

#[test]
fn generation_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen(a.path(), 8, 5);
    gen(b.path(), 8, 5);
    for f in [MANIFEST_FILE, SAMPLES_FILE] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn round_trip_preserves_samples() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen(dir.path(), 8, 2);
    let samples = read_samples(dir.path(), true).unwrap();
    let again = tempfile::tempdir().unwrap();
    write_dataset(again.path(), &m, &samples).unwrap();
    assert_eq!(read_samples(again.path(), true).unwrap(), samples);
    assert_eq!(
        std::fs::read(dir.path().join(SAMPLES_FILE)).unwrap(),
        std::fs::read(again.path().join(SAMPLES_FILE)).unwrap()
    );
    let unlabeled = read_samples(dir.path(), false).unwrap();
    assert!(unlabeled.iter().all(|s| s.labels.is_none()));
}

#[test]
fn every_five_node_sample_has_twenty_consistent_labels() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 200, 3);
    let samples = read_samples(dir.path(), true).unwrap();
    assert_eq!(samples.len(), 200);
    for s in &samples {
        let labels = s.labels.as_ref().unwrap();
        assert_eq!(labels.len(), 20);
        for l in labels {
            assert!(l.is_consistent());
            if l.delivered > 0 {
                assert!(l.delay_mean > 0.0);
            }
        }
    }
}

#[test]
fn floats_carry_at_most_nine_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 4, 4);
    let text = std::fs::read_to_string(dir.path().join(SAMPLES_FILE)).unwrap();
    let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let mut floats = Vec::new();
    fn walk(v: &serde_json::Value, out: &mut Vec<f64>) {
        match v {
            serde_json::Value::Number(n) if n.is_f64() => out.push(n.as_f64().unwrap()),
            serde_json::Value::Array(a) => a.iter().for_each(|x| walk(x, out)),
            serde_json::Value::Object(o) => o.values().for_each(|x| walk(x, out)),
            _ => {}
        }
    }
    walk(&v, &mut floats);
    assert!(!floats.is_empty());
    for x in floats {
        assert_eq!(format!("{:.8e}", x).parse::<f64>().unwrap(), x, "{x}");
    }
}

#[test]
fn truncated_record_names_its_index() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 4, 1);
    let path = dir.path().join(SAMPLES_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    let cut = text.len() - text.lines().last().unwrap().len() / 2;
    std::fs::write(&path, &text[..cut]).unwrap();
    let err = format!("{:#}", read_samples(dir.path(), true).unwrap_err());
    assert!(err.contains("record 3"), "{err}");

    let whole_lines: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, whole_lines).unwrap();
    let err = format!("{:#}", read_samples(dir.path(), true).unwrap_err());
    assert!(err.contains("record 2 missing"), "{err}");
}

#[test]
fn schema_violation_names_field() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 4, 1);
    let path = dir.path().join(SAMPLES_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("\"tos\":", "\"t0s\":", 1)).unwrap();
    let err = format!("{:#}", read_samples(dir.path(), true).unwrap_err());
    assert!(err.contains("record 0") && err.contains("t0s"), "{err}");
    std::fs::write(&path, text.replacen("\"policy\":\"", "\"policy\":\"X", 1)).unwrap();
    let err = format!("{:#}", read_samples(dir.path(), true).unwrap_err());
    assert!(err.contains("scheduling[0]"), "{err}");
}

#[test]
fn partial_output_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 4, 1);
    std::fs::write(dir.path().join(PARTIAL_MARKER), "").unwrap();
    assert!(read_samples(dir.path(), true).is_err());
}

fn manifest(split: &str, ids: &[&str]) -> Manifest {
    let dir = tempfile::tempdir().unwrap();
    let mut m = gen(dir.path(), 4, 1);
    m.split = split.into();
    m.topology_ids = ids.iter().map(|s| s.to_string()).collect();
    m
}

#[test]
fn split_disjointness() {
    let ok = [manifest("train", &["A", "B"]), manifest("val", &["C"]), manifest("test", &["D"])];
    assert!(check_split_disjointness(&ok).is_empty());
    let bad = [manifest("train", &["A"]), manifest("test", &["A"])];
    assert_eq!(check_split_disjointness(&bad).len(), 1);
    let challenge = [
        manifest("train", &["NSFNet", "Geant2"]),
        manifest("validation", &["GBN"]),
        manifest("test", &["RedIRIS"]),
    ];
    assert!(check_split_disjointness(&challenge).is_empty());
}
