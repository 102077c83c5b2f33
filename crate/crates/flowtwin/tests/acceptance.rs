//! One line per acceptance criterion; exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use flowtwin::selfcheck::{self, Check};
use flowtwin_core::gnn::{evaluate_mape, mean_delay, train, ModelConfig, TrainConfig, Variant};
use flowtwin_core::metrics::{competition_rank, ensemble_average, mape, PredictionTable};
use flowtwin_core::nn::{grad_check, Activation, Bound, Dense, Gru, ParamStore, Tape, Tensor, Var};
use flowtwin_core::sample::{generate_sample, NamedTopology};
use flowtwin_core::{make_synthetic_topology, stream_rng, Policy, Result, Sample, SimConfig, TopologyKind, UnitSource};

const CAPACITY: (f64, f64) = (4000.0, 16000.0);
const DURATION: f64 = 2000.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(checks: &[Check]) -> Outcome {
    Outcome {
        passed: checks.iter().all(|c| c.passed),
        detail: checks.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; "),
    }
}

fn criterion(id: u32, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let passed = out.passed && in_time;
    println!(
        "{} criterion {id} {title}: {} [{:.1}s of {}s]",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    passed
}

fn random(rows: usize, cols: usize, seed: u64, lo: f64, hi: f64) -> Tensor {
    let mut rng = stream_rng(seed, 0);
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.uniform(lo, hi)).collect()).unwrap()
}

/// Magnitudes in [0.2, 1] with random sign, away from relu's kink.
fn signed(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = stream_rng(seed, 1);
    let data = (0..rows * cols)
        .map(|_| {
            let m = rng.uniform(0.2, 1.0);
            if rng.unit() < 0.5 { -m } else { m }
        })
        .collect();
    Tensor::matrix(rows, cols, data).unwrap()
}

fn weighted_sum(t: &mut Tape, x: Var, seed: u64) -> Result<Var> {
    let v = t.value(x);
    let w = t.leaf(random(v.rows(), v.cols(), seed ^ 0x5EED, -1.0, 1.0));
    let y = t.mul(x, w)?;
    t.sum_all(y)
}

type Op = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

fn primitive_cases() -> Vec<(&'static str, Op, Vec<Tensor>)> {
    let a = || random(3, 4, 1, -1.0, 1.0);
    let b = || random(3, 4, 2, -1.0, 1.0);
    let pos = || random(3, 4, 3, 0.5, 2.0);
    let target = random(3, 1, 4, 0.5, 2.0);
    let target2 = target.clone();
    let mut store = ParamStore::new();
    let mut rng = stream_rng(9, 0);
    let dense = Dense::new(&mut store, "d", 4, 3, Activation::Tanh, &mut rng).unwrap();
    let dense_params = store.tensors().to_vec();
    let mut store = ParamStore::new();
    let gru = Gru::new(&mut store, "g", 4, 3, &mut rng).unwrap();
    let mut gru_params = store.tensors().to_vec();
    gru_params.push(random(3, 3, 5, -1.0, 1.0));
    gru_params.push(a());
    let mut dense_all = dense_params;
    dense_all.push(a());
    vec![
        ("matmul", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.matmul(v[0], v[1])?; weighted_sum(t, y, 1) }) as Op, vec![a(), random(4, 2, 6, -1.0, 1.0)]),
        ("add", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.add(v[0], v[1])?; weighted_sum(t, y, 2) }), vec![a(), b()]),
        ("sub", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.sub(v[0], v[1])?; weighted_sum(t, y, 3) }), vec![a(), b()]),
        ("mul", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.mul(v[0], v[1])?; weighted_sum(t, y, 4) }), vec![a(), b()]),
        ("add_row", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.add_row(v[0], v[1])?; weighted_sum(t, y, 5) }), vec![a(), random(1, 4, 7, -1.0, 1.0)]),
        ("mul_col", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.mul_col(v[0], v[1])?; weighted_sum(t, y, 6) }), vec![a(), random(3, 1, 8, -1.0, 1.0)]),
        ("scale", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.scale(v[0], -1.7)?; weighted_sum(t, y, 7) }), vec![a()]),
        ("add_scalar", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.add_scalar(v[0], 0.3)?; weighted_sum(t, y, 8) }), vec![a()]),
        ("concat_cols", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.concat_cols(&[v[0], v[1]])?; weighted_sum(t, y, 9) }), vec![a(), random(3, 2, 9, -1.0, 1.0)]),
        ("slice_cols", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.slice_cols(v[0], 1, 3)?; weighted_sum(t, y, 10) }), vec![a()]),
        ("gather_rows", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.gather_rows(v[0], &[2, 0, 2, 1, 2])?; weighted_sum(t, y, 11) }), vec![a()]),
        ("segment_sum", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.segment_sum(v[0], &[1, 0, 1], 3)?; weighted_sum(t, y, 12) }), vec![a()]),
        ("sigmoid", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.sigmoid(v[0])?; weighted_sum(t, y, 13) }), vec![a()]),
        ("tanh", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.tanh(v[0])?; weighted_sum(t, y, 14) }), vec![a()]),
        ("relu", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.relu(v[0])?; weighted_sum(t, y, 15) }), vec![signed(3, 4, 16)]),
        ("exp", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.exp(v[0])?; weighted_sum(t, y, 16) }), vec![a()]),
        ("log", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.log(v[0])?; weighted_sum(t, y, 17) }), vec![pos()]),
        ("sum_all", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.mul(v[0], v[0])?; t.sum_all(y) }), vec![a()]),
        ("mean_all", Box::new(|t: &mut Tape, v: &[Var]| { let y = t.mul(v[0], v[0])?; t.mean_all(y) }), vec![a()]),
        ("mape_loss", Box::new(move |t: &mut Tape, v: &[Var]| t.mape_loss(v[0], &target)), vec![random(3, 1, 18, 2.5, 4.0)]),
        ("mse_loss", Box::new(move |t: &mut Tape, v: &[Var]| t.mse_loss(v[0], &target2)), vec![random(3, 1, 19, -1.0, 1.0)]),
        ("dense", Box::new(move |t: &mut Tape, v: &[Var]| { let p = Bound::from_vars(v[..2].to_vec()); let y = dense.forward(t, &p, v[2])?; weighted_sum(t, y, 20) }), dense_all),
        ("gru", Box::new(move |t: &mut Tape, v: &[Var]| {
            let p = Bound::from_vars(v[..4].to_vec());
            let h = gru.step(t, &p, v[4], v[5])?;
            let h = gru.step(t, &p, h, v[5])?;
            weighted_sum(t, h, 21)
        }), gru_params),
    ]
}

fn autodiff() -> Outcome {
    let mut worst = ("", 0.0f64);
    let mut failures = Vec::new();
    let cases = primitive_cases();
    let count = cases.len();
    for (name, f, params) in cases {
        match grad_check(f, &params, 1e-6) {
            Ok(err) => {
                if err > worst.1 {
                    worst = (name, err);
                }
                if err >= 1e-4 {
                    failures.push(format!("{name} {err:.3e}"));
                }
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let gnn = from_checks(&[selfcheck::gnn_gradients(Variant::Baseline), selfcheck::gnn_gradients(Variant::NodeAugmented)]);
    Outcome {
        passed: failures.is_empty() && gnn.passed,
        detail: format!(
            "{count} primitives, worst {} {:.3e}{}; {}",
            worst.0,
            worst.1,
            if failures.is_empty() { String::new() } else { format!(", failing: {}", failures.join(", ")) },
            gnn.detail
        ),
    }
}

fn mape_and_rank() -> Outcome {
    let cases: [(&[f64], &[f64], f64); 3] =
        [(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0], 0.0), (&[1.0], &[2.0], 100.0), (&[1.0, 2.0, 2.0], &[1.0, 2.0, 4.0], 100.0 / 3.0)];
    let mut passed = true;
    let mut got = Vec::new();
    for (truth, pred, expected) in cases {
        let m = mape(truth, pred).unwrap();
        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::matrix(pred.len(), 1, pred.to_vec()).unwrap());
        let l = tape.mape_loss(p, &Tensor::matrix(truth.len(), 1, truth.to_vec()).unwrap()).unwrap();
        let l = tape.value(l).data()[0];
        for v in [m, l] {
            let ok = if expected == 0.0 { v == 0.0 } else { ((v - expected) / expected).abs() <= 1e-9 };
            passed &= ok;
        }
        got.push(format!("{m}"));
    }
    let board = competition_rank(&[("C".into(), 5.42), ("A".into(), 1.53), ("B".into(), 1.95)]);
    let order: Vec<&str> = board.iter().map(|r| r.team.as_str()).collect();
    let ranks: Vec<usize> = board.iter().map(|r| r.rank).collect();
    passed &= order == ["A", "B", "C"] && ranks == [1, 2, 3];
    Outcome { passed, detail: format!("mape {}; rank order {}", got.join(", "), order.join(", ")) }
}

fn topo(id: &str, nodes: usize, seed: u64) -> NamedTopology {
    let t = make_synthetic_topology(TopologyKind::RandomConnected, nodes, CAPACITY, seed).unwrap();
    NamedTopology { id: id.into(), topology: Arc::new(t) }
}

fn samples(topos: &[NamedTopology], n: u64, seed: u64) -> Vec<Sample> {
    let sim = SimConfig::new(DURATION, 0);
    (0..n).map(|i| generate_sample(topos, i, seed, &sim).unwrap()).collect()
}

fn measured(samples: &[Sample]) -> Vec<f64> {
    samples
        .iter()
        .flat_map(|s| s.labels.as_ref().unwrap().iter().filter(|l| l.delivered > 0).map(|l| l.delay_mean))
        .collect()
}

fn capacity() -> Outcome {
    let data = samples(&[topo("t5", 5, 7)], 200, 42);
    let tc = TrainConfig { epochs: 10, ..Default::default() };
    let out = train(ModelConfig::new(Variant::NodeAugmented), &data, &data[..20], &tc).unwrap();
    let prepared: Vec<_> = data.iter().map(|s| out.model.prepare(s).unwrap()).collect();
    let m = evaluate_mape(&out.model, &prepared).unwrap();
    Outcome { passed: m < 10.0, detail: format!("train MAPE {m:.3} (limit 10)") }
}

fn generalization() -> Outcome {
    let train_s = samples(&[topo("t5", 5, 11), topo("t8", 8, 12)], 400, 1);
    let val_s = samples(&[topo("t7", 7, 14)], 40, 2);
    let test_s = samples(&[topo("t6", 6, 13)], 100, 3);
    let mean = mean_delay(&train_s).unwrap();
    let truth = measured(&test_s);
    let constant = mape(&truth, &vec![mean; truth.len()]).unwrap();
    let tc = TrainConfig { epochs: 10, ..Default::default() };
    let out = train(ModelConfig::new(Variant::NodeAugmented), &train_s, &val_s, &tc).unwrap();
    let prepared: Vec<_> = test_s.iter().map(|s| out.model.prepare(s).unwrap()).collect();
    let m = evaluate_mape(&out.model, &prepared).unwrap();
    let ratio = m / constant;
    Outcome {
        passed: ratio <= 0.5,
        detail: format!("test MAPE {m:.3}, constant predictor {constant:.3}, ratio {ratio:.3} (limit 0.5)"),
    }
}

fn cli(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_flowtwin"))
        .args(args)
        .current_dir(dir)
        .env_remove("FLOWTWIN_SEED")
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

const SMALL: &str = r#"{"simulation":{"duration":300},
 "model":{"path_width":16,"link_width":16,"node_width":16,"readout_hidden":[16,16]},
 "training":{"epochs":3}}"#;

fn pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    std::fs::write(dir.join("small.json"), SMALL).unwrap();
    cli(dir, &["gen-topo", "--out", "t5.json", "--seed", "5"]);
    cli(dir, &["gen-dataset", "--topology", "t5.json", "--samples", "24", "--seed", "3", "--config", "small.json", "--out", "train"]);
    cli(dir, &["gen-dataset", "--topology", "t5.json", "--samples", "8", "--seed", "4", "--config", "small.json", "--out", "test"]);
    let log = cli(dir, &["train", "--dataset", "train", "--seed", "9", "--config", "small.json", "--out", "ck.json"]);
    cli(dir, &["predict", "--checkpoint", "ck.json", "--dataset", "test", "--out", "pred.csv"]);
    let mut files = vec![("train log".to_string(), log)];
    for f in ["train/manifest.json", "train/samples.jsonl", "test/manifest.json", "test/samples.jsonl", "ck.json", "pred.csv"] {
        files.push((f.to_string(), std::fs::read(dir.join(f)).unwrap()));
    }
    files
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    let differing: Vec<&str> = first.iter().zip(&second).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    let bytes: usize = first.iter().map(|f| f.1.len()).sum();
    Outcome {
        passed: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{} artifacts ({bytes} bytes) identical", first.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    }
}

fn table(seed: u64) -> PredictionTable {
    let mut rng = stream_rng(seed, 0);
    let mut t = PredictionTable::new();
    for s in 0..20u64 {
        for (src, dst) in [(0, 1), (1, 0), (2, 3), (3, 1)] {
            t.insert((s, src, dst), rng.uniform(1e-3, 50.0));
        }
    }
    t
}

fn ensemble() -> Outcome {
    let member = table(1);
    let same = ensemble_average(&vec![member.clone(); 4]).unwrap();
    let identical = same == member;
    let members: Vec<PredictionTable> = (10..14).map(table).collect();
    let avg = ensemble_average(&members).unwrap();
    let mut worst = 0.0f64;
    for (k, v) in &avg {
        let mut acc = 0.0;
        for m in &members {
            acc += m[k];
        }
        let oracle = acc / members.len() as f64;
        worst = worst.max(((v - oracle) / oracle).abs());
    }
    let keys_match = avg.keys().eq(members[0].keys());
    Outcome {
        passed: identical && keys_match && worst <= 1e-12,
        detail: format!("identical members exact: {identical}; distinct members max relative deviation {worst:.2e} (limit 1e-12)"),
    }
}

fn main() {
    let minute = Duration::from_secs(60);
    let seed = 20;
    let results = [
        criterion(1, "M/M/1 sojourn at rho 0.5", minute, || from_checks(&[selfcheck::mm1(0.5, 1e6, seed)])),
        criterion(2, "scheduler fairness", 3 * minute, || {
            from_checks(&[
                selfcheck::fairness(Policy::Wfq, 1_000_000, seed),
                selfcheck::fairness(Policy::Drr, 1_000_000, seed),
                selfcheck::strict_priority(100_000, seed),
            ])
        }),
        criterion(3, "conservation suite", 5 * minute, || from_checks(&[selfcheck::conservation_suite(1000)])),
        criterion(4, "autodiff gradient checks", 2 * minute, autodiff),
        criterion(5, "MAPE hand values and ranking", minute, mape_and_rank),
        criterion(6, "capacity on one 5-node topology", 30 * minute, capacity),
        criterion(7, "generalization to an unseen 6-node topology", 60 * minute, generalization),
        criterion(8, "byte-identical gen-dataset, train, predict", 10 * minute, determinism),
        criterion(9, "ensemble averaging", minute, ensemble),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
