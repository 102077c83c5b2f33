//! Oracle checks run by `flowtwin selfcheck` and the acceptance suite.

use std::collections::VecDeque;
use std::sync::Arc;

use flowtwin_core::gnn::{FeatureEncoding, GnnModel, ModelConfig, Variant};
use flowtwin_core::nn::{grad_check, Bound, Tape};
use flowtwin_core::rng::{stream_rng, UnitSource};
use flowtwin_core::sample::{generate_sample, NamedTopology};
use flowtwin_core::sim::{Discipline, OutputPort, TraceEvent, TraceKind};
use flowtwin_core::topology::{generate_routing_variation, shortest_path_routing};
use flowtwin_core::traffic::{sample_packet_size, sample_traffic_matrix};
use flowtwin_core::{
    make_synthetic_topology, run_simulation, FlowSpec, Link, NodeScheduling, Policy, SchedulingConfig, SimConfig,
    SizeModel, Tier, Topology, TopologyKind, TrafficMatrix,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Single link with capacity 1000, Poisson arrivals at load `rho` and
/// exponential sizes of mean 1000, so the service rate is 1.
pub fn mm1(rho: f64, duration: f64, seed: u64) -> Check {
    let name = "M/M/1 mean sojourn".to_string();
    let result = (|| -> flowtwin_core::Result<f64> {
        let links = vec![
            Link { src: 0, dst: 1, capacity: 1000.0, buffer_size: u32::MAX },
            Link { src: 1, dst: 0, capacity: 1000.0, buffer_size: u32::MAX },
        ];
        let topo = Topology::new(vec!["a".into(), "b".into()], links)?;
        let routing = shortest_path_routing(&topo, &[1.0, 1.0])?;
        let flow = FlowSpec::new(0, 1, 0, rho * 1000.0)?;
        let traffic = TrafficMatrix::from_flows(vec![flow], 1000.0)?;
        let cfg = SimConfig { size_model: SizeModel::Exponential { mean: 1000.0 }, ..SimConfig::new(duration, seed) };
        let report = run_simulation(&topo, &routing, &SchedulingConfig::uniform_default(2), &traffic, &cfg)?;
        Ok(report.flows[0].delay_mean)
    })();
    let expected = 1.0 / (1.0 - rho);
    match result {
        Ok(mean) => {
            let rel = (mean - expected).abs() / expected;
            Check {
                name,
                passed: rel < 0.05,
                detail: format!("simulated {mean:.5} vs 1/(mu-lambda) = {expected:.5}, relative error {rel:.4} (limit 0.05)"),
            }
        }
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

/// Byte shares of the three queues of one port kept permanently backlogged
/// for `packets` transmissions.
pub fn backlogged_shares(policy: Policy, weights: [u32; 3], packets: usize, seed: u64) -> [f64; 3] {
    let ns = NodeScheduling { policy, weights };
    let mut port = OutputPort::new(Discipline::for_node(&ns), usize::MAX);
    let mut rng = stream_rng(seed, 0);
    let mut id = 0;
    for q in 0..3 {
        for _ in 0..4 {
            port.enqueue(q, id, sample_packet_size(&mut rng));
            id += 1;
        }
    }
    let mut bytes = [0.0; 3];
    for _ in 0..packets {
        let d = port.dequeue().expect("backlogged port");
        bytes[d.queue] += d.item.size;
        port.enqueue(d.queue, id, sample_packet_size(&mut rng));
        id += 1;
    }
    let total: f64 = bytes.iter().sum();
    bytes.map(|b| b / total)
}

pub fn fairness(policy: Policy, packets: usize, seed: u64) -> Check {
    let target = [0.1, 0.3, 0.6];
    let shares = backlogged_shares(policy, [10, 30, 60], packets, seed);
    let worst = shares.iter().zip(target).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max);
    Check {
        name: format!("{} byte shares (10,30,60)", policy.as_str()),
        passed: worst <= 0.02,
        detail: format!(
            "shares ({:.4}, {:.4}, {:.4}), max deviation {worst:.4} (limit 0.02)",
            shares[0], shares[1], shares[2]
        ),
    }
}

pub fn strict_priority(packets: usize, seed: u64) -> Check {
    let shares = backlogged_shares(Policy::Sp, [10, 30, 60], packets, seed);
    Check {
        name: "SP serves queue 0 exclusively".into(),
        passed: shares == [1.0, 0.0, 0.0],
        detail: format!("shares ({}, {}, {})", shares[0], shares[1], shares[2]),
    }
}

/// Replays a trace: every transmission takes the head of its queue, and a
/// link never idles while it has backlog.
pub fn check_trace(trace: &[TraceEvent], num_links: usize) -> Result<(), String> {
    let mut queues: Vec<[VecDeque<u64>; 3]> = (0..num_links).map(|_| Default::default()).collect();
    let mut busy = vec![false; num_links];
    for (i, ev) in trace.iter().enumerate() {
        let next = trace.get(i + 1);
        let starts_now =
            |link: usize| next.is_some_and(|n| n.kind == TraceKind::TxStart && n.link == link && n.time == ev.time);
        match ev.kind {
            TraceKind::Enqueue => {
                queues[ev.link][ev.queue].push_back(ev.packet);
                if !busy[ev.link] && !starts_now(ev.link) {
                    return Err(format!("link {} idle with backlog at t={}", ev.link, ev.time));
                }
            }
            TraceKind::TxStart => {
                let head = queues[ev.link][ev.queue].pop_front();
                if head != Some(ev.packet) {
                    return Err(format!("FIFO violated on link {} queue {} at t={}", ev.link, ev.queue, ev.time));
                }
                busy[ev.link] = true;
            }
            TraceKind::TxEnd => {
                busy[ev.link] = false;
                let backlog: usize = queues[ev.link].iter().map(VecDeque::len).sum();
                if backlog > 0 && !starts_now(ev.link) {
                    return Err(format!("link {} idles with {backlog} queued at t={}", ev.link, ev.time));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// One random desk-scale scenario: packet conservation, percentile order
/// and FIFO within each queue.
pub fn conservation_scenario(seed: u64) -> Result<(), String> {
    let mut rng = stream_rng(seed, 99);
    let n = 3 + (seed % 4) as usize;
    let e = |e: flowtwin_core::Error| format!("scenario {seed}: {e}");
    let topo = make_synthetic_topology(TopologyKind::RandomConnected, n, (3000.0, 9000.0), seed).map_err(e)?;
    let routing = generate_routing_variation(&topo, seed).map_err(e)?;
    let sched = Tier::for_index(seed).draw_scheduling(n, &mut rng);
    let traffic = sample_traffic_matrix(&topo, &mut rng);
    let mut cfg = SimConfig::new(20.0 + 40.0 * rng.unit(), seed);
    cfg.drain = seed.is_multiple_of(2);
    cfg.trace = true;
    let report = run_simulation(&topo, &routing, &sched, &traffic, &cfg).map_err(e)?;
    let t = report.totals;
    if t.created != t.delivered + t.dropped + t.in_flight {
        return Err(format!("scenario {seed}: created {} != {} + {} + {}", t.created, t.delivered, t.dropped, t.in_flight));
    }
    if cfg.drain && t.in_flight != 0 {
        return Err(format!("scenario {seed}: {} packets left after draining", t.in_flight));
    }
    if let Some(f) = report.flows.iter().find(|f| !f.is_consistent()) {
        return Err(format!("scenario {seed}: flow ({},{}) percentiles out of order", f.src, f.dst));
    }
    check_trace(&report.trace, topo.num_links()).map_err(|m| format!("scenario {seed}: {m}"))
}

pub fn conservation_suite(scenarios: u64) -> Check {
    let failures: Vec<String> = (0..scenarios).filter_map(|s| conservation_scenario(s).err()).collect();
    Check {
        name: "conservation, percentile order, FIFO".into(),
        passed: failures.is_empty(),
        detail: match failures.first() {
            None => format!("{scenarios} scenarios clean"),
            Some(first) => format!("{} of {scenarios} scenarios failed; first: {first}", failures.len()),
        },
    }
}

/// Finite-difference check of the full model loss on a 4-node sample.
pub fn gnn_gradients(variant: Variant) -> Check {
    let name = format!("{variant} forward+loss gradients");
    let result = (|| -> flowtwin_core::Result<f64> {
        let topo = make_synthetic_topology(TopologyKind::Ring, 4, (4000.0, 16000.0), 1)?;
        let named = [NamedTopology { id: "ring4".into(), topology: Arc::new(topo) }];
        let sim = SimConfig::new(300.0, 0);
        let samples = (0..4).map(|i| generate_sample(&named, i, 3, &sim)).collect::<flowtwin_core::Result<Vec<_>>>()?;
        let config = ModelConfig {
            path_width: 12,
            link_width: 8,
            node_width: 8,
            iterations: 2,
            readout_hidden: vec![8, 8],
            ..ModelConfig::new(variant)
        };
        let enc = FeatureEncoding::fit(&samples, config.scaling)?;
        let mut model = GnnModel::new(config, enc, 5)?;
        model.set_output_level(0.2)?;
        let prepared = model.prepare(&samples[1])?;
        grad_check(
            |tape: &mut Tape, vars| model.loss(tape, &Bound::from_vars(vars.to_vec()), &prepared, None),
            model.params().tensors(),
            1e-4,
        )
    })();
    match result {
        Ok(err) => Check { name, passed: err < 1e-4, detail: format!("max relative error {err:.3e} (limit 1e-4)") },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

/// The quick oracle set behind `flowtwin selfcheck`.
pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        mm1(0.5, 2e5, seed),
        fairness(Policy::Wfq, 200_000, seed),
        fairness(Policy::Drr, 200_000, seed),
        strict_priority(10_000, seed),
        conservation_suite(100),
        gnn_gradients(Variant::Baseline),
        gnn_gradients(Variant::NodeAugmented),
    ]
}
