use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::scheduler::{Discipline, OutputPort};
use super::stats::PerFlowStats;
use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::rng::{stream_rng, StreamRng};
use crate::topology::{validate_routing, RoutingConfig, SchedulingConfig, Topology};
use crate::traffic::{exponential, next_interarrival, sample_packet_size, TrafficMatrix};

/// How packet sizes are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeModel {
    /// 300 or 1700 bits with equal probability.
    Bimodal,
    /// Exponentially distributed sizes with the given mean. Validation mode:
    /// makes a single port an M/M/1 queue.
    Exponential { mean: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Time discarded from statistics.
    pub warmup: f64,
    /// Measured time after warm-up. Packet generation stops at
    /// `warmup + duration`.
    pub duration: f64,
    pub seed: u64,
    /// Added after every hop's transmission.
    pub propagation_delay: f64,
    pub size_model: SizeModel,
    /// Keep running after generation stops until every packet has left the
    /// network. Without it the run ends at `warmup + duration` and the
    /// remaining packets are reported as in flight.
    pub drain: bool,
    /// Record a per-event trace.
    pub trace: bool,
}

impl SimConfig {
    /// Warm-up of 10% of `duration`, no propagation delay, bimodal sizes.
    pub fn new(duration: f64, seed: u64) -> Self {
        SimConfig {
            warmup: 0.1 * duration,
            duration,
            seed,
            propagation_delay: 0.0,
            size_model: SizeModel::Bimodal,
            drain: true,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.warmup >= 0.0 && self.warmup.is_finite()) {
            return Err(invalid_arg!("warmup must be >= 0, got {}", self.warmup));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(invalid_arg!("duration must be > 0, got {}", self.duration));
        }
        if !(self.propagation_delay >= 0.0 && self.propagation_delay.is_finite()) {
            return Err(invalid_arg!("propagation delay must be >= 0"));
        }
        if let SizeModel::Exponential { mean } = self.size_model {
            if !(mean > 0.0 && mean.is_finite()) {
                return Err(invalid_arg!("exponential size mean must be > 0"));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.warmup + self.duration
    }
}

/// Whole-run packet accounting over every created packet, warm-up included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PacketTotals {
    pub created: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Create,
    Enqueue,
    Drop,
    TxStart,
    TxEnd,
    Deliver,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Create => "create",
            TraceKind::Enqueue => "enqueue",
            TraceKind::Drop => "drop",
            TraceKind::TxStart => "tx_start",
            TraceKind::TxEnd => "tx_end",
            TraceKind::Deliver => "deliver",
        }
    }
}

/// One simulator event. `link` is `usize::MAX` for create and deliver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub node: usize,
    pub link: usize,
    pub queue: usize,
    /// Serial number of the packet, unique within a run.
    pub packet: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// One row per flow of the traffic matrix, same order.
    pub flows: Vec<PerFlowStats>,
    pub totals: PacketTotals,
    pub trace: Vec<TraceEvent>,
    /// Time of the last processed event.
    pub end_time: f64,
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Generate { flow: usize },
    Arrive { packet: usize, hop: usize },
    TxDone { link: usize },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    ordinal: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed: BinaryHeap is a max-heap and we pop the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.ordinal.cmp(&self.ordinal))
    }
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    flow: usize,
    size: f64,
    created: f64,
    serial: u64,
    hop: usize,
}

struct Port {
    queues: OutputPort,
    busy: Option<usize>,
    capacity: f64,
    node: usize,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    events: BinaryHeap<Event>,
    ordinal: u64,
    ports: Vec<Port>,
    flow_links: Vec<Vec<usize>>,
    flow_tos: Vec<usize>,
    flow_dst: Vec<usize>,
    flow_rngs: Vec<StreamRng>,
    packets: Vec<Packet>,
    free: Vec<usize>,
    delays: Vec<Vec<f64>>,
    drops: Vec<u64>,
    totals: PacketTotals,
    trace: Vec<TraceEvent>,
    serial: u64,
}

impl Engine<'_> {
    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.ordinal += 1;
        self.events.push(Event { time, ordinal: self.ordinal, kind });
    }

    fn record(&mut self, time: f64, kind: TraceKind, node: usize, link: usize, queue: usize, packet: u64) {
        if self.cfg.trace {
            self.trace.push(TraceEvent { time, kind, node, link, queue, packet });
        }
    }

    fn is_measured(&self, p: &Packet) -> bool {
        p.created >= self.cfg.warmup && p.created < self.cfg.horizon()
    }

    fn alloc(&mut self, p: Packet) -> usize {
        match self.free.pop() {
            Some(i) => {
                self.packets[i] = p;
                i
            }
            None => {
                self.packets.push(p);
                self.packets.len() - 1
            }
        }
    }

    fn generate(&mut self, flow: usize, now: f64) {
        let rng = &mut self.flow_rngs[flow];
        let size = match self.cfg.size_model {
            SizeModel::Bimodal => sample_packet_size(rng),
            SizeModel::Exponential { mean } => exponential(1.0 / mean, rng),
        };
        let serial = self.serial;
        self.serial += 1;
        let id = self.alloc(Packet { flow, size, created: now, serial, hop: 0 });
        self.totals.created += 1;
        let src = self.ports[self.flow_links[flow][0]].node;
        self.record(now, TraceKind::Create, src, usize::MAX, self.flow_tos[flow], serial);
        self.arrive(id, 0, now);
    }

    fn arrive(&mut self, packet: usize, hop: usize, now: f64) {
        self.packets[packet].hop = hop;
        let p = self.packets[packet];
        let links = &self.flow_links[p.flow];
        if hop == links.len() {
            self.totals.delivered += 1;
            if self.is_measured(&p) {
                self.delays[p.flow].push(now - p.created);
            }
            let dst = self.flow_dst[p.flow];
            self.record(now, TraceKind::Deliver, dst, usize::MAX, self.flow_tos[p.flow], p.serial);
            self.free.push(packet);
            return;
        }
        let link = links[hop];
        let queue = self.flow_tos[p.flow];
        let node = self.ports[link].node;
        if !self.ports[link].queues.enqueue(queue, packet, p.size) {
            self.totals.dropped += 1;
            if self.is_measured(&p) {
                self.drops[p.flow] += 1;
            }
            self.record(now, TraceKind::Drop, node, link, queue, p.serial);
            self.free.push(packet);
            return;
        }
        self.record(now, TraceKind::Enqueue, node, link, queue, p.serial);
        if self.ports[link].busy.is_none() {
            self.start_tx(link, now);
        }
    }

    fn start_tx(&mut self, link: usize, now: f64) {
        let Some(d) = self.ports[link].queues.dequeue() else {
            return;
        };
        let port = &mut self.ports[link];
        port.busy = Some(d.item.packet);
        let done = now + d.item.size / port.capacity;
        let node = port.node;
        let serial = self.packets[d.item.packet].serial;
        self.record(now, TraceKind::TxStart, node, link, d.queue, serial);
        self.schedule(done, EventKind::TxDone { link });
    }

    fn tx_done(&mut self, link: usize, now: f64) {
        let Some(packet) = self.ports[link].busy.take() else {
            return;
        };
        let p = self.packets[packet];
        let node = self.ports[link].node;
        self.record(now, TraceKind::TxEnd, node, link, self.flow_tos[p.flow], p.serial);
        self.start_tx(link, now);
        let hop = p.hop + 1;
        if self.cfg.propagation_delay > 0.0 {
            self.schedule(now + self.cfg.propagation_delay, EventKind::Arrive { packet, hop });
        } else {
            self.arrive(packet, hop, now);
        }
    }
}

/// Runs one scenario and returns per-flow labels.
///
/// Each flow draws arrivals and sizes from its own stream of `cfg.seed`,
/// indexed by its position in the traffic matrix. Packets of ToS `k` use
/// queue `k` at every output port on their path.
pub fn run_simulation(
    topology: &Topology,
    routing: &RoutingConfig,
    scheduling: &SchedulingConfig,
    traffic: &TrafficMatrix,
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    let violations = validate_routing(topology, routing);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidRouting(alloc::format!(
            "{} violation(s), first: {v}",
            violations.len()
        )));
    }
    if scheduling.len() != topology.num_nodes() {
        return Err(invalid_arg!(
            "scheduling covers {} nodes, topology has {}",
            scheduling.len(),
            topology.num_nodes()
        ));
    }
    let ports = topology
        .links()
        .iter()
        .map(|l| Port {
            queues: OutputPort::new(Discipline::for_node(scheduling.node(l.src)), l.buffer_size as usize),
            busy: None,
            capacity: l.capacity,
            node: l.src,
        })
        .collect();
    let n = topology.num_nodes();
    let mut flow_links = Vec::with_capacity(traffic.len());
    for f in traffic.flows() {
        if f.src >= n || f.dst >= n {
            return Err(invalid_arg!("flow {:?} references a node outside the topology", f.key()));
        }
        flow_links.push(routing.path_links(topology, f.src, f.dst)?);
    }
    let nflows = traffic.len();
    let mut engine = Engine {
        cfg,
        events: BinaryHeap::new(),
        ordinal: 0,
        ports,
        flow_links,
        flow_tos: traffic.flows().iter().map(|f| f.tos as usize).collect(),
        flow_dst: traffic.flows().iter().map(|f| f.dst).collect(),
        flow_rngs: (0..nflows).map(|i| stream_rng(cfg.seed, i as u64)).collect(),
        packets: Vec::new(),
        free: Vec::new(),
        delays: vec![Vec::new(); nflows],
        drops: vec![0; nflows],
        totals: PacketTotals::default(),
        trace: Vec::new(),
        serial: 0,
    };
    let horizon = cfg.horizon();
    for (i, f) in traffic.flows().iter().enumerate() {
        let t = next_interarrival(f, &mut engine.flow_rngs[i]);
        if t < horizon {
            engine.schedule(t, EventKind::Generate { flow: i });
        }
    }
    let mut end_time = 0.0;
    while let Some(ev) = engine.events.pop() {
        if !cfg.drain && ev.time > horizon {
            break;
        }
        end_time = ev.time;
        match ev.kind {
            EventKind::Generate { flow } => {
                engine.generate(flow, ev.time);
                let next = ev.time + next_interarrival(&traffic.flows()[flow], &mut engine.flow_rngs[flow]);
                if next < horizon {
                    engine.schedule(next, EventKind::Generate { flow });
                }
            }
            EventKind::Arrive { packet, hop } => engine.arrive(packet, hop, ev.time),
            EventKind::TxDone { link } => engine.tx_done(link, ev.time),
        }
    }
    let mut totals = engine.totals;
    totals.in_flight = totals.created - totals.delivered - totals.dropped;
    let flows = traffic
        .flows()
        .iter()
        .zip(engine.delays)
        .zip(engine.drops)
        .map(|((f, delays), drops)| PerFlowStats::from_delays(f.src, f.dst, delays, drops))
        .collect();
    Ok(SimReport { flows, totals, trace: engine.trace, end_time })
}
