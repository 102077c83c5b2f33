//! Network snapshots: topology, per-node queue scheduling and routing.
//!
//! Nodes are addressed by their index in [`Topology::nodes`]. Wherever a
//! "lexicographic" node order is mentioned, it is the order of these
//! indices.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::rng::{stream_rng, UnitSource};

/// Queues per output port.
pub const NUM_QUEUES: usize = 3;

/// Buffer size used when none is given, in packets per queue.
pub const DEFAULT_BUFFER_SIZE: u32 = 32;

/// Weights used by tier-one scenarios and the default scheduling config.
pub const DEFAULT_WEIGHTS: [u32; NUM_QUEUES] = [10, 30, 60];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub src: usize,
    pub dst: usize,
    /// Bits per time unit.
    pub capacity: f64,
    /// Packets per queue.
    pub buffer_size: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<String>,
    links: Vec<Link>,
    by_pair: BTreeMap<(usize, usize), usize>,
}

impl Topology {
    /// Builds a topology, checking every structural invariant.
    pub fn new(nodes: Vec<String>, links: Vec<Link>) -> Result<Self> {
        let n = nodes.len();
        if n < 2 {
            return Err(invalid_arg!("topology needs at least 2 nodes, got {n}"));
        }
        let mut seen_names = BTreeMap::new();
        for (i, name) in nodes.iter().enumerate() {
            if seen_names.insert(name.as_str(), i).is_some() {
                return Err(invalid_arg!("duplicate node id {name:?}"));
            }
        }
        let mut by_pair = BTreeMap::new();
        for (i, l) in links.iter().enumerate() {
            if l.src >= n || l.dst >= n {
                return Err(invalid_arg!("link {i} references a node out of range"));
            }
            if l.src == l.dst {
                return Err(invalid_arg!("link {i} is a self-loop on {}", nodes[l.src]));
            }
            if !(l.capacity > 0.0 && l.capacity.is_finite()) {
                return Err(invalid_arg!("link {i} capacity must be positive, got {}", l.capacity));
            }
            if l.buffer_size < 1 {
                return Err(invalid_arg!("link {i} buffer_size must be at least 1"));
            }
            if by_pair.insert((l.src, l.dst), i).is_some() {
                return Err(invalid_arg!(
                    "duplicate link {} -> {}",
                    nodes[l.src],
                    nodes[l.dst]
                ));
            }
        }
        let topo = Topology { nodes, links, by_pair };
        if !topo.is_strongly_connected() {
            return Err(invalid_arg!("topology is not strongly connected"));
        }
        Ok(topo)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// Index of the directed link `src -> dst`, if present.
    pub fn link_between(&self, src: usize, dst: usize) -> Option<usize> {
        self.by_pair.get(&(src, dst)).copied()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    /// Outgoing links of `node` as `(link index, neighbour)`, by neighbour index.
    pub fn out_links(&self, node: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_pair
            .range((node, 0)..(node + 1, 0))
            .map(|(&(_, dst), &li)| (li, dst))
    }

    fn is_strongly_connected(&self) -> bool {
        let n = self.nodes.len();
        let reach = |forward: bool| {
            let mut adj = vec![Vec::new(); n];
            for l in &self.links {
                if forward {
                    adj[l.src].push(l.dst);
                } else {
                    adj[l.dst].push(l.src);
                }
            }
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// Queue scheduling policy of a node's output ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Policy {
    /// Strict priority, queue 0 first.
    Sp,
    Wfq,
    Drr,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Sp, Policy::Wfq, Policy::Drr];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Sp => "SP",
            Policy::Wfq => "WFQ",
            Policy::Drr => "DRR",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SP" => Ok(Policy::Sp),
            "WFQ" => Ok(Policy::Wfq),
            "DRR" => Ok(Policy::Drr),
            other => Err(Error::UnknownCategory(alloc::format!("scheduling policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeScheduling {
    pub policy: Policy,
    /// Queue weights in percent. Carried but unused under SP.
    pub weights: [u32; NUM_QUEUES],
}

impl NodeScheduling {
    pub fn new(policy: Policy, weights: [u32; NUM_QUEUES]) -> Result<Self> {
        let s = NodeScheduling { policy, weights };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: u32 = self.weights.iter().sum();
        if sum != 100 {
            return Err(invalid_arg!("queue weights {:?} sum to {sum}, expected 100", self.weights));
        }
        if self.policy != Policy::Sp && self.weights.contains(&0) {
            return Err(invalid_arg!(
                "{} needs all queue weights > 0, got {:?}",
                self.policy,
                self.weights
            ));
        }
        Ok(())
    }
}

impl Default for NodeScheduling {
    fn default() -> Self {
        NodeScheduling { policy: Policy::Wfq, weights: DEFAULT_WEIGHTS }
    }
}

/// Per-node scheduling, indexed like [`Topology::nodes`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchedulingConfig {
    per_node: Vec<NodeScheduling>,
}

impl SchedulingConfig {
    pub fn new(per_node: Vec<NodeScheduling>) -> Result<Self> {
        for (i, s) in per_node.iter().enumerate() {
            s.validate().map_err(|e| invalid_arg!("node {i}: {e}"))?;
        }
        Ok(SchedulingConfig { per_node })
    }

    /// Every node WFQ with weights (10,30,60).
    pub fn uniform_default(num_nodes: usize) -> Self {
        SchedulingConfig { per_node: vec![NodeScheduling::default(); num_nodes] }
    }

    pub fn uniform(num_nodes: usize, node: NodeScheduling) -> Self {
        SchedulingConfig { per_node: vec![node; num_nodes] }
    }

    pub fn node(&self, i: usize) -> &NodeScheduling {
        &self.per_node[i]
    }

    pub fn nodes(&self) -> &[NodeScheduling] {
        &self.per_node
    }

    pub fn len(&self) -> usize {
        self.per_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_node.is_empty()
    }
}

/// One path per ordered node pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingConfig {
    num_nodes: usize,
    paths: BTreeMap<(usize, usize), Vec<usize>>,
}

impl RoutingConfig {
    /// Wraps raw paths without checking them; see [`validate_routing`].
    pub fn from_paths(num_nodes: usize, paths: BTreeMap<(usize, usize), Vec<usize>>) -> Self {
        RoutingConfig { num_nodes, paths }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn path(&self, src: usize, dst: usize) -> Option<&[usize]> {
        self.paths.get(&(src, dst)).map(Vec::as_slice)
    }

    /// Paths ordered lexicographically by `(src, dst)`.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &[usize])> {
        self.paths.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Link indices traversed by the `src -> dst` path.
    pub fn path_links(&self, topology: &Topology, src: usize, dst: usize) -> Result<Vec<usize>> {
        let path = self
            .path(src, dst)
            .ok_or_else(|| Error::InvalidRouting(alloc::format!("no path for {src} -> {dst}")))?;
        path.windows(2)
            .map(|w| {
                topology.link_between(w[0], w[1]).ok_or_else(|| {
                    Error::InvalidRouting(alloc::format!(
                        "path {src} -> {dst} uses missing link {} -> {}",
                        w[0],
                        w[1]
                    ))
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Line,
    Ring,
    RandomConnected,
}

impl core::str::FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(TopologyKind::Line),
            "ring" => Ok(TopologyKind::Ring),
            "random-connected" | "random" => Ok(TopologyKind::RandomConnected),
            other => Err(invalid_arg!("unknown topology kind {other:?}")),
        }
    }
}

/// Probability of each extra undirected edge beyond the random spanning tree.
const EXTRA_EDGE_PROBABILITY: f64 = 0.3;

/// Builds a synthetic strongly connected topology with bidirectional links.
///
/// Capacities are drawn per undirected edge, uniformly within
/// `capacity_range` and rounded down to an integer (but at least the lower
/// bound when that is below one). Node ids are `n0`, `n1`, ...
pub fn make_synthetic_topology(
    kind: TopologyKind,
    n: usize,
    capacity_range: (f64, f64),
    seed: u64,
) -> Result<Topology> {
    if n < 2 {
        return Err(invalid_arg!("synthetic topology needs n >= 2, got {n}"));
    }
    let (lo, hi) = capacity_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(invalid_arg!("capacity range ({lo}, {hi}) must be positive and ordered"));
    }
    let mut rng = stream_rng(seed, 0);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    match kind {
        TopologyKind::Line => edges.extend((1..n).map(|i| (i - 1, i))),
        TopologyKind::Ring => {
            edges.extend((1..n).map(|i| (i - 1, i)));
            if n > 2 {
                edges.push((n - 1, 0));
            }
        }
        TopologyKind::RandomConnected => {
            for i in 1..n {
                edges.push((rng.index(i), i));
            }
            for a in 0..n {
                for b in (a + 1)..n {
                    let present = edges.iter().any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b));
                    if !present && rng.unit() < EXTRA_EDGE_PROBABILITY {
                        edges.push((a, b));
                    }
                }
            }
        }
    }
    let mut links = Vec::with_capacity(edges.len() * 2);
    for (a, b) in edges {
        let raw = rng.uniform(lo, hi);
        let capacity = if lo >= 1.0 { crate::math::floor(raw).max(lo) } else { raw };
        for (src, dst) in [(a, b), (b, a)] {
            links.push(Link { src, dst, capacity, buffer_size: DEFAULT_BUFFER_SIZE });
        }
    }
    let nodes = (0..n).map(|i| alloc::format!("n{i}")).collect();
    Topology::new(nodes, links)
}

/// Per-pair minimum-weight paths; ties go to the lexicographically smallest
/// node sequence.
pub fn shortest_path_routing(topology: &Topology, link_weights: &[f64]) -> Result<RoutingConfig> {
    if link_weights.len() != topology.num_links() {
        return Err(invalid_arg!(
            "expected {} link weights, got {}",
            topology.num_links(),
            link_weights.len()
        ));
    }
    if let Some(w) = link_weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(invalid_arg!("link weights must be positive, got {w}"));
    }
    let n = topology.num_nodes();
    let mut paths = BTreeMap::new();
    for src in 0..n {
        let tree = lexicographic_dijkstra(topology, link_weights, src);
        for (dst, label) in tree.into_iter().enumerate() {
            if dst == src {
                continue;
            }
            let (_, path) = label.ok_or(Error::UnreachableDestination { src, dst })?;
            paths.insert((src, dst), path);
        }
    }
    Ok(RoutingConfig { num_nodes: n, paths })
}

type Label = (f64, Vec<usize>);

fn better(candidate: &Label, incumbent: &Option<Label>) -> bool {
    match incumbent {
        None => true,
        Some((d, p)) => candidate.0 < *d || (candidate.0 == *d && candidate.1 < *p),
    }
}

// O(n^2) Dijkstra over full (distance, path) labels. The lexicographically
// smallest shortest path has the optimal-substructure property, so settling
// nodes in label order is exact.
fn lexicographic_dijkstra(topology: &Topology, weights: &[f64], src: usize) -> Vec<Option<Label>> {
    let n = topology.num_nodes();
    let mut labels: Vec<Option<Label>> = vec![None; n];
    let mut settled = vec![false; n];
    labels[src] = Some((0.0, vec![src]));
    loop {
        let mut next: Option<usize> = None;
        for v in 0..n {
            if settled[v] || labels[v].is_none() {
                continue;
            }
            next = match next {
                None => Some(v),
                Some(u) if better(labels[v].as_ref().unwrap(), &labels[u]) => Some(v),
                keep => keep,
            };
        }
        let Some(u) = next else { break };
        settled[u] = true;
        let (du, pu) = labels[u].clone().unwrap();
        for (li, v) in topology.out_links(u) {
            if settled[v] {
                continue;
            }
            let mut path = pu.clone();
            path.push(v);
            let cand = (du + weights[li], path);
            if better(&cand, &labels[v]) {
                labels[v] = Some(cand);
            }
        }
    }
    labels
}

/// Stream index reserved for routing perturbations derived from a seed.
const ROUTING_STREAM: u64 = 1;

/// Shortest-path routing under link weights drawn uniformly from `[1, 2]`.
pub fn generate_routing_variation(topology: &Topology, seed: u64) -> Result<RoutingConfig> {
    let mut rng = stream_rng(seed, ROUTING_STREAM);
    generate_routing_variation_with(topology, &mut rng)
}

/// As [`generate_routing_variation`], drawing from a caller-owned source.
pub fn generate_routing_variation_with<R: UnitSource + ?Sized>(
    topology: &Topology,
    rng: &mut R,
) -> Result<RoutingConfig> {
    let weights: Vec<f64> = (0..topology.num_links()).map(|_| rng.uniform(1.0, 2.0)).collect();
    shortest_path_routing(topology, &weights)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoutingViolation {
    MissingPath { src: usize, dst: usize },
    /// A path for an unordered or self pair, or with out-of-range nodes.
    UnexpectedPair { src: usize, dst: usize },
    WrongEndpoints { src: usize, dst: usize },
    NonexistentLink { src: usize, dst: usize, from: usize, to: usize },
    Loop { src: usize, dst: usize, node: usize },
}

impl fmt::Display for RoutingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RoutingViolation::MissingPath { src, dst } => write!(f, "{src}->{dst}: missing path"),
            RoutingViolation::UnexpectedPair { src, dst } => {
                write!(f, "{src}->{dst}: unexpected pair")
            }
            RoutingViolation::WrongEndpoints { src, dst } => {
                write!(f, "{src}->{dst}: path does not start at src and end at dst")
            }
            RoutingViolation::NonexistentLink { src, dst, from, to } => {
                write!(f, "{src}->{dst}: nonexistent link {from}->{to}")
            }
            RoutingViolation::Loop { src, dst, node } => {
                write!(f, "{src}->{dst}: loop through node {node}")
            }
        }
    }
}

/// Lists every broken routing invariant. Empty means valid.
pub fn validate_routing(topology: &Topology, routing: &RoutingConfig) -> Vec<RoutingViolation> {
    let n = topology.num_nodes();
    let mut report = Vec::new();
    if routing.num_nodes != n {
        report.push(RoutingViolation::UnexpectedPair { src: routing.num_nodes, dst: n });
    }
    for &(src, dst) in routing.paths.keys() {
        if src >= n || dst >= n || src == dst {
            report.push(RoutingViolation::UnexpectedPair { src, dst });
        }
    }
    for src in 0..n {
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let Some(path) = routing.path(src, dst) else {
                report.push(RoutingViolation::MissingPath { src, dst });
                continue;
            };
            if path.first() != Some(&src) || path.last() != Some(&dst) || path.len() < 2 {
                report.push(RoutingViolation::WrongEndpoints { src, dst });
            }
            for w in path.windows(2) {
                let in_range = w[0] < n && w[1] < n;
                if !in_range || topology.link_between(w[0], w[1]).is_none() {
                    report.push(RoutingViolation::NonexistentLink { src, dst, from: w[0], to: w[1] });
                }
            }
            let mut seen = BTreeMap::new();
            for &node in path {
                if seen.insert(node, ()).is_some() {
                    report.push(RoutingViolation::Loop { src, dst, node });
                    break;
                }
            }
        }
    }
    report
}

/// Canonical text form of a routing config, used for equality checks.
pub fn routing_fingerprint(routing: &RoutingConfig) -> String {
    let mut out = String::new();
    for ((s, d), path) in routing.iter() {
        out.push_str(&alloc::format!("{s}>{d}:"));
        for (i, node) in path.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&node.to_string());
        }
        out.push(';');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Topology {
        let nodes = vec!["A".into(), "B".into(), "C".into()];
        let mut links = Vec::new();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            links.push(Link { src: a, dst: b, capacity: 10.0, buffer_size: 4 });
            links.push(Link { src: b, dst: a, capacity: 10.0, buffer_size: 4 });
        }
        Topology::new(nodes, links).unwrap()
    }

    #[test]
    fn line_of_three_has_four_links() {
        let t = make_synthetic_topology(TopologyKind::Line, 3, (100.0, 100.0), 1).unwrap();
        assert_eq!(t.num_nodes(), 3);
        assert_eq!(t.num_links(), 4);
    }

    #[test]
    fn ring_out_degree_is_two() {
        let t = make_synthetic_topology(TopologyKind::Ring, 4, (10.0, 20.0), 3).unwrap();
        for v in 0..4 {
            assert_eq!(t.out_links(v).count(), 2);
        }
    }

    #[test]
    fn random_topology_is_deterministic() {
        let a = make_synthetic_topology(TopologyKind::RandomConnected, 8, (1e4, 4e4), 7).unwrap();
        let b = make_synthetic_topology(TopologyKind::RandomConnected, 8, (1e4, 4e4), 7).unwrap();
        assert_eq!(a, b);
        let c = make_synthetic_topology(TopologyKind::RandomConnected, 8, (1e4, 4e4), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn too_few_nodes_rejected() {
        let err = make_synthetic_topology(TopologyKind::Line, 1, (1.0, 2.0), 0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn invalid_topologies_rejected() {
        let link = |src, dst| Link { src, dst, capacity: 1.0, buffer_size: 1 };
        let names = || vec![String::from("a"), String::from("b")];
        assert!(Topology::new(names(), vec![link(0, 1)]).is_err(), "not strongly connected");
        assert!(Topology::new(names(), vec![link(0, 0), link(0, 1), link(1, 0)]).is_err());
        assert!(Topology::new(names(), vec![link(0, 1), link(0, 1), link(1, 0)]).is_err());
        let mut zero = link(0, 1);
        zero.capacity = 0.0;
        assert!(Topology::new(names(), vec![zero, link(1, 0)]).is_err());
        let mut nobuf = link(0, 1);
        nobuf.buffer_size = 0;
        assert!(Topology::new(names(), vec![nobuf, link(1, 0)]).is_err());
        assert!(Topology::new(names(), vec![link(0, 1), link(1, 0)]).is_ok());
    }

    #[test]
    fn triangle_unit_weights_use_direct_link() {
        let t = triangle();
        let r = shortest_path_routing(&t, &vec![1.0; t.num_links()]).unwrap();
        assert_eq!(r.path(0, 2).unwrap(), &[0, 2]);
    }

    #[test]
    fn triangle_heavy_direct_link_detours() {
        let t = triangle();
        let mut w = vec![1.0; t.num_links()];
        w[t.link_between(0, 2).unwrap()] = 3.0;
        let r = shortest_path_routing(&t, &w).unwrap();
        assert_eq!(r.path(0, 2).unwrap(), &[0, 1, 2]);
    }

    #[test]
    fn ties_break_lexicographically() {
        // square 0-1-3, 0-2-3: both two hops, prefer via 1
        let nodes = (0..4).map(|i| alloc::format!("{i}")).collect();
        let mut links = Vec::new();
        for (a, b) in [(0, 1), (1, 3), (0, 2), (2, 3)] {
            links.push(Link { src: a, dst: b, capacity: 1.0, buffer_size: 1 });
            links.push(Link { src: b, dst: a, capacity: 1.0, buffer_size: 1 });
        }
        let t = Topology::new(nodes, links).unwrap();
        let r = shortest_path_routing(&t, &vec![1.0; t.num_links()]).unwrap();
        assert_eq!(r.path(0, 3).unwrap(), &[0, 1, 3]);
        assert_eq!(r.path(3, 0).unwrap(), &[3, 1, 0]);
    }

    #[test]
    fn routing_variation_is_deterministic_and_valid() {
        let t = make_synthetic_topology(TopologyKind::RandomConnected, 6, (1.0, 2.0), 11).unwrap();
        let a = generate_routing_variation(&t, 5).unwrap();
        let b = generate_routing_variation(&t, 5).unwrap();
        assert_eq!(routing_fingerprint(&a), routing_fingerprint(&b));
        assert!(validate_routing(&t, &a).is_empty());
    }

    #[test]
    fn line_routing_is_unique() {
        let t = make_synthetic_topology(TopologyKind::Line, 5, (1.0, 1.0), 0).unwrap();
        let base = routing_fingerprint(&generate_routing_variation(&t, 0).unwrap());
        for seed in 1..20 {
            assert_eq!(routing_fingerprint(&generate_routing_variation(&t, seed).unwrap()), base);
        }
    }

    #[test]
    fn validation_flags_injected_faults() {
        let t = triangle();
        let good = shortest_path_routing(&t, &vec![1.0; t.num_links()]).unwrap();
        assert!(validate_routing(&t, &good).is_empty());

        // Line A-B-C: no A->C link.
        let nodes = vec!["A".into(), "B".into(), "C".into()];
        let mut links = Vec::new();
        for (a, b) in [(0, 1), (1, 2)] {
            links.push(Link { src: a, dst: b, capacity: 1.0, buffer_size: 1 });
            links.push(Link { src: b, dst: a, capacity: 1.0, buffer_size: 1 });
        }
        let line = Topology::new(nodes, links).unwrap();
        let mut paths = shortest_path_routing(&line, &[1.0; 4]).unwrap().paths;
        paths.insert((0, 2), vec![0, 2]);
        let report = validate_routing(&line, &RoutingConfig::from_paths(3, paths));
        assert_eq!(
            report,
            vec![RoutingViolation::NonexistentLink { src: 0, dst: 2, from: 0, to: 2 }]
        );

        let mut paths = good.paths.clone();
        paths.insert((0, 2), vec![0, 1, 0, 2]);
        let report = validate_routing(&t, &RoutingConfig::from_paths(3, paths));
        assert_eq!(report, vec![RoutingViolation::Loop { src: 0, dst: 2, node: 0 }]);

        let mut paths = good.paths.clone();
        paths.remove(&(1, 0));
        let report = validate_routing(&t, &RoutingConfig::from_paths(3, paths));
        assert_eq!(report, vec![RoutingViolation::MissingPath { src: 1, dst: 0 }]);
    }

    #[test]
    fn scheduling_weights_validated() {
        assert!(NodeScheduling::new(Policy::Wfq, [10, 30, 60]).is_ok());
        assert!(NodeScheduling::new(Policy::Wfq, [10, 30, 50]).is_err());
        assert!(NodeScheduling::new(Policy::Drr, [0, 40, 60]).is_err());
        assert!(NodeScheduling::new(Policy::Sp, [0, 40, 60]).is_ok());
        assert_eq!("DRR".parse::<Policy>().unwrap(), Policy::Drr);
        assert!("FIFO".parse::<Policy>().is_err());
    }
}
