//! Labeled scenarios and their seeded generation.
//!
//! A sample bundles a topology, a routing variation, per-node scheduling, a
//! traffic matrix and, when labeled, the simulator's per-flow statistics.
//! Sample `i` of a dataset is a pure function of the master seed and `i`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::math::round9;
use crate::rng::{stream_rng, UnitSource};
use crate::sim::{run_simulation, PerFlowStats, SimConfig};
use crate::topology::{
    generate_routing_variation_with, validate_routing, NodeScheduling, Policy, RoutingConfig,
    SchedulingConfig, Topology, DEFAULT_WEIGHTS, NUM_QUEUES,
};
use crate::traffic::{sample_traffic_matrix, TrafficMatrix};

/// Queue-weight triples drawn by the variable-weight tiers.
pub const WEIGHT_POOL: [[u32; NUM_QUEUES]; 4] = [[10, 30, 60], [33, 33, 34], [60, 30, 10], [20, 20, 60]];

/// Identifies one flow prediction: `(sample_id, src, dst)`.
pub type FlowKey = (u64, usize, usize);

/// Difficulty tier of a sample's scheduling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    /// WFQ everywhere with weights (10,30,60).
    FixedWfq,
    /// WFQ everywhere, weights drawn per node from [`WEIGHT_POOL`].
    VariableWeights,
    /// Policy drawn per node, weights (10,30,60).
    MixedPolicies,
    /// Policy and weights drawn per node.
    MixedPoliciesAndWeights,
}

impl Tier {
    pub const ALL: [Tier; 4] =
        [Tier::FixedWfq, Tier::VariableWeights, Tier::MixedPolicies, Tier::MixedPoliciesAndWeights];

    /// Tier of sample `index`: round robin, so with `n` samples the
    /// remainder of `n / 4` falls on the lowest tiers.
    pub fn for_index(index: u64) -> Tier {
        Tier::ALL[(index % 4) as usize]
    }

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    /// Number of samples in each tier out of `n`.
    pub fn counts(n: u64) -> [u64; 4] {
        core::array::from_fn(|t| n / 4 + u64::from((t as u64) < n % 4))
    }

    /// Draws the per-node scheduling for this tier.
    pub fn draw_scheduling<R: UnitSource + ?Sized>(self, num_nodes: usize, rng: &mut R) -> SchedulingConfig {
        let nodes = (0..num_nodes)
            .map(|_| {
                let policy = match self {
                    Tier::FixedWfq | Tier::VariableWeights => Policy::Wfq,
                    _ => Policy::ALL[rng.index(Policy::ALL.len())],
                };
                let weights = match self {
                    Tier::FixedWfq | Tier::MixedPolicies => DEFAULT_WEIGHTS,
                    _ => WEIGHT_POOL[rng.index(WEIGHT_POOL.len())],
                };
                NodeScheduling { policy, weights }
            })
            .collect();
        SchedulingConfig::new(nodes).expect("pool weights are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub sample_id: u64,
    pub topology_id: String,
    pub topology: Arc<Topology>,
    pub routing: RoutingConfig,
    pub scheduling: SchedulingConfig,
    pub traffic: TrafficMatrix,
    /// One row per flow, in traffic order. `None` for unlabeled samples.
    pub labels: Option<Vec<PerFlowStats>>,
}

impl Sample {
    /// Checks structural consistency between parts and labels.
    pub fn validate(&self) -> Result<()> {
        let n = self.topology.num_nodes();
        if let Some(v) = validate_routing(&self.topology, &self.routing).first() {
            return Err(Error::InvalidRouting(alloc::format!("sample {}: {v}", self.sample_id)));
        }
        if self.scheduling.len() != n {
            return Err(invalid_arg!("sample {}: scheduling covers {} of {n} nodes", self.sample_id, self.scheduling.len()));
        }
        for f in self.traffic.flows() {
            if f.src >= n || f.dst >= n {
                return Err(invalid_arg!("sample {}: flow {:?} outside topology", self.sample_id, f.key()));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.traffic.len() {
                return Err(invalid_arg!(
                    "sample {}: {} label rows for {} flows",
                    self.sample_id,
                    labels.len(),
                    self.traffic.len()
                ));
            }
            for (l, f) in labels.iter().zip(self.traffic.flows()) {
                if (l.src, l.dst) != f.key() {
                    return Err(invalid_arg!(
                        "sample {}: label key {:?} does not match flow {:?}",
                        self.sample_id,
                        (l.src, l.dst),
                        f.key()
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    pub fn tier(&self) -> Tier {
        Tier::for_index(self.sample_id)
    }

    pub fn flow_keys(&self) -> impl Iterator<Item = FlowKey> + '_ {
        self.traffic.flows().iter().map(|f| (self.sample_id, f.src, f.dst))
    }
}

/// A named topology a dataset draws from.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTopology {
    pub id: String,
    pub topology: Arc<Topology>,
}

/// Builds and labels sample `index`.
///
/// Topologies rotate every four samples so each topology sees every tier.
/// From the sample's stream the draws are, in order: routing weights,
/// scheduling, traffic matrix, simulator seed.
pub fn generate_sample(
    topologies: &[NamedTopology],
    index: u64,
    master_seed: u64,
    sim: &SimConfig,
) -> Result<Sample> {
    if topologies.is_empty() {
        return Err(invalid_arg!("no topologies to draw samples from"));
    }
    let named = &topologies[((index / 4) % topologies.len() as u64) as usize];
    let topology = &named.topology;
    let mut rng = stream_rng(master_seed, index);
    let routing = generate_routing_variation_with(topology.as_ref(), &mut rng)?;
    let scheduling = Tier::for_index(index).draw_scheduling(topology.num_nodes(), &mut rng);
    let traffic = sample_traffic_matrix(topology, &mut rng);
    let sim_seed = rand_core::RngCore::next_u64(&mut rng);
    let cfg = SimConfig { seed: sim_seed, ..*sim };
    let report = run_simulation(topology, &routing, &scheduling, &traffic, &cfg)?;
    let labels = report.flows.into_iter().map(round_stats).collect();
    Ok(Sample {
        sample_id: index,
        topology_id: named.id.clone(),
        topology: Arc::clone(topology),
        routing,
        scheduling,
        traffic,
        labels: Some(labels),
    })
}

/// Rounds every float to the 9 significant digits kept on disk.
pub fn round_stats(s: PerFlowStats) -> PerFlowStats {
    PerFlowStats {
        delay_mean: round9(s.delay_mean),
        jitter: round9(s.jitter),
        p10: round9(s.p10),
        p20: round9(s.p20),
        p50: round9(s.p50),
        p80: round9(s.p80),
        p90: round9(s.p90),
        ..s
    }
}
