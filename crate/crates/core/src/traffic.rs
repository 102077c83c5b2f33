//! Traffic matrices and per-packet arrival and size processes.

use alloc::vec::Vec;

use crate::error::Result;
use crate::invalid_arg;
use crate::math::{ln, round9};
use crate::rng::UnitSource;
use crate::topology::Topology;

/// Bounds of a sample's reference maximum traffic intensity.
pub const TI_MAX_RANGE: (f64, f64) = (400.0, 2000.0);
/// Bounds of a flow's rate as a fraction of `ti_max`.
pub const RATE_FRACTION_RANGE: (f64, f64) = (0.1, 1.0);
/// Packet sizes of the bimodal mixture, in bits, drawn with equal probability.
pub const SMALL_PACKET: f64 = 300.0;
pub const LARGE_PACKET: f64 = 1700.0;
/// Mean of the size mixture.
pub const MEAN_PACKET_SIZE: f64 = 1000.0;
pub const NUM_TOS: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub src: usize,
    pub dst: usize,
    pub tos: u8,
    /// Bits per time unit.
    pub avg_rate: f64,
    /// Bits.
    pub avg_pkt_size: f64,
    /// Packets per time unit.
    pub pkt_rate: f64,
}

impl FlowSpec {
    /// A flow with the mixture's mean packet size.
    pub fn new(src: usize, dst: usize, tos: u8, avg_rate: f64) -> Result<Self> {
        Self::with_parts(src, dst, tos, avg_rate, MEAN_PACKET_SIZE, round9(avg_rate / MEAN_PACKET_SIZE))
    }

    /// Checks and assembles a flow from serialized fields.
    pub fn with_parts(
        src: usize,
        dst: usize,
        tos: u8,
        avg_rate: f64,
        avg_pkt_size: f64,
        pkt_rate: f64,
    ) -> Result<Self> {
        if tos >= NUM_TOS {
            return Err(invalid_arg!("tos must be in 0..{NUM_TOS}, got {tos}"));
        }
        if !(avg_rate > 0.0 && avg_rate.is_finite()) {
            return Err(invalid_arg!("avg_rate must be positive, got {avg_rate}"));
        }
        if !(avg_pkt_size > 0.0 && avg_pkt_size.is_finite()) {
            return Err(invalid_arg!("avg_pkt_size must be positive, got {avg_pkt_size}"));
        }
        if src == dst {
            return Err(invalid_arg!("flow {src} -> {dst} is a self pair"));
        }
        let rel = ((pkt_rate * avg_pkt_size - avg_rate) / avg_rate).abs();
        if rel > 1e-9 {
            return Err(invalid_arg!(
                "pkt_rate * avg_pkt_size = {} does not match avg_rate {avg_rate}",
                pkt_rate * avg_pkt_size
            ));
        }
        Ok(FlowSpec { src, dst, tos, avg_rate, avg_pkt_size, pkt_rate })
    }

    pub fn key(&self) -> (usize, usize) {
        (self.src, self.dst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    flows: Vec<FlowSpec>,
    pub ti_max: f64,
}

impl TrafficMatrix {
    /// Wraps flows, sorting them by `(src, dst)`. Duplicate keys are rejected.
    pub fn from_flows(mut flows: Vec<FlowSpec>, ti_max: f64) -> Result<Self> {
        flows.sort_by_key(FlowSpec::key);
        if let Some(w) = flows.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(invalid_arg!("duplicate flow {:?}", w[0].key()));
        }
        Ok(TrafficMatrix { flows, ti_max })
    }

    pub fn empty() -> Self {
        TrafficMatrix { flows: Vec::new(), ti_max: 0.0 }
    }

    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Checks the full-matrix invariants for an `n`-node topology.
    pub fn validate_complete(&self, n: usize) -> Result<()> {
        if self.flows.len() != n * (n - 1) {
            return Err(invalid_arg!("expected {} flows, found {}", n * (n - 1), self.flows.len()));
        }
        let (lo, hi) = TI_MAX_RANGE;
        if !(lo..=hi).contains(&self.ti_max) {
            return Err(invalid_arg!("ti_max {} outside [{lo}, {hi}]", self.ti_max));
        }
        for f in &self.flows {
            if f.src >= n || f.dst >= n {
                return Err(invalid_arg!("flow {:?} references unknown node", f.key()));
            }
            let lo = RATE_FRACTION_RANGE.0 * self.ti_max * (1.0 - 1e-8);
            let hi = RATE_FRACTION_RANGE.1 * self.ti_max * (1.0 + 1e-8);
            if f.avg_rate < lo || f.avg_rate > hi {
                return Err(invalid_arg!("flow {:?} rate {} outside bounds", f.key(), f.avg_rate));
            }
        }
        Ok(())
    }
}

/// Draws a traffic matrix: `ti_max ~ U[400, 2000]`, then per ordered pair in
/// `(src, dst)` order a rate `U[0.1, 1] * ti_max` followed by a uniform ToS.
///
/// Rates are rounded to 9 significant digits, the on-disk precision.
pub fn sample_traffic_matrix<R: UnitSource + ?Sized>(topology: &Topology, rng: &mut R) -> TrafficMatrix {
    let ti_max = round9(rng.uniform(TI_MAX_RANGE.0, TI_MAX_RANGE.1));
    let n = topology.num_nodes();
    let mut flows = Vec::with_capacity(n * (n - 1));
    for src in 0..n {
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let frac = rng.uniform(RATE_FRACTION_RANGE.0, RATE_FRACTION_RANGE.1);
            let avg_rate = round9(frac * ti_max);
            let tos = rng.index(NUM_TOS as usize) as u8;
            flows.push(FlowSpec {
                src,
                dst,
                tos,
                avg_rate,
                avg_pkt_size: MEAN_PACKET_SIZE,
                pkt_rate: round9(avg_rate / MEAN_PACKET_SIZE),
            });
        }
    }
    TrafficMatrix { flows, ti_max }
}

/// Exponential inter-arrival gap with mean `1 / pkt_rate`; always `> 0`.
pub fn next_interarrival<R: UnitSource + ?Sized>(flow: &FlowSpec, rng: &mut R) -> f64 {
    exponential(flow.pkt_rate, rng)
}

/// Exponential draw by inversion, `-ln(1 - u) / rate`.
pub fn exponential<R: UnitSource + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    -ln(1.0 - rng.unit_open()) / rate
}

/// Two-point size mixture: 300 bits below the median draw, 1700 above.
pub fn sample_packet_size<R: UnitSource + ?Sized>(rng: &mut R) -> f64 {
    if rng.unit() < 0.5 {
        SMALL_PACKET
    } else {
        LARGE_PACKET
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, PinnedSource};
    use crate::topology::{make_synthetic_topology, TopologyKind};

    fn five() -> Topology {
        make_synthetic_topology(TopologyKind::Ring, 5, (1e4, 1e4), 0).unwrap()
    }

    #[test]
    fn upper_bound_draws() {
        let tm = sample_traffic_matrix(&five(), &mut PinnedSource(1.0));
        assert_eq!(tm.ti_max, 2000.0);
        assert!(tm.flows().iter().all(|f| f.avg_rate == 2000.0 && f.tos == 2));
    }

    #[test]
    fn lower_bound_draws() {
        let tm = sample_traffic_matrix(&five(), &mut PinnedSource(0.0));
        assert_eq!(tm.ti_max, 400.0);
        assert!(tm.flows().iter().all(|f| f.avg_rate == 40.0 && f.tos == 0));
    }

    #[test]
    fn one_flow_per_ordered_pair() {
        let tm = sample_traffic_matrix(&five(), &mut stream_rng(3, 0));
        assert_eq!(tm.len(), 20);
        tm.validate_complete(5).unwrap();
        for f in tm.flows() {
            assert!((f.pkt_rate * f.avg_pkt_size - f.avg_rate).abs() <= 1e-9 * f.avg_rate);
            assert_eq!(f.avg_pkt_size, MEAN_PACKET_SIZE);
        }
    }

    #[test]
    fn mean_rate_matches_product_of_uniform_means() {
        let topo = five();
        let mut rng = stream_rng(99, 0);
        let (mut sum, mut count) = (0.0, 0usize);
        for _ in 0..10_000 {
            for f in sample_traffic_matrix(&topo, &mut rng).flows() {
                sum += f.avg_rate;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!((mean - 660.0).abs() / 660.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn interarrival_mean_and_median() {
        let flow = FlowSpec::new(0, 1, 0, 2000.0).unwrap();
        assert_eq!(flow.pkt_rate, 2.0);
        let mut rng = stream_rng(5, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = next_interarrival(&flow, &mut rng);
            assert!(d > 0.0);
            sum += d;
        }
        assert!((sum / n as f64 - 0.5).abs() / 0.5 < 0.01);
        let median = next_interarrival(&flow, &mut PinnedSource(0.5));
        assert!((median - core::f64::consts::LN_2 / 2.0).abs() < 1e-15);
        assert!(next_interarrival(&flow, &mut PinnedSource(0.0)) > 0.0);
    }

    #[test]
    fn packet_size_mixture() {
        assert_eq!(sample_packet_size(&mut PinnedSource(0.0)), 300.0);
        assert_eq!(sample_packet_size(&mut PinnedSource(1.0)), 1700.0);
        let mut rng = stream_rng(6, 0);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| sample_packet_size(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1000.0).abs() / 1000.0 < 0.01);
    }

    #[test]
    fn flow_validation() {
        assert!(FlowSpec::new(0, 1, 3, 10.0).is_err());
        assert!(FlowSpec::new(0, 1, 0, 0.0).is_err());
        assert!(FlowSpec::new(1, 1, 0, 10.0).is_err());
        assert!(FlowSpec::with_parts(0, 1, 0, 100.0, 1000.0, 0.2).is_err());
    }
}
