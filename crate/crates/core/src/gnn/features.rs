use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::math::sqrt;
use crate::nn::Tensor;
use crate::sample::Sample;
use crate::topology::{Policy, NUM_QUEUES};
use crate::traffic::NUM_TOS;

/// avg_rate, pkt_rate, avg_pkt_size, ToS one-hot (3), hop count, bottleneck
/// capacity, rate over bottleneck, mean weight share of the flow's queue,
/// fraction of strict-priority hops.
pub const PATH_FEATURES: usize = 11;
/// capacity, source-node policy one-hot (3), source-node weights (3).
pub const LINK_FEATURES: usize = 7;
/// policy one-hot (3), weights (3).
pub const NODE_FEATURES: usize = 6;

const PATH_NUMERIC: [bool; PATH_FEATURES] = [true, true, true, false, false, false, true, true, true, true, true];
const LINK_NUMERIC: [bool; LINK_FEATURES] = [true, false, false, false, true, true, true];
const NODE_NUMERIC: [bool; NODE_FEATURES] = [false, false, false, true, true, true];

/// Numeric columns with spread below this encode as zero.
pub const ZERO_SPREAD_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    Standardize,
    MinMax,
}

impl Scaling {
    pub fn as_str(self) -> &'static str {
        match self {
            Scaling::Standardize => "standardize",
            Scaling::MinMax => "minmax",
        }
    }
}

impl core::str::FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standardize" => Ok(Scaling::Standardize),
            "minmax" => Ok(Scaling::MinMax),
            other => Err(Error::UnknownCategory(alloc::format!("scaling {other:?}"))),
        }
    }
}

/// Population statistics of one raw feature column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl ColumnStats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values.clone() {
            n += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        }
        if n == 0 {
            return ColumnStats { mean: 0.0, std: 0.0, min: 0.0, max: 0.0 };
        }
        let mean = sum / n as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        ColumnStats { mean, std: sqrt(var), min, max }
    }

    fn scale(&self, x: f64, scaling: Scaling) -> f64 {
        match scaling {
            Scaling::Standardize if self.std < ZERO_SPREAD_GUARD => 0.0,
            Scaling::Standardize => (x - self.mean) / self.std,
            Scaling::MinMax if self.max - self.min < ZERO_SPREAD_GUARD => 0.0,
            Scaling::MinMax => (x - self.min) / (self.max - self.min),
        }
    }
}

/// Raw per-entity feature rows of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures {
    pub path: Vec<[f64; PATH_FEATURES]>,
    pub link: Vec<[f64; LINK_FEATURES]>,
    pub node: Vec<[f64; NODE_FEATURES]>,
}

fn policy_one_hot(p: Policy) -> [f64; 3] {
    let mut v = [0.0; 3];
    v[p.index()] = 1.0;
    v
}

/// Share of its port a queue can count on: the weight fraction under
/// WFQ/DRR, all-or-nothing priority under SP.
fn queue_share(policy: Policy, weights: &[u32; NUM_QUEUES], tos: usize) -> f64 {
    match policy {
        Policy::Sp => {
            if tos == 0 {
                1.0
            } else {
                0.0
            }
        }
        Policy::Wfq | Policy::Drr => weights[tos] as f64 / 100.0,
    }
}

pub fn raw_features(sample: &Sample) -> Result<RawFeatures> {
    let topo = &sample.topology;
    let sched = &sample.scheduling;
    if sched.len() != topo.num_nodes() {
        return Err(invalid_arg!("sample {}: scheduling/topology size mismatch", sample.sample_id));
    }
    let mut path = Vec::with_capacity(sample.traffic.len());
    for f in sample.traffic.flows() {
        let tos = f.tos as usize;
        if tos >= NUM_TOS as usize {
            return Err(Error::UnknownCategory(alloc::format!("tos {}", f.tos)));
        }
        let links = sample
            .routing
            .path_links(topo, f.src, f.dst)
            .map_err(|e| Error::InvalidInput(alloc::format!("sample {}: {e}", sample.sample_id)))?;
        let hops = links.len() as f64;
        let mut min_cap = f64::INFINITY;
        let mut share = 0.0;
        let mut sp = 0.0;
        for &l in &links {
            let link = &topo.links()[l];
            min_cap = min_cap.min(link.capacity);
            let ns = sched.node(link.src);
            share += queue_share(ns.policy, &ns.weights, tos);
            if ns.policy == Policy::Sp {
                sp += 1.0;
            }
        }
        let mut row = [0.0; PATH_FEATURES];
        row[0] = f.avg_rate;
        row[1] = f.pkt_rate;
        row[2] = f.avg_pkt_size;
        row[3 + tos] = 1.0;
        row[6] = hops;
        row[7] = min_cap;
        row[8] = f.avg_rate / min_cap;
        row[9] = share / hops;
        row[10] = sp / hops;
        path.push(row);
    }
    let link = topo
        .links()
        .iter()
        .map(|l| {
            let ns = sched.node(l.src);
            let oh = policy_one_hot(ns.policy);
            [
                l.capacity,
                oh[0],
                oh[1],
                oh[2],
                ns.weights[0] as f64 / 100.0,
                ns.weights[1] as f64 / 100.0,
                ns.weights[2] as f64 / 100.0,
            ]
        })
        .collect();
    let node = sched
        .nodes()
        .iter()
        .map(|ns| {
            let oh = policy_one_hot(ns.policy);
            [
                oh[0],
                oh[1],
                oh[2],
                ns.weights[0] as f64 / 100.0,
                ns.weights[1] as f64 / 100.0,
                ns.weights[2] as f64 / 100.0,
            ]
        })
        .collect();
    Ok(RawFeatures { path, link, node })
}

/// Scaling mode plus per-column statistics fitted on a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoding {
    pub scaling: Scaling,
    pub path: Vec<ColumnStats>,
    pub link: Vec<ColumnStats>,
    pub node: Vec<ColumnStats>,
}

fn fit_columns<const N: usize>(rows: &[[f64; N]]) -> Vec<ColumnStats> {
    (0..N).map(|c| ColumnStats::of(rows.iter().map(move |r| r[c]))).collect()
}

impl FeatureEncoding {
    pub fn fit(training: &[Sample], scaling: Scaling) -> Result<Self> {
        if training.is_empty() {
            return Err(invalid_arg!("feature statistics need at least one training sample"));
        }
        let mut path = Vec::new();
        let mut link = Vec::new();
        let mut node = Vec::new();
        for s in training {
            let raw = raw_features(s)?;
            path.extend(raw.path);
            link.extend(raw.link);
            node.extend(raw.node);
        }
        Ok(FeatureEncoding { scaling, path: fit_columns(&path), link: fit_columns(&link), node: fit_columns(&node) })
    }

    /// Initial path, link and node states, each zero-padded to its width.
    pub fn encode(&self, sample: &Sample, widths: [usize; 3]) -> Result<InitialStates> {
        if self.path.len() != PATH_FEATURES || self.link.len() != LINK_FEATURES || self.node.len() != NODE_FEATURES {
            return Err(Error::InvalidInput("feature statistics have the wrong column counts".into()));
        }
        let raw = raw_features(sample)?;
        Ok(InitialStates {
            path: encode_rows(&raw.path, &self.path, &PATH_NUMERIC, self.scaling, widths[0])?,
            link: encode_rows(&raw.link, &self.link, &LINK_NUMERIC, self.scaling, widths[1])?,
            node: encode_rows(&raw.node, &self.node, &NODE_NUMERIC, self.scaling, widths[2])?,
        })
    }
}

fn encode_rows<const N: usize>(
    rows: &[[f64; N]],
    stats: &[ColumnStats],
    numeric: &[bool; N],
    scaling: Scaling,
    width: usize,
) -> Result<Tensor> {
    if width < N {
        return Err(invalid_arg!("state width {width} below {N} raw features"));
    }
    let mut data = vec![0.0; rows.len() * width];
    for (r, row) in rows.iter().enumerate() {
        for c in 0..N {
            data[r * width + c] = if numeric[c] { stats[c].scale(row[c], scaling) } else { row[c] };
        }
    }
    Tensor::matrix(rows.len(), width, data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialStates {
    pub path: Tensor,
    pub link: Tensor,
    pub node: Tensor,
}

pub fn encode_features(sample: &Sample, encoding: &FeatureEncoding, widths: [usize; 3]) -> Result<InitialStates> {
    encoding.encode(sample, widths)
}
