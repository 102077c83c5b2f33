//! Dataset directories: `manifest.json` plus one JSON sample per line in
//! `samples.jsonl`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use flowtwin_core::sample::{generate_sample, NamedTopology};
use flowtwin_core::{FlowSpec, PerFlowStats, RoutingConfig, Sample, SchedulingConfig, SimConfig, Tier, Topology, TrafficMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sig9;
use crate::topo_io::{SchedulingRecord, TopologyFile};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SAMPLES_FILE: &str = "samples.jsonl";
/// Present while a directory is being written; a reader refuses it.
pub const PARTIAL_MARKER: &str = "PARTIAL";
pub const FORMAT: &str = "flowtwin-dataset";
pub const GENERATOR_VERSION: &str = concat!("flowtwin ", env!("CARGO_PKG_VERSION"));
pub const TIER_NOTE: &str = "tier 1: all WFQ (10,30,60); tier 2: all WFQ, per-node weights from the pool; \
tier 3: per-node policy from SP/WFQ/DRR with (10,30,60) (extrapolated); \
tier 4: per-node policy and pool weights (extrapolated)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRecord {
    #[serde(serialize_with = "sig9")]
    pub warmup: f64,
    #[serde(serialize_with = "sig9")]
    pub duration: f64,
    #[serde(serialize_with = "sig9")]
    pub propagation_delay: f64,
    pub drain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub generator_version: String,
    pub split: String,
    pub master_seed: u64,
    pub sample_count: u64,
    pub topology_ids: Vec<String>,
    pub topologies: BTreeMap<String, TopologyFile>,
    pub tier_counts: [u64; 4],
    pub tier_proportions: [f64; 4],
    pub tier_note: String,
    pub simulation: SimRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowRecord {
    pub src: usize,
    pub dst: usize,
    pub tos: u8,
    #[serde(serialize_with = "sig9")]
    pub avg_rate: f64,
    #[serde(serialize_with = "sig9")]
    pub avg_pkt_size: f64,
    #[serde(serialize_with = "sig9")]
    pub pkt_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub src: usize,
    pub dst: usize,
    #[serde(serialize_with = "sig9")]
    pub delay_mean: f64,
    #[serde(serialize_with = "sig9")]
    pub jitter: f64,
    #[serde(serialize_with = "sig9")]
    pub p10: f64,
    #[serde(serialize_with = "sig9")]
    pub p20: f64,
    #[serde(serialize_with = "sig9")]
    pub p50: f64,
    #[serde(serialize_with = "sig9")]
    pub p80: f64,
    #[serde(serialize_with = "sig9")]
    pub p90: f64,
    pub drops: u64,
    pub delivered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub topology_id: String,
    #[serde(serialize_with = "sig9")]
    pub ti_max: f64,
    /// One node sequence per ordered pair, lexicographic by endpoints.
    pub routing: Vec<Vec<usize>>,
    pub scheduling: Vec<SchedulingRecord>,
    pub flows: Vec<FlowRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<LabelRecord>>,
}

impl SampleRecord {
    pub fn from_sample(s: &Sample) -> Self {
        SampleRecord {
            sample_id: s.sample_id,
            topology_id: s.topology_id.clone(),
            ti_max: s.traffic.ti_max,
            routing: s.routing.iter().map(|(_, p)| p.to_vec()).collect(),
            scheduling: s.scheduling.nodes().iter().map(SchedulingRecord::from_node).collect(),
            flows: s
                .traffic
                .flows()
                .iter()
                .map(|f| FlowRecord {
                    src: f.src,
                    dst: f.dst,
                    tos: f.tos,
                    avg_rate: f.avg_rate,
                    avg_pkt_size: f.avg_pkt_size,
                    pkt_rate: f.pkt_rate,
                })
                .collect(),
            labels: s.labels.as_ref().map(|ls| {
                ls.iter()
                    .map(|l| LabelRecord {
                        src: l.src,
                        dst: l.dst,
                        delay_mean: l.delay_mean,
                        jitter: l.jitter,
                        p10: l.p10,
                        p20: l.p20,
                        p50: l.p50,
                        p80: l.p80,
                        p90: l.p90,
                        drops: l.drops,
                        delivered: l.delivered,
                    })
                    .collect()
            }),
        }
    }

    pub fn to_sample(&self, topology: Arc<Topology>, with_labels: bool) -> Result<Sample> {
        let n = topology.num_nodes();
        let mut paths = BTreeMap::new();
        for (i, p) in self.routing.iter().enumerate() {
            let (Some(&a), Some(&b)) = (p.first(), p.last()) else {
                bail!("field routing[{i}]: empty path");
            };
            if paths.insert((a, b), p.clone()).is_some() {
                bail!("field routing[{i}]: second path for ({a},{b})");
            }
        }
        let routing = RoutingConfig::from_paths(n, paths);
        let nodes = self
            .scheduling
            .iter()
            .enumerate()
            .map(|(i, r)| r.to_node().with_context(|| format!("field scheduling[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let scheduling = SchedulingConfig::new(nodes).context("field scheduling")?;
        let flows = self
            .flows
            .iter()
            .enumerate()
            .map(|(i, f)| {
                FlowSpec::with_parts(f.src, f.dst, f.tos, f.avg_rate, f.avg_pkt_size, f.pkt_rate)
                    .with_context(|| format!("field flows[{i}]"))
            })
            .collect::<Result<Vec<_>>>()?;
        let traffic = TrafficMatrix::from_flows(flows, self.ti_max).context("field flows")?;
        let labels = match (&self.labels, with_labels) {
            (Some(ls), true) => Some(
                ls.iter()
                    .map(|l| PerFlowStats {
                        src: l.src,
                        dst: l.dst,
                        delay_mean: l.delay_mean,
                        jitter: l.jitter,
                        p10: l.p10,
                        p20: l.p20,
                        p50: l.p50,
                        p80: l.p80,
                        p90: l.p90,
                        drops: l.drops,
                        delivered: l.delivered,
                    })
                    .collect(),
            ),
            _ => None,
        };
        let sample = Sample {
            sample_id: self.sample_id,
            topology_id: self.topology_id.clone(),
            topology,
            routing,
            scheduling,
            traffic,
            labels,
        };
        sample.validate()?;
        if let Some(ls) = &sample.labels {
            if let Some(i) = ls.iter().position(|l| !l.is_consistent()) {
                bail!("field labels[{i}]: inconsistent statistics");
            }
        }
        Ok(sample)
    }
}

fn tier_proportions(counts: [u64; 4], total: u64) -> [f64; 4] {
    counts.map(|c| c as f64 / total as f64)
}

/// Writes a dataset directory, samples in the given order.
pub fn write_dataset(dir: &Path, manifest: &Manifest, samples: &[Sample]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let marker = dir.join(PARTIAL_MARKER);
    std::fs::write(&marker, "generation in progress\n").with_context(|| format!("writing {}", marker.display()))?;
    let path = dir.join(SAMPLES_FILE);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    for s in samples {
        serde_json::to_writer(&mut w, &SampleRecord::from_sample(s))?;
        w.write_all(b"\n")?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), text).context("writing manifest")?;
    std::fs::remove_file(&marker).context("removing partial-output marker")?;
    Ok(())
}

/// Generates `n_samples` labeled samples round-robin over `topologies`
/// and writes them to `dir`.
pub fn generate_dataset(
    dir: &Path,
    split: &str,
    topologies: &[(String, TopologyFile)],
    n_samples: u64,
    master_seed: u64,
    sim: &SimConfig,
) -> Result<Manifest> {
    if n_samples < 4 {
        bail!("at least 4 samples are needed, one per tier; got {n_samples}");
    }
    if topologies.is_empty() {
        bail!("no topologies given");
    }
    let mut named = Vec::new();
    let mut files = BTreeMap::new();
    for (id, file) in topologies {
        if files.insert(id.clone(), file.clone()).is_some() {
            bail!("topology id {id:?} given twice");
        }
        named.push(NamedTopology { id: id.clone(), topology: Arc::new(file.to_topology()?) });
    }
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|i| generate_sample(&named, i, master_seed, sim).with_context(|| format!("sample {i}")))
        .collect::<Result<Vec<_>>>()?;
    let tier_counts = Tier::counts(n_samples);
    let manifest = Manifest {
        format: FORMAT.into(),
        generator_version: GENERATOR_VERSION.into(),
        split: split.into(),
        master_seed,
        sample_count: n_samples,
        topology_ids: topologies.iter().map(|(id, _)| id.clone()).collect(),
        topologies: files,
        tier_counts,
        tier_proportions: tier_proportions(tier_counts, n_samples),
        tier_note: TIER_NOTE.into(),
        simulation: SimRecord {
            warmup: sim.warmup,
            duration: sim.duration,
            propagation_delay: sim.propagation_delay,
            drain: sim.drain,
        },
    };
    write_dataset(dir, &manifest, &samples)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    if dir.join(PARTIAL_MARKER).exists() {
        bail!("{} holds partial output from an aborted generation", dir.display());
    }
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if m.format != FORMAT {
        bail!("{}: format {:?} is not {FORMAT:?}", path.display(), m.format);
    }
    let sum: f64 = m.tier_proportions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        bail!("{}: tier proportions sum to {sum}", path.display());
    }
    Ok(m)
}

/// Streams the samples of a dataset directory in `sample_id` order.
pub struct SampleReader {
    lines: std::io::Lines<BufReader<File>>,
    topologies: BTreeMap<String, Arc<Topology>>,
    with_labels: bool,
    index: usize,
    expected: u64,
    last_id: Option<u64>,
    path: PathBuf,
    done: bool,
}

impl SampleReader {
    pub fn open(dir: &Path, with_labels: bool) -> Result<(Manifest, Self)> {
        let manifest = read_manifest(dir)?;
        let mut topologies = BTreeMap::new();
        for (id, file) in &manifest.topologies {
            topologies.insert(id.clone(), Arc::new(file.to_topology().with_context(|| format!("manifest topology {id}"))?));
        }
        let path = dir.join(SAMPLES_FILE);
        let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let reader = SampleReader {
            lines: BufReader::new(file).lines(),
            topologies,
            with_labels,
            index: 0,
            expected: manifest.sample_count,
            last_id: None,
            path,
            done: false,
        };
        Ok((manifest, reader))
    }

    fn parse(&self, line: &str) -> Result<Sample> {
        let rec: SampleRecord = serde_json::from_str(line)?;
        if self.last_id.is_some_and(|last| rec.sample_id <= last) {
            bail!("field sample_id: {} is not after {}", rec.sample_id, self.last_id.unwrap());
        }
        let topo = self
            .topologies
            .get(&rec.topology_id)
            .ok_or_else(|| anyhow!("field topology_id: {:?} is not in the manifest", rec.topology_id))?;
        rec.to_sample(Arc::clone(topo), self.with_labels)
    }
}

impl Iterator for SampleReader {
    type Item = Result<Sample>;

    fn next(&mut self) -> Option<Result<Sample>> {
        if self.done {
            return None;
        }
        let line = match self.lines.next() {
            None => {
                self.done = true;
                if (self.index as u64) < self.expected {
                    return Some(Err(anyhow!(
                        "{}: record {} missing (manifest lists {} samples)",
                        self.path.display(),
                        self.index,
                        self.expected
                    )));
                }
                return None;
            }
            Some(Err(e)) => {
                self.done = true;
                return Some(Err(anyhow!(e).context(format!("{}: reading record {}", self.path.display(), self.index))));
            }
            Some(Ok(line)) => line,
        };
        let index = self.index;
        self.index += 1;
        if index as u64 >= self.expected {
            self.done = true;
            return Some(Err(anyhow!("{}: record {index} beyond the manifest's {} samples", self.path.display(), self.expected)));
        }
        let result = self.parse(&line);
        match result {
            Ok(s) => {
                self.last_id = Some(s.sample_id);
                Some(Ok(s))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e.context(format!("{}: record {index} (line {})", self.path.display(), index + 1))))
            }
        }
    }
}

pub fn read_samples(dir: &Path, with_labels: bool) -> Result<Vec<Sample>> {
    let (_, reader) = SampleReader::open(dir, with_labels)?;
    reader.collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitViolation {
    pub first: String,
    pub second: String,
    pub topology_id: String,
}

impl std::fmt::Display for SplitViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "topology {:?} appears in both {:?} and {:?}", self.topology_id, self.first, self.second)
    }
}

/// One violation per topology id shared by a pair of splits.
pub fn check_split_disjointness(manifests: &[Manifest]) -> Vec<SplitViolation> {
    let mut out = Vec::new();
    for (i, a) in manifests.iter().enumerate() {
        let ids: BTreeSet<&String> = a.topology_ids.iter().collect();
        for b in &manifests[i + 1..] {
            for id in b.topology_ids.iter().filter(|id| ids.contains(id)) {
                out.push(SplitViolation { first: a.split.clone(), second: b.split.clone(), topology_id: id.clone() });
            }
        }
    }
    out
}
