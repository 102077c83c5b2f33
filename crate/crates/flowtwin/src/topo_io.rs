use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use flowtwin_core::topology::DEFAULT_BUFFER_SIZE;
use flowtwin_core::{Link, NodeScheduling, SchedulingConfig, Topology};
use serde::{Deserialize, Serialize};

use crate::sig9;

/// On-disk topology: node names, directed links between them and an
/// optional per-node scheduling override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    pub nodes: Vec<String>,
    pub links: Vec<LinkRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduling: Option<BTreeMap<String, SchedulingRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkRecord {
    pub src: String,
    pub dst: String,
    #[serde(serialize_with = "sig9")]
    pub capacity: f64,
    #[serde(default = "default_buffer")]
    pub buffer_size: u32,
}

fn default_buffer() -> u32 {
    DEFAULT_BUFFER_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulingRecord {
    pub policy: String,
    pub weights: [u32; 3],
}

impl SchedulingRecord {
    pub fn from_node(ns: &NodeScheduling) -> Self {
        SchedulingRecord { policy: ns.policy.as_str().into(), weights: ns.weights }
    }

    pub fn to_node(&self) -> Result<NodeScheduling> {
        Ok(NodeScheduling::new(self.policy.parse()?, self.weights)?)
    }
}

impl TopologyFile {
    pub fn from_topology(t: &Topology, scheduling: Option<&SchedulingConfig>) -> Self {
        let name = |i: usize| t.nodes()[i].clone();
        TopologyFile {
            nodes: t.nodes().to_vec(),
            links: t
                .links()
                .iter()
                .map(|l| LinkRecord { src: name(l.src), dst: name(l.dst), capacity: l.capacity, buffer_size: l.buffer_size })
                .collect(),
            scheduling: scheduling.map(|s| {
                s.nodes().iter().enumerate().map(|(i, ns)| (name(i), SchedulingRecord::from_node(ns))).collect()
            }),
        }
    }

    pub fn to_topology(&self) -> Result<Topology> {
        let index: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let lookup = |name: &str| index.get(name).copied().ok_or_else(|| anyhow!("link endpoint {name:?} is not a node"));
        let links = self
            .links
            .iter()
            .map(|l| Ok(Link { src: lookup(&l.src)?, dst: lookup(&l.dst)?, capacity: l.capacity, buffer_size: l.buffer_size }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Topology::new(self.nodes.clone(), links)?)
    }

    /// The scheduling override, with unlisted nodes on the default policy.
    pub fn to_scheduling(&self) -> Result<Option<SchedulingConfig>> {
        let Some(map) = &self.scheduling else { return Ok(None) };
        let mut nodes = vec![NodeScheduling::default(); self.nodes.len()];
        for (name, rec) in map {
            let i = self
                .nodes
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| anyhow!("scheduling entry for unknown node {name:?}"))?;
            nodes[i] = rec.to_node().with_context(|| format!("scheduling of node {name:?}"))?;
        }
        Ok(Some(SchedulingConfig::new(nodes)?))
    }
}

/// A parsed topology file with its id (the file stem).
#[derive(Debug, Clone)]
pub struct LoadedTopology {
    pub id: String,
    pub file: TopologyFile,
    pub topology: Topology,
    pub scheduling: Option<SchedulingConfig>,
}

pub fn parse_topology(id: &str, text: &str) -> Result<LoadedTopology> {
    let file: TopologyFile = serde_json::from_str(text).with_context(|| format!("topology {id}"))?;
    let topology = file.to_topology().with_context(|| format!("topology {id}"))?;
    let scheduling = file.to_scheduling().with_context(|| format!("topology {id}"))?;
    Ok(LoadedTopology { id: id.into(), file, topology, scheduling })
}

pub fn read_topology(path: &Path) -> Result<LoadedTopology> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow!("{} has no usable file name", path.display()))?;
    if id.is_empty() {
        bail!("{} has an empty file stem", path.display());
    }
    parse_topology(id, &text)
}

pub fn write_topology(path: &Path, file: &TopologyFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"nodes":["a","b"],"links":[{"src":"a","dst":"b","capacity":1000},{"src":"b","dst":"a","capacity":1000,"buffer_size":8}],
        "scheduling":{"b":{"policy":"SP","weights":[10,30,60]}}}"#;

    #[test]
    fn parses_names_defaults_and_scheduling() {
        let t = parse_topology("line", LINE).unwrap();
        assert_eq!(t.topology.links()[0].buffer_size, DEFAULT_BUFFER_SIZE);
        assert_eq!(t.topology.links()[1].buffer_size, 8);
        let s = t.scheduling.unwrap();
        assert_eq!(s.node(0), &NodeScheduling::default());
        assert_eq!(s.node(1).policy.as_str(), "SP");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = LINE.replacen("{\"nodes\"", "{\"extra\":1,\"nodes\"", 1);
        assert!(parse_topology("x", &bad).is_err());
        let bad_link = LINE.replacen("\"capacity\":1000}", "\"capacity\":1000,\"delay\":3}", 1);
        assert!(parse_topology("x", &bad_link).is_err());
    }

    #[test]
    fn bad_references_are_rejected() {
        assert!(parse_topology("x", &LINE.replacen("\"dst\":\"b\"", "\"dst\":\"z\"", 1)).is_err());
        assert!(parse_topology("x", &LINE.replace("\"policy\":\"SP\"", "\"policy\":\"FIFO\"")).is_err());
    }

    #[test]
    fn round_trips() {
        let t = parse_topology("line", LINE).unwrap();
        let again = TopologyFile::from_topology(&t.topology, t.scheduling.as_ref());
        let text = serde_json::to_string(&again).unwrap();
        let back = parse_topology("line", &text).unwrap();
        assert_eq!(back.topology, t.topology);
        assert_eq!(back.scheduling, t.scheduling);
    }
}
