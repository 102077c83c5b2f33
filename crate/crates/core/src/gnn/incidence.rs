use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Bipartite incidence between paths, links and nodes of one sample.
///
/// Path `i` is the `i`-th flow of the sample's traffic matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceStructures {
    /// Per path, the traversed links in order.
    pub path_links: Vec<Vec<usize>>,
    /// Per path, the traversed nodes in order (one more than links).
    pub path_nodes: Vec<Vec<usize>>,
    /// Per link, its source and destination node.
    pub link_nodes: Vec<(usize, usize)>,
    pub n_paths: usize,
    pub n_links: usize,
    pub n_nodes: usize,
    pub max_path_len: usize,
}

impl IncidenceStructures {
    /// Checks index ranges and that link and node sequences agree.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(alloc::format!("incidence: {msg}")));
        if self.path_links.len() != self.n_paths || self.path_nodes.len() != self.n_paths {
            return bad("path count mismatch");
        }
        if self.link_nodes.len() != self.n_links {
            return bad("link count mismatch");
        }
        for (links, nodes) in self.path_links.iter().zip(&self.path_nodes) {
            if links.is_empty() || nodes.len() != links.len() + 1 {
                return bad("path node list must be one longer than its link list");
            }
            for (k, &l) in links.iter().enumerate() {
                if l >= self.n_links {
                    return bad("link index out of range");
                }
                if self.link_nodes[l] != (nodes[k], nodes[k + 1]) {
                    return bad("path links and nodes disagree");
                }
            }
        }
        if self.link_nodes.iter().any(|&(s, d)| s >= self.n_nodes || d >= self.n_nodes) {
            return bad("node index out of range");
        }
        Ok(())
    }
}

/// Builds path/link/node incidence from a sample's routing.
pub fn build_incidence(sample: &Sample) -> Result<IncidenceStructures> {
    let topo = &sample.topology;
    let mut path_links = Vec::with_capacity(sample.traffic.len());
    let mut path_nodes = Vec::with_capacity(sample.traffic.len());
    for f in sample.traffic.flows() {
        let nodes = sample.routing.path(f.src, f.dst).ok_or_else(|| {
            Error::InvalidArgument(alloc::format!("sample {}: no path for {:?}", sample.sample_id, f.key()))
        })?;
        let links = sample
            .routing
            .path_links(topo, f.src, f.dst)
            .map_err(|e| Error::InvalidArgument(alloc::format!("sample {}: {e}", sample.sample_id)))?;
        path_links.push(links);
        path_nodes.push(nodes.to_vec());
    }
    let max_path_len = path_links.iter().map(Vec::len).max().unwrap_or(0);
    let inc = IncidenceStructures {
        n_paths: path_links.len(),
        n_links: topo.num_links(),
        n_nodes: topo.num_nodes(),
        link_nodes: topo.links().iter().map(|l| (l.src, l.dst)).collect(),
        path_links,
        path_nodes,
        max_path_len,
    };
    inc.validate()?;
    Ok(inc)
}

/// Index lists derived from incidence that the forward pass consumes.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MessagePlan {
    /// Per path position `k`: the paths at least `k + 1` links long.
    pub active_paths: Vec<Vec<usize>>,
    /// Per position `k`: the link each active path traverses there.
    pub active_links: Vec<Vec<usize>>,
    /// Per position `k`: 1.0 for paths that are *not* active, else 0.0.
    pub inactive_mask: Vec<Vec<f64>>,
    /// Flattened path-link pairs.
    pub pl_paths: Vec<usize>,
    pub pl_links: Vec<usize>,
    /// Flattened path-node pairs.
    pub pn_paths: Vec<usize>,
    pub pn_nodes: Vec<usize>,
    pub link_src: Vec<usize>,
    pub link_dst: Vec<usize>,
}

impl MessagePlan {
    pub fn new(inc: &IncidenceStructures) -> Self {
        let mut active_paths = Vec::new();
        let mut active_links = Vec::new();
        let mut inactive_mask = Vec::new();
        for k in 0..inc.max_path_len {
            let mut ap = Vec::new();
            let mut al = Vec::new();
            let mut mask = alloc::vec![1.0; inc.n_paths];
            for (p, links) in inc.path_links.iter().enumerate() {
                if let Some(&l) = links.get(k) {
                    ap.push(p);
                    al.push(l);
                    mask[p] = 0.0;
                }
            }
            active_paths.push(ap);
            active_links.push(al);
            inactive_mask.push(mask);
        }
        let mut pl_paths = Vec::new();
        let mut pl_links = Vec::new();
        for (p, links) in inc.path_links.iter().enumerate() {
            for &l in links {
                pl_paths.push(p);
                pl_links.push(l);
            }
        }
        let mut pn_paths = Vec::new();
        let mut pn_nodes = Vec::new();
        for (p, nodes) in inc.path_nodes.iter().enumerate() {
            for &n in nodes {
                pn_paths.push(p);
                pn_nodes.push(n);
            }
        }
        MessagePlan {
            active_paths,
            active_links,
            inactive_mask,
            pl_paths,
            pl_links,
            pn_paths,
            pn_nodes,
            link_src: inc.link_nodes.iter().map(|&(s, _)| s).collect(),
            link_dst: inc.link_nodes.iter().map(|&(_, d)| d).collect(),
        }
    }
}
