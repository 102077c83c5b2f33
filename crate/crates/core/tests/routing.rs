use std::collections::VecDeque;

use flowtwin_core::rng::UnitSource;
use flowtwin_core::stream_rng;
use flowtwin_core::topology::{
    generate_routing_variation, make_synthetic_topology, routing_fingerprint, shortest_path_routing,
    validate_routing, Topology, TopologyKind,
};
use proptest::prelude::*;

/// Every simple path from `src` to `dst`, by depth-first enumeration.
fn all_simple_paths(t: &Topology, src: usize, dst: usize) -> Vec<Vec<usize>> {
    fn dfs(t: &Topology, path: &mut Vec<usize>, dst: usize, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == dst {
            out.push(path.clone());
            return;
        }
        for l in t.links().iter().filter(|l| l.src == u) {
            if !path.contains(&l.dst) {
                path.push(l.dst);
                dfs(t, path, dst, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    dfs(t, &mut vec![src], dst, &mut out);
    out
}

fn path_weight(t: &Topology, w: &[f64], path: &[usize]) -> f64 {
    path.windows(2).map(|p| w[t.link_between(p[0], p[1]).unwrap()]).fold(0.0, |a, b| a + b)
}

#[test]
fn shortest_paths_match_exhaustive_enumeration() {
    for seed in 0..25u64 {
        let t = make_synthetic_topology(TopologyKind::RandomConnected, 8, (1.0, 2.0), seed).unwrap();
        let mut rng = stream_rng(seed, 5);
        let w: Vec<f64> = (0..t.num_links()).map(|_| rng.uniform(1.0, 2.0)).collect();
        let routing = shortest_path_routing(&t, &w).unwrap();
        for src in 0..8 {
            for dst in 0..8 {
                if src == dst {
                    continue;
                }
                let best = all_simple_paths(&t, src, dst)
                    .into_iter()
                    .map(|p| (path_weight(&t, &w, &p), p))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
                    .unwrap();
                assert_eq!(routing.path(src, dst).unwrap(), best.1.as_slice(), "seed {seed} {src}->{dst}");
            }
        }
    }
}

fn bfs_hops(t: &Topology, src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.num_nodes()];
    dist[src] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for (_, v) in t.out_links(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist
}

#[test]
fn ring_of_five_has_routing_variations() {
    let t = make_synthetic_topology(TopologyKind::Ring, 5, (1.0, 1.0), 0).unwrap();
    let mut distinct = std::collections::BTreeSet::new();
    for seed in 0..100 {
        distinct.insert(routing_fingerprint(&generate_routing_variation(&t, seed).unwrap()));
    }
    assert!(distinct.len() >= 2, "only {} distinct routings", distinct.len());
}

proptest! {
    #[test]
    fn variations_always_validate(seed in any::<u64>(), n in 2usize..10) {
        let t = make_synthetic_topology(TopologyKind::RandomConnected, n, (1.0, 5.0), seed).unwrap();
        let r = generate_routing_variation(&t, seed).unwrap();
        prop_assert!(validate_routing(&t, &r).is_empty());
        let again = generate_routing_variation(&t, seed).unwrap();
        prop_assert_eq!(routing_fingerprint(&r), routing_fingerprint(&again));
    }

    #[test]
    fn unit_weights_give_min_hop_paths(seed in any::<u64>(), n in 2usize..=10) {
        let t = make_synthetic_topology(TopologyKind::RandomConnected, n, (1.0, 5.0), seed).unwrap();
        let r = shortest_path_routing(&t, &vec![1.0; t.num_links()]).unwrap();
        for src in 0..n {
            let hops = bfs_hops(&t, src);
            for dst in (0..n).filter(|&d| d != src) {
                prop_assert_eq!(r.path(src, dst).unwrap().len() - 1, hops[dst]);
            }
        }
    }
}
