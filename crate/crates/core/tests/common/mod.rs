//! Shared generators and brute-force oracles for integration tests.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;

use radial_sweep::{BranchRecord, BusRecord, Complex64, NetworkInput, RadialOrdering};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Edges of a uniformly random labelled tree on `nodes` vertices, decoded from
/// a random Prüfer sequence.
pub fn prufer_tree(nodes: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    assert!(nodes >= 2);
    if nodes == 2 {
        return vec![(0, 1)];
    }
    let seq: Vec<usize> = (0..nodes - 2).map(|_| rng.random_range(0..nodes)).collect();
    let mut degree = vec![1usize; nodes];
    for &s in &seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(nodes - 1);
    for &s in &seq {
        let leaf = (0..nodes).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Tree network on `nodes` buses with zero loads, random edge orientation and
/// input order. Bus `root` is the source.
pub fn tree_network(
    edges: &[(usize, usize)],
    nodes: usize,
    root: usize,
    rng: &mut impl Rng,
) -> NetworkInput {
    let buses = (0..nodes)
        .map(|k| {
            if k == root {
                BusRecord::root(k.to_string())
            } else {
                BusRecord::load(k.to_string(), 0.0, 0.0)
            }
        })
        .collect();
    let mut branches: Vec<BranchRecord> = edges
        .iter()
        .map(|&(a, b)| {
            let (a, b) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            BranchRecord::new(
                a.to_string(),
                b.to_string(),
                rng.random_range(0.001..0.1),
                rng.random_range(0.001..0.1),
            )
        })
        .collect();
    branches.shuffle(rng);
    NetworkInput::per_unit(buses, branches)
}

/// Random feeder with `n` non-root buses. Loads are drawn from [0, 0.5] pu
/// (reactive from [0, 0.25] pu) and impedances from [0.001, 0.1] pu, then all
/// loads are scaled down uniformly so that the linearized voltage drop to the
/// farthest bus stays below 8 %.
pub fn random_feeder(n: usize, rng: &mut impl Rng) -> NetworkInput {
    let nodes = n + 1;
    let edges = prufer_tree(nodes, rng);
    let root = rng.random_range(0..nodes);
    let mut net = tree_network(&edges, nodes, root, rng);
    for bus in net.buses.iter_mut().filter(|b| !b.is_root) {
        bus.p_dem = rng.random_range(0.0..0.5);
        bus.q_dem = rng.random_range(0.0..0.25);
    }
    let drop = linear_drop(&net);
    if drop > 0.08 {
        let scale = 0.08 / drop;
        for bus in &mut net.buses {
            bus.p_dem *= scale;
            bus.q_dem *= scale;
        }
    }
    net
}

/// Largest sum over a root path of `|z| · downstream apparent load`.
fn linear_drop(net: &NetworkInput) -> f64 {
    let nodes = net.buses.len();
    let idx = |id: &str| net.buses.iter().position(|b| b.id == id).unwrap();
    let mut adj = vec![Vec::new(); nodes];
    for br in &net.branches {
        let (a, b) = (idx(&br.from_bus), idx(&br.to_bus));
        let z = br.impedance().norm();
        adj[a].push((b, z));
        adj[b].push((a, z));
    }
    let root = net.buses.iter().position(|b| b.is_root).unwrap();
    let mut parent = vec![(usize::MAX, 0.0); nodes];
    let mut order = vec![root];
    let mut seen = vec![false; nodes];
    seen[root] = true;
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        for &(w, z) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = (u, z);
                order.push(w);
            }
        }
        i += 1;
    }
    let mut load: Vec<f64> = net
        .buses
        .iter()
        .map(|b| Complex64::new(b.p_dem, b.q_dem).norm())
        .collect();
    for &u in order.iter().rev() {
        if u != root {
            let l = load[u];
            load[parent[u].0] += l;
        }
    }
    let mut drop = vec![0.0; nodes];
    for &u in &order {
        if u != root {
            let (p, z) = parent[u];
            drop[u] = drop[p] + z * load[u];
        }
    }
    drop.into_iter().fold(0.0, f64::max)
}

/// Edge set of the undirected path between two buses, found by BFS over the
/// raw branch list. Returns input branch indices.
pub fn path_edges(net: &NetworkInput, from: &str, to: &str) -> HashSet<usize> {
    let mut prev: std::collections::HashMap<&str, (&str, usize)> = Default::default();
    let mut queue = VecDeque::from([from]);
    let mut seen = HashSet::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for (e, br) in net.branches.iter().enumerate() {
            let w = if br.from_bus == u {
                br.to_bus.as_str()
            } else if br.to_bus == u {
                br.from_bus.as_str()
            } else {
                continue;
            };
            if seen.insert(w) {
                prev.insert(w, (u, e));
                queue.push_back(w);
            }
        }
    }
    let mut out = HashSet::new();
    let mut cur = to;
    while cur != from {
        let (p, e) = prev[cur];
        out.insert(e);
        cur = p;
    }
    out
}

/// `TRX[i][j]` as the impedance of the shared root path of nodes `i + 1` and
/// `j + 1`, by walking parent links.
pub fn common_path_trx(ord: &RadialOrdering, z: &[Complex64]) -> Vec<Vec<Complex64>> {
    let n = ord.n();
    let ancestors = |k: usize| {
        let mut out = Vec::new();
        let mut cur = k;
        while cur != 0 {
            out.push(cur);
            cur = ord.parent_of(cur);
        }
        out
    };
    let paths: Vec<HashSet<usize>> = (1..=n)
        .map(|k| ancestors(k).into_iter().collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut shared: Vec<usize> =
                        paths[i].intersection(&paths[j]).copied().collect();
                    shared.sort_unstable();
                    shared.iter().map(|&k| z[k - 1]).sum()
                })
                .collect()
        })
        .collect()
}

/// Four-node star: root 0 feeds 1, which feeds 0.2 pu loads at 2 and 3.
pub fn four_node() -> NetworkInput {
    NetworkInput::per_unit(
        vec![
            BusRecord::root("0"),
            BusRecord::load("1", 0.0, 0.0),
            BusRecord::load("2", 0.2, 0.0),
            BusRecord::load("3", 0.2, 0.0),
        ],
        vec![
            BranchRecord::new("0", "1", 0.0296, 0.0683),
            BranchRecord::new("1", "2", 0.0296, 0.0683),
            BranchRecord::new("1", "3", 0.0296, 0.0683),
        ],
    )
}

/// Seeded batch of random feeders with between 2 and 200 buses.
pub fn feeder_batch(count: usize, seed: u64) -> Vec<NetworkInput> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.random_range(1..200);
            random_feeder(n, &mut r)
        })
        .collect()
}
