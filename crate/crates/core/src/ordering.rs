//! Layered numbering of a radial feeder.
//!
//! Nodes are numbered breadth-first from the root (index 0). All branches of
//! one depth are numbered before any branch of the next depth, and branch `k`
//! always ends at node `k`. Within a layer nodes are sorted by external id,
//! numerically when both ids are integers. Under this numbering every parent
//! has a smaller index than its children, which makes the topology matrix
//! upper triangular.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::network::NetworkInput;

/// A branch after re-orientation away from the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderedBranch {
    /// Position of the branch in the input branch list.
    pub input_index: usize,
    /// Internal index of the sending node (nearer the root).
    pub from: usize,
    /// Internal index of the receiving node.
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialOrdering {
    ids: Vec<String>,
    node_index: HashMap<String, usize>,
    /// Position of each internal node in the input bus list.
    bus_input_index: Vec<usize>,
    branches: Vec<OrderedBranch>,
    layers: Vec<Range<usize>>,
    parent: Vec<usize>,
    depth: Vec<usize>,
}

impl RadialOrdering {
    /// Number of nodes excluding the root (equals the number of branches).
    pub fn n(&self) -> usize {
        self.branches.len()
    }

    /// External id of internal node `k` (`0` is the root).
    pub fn id(&self, k: usize) -> &str {
        &self.ids[k]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    /// Position of internal node `k` in the input bus list.
    pub fn bus_input_index(&self, k: usize) -> usize {
        self.bus_input_index[k]
    }

    /// Branches in numbering order; entry `b` is branch `b + 1`, ending at node `b + 1`.
    pub fn branches(&self) -> &[OrderedBranch] {
        &self.branches
    }

    /// Node index ranges, one per depth, starting with depth 1.
    pub fn layers(&self) -> &[Range<usize>] {
        &self.layers
    }

    /// Sending node of each branch; entry `b` belongs to branch `b + 1`.
    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    /// Sending node of the branch feeding node `k` (`k >= 1`).
    pub fn parent_of(&self, k: usize) -> usize {
        self.parent[k - 1]
    }

    /// Number of branches between the root and node `k`.
    pub fn depth(&self, k: usize) -> usize {
        self.depth[k]
    }
}

/// Compare bus ids numerically when both are integers, lexically otherwise.
fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

pub fn build_ordering(net: &NetworkInput) -> Result<RadialOrdering> {
    net.validate()?;

    let bus_count = net.buses.len();
    let position: HashMap<&str, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();

    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); bus_count];
    for (e, br) in net.branches.iter().enumerate() {
        let a = position[br.from_bus.as_str()];
        let b = position[br.to_bus.as_str()];
        adjacency[a].push((b, e));
        adjacency[b].push((a, e));
    }

    let root = net
        .buses
        .iter()
        .position(|b| b.is_root)
        .ok_or(Error::NoRoot)?;

    let mut visited = vec![false; bus_count];
    let mut via_edge = vec![usize::MAX; bus_count];
    visited[root] = true;

    let mut order = vec![root];
    let mut internal = vec![usize::MAX; bus_count];
    internal[root] = 0;
    let mut branches = Vec::with_capacity(bus_count.saturating_sub(1));
    let mut parent = Vec::with_capacity(bus_count.saturating_sub(1));
    let mut depth = vec![0];
    let mut layers = Vec::new();

    let mut frontier = 0..1;
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        // (bus position, sending internal index, input branch index)
        let mut next: Vec<(usize, usize, usize)> = Vec::new();
        for k in frontier.clone() {
            let u = order[k];
            for &(w, e) in &adjacency[u] {
                if e == via_edge[u] {
                    continue;
                }
                if visited[w] {
                    return Err(Error::CycleDetected {
                        index: e,
                        id: net.buses[w].id.clone(),
                    });
                }
                visited[w] = true;
                via_edge[w] = e;
                next.push((w, k, e));
            }
        }
        next.sort_by(|a, b| compare_ids(&net.buses[a.0].id, &net.buses[b.0].id));

        let start = order.len();
        for (w, from, e) in next {
            let to = order.len();
            internal[w] = to;
            order.push(w);
            parent.push(from);
            depth.push(level);
            branches.push(OrderedBranch {
                input_index: e,
                from,
                to,
            });
        }
        frontier = start..order.len();
        if !frontier.is_empty() {
            layers.push(frontier.clone());
        }
    }

    if order.len() < bus_count {
        let missing = net
            .buses
            .iter()
            .zip(&visited)
            .filter(|(_, &seen)| !seen)
            .map(|(b, _)| b.id.clone())
            .collect();
        return Err(Error::NotConnected(missing));
    }

    let ids: Vec<String> = order.iter().map(|&p| net.buses[p].id.clone()).collect();
    let node_index = ids
        .iter()
        .enumerate()
        .map(|(k, id)| (id.clone(), k))
        .collect();

    Ok(RadialOrdering {
        ids,
        node_index,
        bus_input_index: order,
        branches,
        layers,
        parent,
        depth,
    })
}
