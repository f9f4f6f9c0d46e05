use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ctdg::EventStream;

/// Undirected weighted simple graph; adjacency rows are sorted by neighbor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(num_nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); num_nodes],
        }
    }

    /// Build from `(u, v, w)` triples; parallel edges are summed, self-loops
    /// are ignored.
    pub fn from_edges(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            if u == v {
                continue;
            }
            let key = if u < v { (u, v) } else { (v, u) };
            *acc.entry(key).or_insert(0.0) += w;
        }
        let mut adj = vec![Vec::new(); num_nodes];
        for (&(u, v), &w) in &acc {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for row in &mut adj {
            row.sort_by_key(|&(v, _)| v);
        }
        Self { adj }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.adj[u]
            .binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| self.adj[u][i].1)
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, row)| {
            row.iter()
                .filter(move |&&(v, _)| u < v)
                .map(move |&(v, w)| (u, v, w))
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    pub fn strength(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum()
    }
}

/// Time-aggregated static projection: `weight(u, v)` is the number of events
/// between `u` and `v` in either direction.
pub fn aggregate_static(stream: &EventStream) -> WeightedGraph {
    WeightedGraph::from_edges(
        stream.num_nodes(),
        stream.events().iter().map(|e| (e.src, e.dst, 1.0)),
    )
}

/// Newman modularity of `community_of` on `graph`:
/// `Σ_c [ L_c / m − (K_c / 2m)² ]`. Zero for an edgeless graph.
pub fn modularity(graph: &WeightedGraph, community_of: &[usize]) -> f64 {
    let m = graph.total_weight();
    if m <= 0.0 {
        return 0.0;
    }
    let k = community_of.iter().copied().max().map_or(0, |c| c + 1);
    let mut internal = vec![0.0; k];
    let mut degree = vec![0.0; k];
    for (u, v, w) in graph.edges() {
        degree[community_of[u]] += w;
        degree[community_of[v]] += w;
        if community_of[u] == community_of[v] {
            internal[community_of[u]] += w;
        }
    }
    internal
        .iter()
        .zip(&degree)
        .map(|(&l, &d)| l / m - (d / (2.0 * m)).powi(2))
        .sum()
}
