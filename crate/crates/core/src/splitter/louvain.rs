//! Louvain modularity maximization: repeated local moving followed by
//! aggregation of communities into super-nodes, until a local-moving phase
//! leaves every node where it was.

use std::collections::BTreeMap;

use log::debug;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{modularity, WeightedGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    /// Community of every node, relabeled densely by first node occurrence.
    pub community_of: Vec<usize>,
    pub modularity: f64,
    /// Modularity (on the input graph) after each completed level.
    pub trace: Vec<f64>,
}

impl CommunityAssignment {
    pub fn num_communities(&self) -> usize {
        self.community_of.iter().copied().max().map_or(0, |c| c + 1)
    }

    /// Members of each community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_communities()];
        for (v, &c) in self.community_of.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

/// Working graph of one Louvain level. `self_loop[i]` holds internal weight
/// absorbed into super-node `i`, counted once.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
}

impl Level {
    fn from_graph(g: &WeightedGraph) -> Self {
        Level {
            adj: (0..g.num_nodes()).map(|u| g.neighbors(u).to_vec()).collect(),
            self_loop: vec![0.0; g.num_nodes()],
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_loop[u]
    }
}

const MIN_GAIN: f64 = 1e-12;

pub fn louvain<R: Rng + ?Sized>(graph: &WeightedGraph, rng: &mut R) -> CommunityAssignment {
    let n = graph.num_nodes();
    let m = graph.total_weight();
    let mut node_to_comm: Vec<usize> = (0..n).collect();
    if m <= 0.0 {
        return CommunityAssignment {
            community_of: node_to_comm,
            modularity: 0.0,
            trace: vec![0.0],
        };
    }
    let mut level = Level::from_graph(graph);
    let mut trace = vec![modularity(graph, &node_to_comm)];

    loop {
        let (local, moved) = local_moves(&level, m, rng);
        if !moved {
            break;
        }
        let (relabeled, k) = relabel(&local);
        for c in node_to_comm.iter_mut() {
            *c = relabeled[*c];
        }
        let q = modularity(graph, &node_to_comm);
        debug!("louvain level {}: {} communities, modularity {:.6}", trace.len(), k, q);
        if let Some(&prev) = trace.last() {
            assert!(
                q >= prev - 1e-12,
                "louvain modularity decreased: {prev} -> {q}"
            );
        }
        trace.push(q);
        level = aggregate(&level, &relabeled, k);
    }

    let (community_of, _) = relabel(&node_to_comm);
    CommunityAssignment {
        modularity: modularity(graph, &community_of),
        community_of,
        trace,
    }
}

/// One local-moving phase. Returns the community of every level node and
/// whether any node changed community.
fn local_moves<R: Rng + ?Sized>(level: &Level, m: f64, rng: &mut R) -> (Vec<usize>, bool) {
    let n = level.len();
    let degree: Vec<f64> = (0..n).map(|u| level.degree(u)).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut comm_degree = degree.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut any_move = false;
    let two_m_sq = 2.0 * m * m;

    loop {
        let mut moved = false;
        for &u in &order {
            let cur = comm[u];
            let ku = degree[u];
            // Weights from u to each neighboring community, in community order.
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for &(v, w) in &level.adj[u] {
                *links.entry(comm[v]).or_insert(0.0) += w;
            }
            comm_degree[cur] -= ku;
            let gain = |c: usize, kin: f64, cd: &[f64]| kin / m - cd[c] * ku / two_m_sq;
            let mut best = cur;
            let mut best_gain = gain(cur, links.get(&cur).copied().unwrap_or(0.0), &comm_degree);
            for (&c, &kin) in &links {
                if c == cur {
                    continue;
                }
                let g = gain(c, kin, &comm_degree);
                if g > best_gain + MIN_GAIN {
                    best = c;
                    best_gain = g;
                }
            }
            comm_degree[best] += ku;
            if best != cur {
                comm[u] = best;
                moved = true;
                any_move = true;
            }
        }
        if !moved {
            break;
        }
    }
    (comm, any_move)
}

fn relabel(comm: &[usize]) -> (Vec<usize>, usize) {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(comm.len());
    for &c in comm {
        let next = map.len();
        out.push(*map.entry(c).or_insert(next));
    }
    let k = map.len();
    (out, k)
}

fn aggregate(level: &Level, comm_of_node: &[usize], k: usize) -> Level {
    let mut self_loop = vec![0.0; k];
    let mut links: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); k];
    for u in 0..level.len() {
        let cu = comm_of_node[u];
        self_loop[cu] += level.self_loop[u];
        for &(v, w) in &level.adj[u] {
            let cv = comm_of_node[v];
            if cu == cv {
                // Each internal edge is visited from both ends.
                self_loop[cu] += w / 2.0;
            } else {
                *links[cu].entry(cv).or_insert(0.0) += w;
            }
        }
    }
    Level {
        adj: links.into_iter().map(|row| row.into_iter().collect()).collect(),
        self_loop,
    }
}
