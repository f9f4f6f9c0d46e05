use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::window::WindowGraph;

/// Degree, betweenness, closeness, clustering.
pub const NUM_TOPOLOGICAL: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Number of random-walk return probabilities appended to the vector.
    pub positional_dim: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { positional_dim: 4 }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        NUM_TOPOLOGICAL + self.positional_dim
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralFeatureVector {
    pub values: Vec<f64>,
    pub standardized: bool,
}

impl StructuralFeatureVector {
    pub fn raw(values: Vec<f64>) -> Self {
        Self {
            values,
            standardized: false,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::raw(vec![0.0; dim])
    }
}

/// BFS from `s`: hop distances (`None` when unreachable) and the number of
/// shortest paths from `s` to every node.
pub fn shortest_path_counts(g: &WindowGraph, s: usize) -> (Vec<Option<usize>>, Vec<u64>) {
    let n = g.num_nodes();
    let mut dist = vec![None; n];
    let mut sigma = vec![0u64; n];
    let mut queue = VecDeque::new();
    dist[s] = Some(0);
    sigma[s] = 1;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap();
        for &w in g.neighbors(v) {
            if dist[w].is_none() {
                dist[w] = Some(dv + 1);
                queue.push_back(w);
            }
            if dist[w] == Some(dv + 1) {
                sigma[w] += sigma[v];
            }
        }
    }
    (dist, sigma)
}

/// Brandes betweenness for every node, summed over unordered pairs and not
/// normalized.
pub fn betweenness(g: &WindowGraph) -> Vec<f64> {
    let n = g.num_nodes();
    let mut bc = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::new();

    for s in g.active_nodes() {
        stack.clear();
        for v in 0..n {
            preds[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // Every unordered pair was counted from both endpoints.
    bc.iter_mut().for_each(|b| *b /= 2.0);
    bc
}

/// Wasserman–Faust closeness of `v`: `((r−1)/(n−1)) · ((r−1)/Σ d(v,u))`
/// with `r` the size of `v`'s component and `n` the number of non-isolated
/// nodes in the graph.
pub fn closeness(g: &WindowGraph, v: usize) -> f64 {
    if g.degree(v) == 0 {
        return 0.0;
    }
    let n = g.num_active();
    let (dist, _) = shortest_path_counts(g, v);
    let (mut reach, mut total) = (0usize, 0usize);
    for d in dist.iter().flatten() {
        if *d > 0 {
            reach += 1;
            total += d;
        }
    }
    if reach == 0 || n < 2 {
        return 0.0;
    }
    let r = reach as f64;
    (r / (n - 1) as f64) * (r / total as f64)
}

/// Fraction of neighbor pairs of `v` that are adjacent; 0 when deg < 2.
pub fn clustering(g: &WindowGraph, v: usize) -> f64 {
    let nb = g.neighbors(v);
    let d = nb.len();
    if d < 2 {
        return 0.0;
    }
    let mut triangles = 0usize;
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if g.contains_edge(a, b) {
                triangles += 1;
            }
        }
    }
    triangles as f64 / (d * (d - 1) / 2) as f64
}

/// Return probabilities `P^k[v, v]` of the simple random walk, `k = 1..=steps`.
pub fn rwpe(g: &WindowGraph, v: usize, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return Vec::new();
    }
    if g.degree(v) == 0 {
        return vec![0.0; steps];
    }
    let n = g.num_nodes();
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    cur[v] = 1.0;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        next.iter_mut().for_each(|x| *x = 0.0);
        for u in 0..n {
            if cur[u] == 0.0 {
                continue;
            }
            let nb = g.neighbors(u);
            let share = cur[u] / nb.len() as f64;
            for &w in nb {
                next[w] += share;
            }
        }
        std::mem::swap(&mut cur, &mut next);
        out.push(cur[v]);
    }
    out
}

/// Raw features of a single node.
pub fn node_features(g: &WindowGraph, v: usize, config: &FeatureConfig) -> StructuralFeatureVector {
    if v >= g.num_nodes() || g.degree(v) == 0 {
        return StructuralFeatureVector::zeros(config.dim());
    }
    let bc = betweenness(g);
    assemble(g, v, bc[v], config)
}

/// Raw features of every node of `g`; betweenness is computed once.
pub fn all_node_features(g: &WindowGraph, config: &FeatureConfig) -> Vec<StructuralFeatureVector> {
    if g.num_active() == 0 {
        return vec![StructuralFeatureVector::zeros(config.dim()); g.num_nodes()];
    }
    let bc = betweenness(g);
    (0..g.num_nodes())
        .map(|v| {
            if g.degree(v) == 0 {
                StructuralFeatureVector::zeros(config.dim())
            } else {
                assemble(g, v, bc[v], config)
            }
        })
        .collect()
}

fn assemble(g: &WindowGraph, v: usize, bc: f64, config: &FeatureConfig) -> StructuralFeatureVector {
    let mut values = Vec::with_capacity(config.dim());
    values.push(g.degree(v) as f64);
    values.push(bc);
    values.push(closeness(g, v));
    values.push(clustering(g, v));
    values.extend(rwpe(g, v, config.positional_dim));
    StructuralFeatureVector::raw(values)
}
