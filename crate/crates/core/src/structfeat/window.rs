use serde::{Deserialize, Serialize};

use crate::ctdg::EventStream;

/// Undirected simple graph of the events in `[start, end)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowGraph {
    adj: Vec<Vec<usize>>,
    pub start: f64,
    pub end: f64,
}

impl WindowGraph {
    /// Graph over `0..num_nodes` from an edge list; duplicates and
    /// self-loops are dropped.
    pub fn from_edges(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); num_nodes];
        for (u, v) in edges {
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        Self {
            adj,
            start: f64::NEG_INFINITY,
            end: f64::INFINITY,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adj.get(v).map_or(&[], Vec::as_slice)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    pub fn contains_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Nodes with at least one edge.
    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.adj.len()).filter(|&v| !self.adj[v].is_empty())
    }

    pub fn num_active(&self) -> usize {
        self.active_nodes().count()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Same graph with node `v` renamed to `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut g = Self::from_edges(self.num_nodes(), self.edges().map(|(u, v)| (perm[u], perm[v])));
        g.start = self.start;
        g.end = self.end;
        g
    }
}

/// Collapse the events with timestamps in `[t − w·train_span, t)` into a
/// simple graph over the stream's node space.
pub fn aggregate_window(stream: &EventStream, t: f64, w: f64, train_span: f64) -> WindowGraph {
    debug_assert!(w > 0.0 && w <= 1.0, "window fraction {w} outside (0, 1]");
    let start = t - w * train_span;
    let lo = stream.lower_bound(start);
    let hi = stream.lower_bound(t);
    let mut g = WindowGraph::from_edges(
        stream.num_nodes(),
        stream.events()[lo..hi.max(lo)].iter().map(|e| (e.src, e.dst)),
    );
    g.start = start;
    g.end = t;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctdg::TemporalEvent;

    fn stream() -> EventStream {
        let events = (0..1000)
            .map(|i| TemporalEvent::new(i % 7, (i + 1) % 7, i as f64))
            .collect();
        EventStream::from_events(events, 7).unwrap()
    }

    #[test]
    fn one_percent_window_of_span_1000() {
        let s = stream();
        let g = aggregate_window(&s, 500.0, 0.01, 1000.0);
        assert_eq!((g.start, g.end), (490.0, 500.0));
        // events at t = 490..=499 → pairs (i%7, i%7+1)
        let expected: std::collections::BTreeSet<_> = (490..500)
            .map(|i| {
                let (a, b) = (i % 7, (i + 1) % 7);
                (a.min(b), a.max(b))
            })
            .collect();
        assert_eq!(g.edges().collect::<std::collections::BTreeSet<_>>(), expected);
    }

    #[test]
    fn window_before_first_event_is_empty() {
        let s = stream();
        let g = aggregate_window(&s, 0.0, 0.5, 1000.0);
        assert_eq!(g.edges().count(), 0);
    }
}
