use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::ctdg::TemporalEvent;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub neighbor: usize,
    pub timestamp: f64,
    pub edge_feat: Vec<f64>,
}

/// The `k` most recent interactions of every node, newest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborCache {
    k: usize,
    lists: Vec<VecDeque<NeighborEntry>>,
}

impl NeighborCache {
    pub fn new(num_nodes: usize, k: usize) -> Self {
        Self {
            k,
            lists: vec![VecDeque::new(); num_nodes],
        }
    }

    pub fn capacity(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, node: usize) -> &VecDeque<NeighborEntry> {
        &self.lists[node]
    }

    pub fn insert(&mut self, events: &[TemporalEvent]) {
        for e in events {
            for (a, b) in [(e.src, e.dst), (e.dst, e.src)] {
                let list = &mut self.lists[a];
                list.push_front(NeighborEntry {
                    neighbor: b,
                    timestamp: e.timestamp,
                    edge_feat: e.edge_feat.clone(),
                });
                list.truncate(self.k);
            }
        }
    }

    pub fn reset(&mut self) {
        self.lists.iter_mut().for_each(VecDeque::clear);
    }
}
