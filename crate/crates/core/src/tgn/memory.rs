use serde::{Deserialize, Serialize};

use super::messages::NodeMessage;
use crate::nn::GruCell;
use crate::{Error, Result};

/// Per-node memory rows plus the time each row was last written.
/// Never-written rows are zero with `last_update = −∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryStore {
    dim: usize,
    memory: Vec<f64>,
    #[serde(with = "sentinel_times")]
    last_update: Vec<f64>,
}

impl MemoryStore {
    pub fn new(num_nodes: usize, dim: usize) -> Self {
        Self {
            dim,
            memory: vec![0.0; num_nodes * dim],
            last_update: vec![f64::NEG_INFINITY; num_nodes],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.last_update.len()
    }

    /// Number of stored memory entries, `N · d_M`.
    pub fn num_entries(&self) -> usize {
        self.memory.len()
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.num_nodes() {
            return Err(Error::Capacity {
                node,
                capacity: self.num_nodes(),
            });
        }
        Ok(())
    }

    pub fn row(&self, node: usize) -> &[f64] {
        &self.memory[node * self.dim..(node + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.memory.chunks(self.dim.max(1))
    }

    pub fn last_update(&self, node: usize) -> f64 {
        self.last_update[node]
    }

    pub fn is_fresh(&self, node: usize) -> bool {
        self.last_update[node] == f64::NEG_INFINITY
    }

    /// `t − last_update`, or 0 for a never-written row.
    pub fn elapsed(&self, node: usize, t: f64) -> f64 {
        if self.is_fresh(node) {
            0.0
        } else {
            t - self.last_update[node]
        }
    }

    /// Overwrite a row and its timestamp. Timestamps never move backwards.
    pub fn write(&mut self, node: usize, values: &[f64], timestamp: f64) -> Result<()> {
        self.check_node(node)?;
        if values.len() != self.dim {
            return Err(Error::Shape {
                layer: "memory".into(),
                expected: self.dim,
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                batch: 0,
                reason: format!("non-finite memory value {bad} for node {node}"),
            });
        }
        debug_assert!(
            timestamp >= self.last_update[node],
            "memory timestamp of node {node} would move backwards"
        );
        self.memory[node * self.dim..(node + 1) * self.dim].copy_from_slice(values);
        self.last_update[node] = self.last_update[node].max(timestamp);
        Ok(())
    }

    pub fn reset(&mut self) {
        self.memory.iter_mut().for_each(|x| *x = 0.0);
        self.last_update.iter_mut().for_each(|t| *t = f64::NEG_INFINITY);
    }
}

/// `mem_u ← GRU(mem_u, msg_u)` and `last_update_u ← t` for each message.
pub fn update_memory(store: &mut MemoryStore, messages: &[NodeMessage], updater: &GruCell) -> Result<()> {
    for m in messages {
        store.check_node(m.node)?;
        let (h, _) = updater.forward(store.row(m.node), &m.message)?;
        store.write(m.node, &h, m.timestamp)?;
    }
    Ok(())
}

/// JSON has no infinities; never-written timestamps are stored as `null`.
mod sentinel_times {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|t| t.is_finite().then_some(*t))
            .collect::<Vec<Option<f64>>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<Option<f64>>::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|t| t.unwrap_or(f64::NEG_INFINITY))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fresh_rows_are_zero_with_sentinel() {
        let s = MemoryStore::new(3, 4);
        assert_eq!(s.num_entries(), 12);
        assert!(s.row(2).iter().all(|&x| x == 0.0));
        assert!(s.is_fresh(1));
        assert_eq!(s.elapsed(1, 99.0), 0.0);
    }

    #[test]
    fn empty_message_set_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gru = GruCell::new(4, 4, &mut rng);
        let mut s = MemoryStore::new(3, 4);
        let before = s.clone();
        update_memory(&mut s, &[], &gru).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn first_update_sets_timestamp() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gru = GruCell::new(4, 4, &mut rng);
        let mut s = MemoryStore::new(3, 4);
        let msg = NodeMessage {
            node: 1,
            message: vec![0.5; 4],
            timestamp: 7.5,
        };
        update_memory(&mut s, &[msg], &gru).unwrap();
        assert_eq!(s.last_update(1), 7.5);
        assert!(s.is_fresh(0) && s.is_fresh(2));
        assert!(s.row(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn capacity_error() {
        let s = MemoryStore::new(3, 2);
        assert!(matches!(s.check_node(3), Err(Error::Capacity { node: 3, capacity: 3 })));
    }

    #[test]
    fn json_round_trip_keeps_sentinel() {
        let mut s = MemoryStore::new(2, 1);
        s.write(0, &[1.5], 3.0).unwrap();
        let back: MemoryStore = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(back.is_fresh(1));
    }
}
