use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::memory::MemoryStore;
use super::params::TgnParams;
use crate::ctdg::TemporalEvent;
use crate::nn::TimeEncoder;
use crate::Result;

/// Message inputs captured when an event is observed. The time encoding is
/// applied later so that it stays differentiable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawMessage {
    pub own_memory: Vec<f64>,
    pub other_memory: Vec<f64>,
    pub elapsed: f64,
    pub edge_feat: Vec<f64>,
    pub timestamp: f64,
}

impl RawMessage {
    /// `[mem_self ‖ mem_other ‖ φ(Δt) ‖ e]`.
    pub fn input(&self, time: &TimeEncoder) -> Vec<f64> {
        let mut x = Vec::with_capacity(
            self.own_memory.len() * 2 + time.dim() + self.edge_feat.len(),
        );
        x.extend_from_slice(&self.own_memory);
        x.extend_from_slice(&self.other_memory);
        x.extend(time.forward(self.elapsed));
        x.extend_from_slice(&self.edge_feat);
        x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeMessage {
    pub node: usize,
    pub message: Vec<f64>,
    pub timestamp: f64,
}

/// One raw message per touched node, the latest event winning (events are
/// time ordered, so later position breaks timestamp ties).
pub fn build_raw_messages(events: &[TemporalEvent], store: &MemoryStore) -> Result<BTreeMap<usize, RawMessage>> {
    let mut out = BTreeMap::new();
    for e in events {
        store.check_node(e.src)?;
        store.check_node(e.dst)?;
        for (a, b) in [(e.src, e.dst), (e.dst, e.src)] {
            out.insert(
                a,
                RawMessage {
                    own_memory: store.row(a).to_vec(),
                    other_memory: store.row(b).to_vec(),
                    elapsed: store.elapsed(a, e.timestamp),
                    edge_feat: e.edge_feat.clone(),
                    timestamp: e.timestamp,
                },
            );
        }
    }
    Ok(out)
}

/// Messages for a batch against the current memory, ordered by node id.
pub fn compute_messages(
    events: &[TemporalEvent],
    store: &MemoryStore,
    params: &TgnParams,
) -> Result<Vec<NodeMessage>> {
    build_raw_messages(events, store)?
        .into_iter()
        .map(|(node, raw)| {
            Ok(NodeMessage {
                node,
                message: params.message.apply(&raw.input(&params.time))?,
                timestamp: raw.timestamp,
            })
        })
        .collect()
}
