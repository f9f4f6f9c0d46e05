//! Continuous-time dynamic graphs: an empty initial graph plus a
//! chronologically ordered stream of edge-addition events.

mod csv;
mod negatives;
mod synth;

pub use self::csv::{load_csv, parse_csv, write_csv, IngestConfig};
pub use self::negatives::{sample_negatives, NegativeSet};
pub use self::synth::{generate_synthetic, GeneratorConfig, SyntheticStream};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Kind of a stream event. Only edge additions are modeled; the remaining
/// variants exist so that inputs carrying them are rejected explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum EventKind {
    #[default]
    EdgeAddition,
    EdgeDeletion,
    NodeDeletion,
    FeatureUpdate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalEvent {
    pub src: usize,
    pub dst: usize,
    pub timestamp: f64,
    pub edge_feat: Vec<f64>,
    #[serde(default)]
    pub kind: EventKind,
}

impl TemporalEvent {
    pub fn new(src: usize, dst: usize, timestamp: f64) -> Self {
        Self {
            src,
            dst,
            timestamp,
            edge_feat: Vec::new(),
            kind: EventKind::EdgeAddition,
        }
    }

    pub fn with_features(mut self, feat: Vec<f64>) -> Self {
        self.edge_feat = feat;
        self
    }
}

/// An immutable, time-sorted event stream over densely indexed nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    events: Vec<TemporalEvent>,
    num_nodes: usize,
    d_e: usize,
    /// Original label of each dense node id.
    labels: Vec<String>,
}

impl EventStream {
    /// Validate and stably sort `events`. Node ids must already be dense in
    /// `0..num_nodes`; labels default to the decimal id.
    pub fn from_events(mut events: Vec<TemporalEvent>, num_nodes: usize) -> Result<Self> {
        let d_e = events.first().map_or(0, |e| e.edge_feat.len());
        for (i, e) in events.iter().enumerate() {
            validate_event(e, i + 1)?;
            if e.edge_feat.len() != d_e {
                return Err(Error::Validation(format!(
                    "event {} has {} edge features, expected {}",
                    i,
                    e.edge_feat.len(),
                    d_e
                )));
            }
            if e.src >= num_nodes || e.dst >= num_nodes {
                return Err(Error::Validation(format!(
                    "event {} references node outside 0..{}",
                    i, num_nodes
                )));
            }
        }
        // sort_by is stable: ties keep ingestion order.
        events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        let labels = (0..num_nodes).map(|i| i.to_string()).collect();
        Ok(Self {
            events,
            num_nodes,
            d_e,
            labels,
        })
    }

    pub(crate) fn with_labels(mut self, labels: Vec<String>) -> Self {
        debug_assert_eq!(labels.len(), self.num_nodes);
        self.labels = labels;
        self
    }

    pub fn empty(num_nodes: usize, d_e: usize) -> Self {
        Self {
            events: Vec::new(),
            num_nodes,
            d_e,
            labels: (0..num_nodes).map(|i| i.to_string()).collect(),
        }
    }

    pub fn events(&self) -> &[TemporalEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edge_feat_dim(&self) -> usize {
        self.d_e
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn start_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.timestamp)
    }

    pub fn end_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.timestamp)
    }

    /// `end − start`, zero for streams with fewer than two events.
    pub fn time_span(&self) -> f64 {
        match (self.start_time(), self.end_time()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn batch_events(&self, batch: &EventBatch) -> &[TemporalEvent] {
        &self.events[batch.start..batch.end]
    }

    /// Index of the first event with `timestamp >= t`.
    pub fn lower_bound(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.timestamp < t)
    }

    /// Sub-stream of the events in `range`, keeping the node space.
    pub fn slice(&self, range: std::ops::Range<usize>) -> EventStream {
        EventStream {
            events: self.events[range].to_vec(),
            num_nodes: self.num_nodes,
            d_e: self.d_e,
            labels: self.labels.clone(),
        }
    }

    /// Restrict the stream to events whose endpoints both pass `keep`, and
    /// re-index the retained nodes densely in increasing old-id order.
    /// Returns the new stream and the old id of every new id.
    pub fn induced(&self, keep: impl Fn(usize) -> bool) -> (EventStream, Vec<usize>) {
        let mut present = vec![false; self.num_nodes];
        for e in &self.events {
            if keep(e.src) && keep(e.dst) {
                present[e.src] = true;
                present[e.dst] = true;
            }
        }
        let mut new_id = vec![usize::MAX; self.num_nodes];
        let mut old_of = Vec::new();
        for (old, &p) in present.iter().enumerate() {
            if p {
                new_id[old] = old_of.len();
                old_of.push(old);
            }
        }
        let events = self
            .events
            .iter()
            .filter(|e| keep(e.src) && keep(e.dst))
            .map(|e| TemporalEvent {
                src: new_id[e.src],
                dst: new_id[e.dst],
                timestamp: e.timestamp,
                edge_feat: e.edge_feat.clone(),
                kind: e.kind,
            })
            .collect();
        let labels = old_of.iter().map(|&o| self.labels[o].clone()).collect();
        (
            EventStream {
                events,
                num_nodes: old_of.len(),
                d_e: self.d_e,
                labels,
            },
            old_of,
        )
    }
}

fn validate_event(e: &TemporalEvent, line: usize) -> Result<()> {
    if e.kind != EventKind::EdgeAddition {
        return Err(Error::Validation(format!(
            "event {}: {:?} events are not supported, only edge additions",
            line, e.kind
        )));
    }
    if e.src == e.dst {
        return Err(Error::Validation(format!(
            "event {}: self-loop on node {}",
            line, e.src
        )));
    }
    if !e.timestamp.is_finite() || e.timestamp < 0.0 {
        return Err(Error::Validation(format!(
            "event {}: timestamp {} must be finite and non-negative",
            line, e.timestamp
        )));
    }
    Ok(())
}

/// A contiguous, non-empty run of events in a stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventBatch {
    pub start: usize,
    pub end: usize,
    pub batch_start_time: f64,
    pub batch_end_time: f64,
}

impl EventBatch {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Cut `stream` into consecutive batches of `batch_size` events (the last
/// batch may be shorter). An empty stream yields no batches.
pub fn make_batches(stream: &EventStream, batch_size: usize) -> Result<Vec<EventBatch>> {
    make_batches_in(stream, 0..stream.len(), batch_size)
}

/// Batches covering only `range` of the stream.
pub fn make_batches_in(
    stream: &EventStream,
    range: std::ops::Range<usize>,
    batch_size: usize,
) -> Result<Vec<EventBatch>> {
    if batch_size == 0 {
        return Err(Error::Validation("batch_size must be at least 1".into()));
    }
    let events = stream.events();
    let mut out = Vec::with_capacity(range.len().div_ceil(batch_size));
    let mut start = range.start;
    while start < range.end {
        let end = (start + batch_size).min(range.end);
        out.push(EventBatch {
            start,
            end,
            batch_start_time: events[start].timestamp,
            batch_end_time: events[end - 1].timestamp,
        });
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream_of(n: usize) -> EventStream {
        let events = (0..n)
            .map(|i| TemporalEvent::new(i % 5, (i + 1) % 5, i as f64))
            .collect();
        EventStream::from_events(events, 5).unwrap()
    }

    #[test]
    fn batches_of_four() {
        let s = stream_of(10);
        let sizes: Vec<_> = make_batches(&s, 4).unwrap().iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
    }

    #[test]
    fn oversized_batch_is_single() {
        let s = stream_of(10);
        let b = make_batches(&s, 100).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].len(), 10);
    }

    #[test]
    fn empty_stream_has_no_batches() {
        let s = EventStream::empty(3, 0);
        assert!(make_batches(&s, 4).unwrap().is_empty());
        assert!(make_batches(&s, 0).is_err());
    }

    #[test]
    fn batch_time_bounds_contain_events() {
        let s = stream_of(23);
        for b in make_batches(&s, 7).unwrap() {
            for e in s.batch_events(&b) {
                assert!(b.batch_start_time <= e.timestamp && e.timestamp <= b.batch_end_time);
            }
        }
    }

    #[test]
    fn stable_sort_keeps_ingestion_order_on_ties() {
        let events = vec![
            TemporalEvent::new(0, 1, 2.0),
            TemporalEvent::new(1, 2, 1.0),
            TemporalEvent::new(2, 0, 1.0),
        ];
        let s = EventStream::from_events(events, 3).unwrap();
        let order: Vec<_> = s.events().iter().map(|e| (e.src, e.dst)).collect();
        assert_eq!(order, vec![(1, 2), (2, 0), (0, 1)]);
    }

    #[test]
    fn rejects_reserved_event_kinds() {
        let mut e = TemporalEvent::new(0, 1, 1.0);
        e.kind = EventKind::NodeDeletion;
        assert!(matches!(
            EventStream::from_events(vec![e], 2),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rejects_mixed_feature_arity() {
        let events = vec![
            TemporalEvent::new(0, 1, 1.0).with_features(vec![1.0]),
            TemporalEvent::new(1, 2, 2.0),
        ];
        assert!(EventStream::from_events(events, 3).is_err());
    }

    #[test]
    fn induced_reindexes_densely() {
        let events = vec![
            TemporalEvent::new(0, 3, 1.0),
            TemporalEvent::new(3, 4, 2.0),
            TemporalEvent::new(1, 2, 3.0),
        ];
        let s = EventStream::from_events(events, 5).unwrap();
        let (sub, old_of) = s.induced(|v| v != 1 && v != 2);
        assert_eq!(old_of, vec![0, 3, 4]);
        assert_eq!(sub.num_nodes(), 3);
        assert_eq!(sub.events()[1].src, 1);
        assert_eq!(sub.events()[1].dst, 2);
    }
}
