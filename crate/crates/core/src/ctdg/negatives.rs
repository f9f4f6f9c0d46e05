use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TemporalEvent;
use crate::{Error, Result};

/// `k` negative destinations for each event of a batch, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeSet {
    pub k: usize,
    pub nodes: Vec<usize>,
}

impl NegativeSet {
    pub fn for_event(&self, i: usize) -> &[usize] {
        &self.nodes[i * self.k..(i + 1) * self.k]
    }

    pub fn num_events(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.nodes.len() / self.k
        }
    }

    /// Negatives of the events in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> NegativeSet {
        NegativeSet {
            k: self.k,
            nodes: self.nodes[range.start * self.k..range.end * self.k].to_vec(),
        }
    }

    /// Keep only the first `k` negatives of every event.
    pub fn truncate(&self, k: usize) -> NegativeSet {
        let k = k.min(self.k);
        let nodes = (0..self.num_events())
            .flat_map(|i| self.for_event(i)[..k].iter().copied())
            .collect();
        NegativeSet { k, nodes }
    }
}

/// Draw `k` destinations per event uniformly from `0..num_nodes` minus the
/// event's true destination.
pub fn sample_negatives<R: Rng + ?Sized>(
    events: &[TemporalEvent],
    num_nodes: usize,
    k: usize,
    rng: &mut R,
) -> Result<NegativeSet> {
    if num_nodes < 2 {
        return Err(Error::Sampling(format!(
            "need at least 2 nodes, stream has {}",
            num_nodes
        )));
    }
    if k == 0 {
        return Err(Error::Sampling("k must be at least 1".into()));
    }
    let mut nodes = Vec::with_capacity(events.len() * k);
    for e in events {
        for _ in 0..k {
            let r = rng.gen_range(0..num_nodes - 1);
            nodes.push(if r >= e.dst { r + 1 } else { r });
        }
    }
    Ok(NegativeSet { k, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn only_candidate_is_returned() {
        let ev = [TemporalEvent::new(0, 1, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = sample_negatives(&ev, 2, 1, &mut rng).unwrap();
        assert_eq!(n.nodes, vec![0]);
    }

    #[test]
    fn deterministic_for_seed() {
        let ev: Vec<_> = (0..10).map(|i| TemporalEvent::new(i, i + 1, 0.0)).collect();
        let a = sample_negatives(&ev, 30, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_negatives(&ev, 30, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_nodes() {
        let ev = [TemporalEvent::new(0, 1, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_negatives(&ev, 1, 1, &mut rng),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn truncate_keeps_prefix() {
        let set = NegativeSet {
            k: 3,
            nodes: vec![1, 2, 3, 4, 5, 6],
        };
        assert_eq!(set.truncate(1).nodes, vec![1, 4]);
    }
}
