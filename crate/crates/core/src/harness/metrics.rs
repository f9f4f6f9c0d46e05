use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Rank of the true candidate among itself and `negatives`, ties counted
/// as the mean of the optimistic and pessimistic positions.
pub fn tie_averaged_rank(true_score: f64, negatives: &[f64]) -> f64 {
    let greater = negatives.iter().filter(|&&s| s > true_score).count();
    let equal = negatives.iter().filter(|&&s| s == true_score).count();
    1.0 + greater as f64 + equal as f64 / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitsAtK {
    pub k: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub mrr: f64,
    pub hits: Vec<HitsAtK>,
    pub num_events: usize,
}

/// MRR and Hits@K for `positives[i]` against `negatives[i·k..(i+1)·k]`.
pub fn compute_ranking_metrics(positives: &[f64], negatives: &[f64], k: usize, hits_k: &[usize]) -> RankingMetrics {
    assert!(k >= 1, "at least one negative per event");
    assert_eq!(negatives.len(), positives.len() * k, "k negatives per event");
    let ranks: Vec<f64> = positives
        .iter()
        .enumerate()
        .map(|(i, &p)| tie_averaged_rank(p, &negatives[i * k..(i + 1) * k]))
        .collect();
    let n = ranks.len().max(1) as f64;
    let mut ks = hits_k.to_vec();
    ks.sort_unstable();
    ks.dedup();
    RankingMetrics {
        mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
        hits: ks
            .into_iter()
            .map(|kk| HitsAtK {
                k: kk,
                value: ranks.iter().filter(|&&r| r <= kk as f64).count() as f64 / n,
            })
            .collect(),
        num_events: ranks.len(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Finetune,
    Eval,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Finetune => "finetune",
            Phase::Eval => "eval",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub batch: usize,
    pub phase: Phase,
    pub num_events: usize,
    pub start_time: f64,
    pub tlp_loss: f64,
    pub structmap_loss: Option<f64>,
    pub total_loss: f64,
}

/// Contiguous range of test events `[first_event, end_event)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub first_event: usize,
    pub end_event: usize,
    pub start_time: f64,
    pub end_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scenario: String,
    pub seed: u64,
    pub config_hash: String,
    pub alpha: Option<f64>,
    pub eval_region: Region,
    pub finetune_region: Option<Region>,
    pub t_finetune: Option<f64>,
    pub negatives_per_event: usize,
    pub optimizer_steps: u64,
    pub cold_starts: usize,
    /// Event-weighted mean TLP loss over the evaluation region.
    pub mean_eval_loss: f64,
    pub mrr: f64,
    pub hits: Vec<HitsAtK>,
    pub batches: Vec<BatchRecord>,
    /// Kept out of the serialized record so metric files are reproducible.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl MetricsRecord {
    pub fn eval_batches(&self) -> impl Iterator<Item = &BatchRecord> {
        self.batches.iter().filter(|b| b.phase == Phase::Eval)
    }

    /// Per-batch loss curve, one comment line carrying the config hash.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# config_hash={}\n# scenario={}\n", self.config_hash, self.scenario);
        out.push_str("batch,phase,num_events,start_time,tlp_loss,structmap_loss,total_loss\n");
        for b in &self.batches {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                b.batch,
                b.phase.as_str(),
                b.num_events,
                b.start_time,
                b.tlp_loss,
                b.structmap_loss.map(|v| v.to_string()).unwrap_or_default(),
                b.total_loss
            );
        }
        out
    }
}
