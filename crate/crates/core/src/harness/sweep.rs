use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::MetricsRecord;
use super::pipeline::run_pipeline;
use super::transfer::ScenarioKind;
use crate::config::RunConfig;
use crate::splitter::TransferSplit;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Dispersion {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n.max(1) as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            n,
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochCurvePoint {
    pub epoch: usize,
    pub mean_tlp: f64,
    pub mean_structmap: Option<f64>,
    pub val_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub curve: Vec<EpochCurvePoint>,
    pub records: Vec<MetricsRecord>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDispersion {
    pub scenario: String,
    pub eval_loss: Dispersion,
    pub mrr: Dispersion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub runs: Vec<SeedRun>,
    /// Over the runs that completed.
    pub summary: Vec<ScenarioDispersion>,
}

/// The full train-and-transfer pipeline once per model seed on fixed data.
/// Runs execute in parallel; a failed run is recorded, not fatal.
pub fn seed_sweep(cfg: &RunConfig, seeds: &[u64], split: &TransferSplit) -> Result<SweepReport> {
    if seeds.len() < 2 {
        return Err(Error::Precondition(format!(
            "a seed sweep needs at least 2 seeds, got {}",
            seeds.len()
        )));
    }
    let runs: Vec<SeedRun> = seeds
        .par_iter()
        .map(|&seed| {
            let mut c = cfg.clone();
            c.seed = seed;
            match run_pipeline(&c, split, &ScenarioKind::ALL) {
                Ok(run) => SeedRun {
                    seed,
                    curve: run
                        .outcome
                        .epochs
                        .iter()
                        .map(|e| EpochCurvePoint {
                            epoch: e.epoch,
                            mean_tlp: e.mean_tlp,
                            mean_structmap: e.mean_structmap,
                            val_loss: e.val_loss,
                        })
                        .collect(),
                    records: run.records,
                    error: None,
                },
                Err(e) => {
                    log::warn!("seed {seed} failed: {e}");
                    SeedRun {
                        seed,
                        curve: Vec::new(),
                        records: Vec::new(),
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let summary = ScenarioKind::ALL
        .iter()
        .map(|k| {
            let recs: Vec<&MetricsRecord> = runs
                .iter()
                .flat_map(|r| r.records.iter().filter(|m| m.scenario == k.as_str()))
                .collect();
            ScenarioDispersion {
                scenario: k.as_str().into(),
                eval_loss: Dispersion::of(&recs.iter().map(|m| m.mean_eval_loss).collect::<Vec<_>>()),
                mrr: Dispersion::of(&recs.iter().map(|m| m.mrr).collect::<Vec<_>>()),
            }
        })
        .collect();
    Ok(SweepReport {
        config_hash: cfg.hash(),
        seeds: seeds.to_vec(),
        runs,
        summary,
    })
}
