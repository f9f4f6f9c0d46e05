use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_ranking_metrics, BatchRecord, MetricsRecord, Phase, Region};
use super::train::{rng_stream, streams};
use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::ctdg::{make_batches_in, sample_negatives, EventBatch, EventStream, NegativeSet};
use crate::nn::{Adam, AdamConfig, Module};
use crate::structfeat::{aggregate_window, all_node_features, StructuralFeatureVector};
use crate::tgn::{StructMapTerm, TgnState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    NoWarmStart,
    WarmStart,
    StructuralMapping,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::NoWarmStart,
        ScenarioKind::WarmStart,
        ScenarioKind::StructuralMapping,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::NoWarmStart => "no_warm_start",
            ScenarioKind::WarmStart => "warm_start",
            ScenarioKind::StructuralMapping => "structural_mapping",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

/// When a never-seen node receives its structural initialisation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColdStartTiming {
    /// Before the predictions of the batch the node first appears in,
    /// from the window ending at that batch's start.
    FirstAppearance,
    /// Once the batch the node first appears in has been predicted, from
    /// the window ending at the next batch's start (which contains the
    /// node's first events) and before that batch's messages are built.
    AfterFirstBatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferScenario {
    pub kind: ScenarioKind,
    pub finetune_fraction: f64,
    pub memory_only: bool,
    pub alpha: f64,
    pub window_fraction: f64,
    pub cold_start: ColdStartTiming,
}

impl TransferScenario {
    pub fn from_config(kind: ScenarioKind, cfg: &RunConfig) -> Self {
        Self {
            kind,
            finetune_fraction: cfg.finetune_fraction,
            memory_only: cfg.finetune_memory_only,
            alpha: cfg.alpha,
            window_fraction: cfg.window_fraction,
            cold_start: cfg.cold_start_timing,
        }
    }
}

/// Evaluation negatives for a test stream. Seeded by the data seed so all
/// scenarios and model seeds of one experiment rank the same candidates.
pub fn shared_eval_negatives(cfg: &RunConfig, test: &EventStream) -> Result<NegativeSet> {
    sample_negatives(
        test.events(),
        test.num_nodes(),
        cfg.eval_negatives,
        &mut rng_stream(cfg.data_seed, streams::EVAL_NEGATIVES),
    )
}

fn region(test: &EventStream, range: std::ops::Range<usize>) -> Region {
    let ev = test.events();
    Region {
        first_event: range.start,
        end_event: range.end,
        start_time: ev.get(range.start).map_or(0.0, |e| e.timestamp),
        end_time: if range.is_empty() { 0.0 } else { ev[range.end - 1].timestamp },
    }
}

fn standardized_endpoints(
    test: &EventStream,
    b: &EventBatch,
    feats: &[StructuralFeatureVector],
    ckpt: &Checkpoint,
) -> Result<BTreeMap<usize, StructuralFeatureVector>> {
    let std = ckpt.standardizer.as_ref().expect("checked by caller");
    test.batch_events(b)
        .iter()
        .flat_map(|e| [e.src, e.dst])
        .map(|n| Ok((n, std.apply(&feats[n])?)))
        .collect()
}

/// Apply the trained model to an unseen stream under one scenario.
pub fn run_transfer(
    ckpt: &Checkpoint,
    test: &EventStream,
    scenario: &TransferScenario,
    cfg: &RunConfig,
    eval_negatives: &NegativeSet,
) -> Result<MetricsRecord> {
    let started = Instant::now();
    let mut params = ckpt.params.clone();
    if test.edge_feat_dim() != params.config.edge_feat_dim {
        return Err(Error::Config(format!(
            "test stream has {} edge features, model expects {}",
            test.edge_feat_dim(),
            params.config.edge_feat_dim
        )));
    }
    if eval_negatives.num_events() != test.len() {
        return Err(Error::Config("evaluation negatives do not match the test stream".into()));
    }
    let structural = scenario.kind == ScenarioKind::StructuralMapping;
    let (sm, standardizer) = match (structural, &ckpt.structmap, &ckpt.standardizer) {
        (false, ..) => (None, None),
        (true, Some(sm), Some(st)) => (Some(sm), Some(st)),
        _ => {
            return Err(Error::Config(
                "structural_mapping needs a checkpoint trained with a structural map".into(),
            ))
        }
    };

    let n_ft = if scenario.kind == ScenarioKind::WarmStart {
        ((test.len() as f64) * scenario.finetune_fraction).round() as usize
    } else {
        0
    };
    let ft_batches = make_batches_in(test, 0..n_ft, cfg.batch_size)?;
    let eval_batches = make_batches_in(test, n_ft..test.len(), cfg.batch_size)?;
    let mut state = TgnState::new(test.num_nodes(), &params.config);
    let mut records = Vec::new();

    let mut optimizer = Adam::new(AdamConfig {
        lr: cfg.finetune_lr,
        ..cfg.adam_config()
    });
    if n_ft > 0 {
        let ft_negs = sample_negatives(
            &test.events()[..n_ft],
            test.num_nodes(),
            cfg.train_negatives,
            &mut rng_stream(cfg.seed, streams::FINETUNE_NEGATIVES),
        )?;
        for (i, b) in ft_batches.iter().enumerate() {
            let events = test.batch_events(b);
            params.zero_grad();
            let out = state
                .process_batch(&mut params, events, &ft_negs.slice(b.start..b.end), None, !scenario.memory_only)
                .map_err(|e| e.at_batch(i))?;
            if !scenario.memory_only {
                optimizer
                    .step(&mut params.parameters_mut())
                    .map_err(|e| e.at_batch(i))?;
            }
            state.observe(events)?;
            records.push(BatchRecord {
                batch: i,
                phase: Phase::Finetune,
                num_events: events.len(),
                start_time: b.batch_start_time,
                tlp_loss: out.tlp_loss,
                structmap_loss: None,
                total_loss: out.total_loss,
            });
        }
    }

    let mut seen = vec![false; test.num_nodes()];
    for e in &test.events()[..n_ft] {
        seen[e.src] = true;
        seen[e.dst] = true;
    }
    let mut cold_starts = 0;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    let (mut weighted, mut count) = (0.0, 0usize);
    let feature_cfg = ckpt.feature_config;
    let window = |t: f64| {
        let g = aggregate_window(test, t, scenario.window_fraction, ckpt.train_span);
        all_node_features(&g, &feature_cfg)
    };
    for (j, b) in eval_batches.iter().enumerate() {
        let idx = ft_batches.len() + j;
        let events = test.batch_events(b);
        let mut features = None;
        if let (Some(sm), Some(st)) = (sm, standardizer) {
            let feats = window(b.batch_start_time);
            if scenario.cold_start == ColdStartTiming::FirstAppearance {
                for e in events {
                    for n in [e.src, e.dst] {
                        if !seen[n] && state.store.is_fresh(n) {
                            let init = sm.forward(&st.apply(&feats[n])?)?;
                            state.store.write(n, &init, b.batch_start_time)?;
                            cold_starts += 1;
                        }
                    }
                }
            }
            features = Some(standardized_endpoints(test, b, &feats, ckpt)?);
        }
        let mut sm_scratch = sm.cloned();
        let term = match (sm_scratch.as_mut(), features.as_ref()) {
            (Some(s), Some(f)) => Some(StructMapTerm {
                structmap: s,
                features: f,
                alpha: scenario.alpha,
                coupled: false,
            }),
            _ => None,
        };
        let out = state
            .process_batch(&mut params, events, &eval_negatives.slice(b.start..b.end), term, false)
            .map_err(|e| e.at_batch(idx))?;

        // Nodes first seen in this batch, with their first timestamp.
        let mut new_nodes: Vec<(usize, f64)> = Vec::new();
        for e in events {
            for n in [e.src, e.dst] {
                if !seen[n] {
                    seen[n] = true;
                    new_nodes.push((n, e.timestamp));
                }
            }
        }
        if let (Some(sm), Some(st), Some(next)) = (sm, standardizer, eval_batches.get(j + 1)) {
            if scenario.cold_start == ColdStartTiming::AfterFirstBatch && !new_nodes.is_empty() {
                // The batch has been predicted; its events may now shape the
                // initial memory, before its own messages are recorded.
                let feats = window(next.batch_start_time);
                for &(n, t0) in &new_nodes {
                    if state.store.is_fresh(n) {
                        let init = sm.forward(&st.apply(&feats[n])?)?;
                        state.store.write(n, &init, t0)?;
                        cold_starts += 1;
                    }
                }
            }
        }
        state.observe(events)?;
        weighted += out.tlp_loss * events.len() as f64;
        count += events.len();
        records.push(BatchRecord {
            batch: idx,
            phase: Phase::Eval,
            num_events: events.len(),
            start_time: b.batch_start_time,
            tlp_loss: out.tlp_loss,
            structmap_loss: out.structmap_loss,
            total_loss: out.total_loss,
        });
        pos.extend(out.pos_logits);
        neg.extend(out.neg_logits);
    }

    let eval_region = region(test, n_ft..test.len());
    let finetune_region = (scenario.kind == ScenarioKind::WarmStart).then(|| region(test, 0..n_ft));
    if let Some(ft) = finetune_region.as_ref().filter(|r| r.end_event > r.first_event) {
        assert!(
            ft.end_event <= eval_region.first_event && ft.end_time <= eval_region.start_time,
            "fine-tuning region overlaps the evaluation region"
        );
    }
    let ranking = compute_ranking_metrics(&pos, &neg, eval_negatives.k, &cfg.hits_k);
    Ok(MetricsRecord {
        scenario: scenario.kind.as_str().into(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        alpha: structural.then_some(scenario.alpha),
        t_finetune: finetune_region.as_ref().map(|_| {
            test.events().get(n_ft).map_or(eval_region.end_time, |e| e.timestamp)
        }),
        eval_region,
        finetune_region,
        negatives_per_event: eval_negatives.k,
        optimizer_steps: optimizer.steps,
        cold_starts,
        mean_eval_loss: if count == 0 { 0.0 } else { weighted / count as f64 },
        mrr: ranking.mrr,
        hits: ranking.hits,
        batches: records,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}
