use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{batch_endpoint_features, standardize_maps};
use crate::checkpoint::{Checkpoint, RngState, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
use crate::config::RunConfig;
use crate::ctdg::{make_batches, sample_negatives, EventBatch, EventStream, NegativeSet};
use crate::nn::{Adam, Module};
use crate::structfeat::{fit_standardizer, FeatureStandardizer, StructuralFeatureVector};
use crate::structmap::StructMap;
use crate::tgn::{BatchOutput, StructMapTerm, TgnParams, TgnState};
use crate::{Error, Result};

/// Independent ChaCha streams per purpose, so that optional components
/// never shift another component's random numbers.
pub mod streams {
    pub const MODEL_INIT: u64 = 0;
    pub const STRUCTMAP_INIT: u64 = 1;
    pub const TRAIN_NEGATIVES: u64 = 2;
    pub const VAL_NEGATIVES: u64 = 3;
    pub const EVAL_NEGATIVES: u64 = 4;
    pub const FINETUNE_NEGATIVES: u64 = 5;
    pub const ANALYSIS: u64 = 6;
    pub const COMMUNITIES: u64 = 7;
}

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchLoss {
    pub tlp: f64,
    pub structmap: Option<f64>,
    pub total: f64,
}

impl From<&BatchOutput> for BatchLoss {
    fn from(o: &BatchOutput) -> Self {
        Self {
            tlp: o.tlp_loss,
            structmap: o.structmap_loss,
            total: o.total_loss,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub batches: Vec<BatchLoss>,
    pub mean_tlp: f64,
    pub mean_structmap: Option<f64>,
    pub mean_total: f64,
    pub val_loss: f64,
}

/// Structural-map objective attached to training.
pub struct StructMapTraining<'a> {
    pub structmap: &'a mut StructMap,
    /// Standardized endpoint features, one map per batch.
    pub features: &'a [BTreeMap<usize, StructuralFeatureVector>],
    pub alpha: f64,
    pub coupled: bool,
}

/// One pass over `batches` with an optimizer step after every batch.
/// The caller resets `state` beforehand if the epoch should start cold.
#[allow(clippy::too_many_arguments)]
pub fn train_epoch(
    stream: &EventStream,
    batches: &[EventBatch],
    state: &mut TgnState,
    params: &mut TgnParams,
    mut structmap: Option<StructMapTraining<'_>>,
    optimizer: &mut Adam,
    negatives_per_event: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BatchLoss>> {
    let mut losses = Vec::with_capacity(batches.len());
    for (i, b) in batches.iter().enumerate() {
        let events = stream.batch_events(b);
        let negs = sample_negatives(events, stream.num_nodes(), negatives_per_event, rng)?;
        params.zero_grad();
        let term = match structmap.as_mut() {
            Some(s) => {
                s.structmap.zero_grad();
                Some(StructMapTerm {
                    structmap: &mut *s.structmap,
                    features: &s.features[i],
                    alpha: s.alpha,
                    coupled: s.coupled,
                })
            }
            None => None,
        };
        let out = state
            .process_batch(params, events, &negs, term, true)
            .map_err(|e| e.at_batch(i))?;
        let mut tensors = params.parameters_mut();
        if let Some(s) = structmap.as_mut() {
            tensors.extend(s.structmap.parameters_mut());
        }
        optimizer.step(&mut tensors).map_err(|e| e.at_batch(i))?;
        state.observe(events)?;
        losses.push(BatchLoss::from(&out));
    }
    Ok(losses)
}

/// Logits and losses of a gradient-free pass.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamEval {
    pub batch_losses: Vec<f64>,
    /// Event-weighted mean TLP loss.
    pub mean_loss: f64,
    pub pos_logits: Vec<f64>,
    pub neg_logits: Vec<f64>,
}

/// Stream `batches` through the model without gradients, updating `state`.
pub fn evaluate_stream(
    stream: &EventStream,
    batches: &[EventBatch],
    state: &mut TgnState,
    params: &TgnParams,
    negatives: &NegativeSet,
) -> Result<StreamEval> {
    let mut p = params.clone();
    let mut out = StreamEval {
        batch_losses: Vec::with_capacity(batches.len()),
        mean_loss: 0.0,
        pos_logits: Vec::new(),
        neg_logits: Vec::new(),
    };
    let mut weighted = 0.0;
    let mut count = 0usize;
    for (i, b) in batches.iter().enumerate() {
        let events = stream.batch_events(b);
        let o = state
            .process_batch(&mut p, events, &negatives.slice(b.start..b.end), None, false)
            .map_err(|e| e.at_batch(i))?;
        state.observe(events)?;
        weighted += o.tlp_loss * events.len() as f64;
        count += events.len();
        out.batch_losses.push(o.tlp_loss);
        out.pos_logits.extend(o.pos_logits);
        out.neg_logits.extend(o.neg_logits);
    }
    out.mean_loss = if count == 0 { 0.0 } else { weighted / count as f64 };
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub epochs: Vec<EpochStats>,
    pub stopped_early: bool,
}

/// Standardizer and per-batch standardized features of the training stream.
pub struct PreparedFeatures {
    pub standardizer: FeatureStandardizer,
    pub features: Vec<BTreeMap<usize, StructuralFeatureVector>>,
}

pub fn prepare_train_features(cfg: &RunConfig, train: &EventStream, batches: &[EventBatch]) -> Result<PreparedFeatures> {
    let raw = batch_endpoint_features(
        train,
        batches,
        cfg.window_fraction,
        train.time_span(),
        &cfg.feature_config(),
    );
    let rows: Vec<Vec<f64>> = raw.iter().flat_map(|m| m.values().cloned()).collect();
    let standardizer = fit_standardizer(&rows)?;
    let features = standardize_maps(&raw, &standardizer)?;
    Ok(PreparedFeatures { standardizer, features })
}

struct Snapshot {
    epoch: usize,
    params: TgnParams,
    structmap: Option<StructMap>,
    state: TgnState,
    optimizer: Adam,
    rng: RngState,
}

/// Train on `train` with early stopping on the validation TLP loss.
/// When `val_continues_train` is set the validation stream shares the
/// training node space and is evaluated from the end-of-epoch memory;
/// otherwise from fresh memory.
pub fn train_model(
    cfg: &RunConfig,
    train: &EventStream,
    val: &EventStream,
    val_continues_train: bool,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.epochs == 0 {
        return Err(Error::Config("`epochs` must be at least 1".into()));
    }
    if train.is_empty() || val.is_empty() {
        return Err(Error::Precondition("training and validation streams must be non-empty".into()));
    }
    if val_continues_train && val.num_nodes() != train.num_nodes() {
        return Err(Error::Precondition(
            "a continuing validation stream must share the training node space".into(),
        ));
    }
    let tgn_cfg = cfg.tgn_config(train.edge_feat_dim());
    let train_span = train.time_span();
    let mut params = TgnParams::new(&tgn_cfg, train_span, &mut rng_stream(cfg.seed, streams::MODEL_INIT))?;
    let batches = make_batches(train, cfg.batch_size)?;

    let feature_cfg = cfg.feature_config();
    let (mut structmap, prepared) = if cfg.structmap {
        let sm = StructMap::new(
            feature_cfg.dim(),
            cfg.structmap_hidden,
            cfg.memory_dim,
            &mut rng_stream(cfg.seed, streams::STRUCTMAP_INIT),
        )?;
        (Some(sm), Some(prepare_train_features(cfg, train, &batches)?))
    } else {
        (None, None)
    };

    let mut optimizer = Adam::new(cfg.adam_config());
    let mut neg_rng = rng_stream(cfg.seed, streams::TRAIN_NEGATIVES);
    let val_negs = sample_negatives(
        val.events(),
        val.num_nodes(),
        cfg.train_negatives,
        &mut rng_stream(cfg.seed, streams::VAL_NEGATIVES),
    )?;
    let val_batches = make_batches(val, cfg.batch_size)?;

    let mut state = TgnState::new(train.num_nodes(), &tgn_cfg);
    let mut epochs = Vec::new();
    let mut best: Option<(f64, Snapshot)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;
    for epoch in 0..cfg.epochs {
        state.reset();
        let sm_training = match (structmap.as_mut(), prepared.as_ref()) {
            (Some(sm), Some(p)) => Some(StructMapTraining {
                structmap: sm,
                features: &p.features,
                alpha: cfg.alpha,
                coupled: cfg.coupled_structmap,
            }),
            _ => None,
        };
        let losses = train_epoch(
            train,
            &batches,
            &mut state,
            &mut params,
            sm_training,
            &mut optimizer,
            cfg.train_negatives,
            &mut neg_rng,
        )?;
        let mut val_state = if val_continues_train {
            state.clone()
        } else {
            TgnState::new(val.num_nodes(), &tgn_cfg)
        };
        let val_loss = evaluate_stream(val, &val_batches, &mut val_state, &params, &val_negs)?.mean_loss;
        let n = losses.len().max(1) as f64;
        let mean_structmap = structmap
            .as_ref()
            .map(|_| losses.iter().filter_map(|l| l.structmap).sum::<f64>() / n);
        let stats = EpochStats {
            epoch,
            mean_tlp: losses.iter().map(|l| l.tlp).sum::<f64>() / n,
            mean_total: losses.iter().map(|l| l.total).sum::<f64>() / n,
            mean_structmap,
            batches: losses,
            val_loss,
        };
        log::info!(
            "epoch {epoch}: train tlp {:.5}, structmap {:?}, val {:.5}",
            stats.mean_tlp,
            stats.mean_structmap,
            val_loss
        );
        epochs.push(stats);

        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            since_best = 0;
            best = Some((
                val_loss,
                Snapshot {
                    epoch,
                    params: params.clone(),
                    structmap: structmap.clone(),
                    state: state.clone(),
                    optimizer: optimizer.clone(),
                    rng: RngState::capture(cfg.seed, &neg_rng),
                },
            ));
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                log::info!("early stop after epoch {epoch}");
                break;
            }
        }
    }
    let (_, snap) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_hash: cfg.hash(),
            config: cfg.as_map(),
            params: snap.params,
            structmap: snap.structmap,
            standardizer: prepared.map(|p| p.standardizer),
            feature_config: feature_cfg,
            train_span,
            best_epoch: snap.epoch,
            state: snap.state,
            optimizer: snap.optimizer,
            rng: snap.rng,
        },
        epochs,
        stopped_early,
    })
}
