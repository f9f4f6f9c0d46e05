use serde::{Deserialize, Serialize};

use super::metrics::MetricsRecord;
use super::train::{rng_stream, streams, train_model, TrainOutcome};
use super::transfer::{run_transfer, shared_eval_negatives, ScenarioKind, TransferScenario};
use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::ctdg::{generate_synthetic, EventStream, SyntheticStream};
use crate::splitter::{aggregate_static, louvain, make_transfer_split, CommunityAssignment, TransferSplit};
use crate::structfeat::{aggregate_window, all_node_features, correlate_distances, fit_standardizer, DistanceCorrelation};
use crate::{Error, Result};

pub struct Benchmark {
    pub synthetic: SyntheticStream,
    pub assignment: CommunityAssignment,
    pub split: TransferSplit,
}

/// Community detection followed by the node-disjoint split.
pub fn split_stream(cfg: &RunConfig, stream: &EventStream) -> Result<(CommunityAssignment, TransferSplit)> {
    let graph = aggregate_static(stream);
    let assignment = louvain(&graph, &mut rng_stream(cfg.data_seed, streams::COMMUNITIES));
    let split = make_transfer_split(stream, &assignment, cfg.balance_tolerance, cfg.split_fallback)?;
    Ok((assignment, split))
}

/// Synthetic stream from the config, split for transfer.
pub fn prepare_benchmark(cfg: &RunConfig) -> Result<Benchmark> {
    let synthetic = generate_synthetic(&cfg.generator_config(), &mut rng_stream(cfg.data_seed, 0))?;
    let (assignment, split) = split_stream(cfg, &synthetic.stream)?;
    Ok(Benchmark {
        synthetic,
        assignment,
        split,
    })
}

/// Whether validation continues the training stream (temporal fallback)
/// rather than covering its own node set.
pub fn validation_continues(split: &TransferSplit) -> bool {
    split.report.fallback_used
}

pub struct PipelineRun {
    pub outcome: TrainOutcome,
    pub records: Vec<MetricsRecord>,
}

/// Train on the split, then evaluate every requested scenario on its test
/// stream with shared negatives.
pub fn run_pipeline(cfg: &RunConfig, split: &TransferSplit, scenarios: &[ScenarioKind]) -> Result<PipelineRun> {
    let outcome = train_model(cfg, &split.train, &split.val, validation_continues(split))?;
    let negs = shared_eval_negatives(cfg, &split.test)?;
    let records = scenarios
        .iter()
        .map(|&k| run_transfer(&outcome.checkpoint, &split.test, &TransferScenario::from_config(k, cfg), cfg, &negs))
        .collect::<Result<Vec<_>>>()?;
    Ok(PipelineRun { outcome, records })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub config_hash: String,
    pub num_nodes: usize,
    pub window_fraction: f64,
    pub correlation: DistanceCorrelation,
}

/// Correlate pairwise memory distances with pairwise (z-scored) structural
/// feature distances for the training nodes at the end of training.
pub fn analyze_memory(cfg: &RunConfig, ckpt: &Checkpoint, train: &EventStream) -> Result<CorrelationReport> {
    let mut state = ckpt.state.clone();
    state.flush(&ckpt.params)?;
    let end = train
        .end_time()
        .ok_or_else(|| Error::Precondition("training stream is empty".into()))?;
    let span = train.time_span();
    // The window is half-open; nudge its end past the last event.
    let t = end + span.max(1.0) * 1e-9;
    let g = aggregate_window(train, t, cfg.analysis_window_fraction.min(1.0), span);
    let feats = all_node_features(&g, &ckpt.feature_config);
    let nodes: Vec<usize> = (0..train.num_nodes())
        .filter(|&n| !state.store.is_fresh(n) && g.degree(n) > 0)
        .collect();
    let raw: Vec<Vec<f64>> = nodes.iter().map(|&n| feats[n].values.clone()).collect();
    let z = fit_standardizer(&raw)?;
    let features: Vec<Vec<f64>> = raw.iter().map(|r| z.apply_slice(r)).collect();
    let memory: Vec<Vec<f64>> = nodes.iter().map(|&n| state.store.row(n).to_vec()).collect();
    let correlation = correlate_distances(
        &memory,
        &features,
        cfg.analysis_pairs,
        &mut rng_stream(cfg.seed, streams::ANALYSIS),
    )?;
    Ok(CorrelationReport {
        config_hash: cfg.hash(),
        num_nodes: nodes.len(),
        window_fraction: cfg.analysis_window_fraction,
        correlation,
    })
}
