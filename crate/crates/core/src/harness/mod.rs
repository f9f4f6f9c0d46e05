//! Experiment driver: training with early stopping, the three transfer
//! scenarios, ranking metrics and the seed sweep.

mod features;
mod metrics;
mod pipeline;
mod sweep;
mod train;
mod transfer;

pub use features::{batch_endpoint_features, standardize_maps};
pub use metrics::{
    compute_ranking_metrics, tie_averaged_rank, BatchRecord, HitsAtK, MetricsRecord, Phase, RankingMetrics, Region,
};
pub use pipeline::{
    analyze_memory, prepare_benchmark, run_pipeline, split_stream, validation_continues, Benchmark,
    CorrelationReport, PipelineRun,
};
pub use sweep::{seed_sweep, Dispersion, EpochCurvePoint, ScenarioDispersion, SeedRun, SweepReport};
pub use train::{
    evaluate_stream, prepare_train_features, rng_stream, streams, train_epoch, train_model, BatchLoss, EpochStats,
    PreparedFeatures, StreamEval, StructMapTraining, TrainOutcome,
};
pub use transfer::{run_transfer, shared_eval_negatives, ColdStartTiming, ScenarioKind, TransferScenario};
