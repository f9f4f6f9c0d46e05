use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::ctdg::{EventBatch, EventStream};
use crate::structfeat::{
    aggregate_window, all_node_features, FeatureConfig, FeatureStandardizer, StructuralFeatureVector,
};
use crate::Result;

/// Raw features of every endpoint of every batch, each over the window
/// that ends at its batch's first timestamp.
pub fn batch_endpoint_features(
    stream: &EventStream,
    batches: &[EventBatch],
    window_fraction: f64,
    train_span: f64,
    config: &FeatureConfig,
) -> Vec<BTreeMap<usize, Vec<f64>>> {
    batches
        .par_iter()
        .map(|b| {
            let g = aggregate_window(stream, b.batch_start_time, window_fraction, train_span);
            let feats = all_node_features(&g, config);
            stream
                .batch_events(b)
                .iter()
                .flat_map(|e| [e.src, e.dst])
                .map(|n| (n, feats[n].values.clone()))
                .collect()
        })
        .collect()
}

pub fn standardize_maps(
    maps: &[BTreeMap<usize, Vec<f64>>],
    standardizer: &FeatureStandardizer,
) -> Result<Vec<BTreeMap<usize, StructuralFeatureVector>>> {
    maps.iter()
        .map(|m| {
            m.iter()
                .map(|(&n, v)| Ok((n, standardizer.apply(&StructuralFeatureVector::raw(v.clone()))?)))
                .collect()
        })
        .collect()
}
