//! Structural map: an MLP from standardized structural features of a node
//! to a memory vector, trained against the memory the TGN builds and used
//! to initialise the memory of nodes that have never been seen.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{Mlp, MlpCache, MlpShape, Module, Tensor};
use crate::structfeat::{
    all_node_features, node_features, FeatureConfig, FeatureStandardizer, StructuralFeatureVector, WindowGraph,
};
use crate::tgn::MemoryStore;
use crate::{Error, Result};

/// `d_S → h → h → d_M` with ReLU between layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructMap {
    pub mlp: Mlp,
}

impl StructMap {
    pub fn new<R: Rng + ?Sized>(feature_dim: usize, hidden: usize, memory_dim: usize, rng: &mut R) -> Result<Self> {
        let shape = MlpShape::new(feature_dim, &[hidden, hidden], memory_dim);
        Ok(Self {
            mlp: Mlp::new("structmap", shape, rng)?,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.mlp.shape().input_dim
    }

    pub fn memory_dim(&self) -> usize {
        self.mlp.shape().output_dim
    }

    pub fn forward(&self, features: &StructuralFeatureVector) -> Result<Vec<f64>> {
        require_standardized(features)?;
        self.mlp.apply(&features.values)
    }

    pub(crate) fn forward_cached(&self, features: &StructuralFeatureVector) -> Result<(Vec<f64>, MlpCache)> {
        require_standardized(features)?;
        self.mlp.forward(&features.values)
    }
}

impl Module for StructMap {
    fn parameters(&self) -> Vec<&Tensor> {
        self.mlp.parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.mlp.parameters_mut()
    }
}

fn require_standardized(f: &StructuralFeatureVector) -> Result<()> {
    if !f.standardized {
        return Err(Error::Contract(
            "structural map requires standardized features".into(),
        ));
    }
    Ok(())
}

/// Mean squared error between `f(features_i)` and `targets_i` over all
/// nodes and memory dimensions. Zero for an empty set.
pub fn structmap_loss(
    sm: &StructMap,
    features: &[StructuralFeatureVector],
    targets: &[Vec<f64>],
) -> Result<f64> {
    if features.len() != targets.len() {
        return Err(Error::Shape {
            layer: "structmap.targets".into(),
            expected: features.len(),
            got: targets.len(),
        });
    }
    if features.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (f, t) in features.iter().zip(targets) {
        let pred = sm.forward(f)?;
        if t.len() != pred.len() {
            return Err(Error::Shape {
                layer: "structmap.targets".into(),
                expected: pred.len(),
                got: t.len(),
            });
        }
        sum += pred.iter().zip(t).map(|(p, y)| (p - y) * (p - y)).sum::<f64>();
    }
    Ok(sum / (features.len() * sm.memory_dim()) as f64)
}

/// [`structmap_loss`], accumulating `scale ·` its gradient into `sm`.
pub fn structmap_loss_backward(
    sm: &mut StructMap,
    features: &[StructuralFeatureVector],
    targets: &[Vec<f64>],
    scale: f64,
) -> Result<f64> {
    let loss = structmap_loss(sm, features, targets)?;
    if features.is_empty() {
        return Ok(loss);
    }
    let denom = (features.len() * sm.memory_dim()) as f64;
    for (f, t) in features.iter().zip(targets) {
        let (pred, cache) = sm.forward_cached(f)?;
        let g: Vec<f64> = pred.iter().zip(t).map(|(p, y)| scale * 2.0 * (p - y) / denom).collect();
        sm.mlp.backward(&cache, &g);
    }
    Ok(loss)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColdStart {
    Initialized,
    AlreadyInitialized,
}

/// Write `f(standardize(features(node, window)))` into a never-seen
/// memory row and stamp it with `t`. Rows that already hold memory are
/// left untouched.
pub fn cold_start(
    store: &mut MemoryStore,
    node: usize,
    window: &WindowGraph,
    t: f64,
    standardizer: &FeatureStandardizer,
    sm: &StructMap,
    feature_config: &FeatureConfig,
) -> Result<ColdStart> {
    store.check_node(node)?;
    if !store.is_fresh(node) {
        log::debug!("cold start skipped for node {node}: memory already initialised");
        return Ok(ColdStart::AlreadyInitialized);
    }
    let raw = node_features(window, node, feature_config);
    write_initial(store, node, &raw, t, standardizer, sm)
}

/// [`cold_start`] for several nodes sharing one window; betweenness is
/// computed once.
pub fn cold_start_many(
    store: &mut MemoryStore,
    nodes: &[(usize, f64)],
    window: &WindowGraph,
    standardizer: &FeatureStandardizer,
    sm: &StructMap,
    feature_config: &FeatureConfig,
) -> Result<Vec<ColdStart>> {
    if nodes.iter().all(|&(n, _)| n < store.num_nodes() && !store.is_fresh(n)) {
        return Ok(vec![ColdStart::AlreadyInitialized; nodes.len()]);
    }
    let feats = all_node_features(window, feature_config);
    nodes
        .iter()
        .map(|&(node, t)| {
            store.check_node(node)?;
            if !store.is_fresh(node) {
                return Ok(ColdStart::AlreadyInitialized);
            }
            let raw = feats
                .get(node)
                .cloned()
                .unwrap_or_else(|| StructuralFeatureVector::zeros(feature_config.dim()));
            write_initial(store, node, &raw, t, standardizer, sm)
        })
        .collect()
}

fn write_initial(
    store: &mut MemoryStore,
    node: usize,
    raw: &StructuralFeatureVector,
    t: f64,
    standardizer: &FeatureStandardizer,
    sm: &StructMap,
) -> Result<ColdStart> {
    let init = sm.forward(&standardizer.apply(raw)?)?;
    store.write(node, &init, t)?;
    log::debug!("cold start initialised node {node} at t={t}");
    Ok(ColdStart::Initialized)
}
