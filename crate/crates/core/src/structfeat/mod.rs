//! Structural node features on recent-activity window graphs.
//!
//! The feature vector of a node is `[degree, betweenness, closeness,
//! clustering, rwpe_1, ..., rwpe_P]`: unnormalized Brandes betweenness,
//! Wasserman–Faust closeness (so disconnected windows stay comparable), the
//! local clustering coefficient, and random-walk return probabilities for
//! walk lengths `1..=P`. A node without edges in the window gets all zeros.

mod correlate;
mod features;
mod standardize;
mod window;

pub use correlate::{correlate_distances, pearson, spearman, DistanceCorrelation};
pub use features::{
    all_node_features, betweenness, closeness, clustering, node_features, rwpe,
    shortest_path_counts, FeatureConfig, StructuralFeatureVector, NUM_TOPOLOGICAL,
};
pub use standardize::{fit_standardizer, FeatureStandardizer, SIGMA_FLOOR};
pub use window::{aggregate_window, WindowGraph};
