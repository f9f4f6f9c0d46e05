//! Temporal link prediction with memory-augmented temporal graph networks,
//! and a structural map that initializes the memory of nodes never seen
//! during training from topological features of a recent-activity window.
//!
//! Module map:
//!
//! * [`ctdg`]: event streams, CSV ingestion, batching, negative sampling and
//!   the synthetic community-structured generator.
//! * [`splitter`]: static aggregation, Louvain, node-disjoint transfer splits.
//! * [`structfeat`]: window graphs, structural node features, standardization
//!   and the feature/memory distance-correlation analysis.
//! * [`nn`]: the handful of differentiable layers the model needs, Adam and a
//!   finite-difference gradient checker.
//! * [`tgn`]: memory store, messages, GRU updater, attention readout, decoder,
//!   the per-batch engine and parameter accounting.
//! * [`structmap`]: feature-to-memory MLP, its loss and cold-start.
//! * [`harness`]: training, the three transfer scenarios, ranking metrics and
//!   seed sweeps.
//! * [`config`] and [`checkpoint`]: run configuration, hashing and persisted
//!   model state.

pub mod checkpoint;
pub mod config;
pub mod ctdg;
pub mod error;
pub mod harness;
pub mod io;
pub mod nn;
pub mod splitter;
pub mod structfeat;
pub mod structmap;
pub mod tgn;

pub use error::{Error, Result};
