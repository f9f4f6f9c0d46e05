//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment, lists are comma separated.
//! Unknown keys are rejected. The content hash covers every key except
//! filesystem paths, rendered in sorted canonical form.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ctdg::GeneratorConfig;
use crate::harness::ColdStartTiming;
use crate::nn::AdamConfig;
use crate::splitter::SplitFallback;
use crate::structfeat::FeatureConfig;
use crate::tgn::TgnConfig;
use crate::{Error, Result};

trait KvValue: Sized {
    fn parse_kv(s: &str) -> std::result::Result<Self, String>;
    fn render_kv(&self) -> String;
}

macro_rules! kv_via_fromstr {
    ($($t:ty),*) => {$(
        impl KvValue for $t {
            fn parse_kv(s: &str) -> std::result::Result<Self, String> {
                s.parse().map_err(|e| format!("{e}"))
            }
            fn render_kv(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
kv_via_fromstr!(usize, u64, f64, bool, String);

impl<T: KvValue> KvValue for Vec<T> {
    fn parse_kv(s: &str) -> std::result::Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|p| T::parse_kv(p.trim())).collect()
    }
    fn render_kv(&self) -> String {
        self.iter().map(KvValue::render_kv).collect::<Vec<_>>().join(",")
    }
}

impl KvValue for SplitFallback {
    fn parse_kv(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fail" => Ok(SplitFallback::Fail),
            _ => match s.strip_prefix("temporal:") {
                Some(f) => Ok(SplitFallback::TemporalValidation {
                    fraction: f.parse().map_err(|e| format!("{e}"))?,
                }),
                None => Err("expected `fail` or `temporal:<fraction>`".into()),
            },
        }
    }
    fn render_kv(&self) -> String {
        match self {
            SplitFallback::Fail => "fail".into(),
            SplitFallback::TemporalValidation { fraction } => format!("temporal:{fraction}"),
        }
    }
}

impl KvValue for ColdStartTiming {
    fn parse_kv(s: &str) -> std::result::Result<Self, String> {
        match s {
            "after_first_batch" => Ok(ColdStartTiming::AfterFirstBatch),
            "first_appearance" => Ok(ColdStartTiming::FirstAppearance),
            _ => Err("expected `after_first_batch` or `first_appearance`".into()),
        }
    }
    fn render_kv(&self) -> String {
        match self {
            ColdStartTiming::AfterFirstBatch => "after_first_batch".into(),
            ColdStartTiming::FirstAppearance => "first_appearance".into(),
        }
    }
}

macro_rules! run_config {
    ($( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr, $hashed:expr; )*) => {
        /// Every tunable of a run. See [`RunConfig::describe`] for the keys.
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        pub struct RunConfig {
            $( $(#[doc = $doc])* pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            /// Set one key from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( stringify!($field) => {
                        self.$field = <$ty as KvValue>::parse_kv(value.trim())
                            .map_err(|e| Error::Config(format!("key `{key}`: {e}")))?;
                    } )*
                    _ => return Err(Error::Config(format!("unknown key `{key}`"))),
                }
                Ok(())
            }

            /// `(key, rendered value, part of hash)` for every key.
            pub fn entries(&self) -> Vec<(&'static str, String, bool)> {
                vec![$( (stringify!($field), self.$field.render_kv(), $hashed) ),*]
            }

            /// `(key, default value, description)` for every key.
            pub fn describe() -> Vec<(&'static str, String, &'static str)> {
                let d = Self::default();
                vec![$( (stringify!($field), d.$field.render_kv(), concat!($($doc),*).trim()) ),*]
            }
        }
    };
}

run_config! {
    /// Communities in the synthetic generator.
    num_communities: usize = 2, true;
    /// Nodes per synthetic community.
    nodes_per_community: usize = 50, true;
    /// Synthetic event count.
    num_events: usize = 6000, true;
    /// Probability an event stays inside its source's community.
    p_in: f64 = 0.95, true;
    /// Probability an event crosses communities.
    p_out: f64 = 0.05, true;
    /// Preferential-attachment exponent on destination degree.
    pa_strength: f64 = 1.0, true;
    /// Probability of repeating a recent partner.
    repeat_prob: f64 = 0.3, true;
    /// Fraction of the time span over which nodes arrive. Staggered arrivals
    /// make later test regions harder than earlier ones, which confounds
    /// comparisons between scenarios with different evaluation regions.
    arrival_fraction: f64 = 0.0, true;
    /// Synthetic time span.
    time_span: f64 = 10000.0, true;
    /// Synthetic edge-feature width.
    edge_feat_dim: usize = 0, true;
    /// Seed for data generation, splitting and community detection.
    data_seed: u64 = 7, true;
    /// Allowed relative deviation of group sizes from their target share.
    balance_tolerance: f64 = 0.5, true;
    /// `fail` or `temporal:<fraction>` when fewer than 3 communities exist.
    split_fallback: SplitFallback = SplitFallback::TemporalValidation { fraction: 0.15 }, true;
    /// Memory width d_M.
    memory_dim: usize = 16, true;
    /// Embedding width d_N.
    embedding_dim: usize = 16, true;
    /// Time-encoding width d_T.
    time_dim: usize = 8, true;
    /// Message MLP hidden widths.
    message_hidden: Vec<usize> = vec![32], true;
    /// Decoder MLP hidden widths.
    decoder_hidden: Vec<usize> = vec![32], true;
    /// Recent neighbors attended to.
    neighbors: usize = 10, true;
    /// Events per batch.
    batch_size: usize = 100, true;
    /// Adam learning rate.
    lr: f64 = 0.003, true;
    /// Maximum training epochs.
    epochs: usize = 10, true;
    /// Epochs without validation improvement before stopping.
    patience: usize = 5, true;
    /// Model seed: initialisation and training negatives.
    seed: u64 = 1, true;
    /// Negatives per positive during training and validation.
    train_negatives: usize = 1, true;
    /// Negatives per positive during transfer evaluation.
    eval_negatives: usize = 20, true;
    /// Cut-offs reported as Hits@K.
    hits_k: Vec<usize> = vec![1, 3, 10], true;
    /// Train a structural map alongside the model.
    structmap: bool = true, true;
    /// Weight of the structural-map loss.
    alpha: f64 = 1.0, true;
    /// Structural-map hidden width.
    structmap_hidden: usize = 64, true;
    /// Let the structural-map loss reach the memory.
    coupled_structmap: bool = false, true;
    /// Random-walk return-probability steps in the features.
    positional_dim: usize = 4, true;
    /// Feature window as a fraction of the training time span.
    window_fraction: f64 = 0.01, true;
    /// Share of test events used for warm-start fine-tuning.
    finetune_fraction: f64 = 0.2, true;
    /// Adam learning rate of warm-start fine-tuning. A tenth of `lr`: a single
    /// pass at the training rate overwrites what the model learned.
    finetune_lr: f64 = 0.0003, true;
    /// Warm start streams memory only, without parameter updates.
    finetune_memory_only: bool = false, true;
    /// `after_first_batch`, or `first_appearance` (reveals which fresh nodes are endpoints of the batch being predicted).
    cold_start_timing: ColdStartTiming = ColdStartTiming::AfterFirstBatch, true;
    /// Feature window fraction for the memory/feature correlation analysis.
    analysis_window_fraction: f64 = 1.0, true;
    /// Node pairs sampled by the correlation analysis (all if larger).
    analysis_pairs: usize = 5000, true;
    /// Model seeds of the seed sweep.
    seeds: Vec<u64> = vec![1, 2, 3, 4, 5], true;
    /// Input stream (CSV).
    input: String = String::new(), false;
    /// Output directory.
    output_dir: String = "out".into(), false;
}

impl RunConfig {
    /// Parse config text. Later lines override earlier ones.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (line, raw) in text.lines().enumerate() {
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Parse {
                line: line + 1,
                message: format!("expected `key = value`, got `{s}`"),
            })?;
            cfg.set(k.trim(), v).map_err(|e| Error::Parse {
                line: line + 1,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Apply `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{}` is not key=value", o.as_ref())))?;
            self.set(k.trim(), v)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("memory_dim", self.memory_dim),
            ("embedding_dim", self.embedding_dim),
            ("time_dim", self.time_dim),
            ("neighbors", self.neighbors),
            ("batch_size", self.batch_size),
            ("train_negatives", self.train_negatives),
            ("eval_negatives", self.eval_negatives),
            ("structmap_hidden", self.structmap_hidden),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("`{k}` must be positive")));
            }
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config("`alpha` must be a non-negative number".into()));
        }
        if !(0.0..1.0).contains(&self.finetune_fraction) {
            return Err(Error::Config("`finetune_fraction` must lie in [0, 1)".into()));
        }
        for (k, v) in [("window_fraction", self.window_fraction), ("analysis_window_fraction", self.analysis_window_fraction)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{k}` must be positive")));
            }
        }
        for (k, v) in [("lr", self.lr), ("finetune_lr", self.finetune_lr)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{k}` must be a non-negative number")));
            }
        }
        if self.hits_k.iter().any(|&k| k == 0) {
            return Err(Error::Config("`hits_k` entries must be positive".into()));
        }
        Ok(())
    }

    /// Canonical `key = value` text of every key, sorted.
    pub fn to_text(&self) -> String {
        let mut e = self.entries();
        e.sort_by_key(|(k, ..)| *k);
        e.into_iter().map(|(k, v, _)| format!("{k} = {v}\n")).collect()
    }

    /// Hex SHA-256 of the sorted hashed keys.
    pub fn hash(&self) -> String {
        let mut e: Vec<_> = self.entries().into_iter().filter(|(.., h)| *h).collect();
        e.sort_by_key(|(k, ..)| *k);
        let mut hasher = Sha256::new();
        for (k, v, _) in e {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Short prefix of [`RunConfig::hash`] for logs.
    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }

    pub fn as_map(&self) -> BTreeMap<String, String> {
        self.entries().into_iter().map(|(k, v, _)| (k.to_string(), v)).collect()
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            num_communities: self.num_communities,
            nodes_per_community: self.nodes_per_community,
            num_events: self.num_events,
            p_in: self.p_in,
            p_out: self.p_out,
            pa_strength: self.pa_strength,
            time_span: self.time_span,
            arrival_fraction: self.arrival_fraction,
            repeat_prob: self.repeat_prob,
            edge_feat_dim: self.edge_feat_dim,
        }
    }

    pub fn tgn_config(&self, edge_feat_dim: usize) -> TgnConfig {
        TgnConfig {
            memory_dim: self.memory_dim,
            embedding_dim: self.embedding_dim,
            time_dim: self.time_dim,
            edge_feat_dim,
            message_hidden: self.message_hidden.clone(),
            decoder_hidden: self.decoder_hidden.clone(),
            neighbors: self.neighbors,
        }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            positional_dim: self.positional_dim,
        }
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}
