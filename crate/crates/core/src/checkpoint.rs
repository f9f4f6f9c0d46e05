//! Versioned JSON checkpoint of a trained model and the state it ended in.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::Adam;
use crate::structfeat::{FeatureConfig, FeatureStandardizer};
use crate::structmap::StructMap;
use crate::tgn::{TgnParams, TgnState};
use crate::{io, Error, Result};

pub const CHECKPOINT_FORMAT: &str = "tgn-transfer-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Position of a ChaCha8 stream, enough to resume it exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
    /// 128-bit word position, decimal.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(seed: u64, rng: &ChaCha8Rng) -> Self {
        Self {
            seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|e| Error::Checkpoint(format!("bad rng word position: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
    pub params: TgnParams,
    pub structmap: Option<StructMap>,
    pub standardizer: Option<FeatureStandardizer>,
    pub feature_config: FeatureConfig,
    /// Time span of the training stream; feature windows are sized from it.
    pub train_span: f64,
    pub best_epoch: usize,
    /// Memory, neighbor cache and pending messages at the end of training.
    pub state: TgnState,
    pub optimizer: Adam,
    pub rng: RngState,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, serde_json::to_string(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let head: serde_json::Value = serde_json::from_str(&text)?;
        if head.get("format").and_then(|v| v.as_str()) != Some(CHECKPOINT_FORMAT) {
            return Err(Error::Checkpoint(format!("{} is not a model checkpoint", path.display())));
        }
        let version = head.get("version").and_then(|v| v.as_u64());
        if version != Some(CHECKPOINT_VERSION as u64) {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version:?}, expected {CHECKPOINT_VERSION}"
            )));
        }
        Ok(serde_json::from_value(head)?)
    }
}
