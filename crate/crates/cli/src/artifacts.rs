//! Artifact files of a run directory. Every file carries the config hash;
//! every write goes through a temp file and a rename.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tgn_transfer::config::RunConfig;
use tgn_transfer::io::write_atomic;
use tgn_transfer::splitter::TransferSplit;
use tgn_transfer::{Error, Result};

pub const EVENTS: &str = "events.csv";
pub const SPLIT: &str = "split.json";
pub const CHECKPOINT: &str = "checkpoint.json";

pub struct RunDir {
    root: PathBuf,
    hash: String,
}

impl RunDir {
    pub fn create(cfg: &RunConfig) -> Result<Self> {
        let root = PathBuf::from(&cfg.output_dir);
        std::fs::create_dir_all(&root)?;
        Ok(Self { root, hash: cfg.hash() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(name);
        write_atomic(&p, text.as_bytes())?;
        log::info!("wrote {}", p.display());
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// The resolved config in canonical form, hash first.
    pub fn write_config(&self, cfg: &RunConfig) -> Result<PathBuf> {
        self.write_text("config.txt", &format!("# config_hash={}\n{}", self.hash, cfg.to_text()))
    }

    /// Wall-clock times live apart from the metric files so those stay
    /// byte-reproducible.
    pub fn write_timing(&self, command: &str, started: Instant, parts: Vec<(String, f64)>) -> Result<PathBuf> {
        let timing = Timing {
            command: command.into(),
            config_hash: self.hash.clone(),
            wall_clock_secs: started.elapsed().as_secs_f64(),
            parts: parts.into_iter().map(|(name, secs)| TimingPart { name, secs }).collect(),
        };
        self.write_json(&format!("timing_{command}.json"), &timing)
    }
}

#[derive(Serialize)]
struct Timing {
    command: String,
    config_hash: String,
    wall_clock_secs: f64,
    parts: Vec<TimingPart>,
}

#[derive(Serialize)]
struct TimingPart {
    name: String,
    secs: f64,
}

/// The transfer split with its community assignment summary.
#[derive(Serialize, Deserialize)]
pub struct SplitFile {
    pub config_hash: String,
    pub num_communities: usize,
    pub modularity: f64,
    pub community_of: Vec<usize>,
    pub split: TransferSplit,
}

impl SplitFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| missing(path, "split", e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Turn a missing input into a hint about the command that produces it.
pub fn missing(path: &Path, producer: &str, e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::NotFound {
        Error::Precondition(format!("{} not found; run `tgnx {producer}` first", path.display()))
    } else {
        Error::Io(e)
    }
}

/// Warn when an input artifact was produced under a different config.
pub fn check_hash(what: &str, found: &str, expected: &str) {
    if found != expected {
        log::warn!("{what} was written with config {found}, current config is {expected}");
    }
}
