//! `tgnx`: generate, split, train, transfer and analyze temporal link
//! prediction runs from a flat `key = value` config.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tgn_transfer::config::RunConfig;
use tgn_transfer::Error;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("TGNX_GIT_DESCRIBE"), ")");

#[derive(Parser, Debug)]
#[command(name = "tgnx", version = VERSION, about = "Temporal graph network transfer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config sources shared by every subcommand. Precedence, lowest first:
/// built-in defaults, `--config` file, named flags, `KEY=VALUE` arguments.
#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// Config file with one `key = value` per line.
    #[arg(long, short = 'c', value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (the `output_dir` key).
    #[arg(long, short = 'o', value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Model seed (the `seed` key).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Structural-map loss weight (the `alpha` key).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Structural-map hidden width (the `structmap_hidden` key).
    #[arg(long)]
    pub structmap_hidden: Option<usize>,
    /// Let the structural-map loss reach the memory.
    #[arg(long)]
    pub coupled_structmap: bool,
    /// Train without a structural map.
    #[arg(long)]
    pub no_structmap: bool,
    /// Further `key=value` overrides.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> tgn_transfer::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut flags = Vec::new();
        if let Some(o) = &self.out {
            flags.push(format!("output_dir={}", o.display()));
        }
        if let Some(s) = self.seed {
            flags.push(format!("seed={s}"));
        }
        if let Some(a) = self.alpha {
            flags.push(format!("alpha={a}"));
        }
        if let Some(h) = self.structmap_hidden {
            flags.push(format!("structmap_hidden={h}"));
        }
        if self.coupled_structmap {
            flags.push("coupled_structmap=true".into());
        }
        if self.no_structmap {
            flags.push("structmap=false".into());
        }
        flags.extend(self.overrides.iter().cloned());
        cfg.apply_overrides(&flags)?;
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic community-structured event stream to `events.csv`.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Detect communities and write the node-disjoint train/val/test split.
    Split {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Event CSV to split (default: the `input` key, else `<out>/events.csv`).
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// Node labels of the input are dense integer ids; keep them.
        #[arg(long)]
        dense_ids: bool,
    },
    /// Write raw structural features of one split group's window graph.
    Features {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Split group: train, val or test.
        #[arg(long, default_value = "train")]
        group: String,
        /// Window end time (default: just after the group's last event).
        #[arg(long)]
        at: Option<f64>,
    },
    /// Train on the split's training stream with early stopping.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Evaluate the trained model on the test stream under transfer scenarios.
    Transfer {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `no_warm_start`, `warm_start`, `structural_mapping` or `all`; repeatable.
        #[arg(long, default_value = "all")]
        scenario: Vec<String>,
    },
    /// Correlate trained memory distances with structural-feature distances.
    Analyze {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train and transfer once per model seed and report the dispersion.
    SeedSweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated seeds (the `seeds` key).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Print per-component parameter counts and the memory fraction.
    Params {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Memory width d_M.
        #[arg(long)]
        dm: Option<usize>,
        /// Node count N (default: the synthetic generator's node count).
        #[arg(long)]
        n: Option<usize>,
        /// Embedding width d_N.
        #[arg(long)]
        dn: Option<usize>,
        /// Time-encoding width d_T.
        #[arg(long)]
        dt: Option<usize>,
        /// Edge-feature width d_E.
        #[arg(long, default_value_t = 0)]
        de: usize,
        /// Hidden widths of both the message MLP and the decoder.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

/// Module an error originates from, for the message prefix.
fn module_of(e: &Error) -> &'static str {
    match e {
        Error::Io(_) | Error::Json(_) => "io",
        Error::Parse { .. } | Error::Config(_) => "config",
        Error::Validation(_) | Error::InvalidGenerator(_) | Error::Sampling(_) => "ctdg",
        Error::SplitFailure { .. } => "splitter",
        Error::UndefinedCorrelation(_) => "structfeat",
        Error::Shape { .. } => "nn",
        Error::Capacity { .. } | Error::Divergence { .. } => "tgn",
        Error::Contract(_) => "structmap",
        Error::Precondition(_) => "harness",
        Error::Checkpoint(_) => "checkpoint",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match cli.command {
        Command::Generate { cfg } => commands::generate(&cfg),
        Command::Split { cfg, input, dense_ids } => commands::split(&cfg, input, dense_ids),
        Command::Features { cfg, group, at } => commands::features(&cfg, &group, at),
        Command::Train { cfg } => commands::train(&cfg),
        Command::Transfer { cfg, scenario } => commands::transfer(&cfg, &scenario),
        Command::Analyze { cfg } => commands::analyze(&cfg),
        Command::SeedSweep { cfg, seeds } => commands::seed_sweep(&cfg, seeds),
        Command::Params {
            cfg,
            dm,
            n,
            dn,
            dt,
            de,
            hidden,
            json,
        } => commands::params(&cfg, commands::ParamsArgs { dm, n, dn, dt, de, hidden, json }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", module_of(&e));
            ExitCode::from(if e.is_divergence() { 3 } else { 1 })
        }
    }
}
