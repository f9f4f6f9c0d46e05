use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use tgn_transfer::checkpoint::Checkpoint;
use tgn_transfer::config::RunConfig;
use tgn_transfer::ctdg::{generate_synthetic, load_csv, write_csv, EventStream, IngestConfig};
use tgn_transfer::harness::{
    analyze_memory, rng_stream, run_transfer, seed_sweep as run_sweep, shared_eval_negatives, split_stream,
    train_model, validation_continues, ScenarioKind, SweepReport, TransferScenario,
};
use tgn_transfer::structfeat::{aggregate_window, all_node_features, FeatureConfig, NUM_TOPOLOGICAL};
use tgn_transfer::tgn::{count_parameters, TgnParams};
use tgn_transfer::{Error, Result};

use crate::artifacts::{check_hash, missing, RunDir, SplitFile, CHECKPOINT, EVENTS, SPLIT};
use crate::ConfigArgs;

fn start(command: &str, args: &ConfigArgs) -> Result<(RunConfig, RunDir, Instant)> {
    let cfg = args.resolve()?;
    log::info!(
        "tgnx {} command={command} config_hash={}",
        crate::VERSION,
        cfg.short_hash()
    );
    let dir = RunDir::create(&cfg)?;
    dir.write_config(&cfg)?;
    Ok((cfg, dir, Instant::now()))
}

fn load_checkpoint(dir: &RunDir) -> Result<Checkpoint> {
    let path = dir.path(CHECKPOINT);
    if !path.exists() {
        return Err(missing(&path, "train", std::io::ErrorKind::NotFound.into()));
    }
    let ckpt = Checkpoint::load(&path)?;
    check_hash("checkpoint", &ckpt.config_hash, dir.hash());
    Ok(ckpt)
}

fn load_split(dir: &RunDir) -> Result<SplitFile> {
    let file = SplitFile::load(&dir.path(SPLIT))?;
    check_hash("split", &file.config_hash, dir.hash());
    Ok(file)
}

fn hash_comment(dir: &RunDir) -> Vec<String> {
    vec![format!("config_hash={}", dir.hash())]
}

#[derive(Serialize)]
struct GenerateSummary {
    config_hash: String,
    num_nodes: usize,
    num_events: usize,
    start_time: Option<f64>,
    end_time: Option<f64>,
    planted_community_of: Vec<usize>,
}

pub fn generate(args: &ConfigArgs) -> Result<()> {
    let (cfg, dir, t0) = start("generate", args)?;
    let synth = generate_synthetic(&cfg.generator_config(), &mut rng_stream(cfg.data_seed, 0))?;
    let s = &synth.stream;
    dir.write_text(EVENTS, &write_csv(s, false, &hash_comment(&dir)))?;
    dir.write_json(
        "generate.json",
        &GenerateSummary {
            config_hash: dir.hash().into(),
            num_nodes: s.num_nodes(),
            num_events: s.len(),
            start_time: s.start_time(),
            end_time: s.end_time(),
            planted_community_of: synth.community_of.clone(),
        },
    )?;
    dir.write_timing("generate", t0, Vec::new())?;
    Ok(())
}

pub fn split(args: &ConfigArgs, input: Option<PathBuf>, dense_ids: bool) -> Result<()> {
    let (cfg, dir, t0) = start("split", args)?;
    let (path, dense) = match (input, cfg.input.is_empty()) {
        (Some(p), _) => (p, dense_ids),
        (None, false) => (PathBuf::from(&cfg.input), dense_ids),
        // Our own generator writes dense ids.
        (None, true) => (dir.path(EVENTS), true),
    };
    if !path.exists() {
        return Err(missing(&path, "generate", std::io::ErrorKind::NotFound.into()));
    }
    let stream = load_csv(
        &path,
        &IngestConfig {
            dense_ids: dense,
            ..IngestConfig::default()
        },
    )?;
    let (assignment, split) = split_stream(&cfg, &stream)?;
    log::info!(
        "{} communities, modularity {:.4}; train {} nodes/{} events, val {} events, test {} nodes/{} events",
        assignment.num_communities(),
        assignment.modularity,
        split.train.num_nodes(),
        split.train.len(),
        split.val.len(),
        split.test.num_nodes(),
        split.test.len()
    );
    for w in &split.report.warnings {
        log::warn!("{w}");
    }
    for (name, s) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        dir.write_text(&format!("{name}.csv"), &write_csv(s, true, &hash_comment(&dir)))?;
    }
    dir.write_json(
        SPLIT,
        &SplitFile {
            config_hash: dir.hash().into(),
            num_communities: assignment.num_communities(),
            modularity: assignment.modularity,
            community_of: assignment.community_of,
            split,
        },
    )?;
    dir.write_timing("split", t0, Vec::new())?;
    Ok(())
}

#[derive(Serialize)]
struct NodeFeatures {
    node: usize,
    label: String,
    raw: Vec<f64>,
}

#[derive(Serialize)]
struct FeaturesFile {
    config_hash: String,
    group: String,
    window_start: f64,
    window_end: f64,
    columns: Vec<String>,
    nodes: Vec<NodeFeatures>,
}

fn feature_columns(fc: &FeatureConfig) -> Vec<String> {
    let mut c: Vec<String> = ["degree", "betweenness", "closeness", "clustering"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    debug_assert_eq!(c.len(), NUM_TOPOLOGICAL);
    c.extend((1..=fc.positional_dim).map(|k| format!("rw_return_{k}")));
    c
}

fn group_stream<'a>(file: &'a SplitFile, group: &str) -> Result<&'a EventStream> {
    match group {
        "train" => Ok(&file.split.train),
        "val" => Ok(&file.split.val),
        "test" => Ok(&file.split.test),
        other => Err(Error::Config(format!("unknown split group `{other}`"))),
    }
}

pub fn features(args: &ConfigArgs, group: &str, at: Option<f64>) -> Result<()> {
    let (cfg, dir, t0) = start("features", args)?;
    let file = load_split(&dir)?;
    let stream = group_stream(&file, group)?;
    let span = file.split.train.time_span();
    let t = match at {
        Some(t) => t,
        None => {
            let end = stream
                .end_time()
                .ok_or_else(|| Error::Precondition(format!("split group `{group}` has no events")))?;
            end + span.max(1.0) * 1e-9
        }
    };
    let fc = cfg.feature_config();
    let g = aggregate_window(stream, t, cfg.window_fraction, span);
    let feats = all_node_features(&g, &fc);
    let nodes = g
        .active_nodes()
        .map(|v| NodeFeatures {
            node: v,
            label: stream.label(v).to_string(),
            raw: feats[v].values.clone(),
        })
        .collect();
    dir.write_json(
        &format!("features_{group}.json"),
        &FeaturesFile {
            config_hash: dir.hash().into(),
            group: group.into(),
            window_start: g.start,
            window_end: g.end,
            columns: feature_columns(&fc),
            nodes,
        },
    )?;
    dir.write_timing("features", t0, Vec::new())?;
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    config_hash: String,
    best_epoch: usize,
    epochs_run: usize,
    stopped_early: bool,
    best_val_loss: f64,
}

pub fn train(args: &ConfigArgs) -> Result<()> {
    let (cfg, dir, t0) = start("train", args)?;
    let file = load_split(&dir)?;
    let s = &file.split;
    let outcome = train_model(&cfg, &s.train, &s.val, validation_continues(s))?;
    let mut csv = format!("# config_hash={}\nepoch,mean_tlp,mean_structmap,mean_total,val_loss\n", dir.hash());
    for e in &outcome.epochs {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            e.epoch,
            e.mean_tlp,
            e.mean_structmap.map(|v| v.to_string()).unwrap_or_default(),
            e.mean_total,
            e.val_loss
        );
    }
    dir.write_text("train_metrics.csv", &csv)?;
    let best = outcome.checkpoint.best_epoch;
    dir.write_json(
        "train_summary.json",
        &TrainSummary {
            config_hash: dir.hash().into(),
            best_epoch: best,
            epochs_run: outcome.epochs.len(),
            stopped_early: outcome.stopped_early,
            best_val_loss: outcome.epochs[best].val_loss,
        },
    )?;
    let path = dir.path(CHECKPOINT);
    outcome.checkpoint.save(&path)?;
    log::info!("wrote {}", path.display());
    dir.write_timing("train", t0, Vec::new())?;
    Ok(())
}

fn parse_scenarios(names: &[String]) -> Result<Vec<ScenarioKind>> {
    let mut out = Vec::new();
    for n in names {
        if n == "all" {
            out.extend(ScenarioKind::ALL);
        } else {
            out.push(ScenarioKind::parse(n)?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn transfer(args: &ConfigArgs, scenarios: &[String]) -> Result<()> {
    let kinds = parse_scenarios(scenarios)?;
    let (cfg, dir, t0) = start("transfer", args)?;
    let file = load_split(&dir)?;
    let ckpt = load_checkpoint(&dir)?;
    let test = &file.split.test;
    let negs = shared_eval_negatives(&cfg, test)?;
    let mut parts = Vec::new();
    for kind in kinds {
        let rec = run_transfer(&ckpt, test, &TransferScenario::from_config(kind, &cfg), &cfg, &negs)?;
        log::info!(
            "{}: eval loss {:.5}, MRR {:.4}, {} optimizer steps",
            rec.scenario,
            rec.mean_eval_loss,
            rec.mrr,
            rec.optimizer_steps
        );
        dir.write_json(&format!("metrics_{}.json", rec.scenario), &rec)?;
        dir.write_text(&format!("metrics_{}.csv", rec.scenario), &rec.to_csv())?;
        parts.push((rec.scenario.clone(), rec.wall_clock_secs));
    }
    dir.write_timing("transfer", t0, parts)?;
    Ok(())
}

pub fn analyze(args: &ConfigArgs) -> Result<()> {
    let (cfg, dir, t0) = start("analyze", args)?;
    let file = load_split(&dir)?;
    let ckpt = load_checkpoint(&dir)?;
    let report = analyze_memory(&cfg, &ckpt, &file.split.train)?;
    log::info!(
        "memory/feature distance correlation over {} nodes: pearson {:.4}, spearman {:.4}",
        report.num_nodes,
        report.correlation.pearson,
        report.correlation.spearman
    );
    dir.write_json("correlation.json", &report)?;
    dir.write_timing("analyze", t0, Vec::new())?;
    Ok(())
}

fn sweep_tables(report: &SweepReport) -> (String, String, String) {
    let head = format!("# config_hash={}\n", report.config_hash);
    let mut summary = head.clone() + "scenario,metric,n,mean,std,min,max\n";
    for s in &report.summary {
        for (metric, d) in [("eval_loss", &s.eval_loss), ("mrr", &s.mrr)] {
            let _ = writeln!(
                summary,
                "{},{metric},{},{},{},{},{}",
                s.scenario, d.n, d.mean, d.std, d.min, d.max
            );
        }
    }
    let mut curves = head.clone() + "seed,epoch,mean_tlp,mean_structmap,val_loss\n";
    let mut batches = head + "seed,scenario,batch,phase,tlp_loss,structmap_loss,total_loss\n";
    for run in &report.runs {
        for p in &run.curve {
            let _ = writeln!(
                curves,
                "{},{},{},{},{}",
                run.seed,
                p.epoch,
                p.mean_tlp,
                p.mean_structmap.map(|v| v.to_string()).unwrap_or_default(),
                p.val_loss
            );
        }
        for rec in &run.records {
            for b in &rec.batches {
                let _ = writeln!(
                    batches,
                    "{},{},{},{},{},{},{}",
                    run.seed,
                    rec.scenario,
                    b.batch,
                    b.phase.as_str(),
                    b.tlp_loss,
                    b.structmap_loss.map(|v| v.to_string()).unwrap_or_default(),
                    b.total_loss
                );
            }
        }
    }
    (summary, curves, batches)
}

pub fn seed_sweep(args: &ConfigArgs, seeds: Option<Vec<u64>>) -> Result<()> {
    let mut args = args.clone();
    if let Some(s) = seeds {
        let list = s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        args.overrides.push(format!("seeds={list}"));
    }
    let (cfg, dir, t0) = start("seed-sweep", &args)?;
    let file = load_split(&dir)?;
    let report = run_sweep(&cfg, &cfg.seeds, &file.split)?;
    for run in &report.runs {
        if let Some(e) = &run.error {
            log::warn!("seed {} failed: {e}", run.seed);
        }
    }
    for s in &report.summary {
        log::info!(
            "{}: eval loss {:.5} ± {:.5} (min {:.5}, max {:.5}) over {} seeds",
            s.scenario,
            s.eval_loss.mean,
            s.eval_loss.std,
            s.eval_loss.min,
            s.eval_loss.max,
            s.eval_loss.n
        );
    }
    let (summary, curves, batches) = sweep_tables(&report);
    dir.write_json("sweep.json", &report)?;
    dir.write_text("sweep_summary.csv", &summary)?;
    dir.write_text("sweep_curves.csv", &curves)?;
    dir.write_text("sweep_batches.csv", &batches)?;
    dir.write_timing("seed-sweep", t0, Vec::new())?;
    Ok(())
}

pub struct ParamsArgs {
    pub dm: Option<usize>,
    pub n: Option<usize>,
    pub dn: Option<usize>,
    pub dt: Option<usize>,
    pub de: usize,
    pub hidden: Option<Vec<usize>>,
    pub json: bool,
}

pub fn params(args: &ConfigArgs, p: ParamsArgs) -> Result<()> {
    let mut cfg = args.resolve()?;
    let mut flags = Vec::new();
    for (k, v) in [("memory_dim", p.dm), ("embedding_dim", p.dn), ("time_dim", p.dt)] {
        if let Some(v) = v {
            flags.push(format!("{k}={v}"));
        }
    }
    if let Some(h) = &p.hidden {
        let list = h.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        flags.push(format!("message_hidden={list}"));
        flags.push(format!("decoder_hidden={list}"));
    }
    cfg.apply_overrides(&flags)?;
    let n = p.n.unwrap_or(cfg.num_communities * cfg.nodes_per_community);
    let model = TgnParams::new(&cfg.tgn_config(p.de), 1.0, &mut rng_stream(0, 0))?;
    let report = count_parameters(&model, n);
    if p.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    print!("{}", render_params(&report));
    Ok(())
}

fn render_params(r: &tgn_transfer::tgn::ParameterReport) -> String {
    let mut out = format!(
        "{:<14} {:>12} {:>12} {:>10}\n",
        "component", "parameters", "weights", "biases"
    );
    for c in &r.components {
        let _ = writeln!(
            out,
            "{:<14} {:>12} {:>12} {:>10}",
            c.name, c.actual, c.closed_form_weights, c.closed_form_biases
        );
    }
    let _ = writeln!(out, "{:<14} {:>12}", "total", r.total);
    let _ = writeln!(out, "memory fraction {:.4} (N = {})", r.memory_fraction, r.num_nodes);
    if let Some(w) = r.components.iter().find_map(|c| c.embedding_convention_weights) {
        let _ = writeln!(out, "message weights with embedding-width inputs: {w}");
    }
    out
}
