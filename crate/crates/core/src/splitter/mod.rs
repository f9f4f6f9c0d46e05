//! Community detection on the time-aggregated graph and node-disjoint
//! train/validation/test sub-streams for the transfer task.

mod graph;
mod louvain;

pub use graph::{aggregate_static, modularity, WeightedGraph};
pub use louvain::{louvain, CommunityAssignment};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::ctdg::EventStream;
use crate::{Error, Result};

/// What to do when there are fewer than three communities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFallback {
    /// Refuse with a split-failure error.
    Fail,
    /// Train and test get one community group each; validation is the
    /// chronological tail (`fraction` of events) of the train group, sharing
    /// its nodes.
    TemporalValidation { fraction: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub name: String,
    pub communities: Vec<usize>,
    /// Node ids in the source stream's space.
    pub nodes: Vec<usize>,
    pub num_events: usize,
    pub start_time: f64,
    pub end_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub groups: Vec<GroupReport>,
    pub dropped_events: usize,
    pub balance_ratio: f64,
    pub balance_tolerance: f64,
    pub balanced: bool,
    pub warnings: Vec<String>,
    pub fallback_used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferSplit {
    pub train: EventStream,
    pub val: EventStream,
    pub test: EventStream,
    /// Old (source-stream) id of each node of the corresponding sub-stream.
    pub train_nodes: Vec<usize>,
    pub val_nodes: Vec<usize>,
    pub test_nodes: Vec<usize>,
    pub report: SplitReport,
}

const GROUPS: [&str; 3] = ["train", "val", "test"];

/// Greedily place communities (largest first) into the train/val/test group
/// with the fewest nodes, then keep only events internal to each group.
pub fn make_transfer_split(
    stream: &EventStream,
    assignment: &CommunityAssignment,
    balance_tolerance: f64,
    fallback: SplitFallback,
) -> Result<TransferSplit> {
    let members = assignment.members();
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));

    let three_way = members.len() >= 3;
    let num_groups = if three_way { 3 } else { 2 };
    if !three_way {
        match fallback {
            SplitFallback::Fail => {
                return Err(Error::SplitFailure {
                    group: "val".into(),
                    reason: format!(
                        "only {} communities found; three are needed for a node-disjoint split",
                        members.len()
                    ),
                })
            }
            SplitFallback::TemporalValidation { fraction } if !(fraction > 0.0 && fraction < 1.0) => {
                return Err(Error::Config(format!(
                    "temporal validation fraction {fraction} must lie in (0, 1)"
                )))
            }
            _ => {}
        }
    }
    // Group slots: [train, val, test] or [train, test] for the fallback.
    let mut group_comms: Vec<Vec<usize>> = vec![Vec::new(); num_groups];
    let mut group_size = vec![0usize; num_groups];
    for &c in &order {
        let g = (0..num_groups).min_by_key(|&g| (group_size[g], g)).unwrap();
        group_comms[g].push(c);
        group_size[g] += members[c].len();
    }

    let mut group_of = vec![usize::MAX; stream.num_nodes()];
    for (g, comms) in group_comms.iter().enumerate() {
        for &c in comms {
            for &v in &members[c] {
                group_of[v] = g;
            }
        }
    }
    let kept = stream
        .events()
        .iter()
        .filter(|e| group_of[e.src] == group_of[e.dst])
        .count();
    let dropped_events = stream.len() - kept;

    let sub = |g: usize| stream.induced(|v| group_of[v] == g);
    let (train, train_nodes, val, val_nodes, test, test_nodes, names): (_, _, _, _, _, _, [&str; 3]) =
        if three_way {
            let (tr, trn) = sub(0);
            let (va, van) = sub(1);
            let (te, ten) = sub(2);
            (tr, trn, va, van, te, ten, GROUPS)
        } else {
            let fraction = match fallback {
                SplitFallback::TemporalValidation { fraction } => fraction,
                SplitFallback::Fail => unreachable!(),
            };
            let (full, full_nodes) = sub(0);
            let cut = full.len() - ((full.len() as f64) * fraction).round() as usize;
            let tr = full.slice(0..cut);
            let va = full.slice(cut..full.len());
            let (te, ten) = sub(1);
            (tr, full_nodes.clone(), va, full_nodes, te, ten, GROUPS)
        };

    let mut warnings = Vec::new();
    let streams = [&train, &val, &test];
    for (name, s) in names.iter().zip(streams) {
        if s.is_empty() {
            return Err(Error::SplitFailure {
                group: name.to_string(),
                reason: "has no events after dropping cross-group edges".into(),
            });
        }
        if !(s.time_span() > 0.0) {
            return Err(Error::SplitFailure {
                group: name.to_string(),
                reason: "spans an empty time interval".into(),
            });
        }
    }
    let node_counts: Vec<usize> = group_size.clone();
    let max = *node_counts.iter().max().unwrap() as f64;
    let min = *node_counts.iter().min().unwrap() as f64;
    let balance_ratio = if min > 0.0 { max / min } else { f64::INFINITY };
    let balanced = balance_ratio <= 1.0 + balance_tolerance;
    if !balanced {
        let msg = format!(
            "node-count ratio {:.3} exceeds 1 + tolerance ({:.3}); split is best-effort",
            balance_ratio,
            1.0 + balance_tolerance
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    if !three_way {
        warnings.push(format!(
            "only {} communities: validation is the temporal tail of the train group and shares its nodes",
            members.len()
        ));
    }

    let report_for = |name: &str, comms: &[usize], nodes: &[usize], s: &EventStream| GroupReport {
        name: name.to_string(),
        communities: comms.to_vec(),
        nodes: nodes.to_vec(),
        num_events: s.len(),
        start_time: s.start_time().unwrap_or(0.0),
        end_time: s.end_time().unwrap_or(0.0),
    };
    let (val_comms, test_comms) = if three_way {
        (group_comms[1].clone(), group_comms[2].clone())
    } else {
        (group_comms[0].clone(), group_comms[1].clone())
    };
    let report = SplitReport {
        groups: vec![
            report_for("train", &group_comms[0], &train_nodes, &train),
            report_for("val", &val_comms, &val_nodes, &val),
            report_for("test", &test_comms, &test_nodes, &test),
        ],
        dropped_events,
        balance_ratio,
        balance_tolerance,
        balanced,
        warnings,
        fallback_used: !three_way,
    };
    Ok(TransferSplit {
        train,
        val,
        test,
        train_nodes,
        val_nodes,
        test_nodes,
        report,
    })
}
