//! `src,dst,timestamp[,f0,f1,...]` event files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EventStream, TemporalEvent};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// `Some(true)`: first data row is a header. `None`: detect it (a first
    /// row whose timestamp column is not numeric).
    pub has_header: Option<bool>,
    pub delimiter: char,
    /// Node labels are already dense integer ids `0..n`; keep them instead
    /// of re-indexing by first appearance.
    #[serde(default)]
    pub dense_ids: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            has_header: None,
            delimiter: ',',
            dense_ids: false,
        }
    }
}

pub fn load_csv(path: &Path, config: &IngestConfig) -> Result<EventStream> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, config)
}

/// Parse event rows. Node labels are re-indexed densely in order of first
/// appearance; events are stably sorted by timestamp.
pub fn parse_csv(text: &str, config: &IngestConfig) -> Result<EventStream> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut events = Vec::new();
    let mut d_e: Option<usize> = None;
    let mut first_data_row = true;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(config.delimiter).map(str::trim).collect();
        if first_data_row {
            first_data_row = false;
            let is_header = match config.has_header {
                Some(h) => h,
                None => fields.len() >= 3 && fields[2].parse::<f64>().is_err(),
            };
            if is_header {
                continue;
            }
        }
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected at least 3 columns, found {}", fields.len()),
            });
        }
        let timestamp: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("timestamp `{}` is not a number", fields[2]),
        })?;
        let feat = fields[3..]
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("feature {} `{}` is not a number", j, f),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match d_e {
            None => d_e = Some(feat.len()),
            Some(d) if d != feat.len() => {
                return Err(Error::Validation(format!(
                    "line {}: {} edge features, earlier rows have {}",
                    line_no,
                    feat.len(),
                    d
                )))
            }
            _ => {}
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty node id".into(),
            });
        }
        if fields[0] == fields[1] {
            return Err(Error::Validation(format!(
                "line {}: self-loop on node `{}`",
                line_no, fields[0]
            )));
        }
        let mut id_of = |label: &str| -> usize {
            if let Some(&i) = index.get(label) {
                return i;
            }
            let i = labels.len();
            index.insert(label.to_string(), i);
            labels.push(label.to_string());
            i
        };
        let src = id_of(fields[0]);
        let dst = id_of(fields[1]);
        events.push(TemporalEvent::new(src, dst, timestamp).with_features(feat));
    }
    let (events, labels) = if config.dense_ids {
        densify(events, &labels)?
    } else {
        (events, labels)
    };
    let n = labels.len();
    let stream = EventStream::from_events(events, n)?;
    Ok(if stream.is_empty() {
        EventStream::empty(n, d_e.unwrap_or(0))
    } else {
        stream
    }
    .with_labels(labels))
}

/// Map first-appearance indices back to the integer ids the labels spell.
fn densify(events: Vec<TemporalEvent>, labels: &[String]) -> Result<(Vec<TemporalEvent>, Vec<String>)> {
    let ids = labels
        .iter()
        .map(|l| {
            l.parse::<usize>()
                .map_err(|_| Error::Validation(format!("node label `{l}` is not an integer id")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let n = ids.iter().max().map_or(0, |m| m + 1);
    let events = events
        .into_iter()
        .map(|mut e| {
            e.src = ids[e.src];
            e.dst = ids[e.dst];
            e
        })
        .collect();
    Ok((events, (0..n).map(|i| i.to_string()).collect()))
}

/// Render a stream as CSV. `original_labels` writes the labels the nodes were
/// loaded with instead of dense ids; `comments` become leading `#` lines.
pub fn write_csv(stream: &EventStream, original_labels: bool, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {}", c);
    }
    for e in stream.events() {
        if original_labels {
            let _ = write!(
                out,
                "{},{},{}",
                stream.label(e.src),
                stream.label(e.dst),
                e.timestamp
            );
        } else {
            let _ = write!(out, "{},{},{}", e.src, e.dst, e.timestamp);
        }
        for f in &e.edge_feat {
            let _ = write!(out, ",{}", f);
        }
        out.push('\n');
    }
    out
}
