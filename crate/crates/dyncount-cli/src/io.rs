//! JSONL stream-file ingestion.
//!
//! A stream file starts with a header line and carries one dense line per
//! time step:
//!
//! ```text
//! {"kind": "item", "T": 4}
//! {"t": 0, "updates": [{"op": "ins", "item": "u"}]}
//! {"t": 1, "updates": [{"op": "noop"}]}
//! ...
//! {"kind": "graph", "T": 3, "nodes": ["a", "b", "c"]}
//! {"t": 0, "updates": [{"op": "ins", "edge": ["a", "b"]}]}
//! ```
//!
//! Steps must be exactly `0..T-1` in order; edge endpoints must be distinct
//! and declared in `nodes`. Malformed input reports the offending line.

use std::collections::BTreeMap;

use dyncount::estimator::{EdgeUpdate, GraphStream, ItemStream, ItemUpdate, StreamData};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
struct Header {
    kind: String,
    #[serde(rename = "T")]
    t: usize,
    #[serde(default)]
    nodes: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct Line {
    t: usize,
    updates: Vec<WireUpdate>,
}

#[derive(Debug, Deserialize)]
struct WireUpdate {
    op: String,
    #[serde(default)]
    item: Option<String>,
    #[serde(default)]
    edge: Option<[String; 2]>,
}

/// A parsed stream file: the data plus graph node names in declared order.
#[derive(Debug)]
pub struct StreamFile {
    pub data: StreamData,
    pub node_names: Vec<String>,
}

fn data_err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("line {line}: {msg}"))
}

pub fn parse_stream_file(content: &str) -> Result<StreamFile, CliError> {
    let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (header_no, header_line) = lines
        .next()
        .ok_or_else(|| CliError::Data("empty stream file".into()))?;
    let header: Header = serde_json::from_str(header_line)
        .map_err(|e| data_err(header_no + 1, e))?;
    if header.t == 0 {
        return Err(data_err(header_no + 1, "T must be at least 1"));
    }

    let is_graph = match header.kind.as_str() {
        "item" => false,
        "graph" => true,
        other => return Err(data_err(header_no + 1, format!("unknown kind {other:?}"))),
    };
    let node_names = header.nodes.clone().unwrap_or_default();
    if is_graph && node_names.is_empty() {
        return Err(data_err(header_no + 1, "graph streams must declare nodes"));
    }
    let node_index: BTreeMap<&str, usize> =
        node_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    if node_index.len() != node_names.len() {
        return Err(data_err(header_no + 1, "duplicate node names"));
    }

    let mut item_steps: Vec<Vec<ItemUpdate>> = Vec::with_capacity(header.t);
    let mut edge_steps: Vec<Vec<EdgeUpdate>> = Vec::with_capacity(header.t);
    let mut expected_t = 0usize;
    for (no, raw) in lines {
        let line: Line = serde_json::from_str(raw).map_err(|e| data_err(no + 1, e))?;
        if line.t != expected_t {
            return Err(data_err(
                no + 1,
                format!("expected step {expected_t}, found {}; steps must be dense", line.t),
            ));
        }
        if line.t >= header.t {
            return Err(data_err(no + 1, format!("step {} beyond horizon {}", line.t, header.t)));
        }
        expected_t += 1;
        if is_graph {
            let mut batch = Vec::with_capacity(line.updates.len());
            for u in &line.updates {
                batch.push(parse_edge_update(u, &node_index, no + 1)?);
            }
            edge_steps.push(batch);
        } else {
            let mut batch = Vec::with_capacity(line.updates.len());
            for u in &line.updates {
                batch.push(parse_item_update(u, no + 1)?);
            }
            item_steps.push(batch);
        }
    }
    if expected_t != header.t {
        return Err(CliError::Data(format!(
            "stream ends at step {expected_t}, header declares T = {}",
            header.t
        )));
    }
    let data = if is_graph {
        StreamData::Graph(
            GraphStream::new(node_names.len(), edge_steps)
                .map_err(|e| CliError::Data(e.to_string()))?,
        )
    } else {
        StreamData::Items(
            ItemStream::new(item_steps).map_err(|e| CliError::Data(e.to_string()))?,
        )
    };
    Ok(StreamFile { data, node_names })
}

fn parse_item_update(u: &WireUpdate, line: usize) -> Result<ItemUpdate, CliError> {
    match u.op.as_str() {
        "noop" => Ok(ItemUpdate::Noop),
        "ins" | "del" => {
            if u.edge.is_some() {
                return Err(data_err(line, "edge update in an item stream"));
            }
            let item = u
                .item
                .clone()
                .ok_or_else(|| data_err(line, "item update without an item"))?;
            Ok(if u.op == "ins" { ItemUpdate::Insert(item) } else { ItemUpdate::Delete(item) })
        }
        other => Err(data_err(line, format!("unknown op {other:?}"))),
    }
}

fn parse_edge_update(
    u: &WireUpdate,
    nodes: &BTreeMap<&str, usize>,
    line: usize,
) -> Result<EdgeUpdate, CliError> {
    match u.op.as_str() {
        "noop" => Ok(EdgeUpdate::Noop),
        "ins" | "del" => {
            if u.item.is_some() {
                return Err(data_err(line, "item update in a graph stream"));
            }
            let edge = u
                .edge
                .as_ref()
                .ok_or_else(|| data_err(line, "edge update without an edge"))?;
            let a = *nodes
                .get(edge[0].as_str())
                .ok_or_else(|| data_err(line, format!("unknown node {:?}", edge[0])))?;
            let b = *nodes
                .get(edge[1].as_str())
                .ok_or_else(|| data_err(line, format!("unknown node {:?}", edge[1])))?;
            if a == b {
                return Err(data_err(line, format!("self-loop on node {:?}", edge[0])));
            }
            Ok(if u.op == "ins" { EdgeUpdate::Insert(a, b) } else { EdgeUpdate::Delete(a, b) })
        }
        other => Err(data_err(line, format!("unknown op {other:?}"))),
    }
}
