//! World JSON and dataset JSON-lines files.
//!
//! Worlds are written canonically: object keys sorted and every float printed
//! with 17 significant digits, so equal graphs give byte-equal files and the
//! round trip is exact.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use leo_core::langgen::{InstructionSet, Split, TokenId};
use leo_core::navsim::{NavGraph, Node, View};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: usize,
    pos: [f64; 3],
    landmark: usize,
}

#[derive(Serialize, Deserialize)]
struct ViewJson {
    heading: f64,
    elevation: f64,
    neighbor: Option<usize>,
    feature: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldJson {
    graph_id: String,
    nodes: Vec<NodeJson>,
    edges: Vec<[usize; 2]>,
    views: BTreeMap<String, Vec<ViewJson>>,
}

/// Compact JSON with floats as `d.dddddddddddddddde±x`.
struct Canonical;

impl Formatter for Canonical {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

/// Serializes through `serde_json::Value` (whose maps are sorted) with the
/// canonical float format.
fn canonical_string<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("plain data serializes");
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Canonical);
    v.serialize(&mut ser).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn world_to_json(g: &NavGraph) -> String {
    let w = WorldJson {
        graph_id: g.graph_id.clone(),
        nodes: g
            .nodes
            .iter()
            .map(|n| NodeJson {
                id: n.id,
                pos: n.pos,
                landmark: n.landmark,
            })
            .collect(),
        edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        views: g
            .views
            .iter()
            .enumerate()
            .map(|(i, vs)| {
                let vs = vs
                    .iter()
                    .map(|v| ViewJson {
                        heading: v.heading,
                        elevation: v.elevation,
                        neighbor: v.neighbor,
                        feature: v.feature.clone(),
                    })
                    .collect();
                (i.to_string(), vs)
            })
            .collect(),
    };
    canonical_string(&w)
}

/// Parses and validates a world file's contents.
pub fn world_from_json(path: &Path, text: &str) -> Result<NavGraph> {
    let w: WorldJson = serde_json::from_str(text).map_err(|e| Error::parse(path, e))?;
    let n = w.nodes.len();
    let mut views = Vec::with_capacity(n);
    for i in 0..n {
        let vs = w
            .views
            .get(&i.to_string())
            .ok_or_else(|| Error::parse(path, format!("no views for node {i}")))?;
        views.push(
            vs.iter()
                .map(|v| View {
                    heading: v.heading,
                    elevation: v.elevation,
                    neighbor: v.neighbor,
                    feature: v.feature.clone(),
                })
                .collect(),
        );
    }
    if w.views.len() != n {
        return Err(Error::parse(path, format!("{} view lists for {n} nodes", w.views.len())));
    }
    let g = NavGraph {
        graph_id: w.graph_id,
        nodes: w
            .nodes
            .into_iter()
            .map(|n| Node {
                id: n.id,
                pos: n.pos,
                landmark: n.landmark,
            })
            .collect(),
        edges: w.edges.into_iter().map(|[a, b]| (a, b)).collect(),
        views,
    };
    g.validate()?;
    Ok(g)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordJson {
    path_id: String,
    graph_id: String,
    split: String,
    heading: f64,
    path: Vec<usize>,
    instructions: Vec<Vec<TokenId>>,
    instr_text: Vec<String>,
    /// Not part of the R2R layout; optional so plain R2R-style lines load.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    hops_mentioned: Vec<Vec<bool>>,
}

pub fn record_to_json(r: &InstructionSet) -> String {
    canonical_string(&RecordJson {
        path_id: r.path_id.clone(),
        graph_id: r.graph_id.clone(),
        split: r.split.as_str().into(),
        heading: r.heading,
        path: r.path.clone(),
        instructions: r.instructions.clone(),
        instr_text: r.instr_text.clone(),
        hops_mentioned: r.hops_mentioned.clone(),
    })
}

pub fn dataset_to_jsonl(records: &[InstructionSet]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&record_to_json(r));
        s.push('\n');
    }
    s
}

pub fn dataset_from_jsonl(path: &Path, text: &str) -> Result<Vec<InstructionSet>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |msg: String| Error::parse(path, format!("line {}: {msg}", i + 1));
        let r: RecordJson = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let m = r.instructions.len();
        let hops = r.path.len().saturating_sub(1);
        let hops_mentioned = if r.hops_mentioned.is_empty() {
            vec![vec![true; hops]; m]
        } else {
            r.hops_mentioned
        };
        if hops_mentioned.len() != m || hops_mentioned.iter().any(|h| h.len() != hops) {
            return Err(at("hops_mentioned does not match instructions × hops".into()));
        }
        out.push(InstructionSet {
            split: Split::parse(&r.split).map_err(|e| at(e.to_string()))?,
            path_id: r.path_id,
            graph_id: r.graph_id,
            heading: r.heading,
            path: r.path,
            instructions: r.instructions,
            instr_text: r.instr_text,
            hops_mentioned,
        });
    }
    Ok(out)
}

/// JSON text with sorted keys and canonical floats, for summaries and manifests.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    canonical_string(value)
}
