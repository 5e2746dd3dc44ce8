//! Text formats and on-disk layout.
//!
//! Input formats:
//! - temporal edge list: one `src dst time` event per line, whitespace- or
//!   comma-separated, `#` starts a comment line;
//! - label file: `node_id timestep class_id` lines;
//! - feature table: CSV with header `node,t,x0,x1,...`.
//!
//! Node identifiers are opaque tokens (no whitespace or commas) interned to
//! dense indices by [`NodeNames`]; the mapping is written alongside outputs
//! as `node_index.csv`.
//!
//! A graph directory is the canonical serialized [`TemporalGraph`]:
//! `edges.txt`, `labels.txt`, optional `features.csv` (all keyed by dense
//! index, with time equal to the timestep), plus `node_index.csv`.
//! [`write_graph_dir`] and [`load_graph_dir`] round-trip exactly.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{ClassId, Event, EventStream, NodeId, Snapshot, TemporalGraph};

/// Bidirectional map between opaque node names and dense indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeNames {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl NodeNames {
    pub fn new() -> NodeNames {
        NodeNames::default()
    }

    /// Identity mapping for already-dense ids `0..n`.
    pub fn identity(n: u32) -> NodeNames {
        let mut out = NodeNames::new();
        for i in 0..n {
            out.intern(&i.to_string());
        }
        out
    }

    pub fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&i) = self.index.get(name) {
            return NodeId(i);
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        NodeId(i)
    }

    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).map(|&i| NodeId(i))
    }

    pub fn name(&self, id: NodeId) -> Option<&str> {
        self.names.get(id.0 as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &str)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, s)| (NodeId(i as u32), s.as_str()))
    }
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

fn is_skippable(line: &str) -> bool {
    let trimmed = line.trim_start();
    trimmed.is_empty() || trimmed.starts_with('#')
}

/// Parse a temporal edge list, interning node names into `names`.
pub fn parse_event_stream<R: BufRead>(
    reader: R,
    path: &str,
    names: &mut NodeNames,
) -> Result<EventStream> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let lineno = idx + 1;
        let t = tokens(&line);
        if t.len() != 3 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected `src dst time`, got {} fields", t.len()),
            ));
        }
        let time: f64 = t[2]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad timestamp `{}`", t[2])))?;
        if !time.is_finite() || time < 0.0 {
            return Err(parse_err(
                path,
                lineno,
                format!("timestamp {time} must be finite and nonnegative"),
            ));
        }
        events.push(Event {
            src: names.intern(t[0]),
            dst: names.intern(t[1]),
            time,
        });
    }
    EventStream::new(events)
}

/// Parse a label file into per-timestep label lists.
pub fn parse_labels<R: BufRead>(
    reader: R,
    path: &str,
    names: &mut NodeNames,
) -> Result<BTreeMap<usize, Vec<(NodeId, ClassId)>>> {
    let mut out: BTreeMap<usize, Vec<(NodeId, ClassId)>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let lineno = idx + 1;
        let t = tokens(&line);
        if t.len() != 3 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected `node timestep class`, got {} fields", t.len()),
            ));
        }
        let node = names.intern(t[0]);
        let step: usize = t[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad timestep `{}`", t[1])))?;
        let class: ClassId = t[2]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad class `{}`", t[2])))?;
        out.entry(step).or_default().push((node, class));
    }
    Ok(out)
}

/// Parse a feature table (`node,t,x0,...` with a header row).
pub fn parse_features<R: BufRead>(
    reader: R,
    path: &str,
    names: &mut NodeNames,
) -> Result<BTreeMap<usize, BTreeMap<NodeId, Vec<f64>>>> {
    let mut out: BTreeMap<usize, BTreeMap<NodeId, Vec<f64>>> = BTreeMap::new();
    let mut lines = reader.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Ok(out);
    };
    let header = header?;
    let dim = tokens(&header).len().saturating_sub(2);
    for (idx, line) in lines {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let lineno = idx + 1;
        let t = tokens(&line);
        if t.len() != dim + 2 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} fields, got {}", dim + 2, t.len()),
            ));
        }
        let node = names.intern(t[0]);
        let step: usize = t[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad timestep `{}`", t[1])))?;
        let values = t[2..]
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| parse_err(path, lineno, format!("bad value `{v}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.entry(step).or_default().insert(node, values);
    }
    Ok(out)
}

/// A loaded graph directory.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDir {
    pub graph: TemporalGraph,
    pub names: NodeNames,
}

/// Write a temporal graph as a canonical directory. Names default to the
/// identity mapping over the union node set.
pub fn write_graph_dir(dir: &Path, g: &TemporalGraph, names: Option<&NodeNames>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let max_id = g
        .snapshots()
        .iter()
        .flat_map(|s| s.nodes().iter().map(|n| n.0))
        .max();
    let identity;
    let names = match names {
        Some(n) => n,
        None => {
            identity = NodeNames::identity(max_id.map_or(0, |m| m + 1));
            &identity
        }
    };

    // the text files carry the original names so a reload against the
    // written node_index.csv reproduces the same dense ids
    let name_of = |node: NodeId| -> Result<&str> {
        names.name(node).ok_or(Error::UnknownNode(node))
    };

    let mut edges = String::from("# src dst t\n");
    let mut labels = String::new();
    let mut feature_rows: Vec<(usize, NodeId)> = Vec::new();
    let mut dim: Option<usize> = None;
    for (t, s) in g.snapshots().iter().enumerate() {
        for (u, v) in s.edges() {
            edges.push_str(&format!("{} {} {t}\n", name_of(u)?, name_of(v)?));
        }
        for &node in s.nodes() {
            if let Some(c) = s.label(node) {
                labels.push_str(&format!("{} {t} {c}\n", name_of(node)?));
            }
            if s.features_of(node).is_some() {
                feature_rows.push((t, node));
            }
        }
        if let Some(d) = s.feature_dim() {
            match dim {
                None => dim = Some(d),
                Some(prev) if prev != d => {
                    return Err(Error::InvalidParameter(format!(
                        "snapshots disagree on feature dimension ({prev} vs {d})"
                    )))
                }
                _ => {}
            }
        }
    }
    fs::write(dir.join("edges.txt"), edges)?;
    fs::write(dir.join("labels.txt"), labels)?;

    if let Some(d) = dim {
        let mut file = fs::File::create(dir.join("features.csv"))?;
        let header: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
        writeln!(file, "node,t,{}", header.join(","))?;
        for (t, node) in feature_rows {
            let s = g.snapshot(t)?;
            let vals: Vec<String> = s
                .features_of(node)
                .expect("row collected from a featured node")
                .iter()
                .map(f64::to_string)
                .collect();
            writeln!(file, "{},{t},{}", name_of(node)?, vals.join(","))?;
        }
    }

    let mut index = String::from("name,index\n");
    for (id, name) in names.iter() {
        index.push_str(&format!("{name},{id}\n"));
    }
    fs::write(dir.join("node_index.csv"), index)?;
    Ok(())
}

/// Load a canonical graph directory written by [`write_graph_dir`].
pub fn load_graph_dir(dir: &Path) -> Result<GraphDir> {
    let index_path = dir.join("node_index.csv");
    let mut names = NodeNames::new();
    let reader = BufReader::new(fs::File::open(&index_path)?);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 || is_skippable(&line) {
            continue;
        }
        let t = tokens(&line);
        if t.len() != 2 {
            return Err(parse_err(
                &index_path.display().to_string(),
                idx + 1,
                "expected `name,index`",
            ));
        }
        let id = names.intern(t[0]);
        let declared: u32 = t[1].parse().map_err(|_| {
            parse_err(
                &index_path.display().to_string(),
                idx + 1,
                format!("bad index `{}`", t[1]),
            )
        })?;
        if id.0 != declared {
            return Err(parse_err(
                &index_path.display().to_string(),
                idx + 1,
                format!("index map out of order: `{}` maps to {declared}", t[0]),
            ));
        }
    }

    let edges_path = dir.join("edges.txt");
    let stream = parse_event_stream(
        BufReader::new(fs::File::open(&edges_path)?),
        &edges_path.display().to_string(),
        &mut names,
    )?;
    let labels_path = dir.join("labels.txt");
    let labels = parse_labels(
        BufReader::new(fs::File::open(&labels_path)?),
        &labels_path.display().to_string(),
        &mut names,
    )?;
    let features_path = dir.join("features.csv");
    let features = if features_path.exists() {
        parse_features(
            BufReader::new(fs::File::open(&features_path)?),
            &features_path.display().to_string(),
            &mut names,
        )?
    } else {
        BTreeMap::new()
    };

    // canonical directories use time == timestep
    let mut per_step_edges: BTreeMap<usize, Vec<(NodeId, NodeId)>> = BTreeMap::new();
    for e in stream.events() {
        if e.time.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "graph directory timestamps must be integers, got {}",
                e.time
            )));
        }
        per_step_edges
            .entry(e.time as usize)
            .or_default()
            .push((e.src, e.dst));
    }

    let horizon = per_step_edges
        .keys()
        .chain(labels.keys())
        .chain(features.keys())
        .max()
        .map_or(0, |&m| m + 1);

    let empty_edges = Vec::new();
    let empty_labels = Vec::new();
    let mut snapshots = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let e = per_step_edges.get(&t).unwrap_or(&empty_edges);
        let l = labels.get(&t).unwrap_or(&empty_labels);
        let mut declared: Vec<NodeId> = e.iter().flat_map(|&(u, v)| [u, v]).collect();
        declared.sort_unstable();
        declared.dedup();
        snapshots.push(Snapshot::build(e, l, features.get(&t), &declared)?);
    }
    Ok(GraphDir {
        graph: TemporalGraph::new(snapshots),
        names,
    })
}
