//! Static and dynamic homophily measures.
//!
//! Static homophily is measured within one snapshot as the node-mean of
//! local closed-neighborhood match fractions. Dynamic homophily compares a
//! node's label at `t+1` against its neighbors' labels at `t`, conditioned
//! on the node's future class; the overall level is the unweighted average
//! over classes. The dynamic compatibility matrix generalizes the per-class
//! levels to the full neighbor-label distribution.
//!
//! All measures use closed neighborhoods (self-loop included) by default;
//! [`HomophilyConfig::self_loops`] switches to open neighborhoods. Classes
//! with no eligible member at a timestep are reported as undefined markers
//! and excluded from the class average by default.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{window_discretize, ClassId, EventStream, NodeId, Snapshot, TemporalGraph};
use crate::par;

/// Measurement conventions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HomophilyConfig {
    /// Include each node itself in its neighborhood (default true).
    pub self_loops: bool,
    /// Divide the class average by the total number of classes in the graph
    /// instead of the number of classes defined at this timestep (default
    /// false: undefined classes are excluded from the average).
    pub average_over_all_classes: bool,
}

impl Default for HomophilyConfig {
    fn default() -> Self {
        HomophilyConfig {
            self_loops: true,
            average_over_all_classes: false,
        }
    }
}

/// Per-timestep homophily measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyLevels {
    pub t: usize,
    pub h_static: f64,
    /// Per-class dynamic level; `None` marks classes present at `t+1` with
    /// no eligible node.
    pub per_class: BTreeMap<ClassId, Option<f64>>,
    /// Average of the defined per-class levels; `None` when no class is
    /// defined.
    pub h_dynamic: Option<f64>,
}

impl HomophilyLevels {
    /// Level of the positive class (`+1`).
    pub fn h_plus(&self) -> Option<f64> {
        self.per_class.get(&1).copied().flatten()
    }

    /// Level of the negative class (`-1`).
    pub fn h_minus(&self) -> Option<f64> {
        self.per_class.get(&-1).copied().flatten()
    }
}

/// Row-stochastic matrix of neighbor-label probabilities conditioned on the
/// node's future class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityMatrix {
    /// Row/column class ordering (ascending).
    pub classes: Vec<ClassId>,
    /// `entries[m][n]` estimates `P(y_t(j) = classes[n] | j in closed
    /// neighborhood of i, y_{t+1}(i) = classes[m])`. Rows with zero support
    /// are all-zero and undefined.
    pub entries: Vec<Vec<f64>>,
    /// Number of eligible nodes contributing to each row.
    pub support: Vec<usize>,
}

impl CompatibilityMatrix {
    /// Row for class `c`, or `None` when the class is absent or has no
    /// support.
    pub fn row(&self, c: ClassId) -> Option<&[f64]> {
        let m = self.classes.iter().position(|&x| x == c)?;
        (self.support[m] > 0).then(|| self.entries[m].as_slice())
    }
}

fn neighborhood_positions(s: &Snapshot, p: usize, self_loops: bool) -> Vec<usize> {
    let mut out: Vec<usize> = s.adj_positions(p).to_vec();
    if self_loops {
        out.push(p);
    }
    out
}

fn local_static_at(s: &Snapshot, p: usize, cfg: &HomophilyConfig) -> Result<Option<f64>> {
    let own = s.label_at(p).ok_or(Error::MissingLabel {
        node: s.node_at(p),
        t: 0,
    })?;
    let hood = neighborhood_positions(s, p, cfg.self_loops);
    if hood.is_empty() {
        return Ok(None);
    }
    let mut matches = 0usize;
    for &q in &hood {
        let lbl = s.label_at(q).ok_or(Error::MissingLabel {
            node: s.node_at(q),
            t: 0,
        })?;
        if lbl == own {
            matches += 1;
        }
    }
    Ok(Some(matches as f64 / hood.len() as f64))
}

/// Fraction of `i`'s neighborhood sharing `i`'s label. With self-loops the
/// self always matches, so the result is strictly positive.
pub fn local_static_homophily(s: &Snapshot, i: NodeId) -> Result<f64> {
    local_static_homophily_with(s, i, &HomophilyConfig::default())
        .map(|v| v.expect("closed neighborhood is never empty"))
}

/// Configurable variant; `None` when `i` has an empty (open) neighborhood.
pub fn local_static_homophily_with(
    s: &Snapshot,
    i: NodeId,
    cfg: &HomophilyConfig,
) -> Result<Option<f64>> {
    local_static_at(s, s.position(i)?, cfg)
}

/// Unweighted mean of local static homophily over all nodes.
pub fn static_homophily(s: &Snapshot) -> Result<f64> {
    static_homophily_with(s, &HomophilyConfig::default())
}

/// Configurable variant; nodes with empty neighborhoods are skipped.
pub fn static_homophily_with(s: &Snapshot, cfg: &HomophilyConfig) -> Result<f64> {
    if s.node_count() == 0 {
        return Err(Error::EmptySnapshot);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for p in 0..s.node_count() {
        if let Some(v) = local_static_at(s, p, cfg)? {
            sum += v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptySnapshot);
    }
    Ok(sum / count as f64)
}

/// Per-class sums of per-node match fractions at timestep `t`.
///
/// A node is eligible when it is present and labeled at both `t` and `t+1`.
/// Returns `(sum of fractions, eligible count)` keyed by future class.
fn class_match_sums(
    g: &TemporalGraph,
    t: usize,
    cfg: &HomophilyConfig,
) -> Result<BTreeMap<ClassId, (f64, usize)>> {
    let now = g.snapshot(t)?;
    let next = g.snapshot(t + 1)?;
    let mut sums: BTreeMap<ClassId, (f64, usize)> = BTreeMap::new();

    // every class appearing at t+1 gets an entry, defined or not
    for &node in next.nodes() {
        if let Some(c) = next.label(node) {
            sums.entry(c).or_insert((0.0, 0));
        }
    }

    for &node in next.nodes() {
        let Some(future) = next.label(node) else {
            continue;
        };
        if !now.contains(node) || now.label(node).is_none() {
            continue;
        }
        let p = now.position(node)?;
        let hood = neighborhood_positions(now, p, cfg.self_loops);
        if hood.is_empty() {
            continue;
        }
        let mut matches = 0usize;
        for &q in &hood {
            let lbl = now.label_at(q).ok_or(Error::MissingLabel {
                node: now.node_at(q),
                t,
            })?;
            if lbl == future {
                matches += 1;
            }
        }
        let entry = sums.entry(future).or_insert((0.0, 0));
        entry.0 += matches as f64 / hood.len() as f64;
        entry.1 += 1;
    }
    Ok(sums)
}

/// Dynamic homophily level of class `c` at timestep `t`: the mean over
/// eligible nodes with future label `c` of the fraction of their current
/// neighborhood labeled `c`. `None` when no eligible node has that future
/// label.
pub fn class_dynamic_homophily(g: &TemporalGraph, t: usize, c: ClassId) -> Result<Option<f64>> {
    let sums = class_match_sums(g, t, &HomophilyConfig::default())?;
    Ok(sums
        .get(&c)
        .and_then(|&(sum, n)| (n > 0).then(|| sum / n as f64)))
}

/// All homophily levels at timestep `t` under default conventions.
pub fn dynamic_homophily(g: &TemporalGraph, t: usize) -> Result<HomophilyLevels> {
    dynamic_homophily_with(g, t, &HomophilyConfig::default())
}

/// Configurable variant of [`dynamic_homophily`].
pub fn dynamic_homophily_with(
    g: &TemporalGraph,
    t: usize,
    cfg: &HomophilyConfig,
) -> Result<HomophilyLevels> {
    let sums = class_match_sums(g, t, cfg)?;
    let per_class: BTreeMap<ClassId, Option<f64>> = sums
        .iter()
        .map(|(&c, &(sum, n))| (c, (n > 0).then(|| sum / n as f64)))
        .collect();
    let defined: Vec<f64> = per_class.values().filter_map(|v| *v).collect();
    let h_dynamic = if defined.is_empty() {
        None
    } else if cfg.average_over_all_classes {
        let total = g.classes().len();
        (total > 0).then(|| defined.iter().sum::<f64>() / total as f64)
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    Ok(HomophilyLevels {
        t,
        h_static: static_homophily_with(g.snapshot(t)?, cfg)?,
        per_class,
        h_dynamic,
    })
}

/// Dynamic compatibility matrix at timestep `t`. Classes are the ascending
/// union of the classes observed at `t` and `t+1`.
pub fn compatibility_matrix(g: &TemporalGraph, t: usize) -> Result<CompatibilityMatrix> {
    compatibility_matrix_with(g, t, &HomophilyConfig::default())
}

/// Configurable variant of [`compatibility_matrix`].
pub fn compatibility_matrix_with(
    g: &TemporalGraph,
    t: usize,
    cfg: &HomophilyConfig,
) -> Result<CompatibilityMatrix> {
    let now = g.snapshot(t)?;
    let next = g.snapshot(t + 1)?;

    let mut classes: Vec<ClassId> = now
        .nodes()
        .iter()
        .filter_map(|&n| now.label(n))
        .chain(next.nodes().iter().filter_map(|&n| next.label(n)))
        .collect();
    classes.sort_unstable();
    classes.dedup();
    let k = classes.len();
    let col: BTreeMap<ClassId, usize> = classes.iter().enumerate().map(|(j, &c)| (c, j)).collect();

    let mut entries = vec![vec![0.0; k]; k];
    let mut support = vec![0usize; k];

    for &node in next.nodes() {
        let Some(future) = next.label(node) else {
            continue;
        };
        if !now.contains(node) || now.label(node).is_none() {
            continue;
        }
        let p = now.position(node)?;
        let hood = neighborhood_positions(now, p, cfg.self_loops);
        if hood.is_empty() {
            continue;
        }
        let row = col[&future];
        let weight = 1.0 / hood.len() as f64;
        for &q in &hood {
            let lbl = now.label_at(q).ok_or(Error::MissingLabel {
                node: now.node_at(q),
                t,
            })?;
            entries[row][col[&lbl]] += weight;
        }
        support[row] += 1;
    }

    for (row, &n) in entries.iter_mut().zip(&support) {
        if n > 0 {
            for v in row.iter_mut() {
                *v /= n as f64;
            }
        }
    }
    Ok(CompatibilityMatrix {
        classes,
        entries,
        support,
    })
}

/// Dynamic homophily along half-open windows of size `k` over a continuous
/// event stream. Labels are supplied per window index. A stream spanning a
/// single window yields an empty series.
pub fn windowed_dynamic_homophily(
    stream: &EventStream,
    labels_per_window: &BTreeMap<usize, Vec<(NodeId, ClassId)>>,
    k: f64,
) -> Result<Vec<HomophilyLevels>> {
    let g = window_discretize(stream, k, Some(labels_per_window))?;
    homophily_series(&g)
}

/// Homophily levels for every timestep `t` with `t+1 < horizon`.
pub fn homophily_series(g: &TemporalGraph) -> Result<Vec<HomophilyLevels>> {
    if g.horizon() < 2 {
        return Ok(Vec::new());
    }
    par::try_map_range(g.horizon() - 1, |t| dynamic_homophily(g, t))
}
