//! Immutable temporal-graph data model.
//!
//! A [`Snapshot`] is one static graph: a node set, a symmetric simple
//! adjacency, optional per-node labels, and optional per-node feature
//! vectors. A [`TemporalGraph`] is an ordered sequence of snapshots; the
//! sequence index is the timestep. An [`EventStream`] is a list of timed
//! edges that [`window_discretize`] cuts into snapshots.
//!
//! Everything here is immutable after construction; all operations are pure
//! and safe to call from concurrent tasks.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node identifier. Opaque input names are interned to these by the
/// ingestion layer; generators number nodes `0..n` directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Class label. Binary tasks use `+1` (positive / infected) and `-1`
/// (negative / susceptible); multiclass tasks may use any distinct values.
pub type ClassId = i32;

/// One static graph at a timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    nodes: Vec<NodeId>,
    pos: HashMap<NodeId, usize>,
    adj: Vec<Vec<usize>>,
    labels: Vec<Option<ClassId>>,
    features: Vec<Option<Vec<f64>>>,
    feature_dim: Option<usize>,
    edge_count: usize,
}

impl Snapshot {
    /// Build a validated snapshot.
    ///
    /// The node set is the union of label keys, feature keys, declared
    /// nodes, and nothing else: an edge endpoint outside that set is a
    /// dangling endpoint and rejected. The adjacency is symmetrized and
    /// deduplicated; self-edges are dropped (their endpoint is kept).
    /// Repeated labels for one node must agree. Feature vectors must all
    /// share one dimension.
    pub fn build(
        edges: &[(NodeId, NodeId)],
        labels: &[(NodeId, ClassId)],
        features: Option<&BTreeMap<NodeId, Vec<f64>>>,
        declared: &[NodeId],
    ) -> Result<Snapshot> {
        let mut label_map: BTreeMap<NodeId, ClassId> = BTreeMap::new();
        for &(node, class) in labels {
            match label_map.insert(node, class) {
                Some(prev) if prev != class => return Err(Error::ContradictoryLabel(node)),
                _ => {}
            }
        }

        let mut nodes: Vec<NodeId> = label_map.keys().copied().collect();
        nodes.extend_from_slice(declared);
        if let Some(f) = features {
            nodes.extend(f.keys().copied());
        }
        nodes.sort_unstable();
        nodes.dedup();

        let pos: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(p, &n)| (n, p)).collect();

        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        let mut edge_count = 0usize;
        let mut seen: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            let pu = *pos.get(&u).ok_or(Error::DanglingEndpoint(u))?;
            let pv = *pos.get(&v).ok_or(Error::DanglingEndpoint(v))?;
            if pu == pv {
                continue;
            }
            seen.push((pu.min(pv), pu.max(pv)));
        }
        seen.sort_unstable();
        seen.dedup();
        for &(pu, pv) in &seen {
            adj[pu].push(pv);
            adj[pv].push(pu);
            edge_count += 1;
        }
        for list in &mut adj {
            list.sort_unstable();
        }

        let mut feature_dim = None;
        let mut feats: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        if let Some(f) = features {
            for (node, vec) in f {
                let p = *pos.get(node).ok_or(Error::UnknownNode(*node))?;
                match feature_dim {
                    None => feature_dim = Some(vec.len()),
                    Some(d) if d != vec.len() => {
                        return Err(Error::FeatureDim {
                            node: *node,
                            expected: d,
                            found: vec.len(),
                        })
                    }
                    _ => {}
                }
                feats[p] = Some(vec.clone());
            }
        }

        let mut label_vec = vec![None; nodes.len()];
        for (node, class) in label_map {
            label_vec[pos[&node]] = Some(class);
        }

        Ok(Snapshot {
            nodes,
            pos,
            adj,
            labels: label_vec,
            features: feats,
            feature_dim,
            edge_count,
        })
    }

    /// Unlabeled structure over nodes `0..n`.
    pub fn from_structure(n: u32, edges: &[(NodeId, NodeId)]) -> Result<Snapshot> {
        let declared: Vec<NodeId> = (0..n).map(NodeId).collect();
        Snapshot::build(edges, &[], None, &declared)
    }

    /// New snapshot sharing this structure with replaced labels and features.
    pub fn with_node_data(
        &self,
        labels: &[(NodeId, ClassId)],
        features: Option<&BTreeMap<NodeId, Vec<f64>>>,
    ) -> Result<Snapshot> {
        let edges: Vec<(NodeId, NodeId)> = self.edges().collect();
        Snapshot::build(&edges, labels, features, &self.nodes)
    }

    /// Sorted node set.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, i: NodeId) -> bool {
        self.pos.contains_key(&i)
    }

    pub(crate) fn position(&self, i: NodeId) -> Result<usize> {
        self.pos.get(&i).copied().ok_or(Error::UnknownNode(i))
    }

    pub(crate) fn node_at(&self, p: usize) -> NodeId {
        self.nodes[p]
    }

    pub(crate) fn adj_positions(&self, p: usize) -> &[usize] {
        &self.adj[p]
    }

    pub(crate) fn label_at(&self, p: usize) -> Option<ClassId> {
        self.labels[p]
    }

    pub(crate) fn features_at(&self, p: usize) -> Option<&[f64]> {
        self.features[p].as_deref()
    }

    /// Label of `i`, if `i` is present and labeled.
    pub fn label(&self, i: NodeId) -> Option<ClassId> {
        self.pos.get(&i).and_then(|&p| self.labels[p])
    }

    /// Feature vector of `i`, if present.
    pub fn features_of(&self, i: NodeId) -> Option<&[f64]> {
        self.pos.get(&i).and_then(|&p| self.features[p].as_deref())
    }

    /// Shared dimension of the feature vectors, if any are present.
    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    /// Number of one-hop neighbors of `i`, self-loop excluded.
    pub fn degree(&self, i: NodeId) -> Result<usize> {
        Ok(self.adj[self.position(i)?].len())
    }

    /// Sorted one-hop neighbors of `i` plus `i` itself. Never empty.
    pub fn closed_neighborhood(&self, i: NodeId) -> Result<Vec<NodeId>> {
        let p = self.position(i)?;
        let mut out: Vec<NodeId> = self.adj[p].iter().map(|&q| self.nodes[q]).collect();
        out.push(i);
        out.sort_unstable();
        Ok(out)
    }

    /// One-hop neighbors of `i`.
    pub fn neighbors(&self, i: NodeId) -> Result<impl Iterator<Item = NodeId> + '_> {
        let p = self.position(i)?;
        Ok(self.adj[p].iter().map(move |&q| self.nodes[q]))
    }

    /// Undirected edges, each reported once with endpoints in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj.iter().enumerate().flat_map(move |(p, list)| {
            list.iter()
                .filter(move |&&q| p < q)
                .map(move |&q| (self.nodes[p], self.nodes[q]))
        })
    }

    /// BFS hop distances from `start`, indexed like [`Snapshot::nodes`];
    /// `None` marks unreachable nodes.
    pub fn bfs_distances(&self, start: NodeId) -> Result<Vec<Option<u32>>> {
        let s = self.position(start)?;
        let mut dist: Vec<Option<u32>> = vec![None; self.nodes.len()];
        dist[s] = Some(0);
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(p) = queue.pop_front() {
            let d = dist[p].unwrap();
            for &q in &self.adj[p] {
                if dist[q].is_none() {
                    dist[q] = Some(d + 1);
                    queue.push_back(q);
                }
            }
        }
        Ok(dist)
    }

    /// True when every node is reachable from every other (vacuously true
    /// when empty).
    pub fn is_connected(&self) -> bool {
        match self.nodes.first() {
            None => true,
            Some(&first) => self
                .bfs_distances(first)
                .map(|d| d.iter().all(Option::is_some))
                .unwrap_or(false),
        }
    }
}

/// Ordered sequence of snapshots sharing a node universe.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TemporalGraph {
    snapshots: Vec<Snapshot>,
}

impl TemporalGraph {
    pub fn new(snapshots: Vec<Snapshot>) -> TemporalGraph {
        TemporalGraph { snapshots }
    }

    /// Number of timesteps.
    pub fn horizon(&self) -> usize {
        self.snapshots.len()
    }

    pub fn snapshot(&self, t: usize) -> Result<&Snapshot> {
        self.snapshots.get(t).ok_or(Error::TimestepOutOfRange {
            t,
            horizon: self.snapshots.len(),
        })
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// All classes appearing anywhere in the graph, ascending.
    pub fn classes(&self) -> Vec<ClassId> {
        let mut out: Vec<ClassId> = self
            .snapshots
            .iter()
            .flat_map(|s| s.nodes().iter().filter_map(|&n| s.label(n)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// One timed undirected interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub src: NodeId,
    pub dst: NodeId,
    pub time: f64,
}

/// A continuous dynamic graph: a list of timed edges.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventStream {
    events: Vec<Event>,
}

impl EventStream {
    /// Validates that all timestamps are finite and nonnegative.
    pub fn new(events: Vec<Event>) -> Result<EventStream> {
        for e in &events {
            if !e.time.is_finite() || e.time < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "event time {} is not a finite nonnegative number",
                    e.time
                )));
            }
        }
        Ok(EventStream { events })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }
}

/// Window index of `time` under half-open windows `[t*w, (t+1)*w)`.
///
/// The naive `floor(time / w)` can land one window off when `time / w`
/// rounds across an integer, so the result is nudged until the half-open
/// inequality holds exactly in f64 arithmetic.
pub(crate) fn window_index(time: f64, w: f64) -> usize {
    let mut t = (time / w).floor().max(0.0) as usize;
    while time >= (t as f64 + 1.0) * w {
        t += 1;
    }
    while t > 0 && time < t as f64 * w {
        t -= 1;
    }
    t
}

/// Cut an event stream into snapshots of window size `w`.
///
/// Snapshot `t` holds exactly the events with time in `[t*w, (t+1)*w)`,
/// deduplicated to simple edges, plus any labeled isolated nodes supplied
/// for window `t`. Trailing windows with neither events nor labels are not
/// emitted.
pub fn window_discretize(
    stream: &EventStream,
    w: f64,
    labels_per_window: Option<&BTreeMap<usize, Vec<(NodeId, ClassId)>>>,
) -> Result<TemporalGraph> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "window size {w} must be a positive finite number"
        )));
    }

    let last_event_window = stream
        .events()
        .iter()
        .map(|e| window_index(e.time, w))
        .max();
    let last_label_window = labels_per_window.and_then(|m| m.keys().max().copied());
    let horizon = match (last_event_window, last_label_window) {
        (None, None) => 0,
        (a, b) => a.unwrap_or(0).max(b.unwrap_or(0)) + 1,
    };

    let mut window_edges: Vec<Vec<(NodeId, NodeId)>> = vec![Vec::new(); horizon];
    for e in stream.events() {
        window_edges[window_index(e.time, w)].push((e.src, e.dst));
    }

    let empty = Vec::new();
    let mut snapshots = Vec::with_capacity(horizon);
    for (t, edges) in window_edges.iter().enumerate() {
        let labels = labels_per_window.and_then(|m| m.get(&t)).unwrap_or(&empty);
        let mut declared: Vec<NodeId> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        declared.sort_unstable();
        declared.dedup();
        snapshots.push(Snapshot::build(edges, labels, None, &declared)?);
    }
    Ok(TemporalGraph::new(snapshots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn build_minimal() {
        let s = Snapshot::build(&[(n(0), n(1))], &[(n(0), 1), (n(1), -1)], None, &[]).unwrap();
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.edge_count(), 1);
        assert_eq!(s.label(n(0)), Some(1));
        assert_eq!(s.label(n(1)), Some(-1));
    }

    #[test]
    fn build_dedups_symmetric_edges() {
        let s = Snapshot::build(
            &[(n(0), n(1)), (n(1), n(0))],
            &[(n(0), 1), (n(1), -1)],
            None,
            &[],
        )
        .unwrap();
        assert_eq!(s.edge_count(), 1);
        assert_eq!(s.degree(n(0)).unwrap(), 1);
    }

    #[test]
    fn build_rejects_dangling_endpoint() {
        let err = Snapshot::build(&[(n(0), n(2))], &[(n(0), 1)], None, &[]).unwrap_err();
        assert!(matches!(err, Error::DanglingEndpoint(x) if x == n(2)));
    }

    #[test]
    fn build_rejects_contradictory_labels() {
        let err = Snapshot::build(&[], &[(n(0), 1), (n(0), -1)], None, &[]).unwrap_err();
        assert!(matches!(err, Error::ContradictoryLabel(x) if x == n(0)));
    }

    #[test]
    fn build_rejects_feature_dim_mismatch() {
        let mut f = BTreeMap::new();
        f.insert(n(0), vec![1.0, 2.0]);
        f.insert(n(1), vec![3.0]);
        let err = Snapshot::build(&[], &[(n(0), 1), (n(1), 1)], Some(&f), &[]).unwrap_err();
        assert!(matches!(err, Error::FeatureDim { .. }));
    }

    #[test]
    fn self_edges_dropped_node_kept() {
        let s = Snapshot::build(&[(n(0), n(0))], &[(n(0), 1)], None, &[]).unwrap();
        assert_eq!(s.edge_count(), 0);
        assert_eq!(s.degree(n(0)).unwrap(), 0);
    }

    #[test]
    fn closed_neighborhood_isolated() {
        let s = Snapshot::build(&[], &[(n(0), 1)], None, &[]).unwrap();
        assert_eq!(s.closed_neighborhood(n(0)).unwrap(), vec![n(0)]);
        assert_eq!(s.degree(n(0)).unwrap(), 0);
    }

    #[test]
    fn closed_neighborhood_triangle_and_path() {
        let tri = Snapshot::build(
            &[(n(0), n(1)), (n(1), n(2)), (n(0), n(2))],
            &[(n(0), 1), (n(1), 1), (n(2), 1)],
            None,
            &[],
        )
        .unwrap();
        assert_eq!(
            tri.closed_neighborhood(n(0)).unwrap(),
            vec![n(0), n(1), n(2)]
        );
        assert_eq!(tri.degree(n(0)).unwrap(), 2);

        // path 0-1-2, queried at the middle node: hand enumeration gives
        // {0, 1, 2}.
        let path = Snapshot::build(
            &[(n(0), n(1)), (n(1), n(2))],
            &[(n(0), 1), (n(1), 1), (n(2), 1)],
            None,
            &[],
        )
        .unwrap();
        assert_eq!(
            path.closed_neighborhood(n(1)).unwrap(),
            vec![n(0), n(1), n(2)]
        );
    }

    #[test]
    fn star_center_degree() {
        let edges: Vec<(NodeId, NodeId)> = (1..=5).map(|i| (n(0), n(i))).collect();
        let labels: Vec<(NodeId, ClassId)> = (0..=5).map(|i| (n(i), 1)).collect();
        let s = Snapshot::build(&edges, &labels, None, &[]).unwrap();
        assert_eq!(s.degree(n(0)).unwrap(), 5);
    }

    #[test]
    fn unknown_node_errors() {
        let s = Snapshot::build(&[], &[(n(0), 1)], None, &[]).unwrap();
        assert!(matches!(s.degree(n(9)), Err(Error::UnknownNode(_))));
        assert!(matches!(
            s.closed_neighborhood(n(9)),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn window_both_events_in_one_window() {
        let stream = EventStream::new(vec![
            Event {
                src: n(0),
                dst: n(1),
                time: 0.0,
            },
            Event {
                src: n(0),
                dst: n(2),
                time: 5.0,
            },
        ])
        .unwrap();
        let g = window_discretize(&stream, 10.0, None).unwrap();
        assert_eq!(g.horizon(), 1);
        assert_eq!(g.snapshot(0).unwrap().edge_count(), 2);
    }

    #[test]
    fn window_boundary_event_goes_to_next_window() {
        let stream = EventStream::new(vec![
            Event {
                src: n(0),
                dst: n(1),
                time: 0.0,
            },
            Event {
                src: n(0),
                dst: n(2),
                time: 5.0,
            },
        ])
        .unwrap();
        let g = window_discretize(&stream, 5.0, None).unwrap();
        assert_eq!(g.horizon(), 2);
        let s0 = g.snapshot(0).unwrap();
        let s1 = g.snapshot(1).unwrap();
        assert_eq!(s0.edges().collect::<Vec<_>>(), vec![(n(0), n(1))]);
        assert_eq!(s1.edges().collect::<Vec<_>>(), vec![(n(0), n(2))]);
    }

    #[test]
    fn window_empty_stream() {
        let g = window_discretize(&EventStream::default(), 3.0, None).unwrap();
        assert_eq!(g.horizon(), 0);
    }

    #[test]
    fn window_rejects_nonpositive_width() {
        assert!(window_discretize(&EventStream::default(), 0.0, None).is_err());
    }

    #[test]
    fn labeled_isolated_nodes_are_retained() {
        let stream = EventStream::new(vec![Event {
            src: n(0),
            dst: n(1),
            time: 0.0,
        }])
        .unwrap();
        let mut labels = BTreeMap::new();
        labels.insert(0usize, vec![(n(7), 1)]);
        labels.insert(2usize, vec![(n(8), -1)]);
        let g = window_discretize(&stream, 1.0, Some(&labels)).unwrap();
        assert_eq!(g.horizon(), 3);
        assert!(g.snapshot(0).unwrap().contains(n(7)));
        assert_eq!(g.snapshot(0).unwrap().degree(n(7)).unwrap(), 0);
        assert!(g.snapshot(2).unwrap().contains(n(8)));
    }

    #[test]
    fn discretization_partitions_events() {
        let mut rng = crate::seeds::rng(7, "graph-tests", 0);
        for case in 0..50 {
            let m = rng.random_range(1..40);
            let events: Vec<Event> = (0..m)
                .map(|_| Event {
                    src: n(rng.random_range(0..10)),
                    dst: n(rng.random_range(0..10)),
                    time: rng.random_range(0.0..30.0),
                })
                .collect();
            let w = rng.random_range(0.5..7.0);
            let stream = EventStream::new(events.clone()).unwrap();
            let g = window_discretize(&stream, w, None).unwrap();
            // every event lands in exactly one window and that window's
            // snapshot contains it as an edge (unless it was a self-event)
            for e in &events {
                let t = window_index(e.time, w);
                assert!(e.time >= t as f64 * w && e.time < (t as f64 + 1.0) * w);
                let s = g.snapshot(t).unwrap();
                if e.src != e.dst {
                    let (a, b) = (e.src.min(e.dst), e.src.max(e.dst));
                    assert!(s.edges().any(|edge| edge == (a, b)), "case {case}");
                }
            }
            // and the union of snapshot edges is exactly the per-window
            // deduplicated event set
            let total: usize = g.snapshots().iter().map(Snapshot::edge_count).sum();
            let mut expected: Vec<(usize, NodeId, NodeId)> = events
                .iter()
                .filter(|e| e.src != e.dst)
                .map(|e| (window_index(e.time, w), e.src.min(e.dst), e.src.max(e.dst)))
                .collect();
            expected.sort_unstable();
            expected.dedup();
            assert_eq!(total, expected.len());
        }
    }

    #[test]
    fn closed_neighborhood_size_is_degree_plus_one() {
        let mut rng = crate::seeds::rng(11, "graph-tests", 1);
        for _ in 0..20 {
            let nn: u32 = rng.random_range(1..30);
            let mut edges = Vec::new();
            for u in 0..nn {
                for v in (u + 1)..nn {
                    if rng.random_bool(0.2) {
                        edges.push((n(u), n(v)));
                    }
                }
            }
            let s = Snapshot::from_structure(nn, &edges).unwrap();
            for &node in s.nodes() {
                assert_eq!(
                    s.closed_neighborhood(node).unwrap().len(),
                    s.degree(node).unwrap() + 1
                );
            }
        }
    }

    #[test]
    fn timestep_out_of_range() {
        let g = TemporalGraph::new(vec![]);
        assert!(matches!(
            g.snapshot(0),
            Err(Error::TimestepOutOfRange { .. })
        ));
    }
}
