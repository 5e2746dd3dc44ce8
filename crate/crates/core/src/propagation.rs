//! Weight-free linear GCN with mean aggregation.
//!
//! One layer replaces each node's vector by the arithmetic mean of its
//! closed neighborhood's vectors; `l` layers compose that update starting
//! from the snapshot features. There are no trainable weights and no
//! nonlinearities, so the forward pass is a fixed linear operator.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{NodeId, Snapshot};
use crate::par;

/// Per-node vectors after some number of layers, defined for exactly the
/// nodes of the snapshot they were produced from.
#[derive(Debug, Clone, PartialEq)]
pub struct Representations {
    layer: usize,
    nodes: Vec<NodeId>,
    values: Vec<Vec<f64>>,
    dim: usize,
}

impl Representations {
    /// Layer counter (0 for raw features).
    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn value(&self, i: NodeId) -> Option<&[f64]> {
        let p = self.nodes.binary_search(&i).ok()?;
        Some(&self.values[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &[f64])> {
        self.nodes
            .iter()
            .copied()
            .zip(self.values.iter().map(Vec::as_slice))
    }

    /// Layer-0 representations from the snapshot features. Every node must
    /// carry a feature vector.
    pub fn from_features(s: &Snapshot) -> Result<Representations> {
        let dim = s.feature_dim().ok_or(Error::MissingFeatures)?;
        let values = (0..s.node_count())
            .map(|p| {
                s.features_at(p)
                    .map(<[f64]>::to_vec)
                    .ok_or(Error::MissingRepresentation(s.node_at(p)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Representations {
            layer: 0,
            nodes: s.nodes().to_vec(),
            values,
            dim,
        })
    }

    /// Layer-0 representations from explicit per-node vectors; every
    /// snapshot node must be covered and all vectors share one dimension.
    pub fn from_values(
        s: &Snapshot,
        values: &BTreeMap<NodeId, Vec<f64>>,
    ) -> Result<Representations> {
        let mut dim = None;
        let vals = s
            .nodes()
            .iter()
            .map(|&node| {
                let v = values
                    .get(&node)
                    .ok_or(Error::MissingRepresentation(node))?;
                match dim {
                    None => dim = Some(v.len()),
                    Some(d) if d != v.len() => {
                        return Err(Error::FeatureDim {
                            node,
                            expected: d,
                            found: v.len(),
                        })
                    }
                    _ => {}
                }
                Ok(v.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Representations {
            layer: 0,
            nodes: s.nodes().to_vec(),
            values: vals,
            dim: dim.unwrap_or(0),
        })
    }
}

/// One mean-aggregation layer over closed neighborhoods:
/// `out(i) = (1 / (d(i) + 1)) * sum over j in closed neighborhood of in(j)`.
pub fn gcn_layer(s: &Snapshot, r: &Representations) -> Result<Representations> {
    if r.nodes != s.nodes() {
        let missing = s
            .nodes()
            .iter()
            .find(|node| r.value(**node).is_none())
            .copied()
            .unwrap_or(NodeId(0));
        return Err(Error::MissingRepresentation(missing));
    }
    let dim = r.dim;
    let values = par::map_range(s.node_count(), |p| {
        let mut acc = r.values[p].clone();
        for &q in s.adj_positions(p) {
            for (a, b) in acc.iter_mut().zip(&r.values[q]) {
                *a += b;
            }
        }
        let scale = 1.0 / (s.adj_positions(p).len() + 1) as f64;
        for a in &mut acc {
            *a *= scale;
        }
        acc
    });
    Ok(Representations {
        layer: r.layer + 1,
        nodes: r.nodes.clone(),
        values,
        dim,
    })
}

/// `layers`-fold application of [`gcn_layer`] to the snapshot features;
/// zero layers returns the features unchanged.
pub fn gcn_forward(s: &Snapshot, layers: usize) -> Result<Representations> {
    gcn_forward_from(s, Representations::from_features(s)?, layers)
}

/// Forward pass from explicit starting representations.
pub fn gcn_forward_from(
    s: &Snapshot,
    start: Representations,
    layers: usize,
) -> Result<Representations> {
    let mut r = start;
    for _ in 0..layers {
        r = gcn_layer(s, &r)?;
    }
    Ok(r)
}

/// Scalar readout used for ranking: the first coordinate of each vector.
pub fn scores(r: &Representations) -> Vec<(NodeId, f64)> {
    r.iter().map(|(node, v)| (node, v[0])).collect()
}
