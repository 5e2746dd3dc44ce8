//! Temporal-graph analytics for dynamic node classification.
//!
//! The crate models a dynamic graph as an ordered sequence of immutable
//! snapshots and provides, on top of that data model:
//!
//! - static and dynamic homophily measures, per-class homophily levels, and
//!   dynamic compatibility matrices ([`homophily`]);
//! - a weight-free linear GCN (mean aggregation over closed neighborhoods)
//!   ([`propagation`]);
//! - closed-form discriminability theory: expected class distance, variance
//!   recursions, AUROC upper bounds, and concentration constants ([`theory`]);
//! - synthetic dynamic-graph generation with SI label dynamics and a planted
//!   sampler with controllable homophily levels ([`epidemics`]);
//! - an evaluation pipeline with Mann-Whitney AUROC, Spearman correlation,
//!   and a Monte Carlo theory-validation harness ([`analysis`]).
//!
//! All randomized operations are deterministic functions of their inputs and
//! a 64-bit seed. With the default `parallel` feature, data-parallel inner
//! loops (grids, replicate ensembles, per-timestep evaluation) run on rayon;
//! without it the same code paths run sequentially.

pub mod analysis;
pub mod epidemics;
mod error;
pub mod graph;
pub mod homophily;
pub mod io;
mod par;
pub mod propagation;
pub mod seeds;
pub mod theory;

pub use error::{Error, Result};
pub use graph::{ClassId, EventStream, NodeId, Snapshot, TemporalGraph};
