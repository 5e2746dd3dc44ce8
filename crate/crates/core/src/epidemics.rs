//! Synthetic dynamic-graph generation.
//!
//! Structure generators (random regular, preferential attachment,
//! stochastic block model), susceptible-infected label dynamics with
//! per-node Beta-distributed infectivity and susceptibility, and a planted
//! sampler that realizes the Gaussian feature model with controllable
//! dynamic homophily levels for theory validation.
//!
//! Every generator is a pure function of its inputs and a 64-bit seed.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ClassId, NodeId, Snapshot, TemporalGraph};
use crate::homophily::class_dynamic_homophily;
use crate::par;
use crate::seeds;

/// Susceptible label.
pub const SUSCEPTIBLE: ClassId = -1;
/// Infected label.
pub const INFECTED: ClassId = 1;

/// Parameters of the SI process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SIConfig {
    /// Beta parameters for per-node infectivity.
    pub theta_inf: (f64, f64),
    /// Beta parameters for per-node susceptibility.
    pub theta_sus: (f64, f64),
    /// Probability of initial infection at t = 0.
    pub p_init: f64,
    pub seed: u64,
}

impl SIConfig {
    pub fn validate(&self) -> Result<()> {
        for &(a, b) in &[self.theta_inf, self.theta_sus] {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Beta parameters ({a}, {b}) must be positive"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.p_init) {
            return Err(Error::InvalidParameter(format!(
                "p_init {} must lie in [0, 1]",
                self.p_init
            )));
        }
        Ok(())
    }
}

/// Per-node infection parameters, constant across time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeEpiParams {
    /// Infectivity in [0, 1].
    pub alpha: f64,
    /// Susceptibility in [0, 1].
    pub beta: f64,
}

/// Parameters of the planted neighbor-label sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub n_per_class: usize,
    /// Stubs drawn per node.
    pub neighbor_count: usize,
    pub h_plus: f64,
    pub h_minus: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 || self.neighbor_count == 0 {
            return Err(Error::InvalidParameter(
                "n_per_class and neighbor_count must be at least 1".into(),
            ));
        }
        for &h in &[self.h_plus, self.h_minus] {
            if !(0.0..=1.0).contains(&h) {
                return Err(Error::InvalidParameter(format!(
                    "homophily level {h} must lie in [0, 1]"
                )));
            }
        }
        if !(self.sigma2 >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(
                "mu must be finite and sigma2 nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Simple k-regular graph on `n` nodes via stub pairing with restarts.
/// Deterministic under `seed`.
pub fn gen_regular(n: usize, k: usize, seed: u64) -> Result<Snapshot> {
    if n == 0 || k >= n || (n * k) % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "no simple {k}-regular graph on {n} nodes (need n*k even and k < n)"
        )));
    }
    let mut rng = seeds::rng(seed, "regular", 0);
    if k == 0 {
        return Snapshot::from_structure(n as u32, &[]);
    }
    'attempt: for _ in 0..200 {
        let mut stubs: Vec<u32> = (0..n as u32)
            .flat_map(|i| std::iter::repeat_n(i, k))
            .collect();
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(n * k / 2);
        let mut present = std::collections::HashSet::new();
        // pair shuffled stubs; recycle conflicting ones and restart the
        // attempt when a full pass makes no progress
        while !stubs.is_empty() {
            stubs.shuffle(&mut rng);
            let mut rest = Vec::new();
            let mut progress = false;
            for pair in stubs.chunks(2) {
                if pair.len() < 2 {
                    rest.push(pair[0]);
                    continue;
                }
                let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                if u == v || present.contains(&(u, v)) {
                    rest.extend_from_slice(pair);
                } else {
                    present.insert((u, v));
                    edges.push((u, v));
                    progress = true;
                }
            }
            if !progress {
                continue 'attempt;
            }
            stubs = rest;
        }
        let e: Vec<(NodeId, NodeId)> = edges.iter().map(|&(u, v)| (NodeId(u), NodeId(v))).collect();
        return Snapshot::from_structure(n as u32, &e);
    }
    Err(Error::InvalidParameter(format!(
        "failed to realize a simple {k}-regular graph on {n} nodes"
    )))
}

/// Preferential-attachment graph: a complete seed on `m + 1` nodes, then
/// each new node attaches `m` edges to distinct existing nodes chosen
/// proportionally to degree. Deterministic under `seed`.
pub fn gen_preferential(n: usize, m: usize, seed: u64) -> Result<Snapshot> {
    if m == 0 || n <= m {
        return Err(Error::InvalidParameter(format!(
            "preferential attachment needs m >= 1 and n > m (got n = {n}, m = {m})"
        )));
    }
    let mut rng = seeds::rng(seed, "preferential", 0);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    // repeated-endpoints list: node i appears deg(i) times
    let mut endpoints: Vec<u32> = Vec::new();
    for u in 0..=(m as u32) {
        for v in (u + 1)..=(m as u32) {
            edges.push((u, v));
            endpoints.push(u);
            endpoints.push(v);
        }
    }
    for new in (m as u32 + 1)..(n as u32) {
        let mut targets: Vec<u32> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((new, t));
            endpoints.push(new);
            endpoints.push(t);
        }
    }
    let e: Vec<(NodeId, NodeId)> = edges.iter().map(|&(u, v)| (NodeId(u), NodeId(v))).collect();
    Snapshot::from_structure(n as u32, &e)
}

/// Stochastic block model with `c` equal-size communities: independent
/// Bernoulli edges at `p_in` within and `p_out` across communities.
/// Returns the structure and the community assignment per node.
pub fn gen_sbm(
    n: usize,
    c: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Snapshot, Vec<usize>)> {
    if c == 0 || n % c != 0 {
        return Err(Error::InvalidParameter(format!(
            "community count {c} must divide node count {n}"
        )));
    }
    for &p in &[p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "edge probability {p} must lie in [0, 1]"
            )));
        }
    }
    let size = n / c;
    let community: Vec<usize> = (0..n).map(|i| i / size).collect();
    let mut rng = seeds::rng(seed, "sbm", 0);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if community[u] == community[v] {
                p_in
            } else {
                p_out
            };
            if p > 0.0 && rng.random_bool(p) {
                edges.push((NodeId(u as u32), NodeId(v as u32)));
            }
        }
    }
    Ok((Snapshot::from_structure(n as u32, &edges)?, community))
}

/// Draw per-node infectivity and susceptibility, once per node, in sorted
/// node order.
pub fn sample_epi_params(
    nodes: &[NodeId],
    cfg: &SIConfig,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeMap<NodeId, NodeEpiParams>> {
    cfg.validate()?;
    let inf = Beta::new(cfg.theta_inf.0, cfg.theta_inf.1)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let sus = Beta::new(cfg.theta_sus.0, cfg.theta_sus.1)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted
        .into_iter()
        .map(|node| {
            (
                node,
                NodeEpiParams {
                    alpha: inf.sample(rng),
                    beta: sus.sample(rng),
                },
            )
        })
        .collect())
}

/// Probability that susceptible node `i` becomes infected in one step:
/// `1 - prod over infected neighbors j of (1 - alpha_j * beta_i)`. The node
/// itself never enters the product (a susceptible self cannot infect
/// itself).
pub fn infection_probability(
    s: &Snapshot,
    labels: &BTreeMap<NodeId, ClassId>,
    params: &BTreeMap<NodeId, NodeEpiParams>,
    i: NodeId,
) -> Result<f64> {
    let own = params.get(&i).ok_or(Error::MissingEpiParams(i))?;
    let mut survive = 1.0;
    for j in s.neighbors(i)? {
        if labels.get(&j) == Some(&INFECTED) {
            let theirs = params.get(&j).ok_or(Error::MissingEpiParams(j))?;
            survive *= 1.0 - theirs.alpha * own.beta;
        }
    }
    Ok(1.0 - survive)
}

/// One synchronous SI step from labels at `t` to labels at `t + 1` on the
/// structure at `t`. Infected nodes stay infected; nodes absent from the
/// snapshot keep their label.
pub fn si_step(
    s: &Snapshot,
    labels: &BTreeMap<NodeId, ClassId>,
    params: &BTreeMap<NodeId, NodeEpiParams>,
    rng: &mut ChaCha8Rng,
) -> Result<BTreeMap<NodeId, ClassId>> {
    let mut next = labels.clone();
    for &node in s.nodes() {
        if labels.get(&node) != Some(&SUSCEPTIBLE) {
            continue;
        }
        let p = infection_probability(s, labels, params, node)?;
        if p > 0.0 && rng.random_bool(p) {
            next.insert(node, INFECTED);
        }
    }
    Ok(next)
}

/// Run the SI process over a structure sequence.
///
/// Node parameters are drawn once for the union of all node sets, initial
/// labels are Bernoulli(`p_init`) at t = 0, and each later label vector is
/// one [`si_step`] on the previous structure. Snapshot `t` carries labels
/// for its present nodes and features `[y_t(i), alpha_i, beta_i]`.
pub fn simulate_si(structures: &[Snapshot], cfg: &SIConfig) -> Result<TemporalGraph> {
    cfg.validate()?;
    if structures.is_empty() {
        return Err(Error::InvalidParameter(
            "structure sequence must be nonempty".into(),
        ));
    }
    let mut universe: Vec<NodeId> = structures
        .iter()
        .flat_map(|s| s.nodes().iter().copied())
        .collect();
    universe.sort_unstable();
    universe.dedup();

    let mut rng_params = seeds::rng(cfg.seed, "si-params", 0);
    let params = sample_epi_params(&universe, cfg, &mut rng_params)?;

    let mut rng_init = seeds::rng(cfg.seed, "si-init", 0);
    let mut labels: BTreeMap<NodeId, ClassId> = universe
        .iter()
        .map(|&node| {
            let infected = cfg.p_init > 0.0 && rng_init.random_bool(cfg.p_init);
            (node, if infected { INFECTED } else { SUSCEPTIBLE })
        })
        .collect();

    let mut snapshots = Vec::with_capacity(structures.len());
    for (t, structure) in structures.iter().enumerate() {
        let present_labels: Vec<(NodeId, ClassId)> = structure
            .nodes()
            .iter()
            .map(|&node| (node, labels[&node]))
            .collect();
        let features: BTreeMap<NodeId, Vec<f64>> = structure
            .nodes()
            .iter()
            .map(|&node| {
                let p = params[&node];
                (node, vec![f64::from(labels[&node]), p.alpha, p.beta])
            })
            .collect();
        snapshots.push(structure.with_node_data(&present_labels, Some(&features))?);
        if t + 1 < structures.len() {
            let mut rng_step = seeds::rng(cfg.seed, "si-step", t as u64);
            labels = si_step(structure, &labels, &params, &mut rng_step)?;
        }
    }
    Ok(TemporalGraph::new(snapshots))
}

/// Simulate `replicates` independent runs with per-replicate derived seeds.
pub fn simulate_si_ensemble(
    structures: &[Snapshot],
    cfg: &SIConfig,
    replicates: usize,
) -> Result<Vec<TemporalGraph>> {
    par::try_map_range(replicates, |r| {
        let mut sub = *cfg;
        sub.seed = seeds::derive(cfg.seed, "si-replicate", r as u64);
        simulate_si(structures, &sub)
    })
}

/// Search for Beta means that make the infection cover the whole graph.
///
/// Scales the first Beta parameter of both distributions upward until at
/// least `target` of `trials` seeded runs are fully infected at the final
/// timestep, and returns the first configuration that succeeds.
pub fn calibrate_si(
    structures: &[Snapshot],
    base: &SIConfig,
    trials: usize,
    target: f64,
) -> Result<SIConfig> {
    base.validate()?;
    if structures.is_empty() || trials == 0 {
        return Err(Error::InvalidParameter(
            "calibration needs structures and at least one trial".into(),
        ));
    }
    let last = structures.len() - 1;
    for scale_pow in 0..12 {
        let scale = f64::powi(1.5, scale_pow);
        let mut cfg = *base;
        cfg.theta_inf.0 *= scale;
        cfg.theta_sus.0 *= scale;
        let runs = simulate_si_ensemble(structures, &cfg, trials)?;
        let full = runs
            .iter()
            .filter(|g| {
                let s = &g.snapshots()[last];
                s.nodes().iter().all(|&n| s.label(n) == Some(INFECTED))
            })
            .count();
        if full as f64 >= target * trials as f64 {
            return Ok(cfg);
        }
    }
    Err(Error::InvalidParameter(
        "calibration failed to reach full infection; raise the Beta parameters".into(),
    ))
}

/// Output of the planted sampler.
#[derive(Debug, Clone)]
pub struct PlantedOutput {
    /// Two timesteps: `t = 0` carries current labels and scalar Gaussian
    /// features, `t = 1` carries the planted future labels.
    pub graph: TemporalGraph,
    pub future_labels: BTreeMap<NodeId, ClassId>,
    /// Dynamic homophily levels measured on the realized graph (the
    /// quantity theory consumes; pairing and discards perturb the planted
    /// targets slightly).
    pub measured_h_plus: f64,
    pub measured_h_minus: f64,
    /// Stubs dropped to resolve odd bucket sizes, self-pairs, and
    /// duplicate edges.
    pub discarded_stubs: usize,
    pub config: PlantedConfig,
}

/// Planted sampler realizing the Gaussian feature model at controllable
/// dynamic homophily levels.
///
/// Each node gets a future class (`n_per_class` per class), a current label
/// that matches its future class with probability `h^c`, and
/// `neighbor_count` stubs each demanding a neighbor whose current label
/// matches the future class with probability `h^c`. Stubs are paired into
/// edges by random matching within compatible buckets; leftover stubs are
/// discarded and recorded. Features are drawn iid from
/// `N(current_label * mu, sigma2)`.
pub fn gen_planted(cfg: &PlantedConfig) -> Result<PlantedOutput> {
    cfg.validate()?;
    let n = cfg.n_per_class;
    let total = 2 * n;
    let level = |future: ClassId| if future == 1 { cfg.h_plus } else { cfg.h_minus };
    let future_of = |i: usize| if i < n { 1 } else { -1 };

    let mut rng_cur = seeds::rng(cfg.seed, "planted-current", 0);
    let current: Vec<ClassId> = (0..total)
        .map(|i| {
            let f = future_of(i);
            if rng_cur.random_bool(level(f)) {
                f
            } else {
                -f
            }
        })
        .collect();

    // stub buckets keyed by (owner current label, demanded label)
    let mut rng_stub = seeds::rng(cfg.seed, "planted-stubs", 0);
    let mut bucket_pp: Vec<u32> = Vec::new();
    let mut bucket_mm: Vec<u32> = Vec::new();
    let mut bucket_pm: Vec<u32> = Vec::new(); // owner +, demands -
    let mut bucket_mp: Vec<u32> = Vec::new(); // owner -, demands +
    for i in 0..total {
        let f = future_of(i);
        for _ in 0..cfg.neighbor_count {
            let demand = if rng_stub.random_bool(level(f)) {
                f
            } else {
                -f
            };
            match (current[i], demand) {
                (1, 1) => bucket_pp.push(i as u32),
                (-1, -1) => bucket_mm.push(i as u32),
                (1, -1) => bucket_pm.push(i as u32),
                (-1, 1) => bucket_mp.push(i as u32),
                _ => unreachable!(),
            }
        }
    }

    let mut rng_pair = seeds::rng(cfg.seed, "planted-pairing", 0);
    let mut discarded = 0usize;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();

    // within-bucket matching: both endpoints demand each other's label
    for bucket in [&mut bucket_pp, &mut bucket_mm] {
        bucket.shuffle(&mut rng_pair);
        if bucket.len() % 2 == 1 {
            bucket.pop();
            discarded += 1;
        }
        for pair in bucket.chunks(2) {
            if pair[0] == pair[1] {
                discarded += 2;
                continue;
            }
            edges.push((NodeId(pair[0]), NodeId(pair[1])));
        }
    }
    // cross matching: a (+, -) stub pairs with a (-, +) stub
    bucket_pm.shuffle(&mut rng_pair);
    bucket_mp.shuffle(&mut rng_pair);
    let paired = bucket_pm.len().min(bucket_mp.len());
    discarded += bucket_pm.len() + bucket_mp.len() - 2 * paired;
    for k in 0..paired {
        edges.push((NodeId(bucket_pm[k]), NodeId(bucket_mp[k])));
    }

    // duplicate edges collapse in the snapshot; count the lost stubs
    let mut canon: Vec<(u32, u32)> = edges
        .iter()
        .map(|&(u, v)| (u.0.min(v.0), u.0.max(v.0)))
        .collect();
    canon.sort_unstable();
    canon.dedup();
    discarded += 2 * (edges.len() - canon.len());

    let mut rng_feat = seeds::rng(cfg.seed, "planted-features", 0);
    let normal =
        Normal::new(0.0, cfg.sigma2.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let features: BTreeMap<NodeId, Vec<f64>> = (0..total)
        .map(|i| {
            let mean = f64::from(current[i]) * cfg.mu;
            (NodeId(i as u32), vec![mean + normal.sample(&mut rng_feat)])
        })
        .collect();

    let current_labels: Vec<(NodeId, ClassId)> =
        (0..total).map(|i| (NodeId(i as u32), current[i])).collect();
    let future_labels_vec: Vec<(NodeId, ClassId)> = (0..total)
        .map(|i| (NodeId(i as u32), future_of(i)))
        .collect();

    let s0 = Snapshot::build(&edges, &current_labels, Some(&features), &[])?;
    let s1 = s0.with_node_data(&future_labels_vec, None)?;
    let graph = TemporalGraph::new(vec![s0, s1]);

    let measured_h_plus = class_dynamic_homophily(&graph, 0, 1)?.ok_or(Error::EmptyClass(1))?;
    let measured_h_minus = class_dynamic_homophily(&graph, 0, -1)?.ok_or(Error::EmptyClass(-1))?;
    Ok(PlantedOutput {
        graph,
        future_labels: future_labels_vec.into_iter().collect(),
        measured_h_plus,
        measured_h_minus,
        discarded_stubs: discarded,
        config: *cfg,
    })
}
