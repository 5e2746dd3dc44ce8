//! Evaluation pipeline and Monte Carlo theory validation.
//!
//! Mann-Whitney AUROC (ties counted one half), Spearman rank correlation
//! with average ranks, eligibility masking for spreading tasks, per-timestep
//! measurement records combining homophily, propagation scores, and theory
//! bounds, and the planted-model validation harness.
//!
//! Undefined values (empty class, constant series, too few pairs) propagate
//! as `None`, never as silent zeros or NaNs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::epidemics::{gen_planted, PlantedConfig, SUSCEPTIBLE};
use crate::error::{Error, Result};
use crate::graph::{NodeId, Snapshot, TemporalGraph};
use crate::homophily::{dynamic_homophily, HomophilyLevels};
use crate::par;
use crate::propagation::{gcn_layer, Representations};
use crate::seeds;
use crate::theory::{
    auroc_upper_bound_with, distance_concentration, expected_distance, variance_bounds,
    ConcentrationConstants, Denominator, TheoryParams,
};

/// Mann-Whitney AUROC of `(score, is_positive)` samples: the fraction of
/// (positive, negative) pairs ranked concordantly, ties counted one half.
/// `None` when either class is empty.
pub fn auroc(samples: &[(f64, bool)]) -> Option<f64> {
    let n_pos = samples.iter().filter(|(_, p)| *p).count();
    let n_neg = samples.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(&samples.iter().map(|(s, _)| *s).collect::<Vec<_>>());
    let rank_sum: f64 = samples
        .iter()
        .zip(&ranks)
        .filter(|((_, p), _)| *p)
        .map(|(_, r)| *r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Average ranks (1-based); tied values share the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks, computed as the Pearson
/// correlation of the two rank vectors. `None` when either series is
/// constant. Errors on length mismatch or fewer than three points.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "spearman needs at least 3 points, got {}",
            x.len()
        )));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mean) * (b - mean);
        var_x += (a - mean) * (a - mean);
        var_y += (b - mean) * (b - mean);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Ok(None);
    }
    Ok(Some(cov / (var_x * var_y).sqrt()))
}

/// Which nodes a timestep scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Nodes present at both `t` and `t + 1`.
    #[default]
    All,
    /// Additionally requires the node to be susceptible at `t` (spreading
    /// tasks score only nodes the signal has not reached).
    Unreached,
}

/// Nodes eligible for scoring at timestep `t`.
pub fn eligibility_mask(g: &TemporalGraph, t: usize, mode: MaskMode) -> Result<Vec<NodeId>> {
    let now = g.snapshot(t)?;
    let next = g.snapshot(t + 1)?;
    Ok(now
        .nodes()
        .iter()
        .copied()
        .filter(|&node| next.contains(node))
        .filter(|&node| match mode {
            MaskMode::All => true,
            MaskMode::Unreached => now.label(node) == Some(SUSCEPTIBLE),
        })
        .collect())
}

/// Sign that orients scores upward on a calibration sample: `-1.0` when
/// flipping improves the calibration AUROC, else `+1.0`.
pub fn calibrated_sign(calibration: &[(f64, bool)]) -> f64 {
    match auroc(calibration) {
        Some(a) if a < 0.5 => -1.0,
        _ => 1.0,
    }
}

/// Per-timestep measurements: homophily levels, masked AUROC per layer,
/// theory bound per layer, and eligible class sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestepRecord {
    pub t: usize,
    pub h_static: f64,
    pub h_dynamic: Option<f64>,
    pub h_plus: Option<f64>,
    pub h_minus: Option<f64>,
    pub auroc_per_layer: BTreeMap<usize, Option<f64>>,
    pub bound_per_layer: BTreeMap<usize, Option<f64>>,
    /// Eligible nodes with future label +1 / -1.
    pub n_plus: usize,
    pub n_minus: usize,
}

/// Settings for [`evaluate_timesteps`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub layers: Vec<usize>,
    pub mode: MaskMode,
    /// Gaussian model parameters for the bound; when absent they are
    /// estimated per timestep from the first feature coordinate's
    /// per-class means and variances.
    pub theory: Option<(f64, f64)>,
    pub denominator: Denominator,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            layers: vec![1],
            mode: MaskMode::All,
            theory: None,
            denominator: Denominator::Variance,
        }
    }
}

/// Estimate `(mu, sigma2)` from the first feature coordinate conditioned on
/// the current binary labels. `None` when a class is missing, has fewer
/// than two members, or the pooled variance vanishes.
fn estimate_theory_params(s: &Snapshot) -> Option<(f64, f64)> {
    let mut per_class: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for &node in s.nodes() {
        let (Some(label), Some(f)) = (s.label(node), s.features_of(node)) else {
            continue;
        };
        if label == 1 || label == -1 {
            per_class.entry(label).or_default().push(f[0]);
        }
    }
    let pos = per_class.get(&1)?;
    let neg = per_class.get(&-1)?;
    if pos.len() < 2 || neg.len() < 2 {
        return None;
    }
    let stats = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64;
        (mean, var)
    };
    let (mp, vp) = stats(pos);
    let (mn, vn) = stats(neg);
    let mu = (mp - mn) / 2.0;
    let sigma2 = (vp + vn) / 2.0;
    (mu > 0.0 && sigma2 > 0.0).then_some((mu, sigma2))
}

/// Full per-timestep pipeline: homophily measures, linear-GCN scores,
/// masked AUROC, and the theory bound at the measured levels, one record
/// per `t` in `[0, horizon - 2]`.
pub fn evaluate_timesteps(g: &TemporalGraph, cfg: &EvalConfig) -> Result<Vec<TimestepRecord>> {
    if g.horizon() < 2 {
        return Ok(Vec::new());
    }
    let max_layer = cfg.layers.iter().copied().max().unwrap_or(0);
    par::try_map_range(g.horizon() - 1, |t| {
        let now = g.snapshot(t)?;
        let next = g.snapshot(t + 1)?;
        let levels: HomophilyLevels = dynamic_homophily(g, t)?;
        let eligible = eligibility_mask(g, t, cfg.mode)?;
        let n_plus = eligible
            .iter()
            .filter(|&&node| next.label(node) == Some(1))
            .count();
        let n_minus = eligible
            .iter()
            .filter(|&&node| next.label(node) == Some(-1))
            .count();

        let theta = cfg.theory.or_else(|| estimate_theory_params(now));
        let mut auroc_per_layer = BTreeMap::new();
        let mut bound_per_layer = BTreeMap::new();
        let mut reps = Representations::from_features(now)?;
        for l in 0..=max_layer {
            if l > 0 {
                reps = gcn_layer(now, &reps)?;
            }
            if !cfg.layers.contains(&l) {
                continue;
            }
            let samples: Vec<(f64, bool)> = eligible
                .iter()
                .filter_map(|&node| {
                    let future = next.label(node)?;
                    if future != 1 && future != -1 {
                        return None;
                    }
                    Some((reps.value(node)?[0], future == 1))
                })
                .collect();
            auroc_per_layer.insert(l, auroc(&samples));

            let bound = match (theta, levels.h_plus(), levels.h_minus()) {
                (Some((mu, sigma2)), Some(hp), Some(hm)) => {
                    let p = TheoryParams::new(mu, sigma2, l)?;
                    Some(auroc_upper_bound_with(&p, hp, hm, cfg.denominator))
                }
                _ => None,
            };
            bound_per_layer.insert(l, bound);
        }

        Ok(TimestepRecord {
            t,
            h_static: levels.h_static,
            h_dynamic: levels.h_dynamic,
            h_plus: levels.h_plus(),
            h_minus: levels.h_minus(),
            auroc_per_layer,
            bound_per_layer,
            n_plus,
            n_minus,
        })
    })
}

/// Which homophily series to correlate against performance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    HStatic,
    HDynamic,
}

/// Spearman correlation between a homophily series and the AUROC series of
/// one layer across timesteps, skipping undefined entries pairwise. `None`
/// with fewer than three defined pairs or a constant series.
pub fn correlate_series(records: &[TimestepRecord], measure: Measure, layer: usize) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records {
        let x = match measure {
            Measure::HStatic => Some(r.h_static),
            Measure::HDynamic => r.h_dynamic,
        };
        let y = r.auroc_per_layer.get(&layer).copied().flatten();
        if let (Some(x), Some(y)) = (x, y) {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.len() < 3 {
        return None;
    }
    spearman(&xs, &ys).ok().flatten()
}

/// Empirical-versus-theory comparison for one layer count, averaged over
/// replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerValidation {
    pub layers: usize,
    /// Mean empirical class-mean gap after propagation.
    pub empirical_gap: f64,
    /// Expected distance evaluated at the measured levels.
    pub theoretical_gap: f64,
    /// Sample variances of the scores within each future class.
    pub empirical_var_plus: f64,
    pub empirical_var_minus: f64,
    /// Variance recursion values at the measured levels.
    pub bound_var_plus: f64,
    pub bound_var_minus: f64,
    pub empirical_auroc: Option<f64>,
    pub auroc_bound: f64,
    pub concentration: ConcentrationConstants,
}

/// Validation harness output; every empirical quantity is an average over
/// `replicates` runs of `nodes_per_class` nodes per class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub config: PlantedConfig,
    /// Convention used for every `auroc_bound` in the report.
    pub denominator: Denominator,
    pub replicates: usize,
    pub nodes_per_class: usize,
    pub measured_h_plus: f64,
    pub measured_h_minus: f64,
    pub discarded_stubs: f64,
    pub per_layer: Vec<LayerValidation>,
}

fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Monte Carlo check of the closed-form theory on the planted sampler.
///
/// Per replicate and layer: propagate the planted snapshot, split scores by
/// future class, and compare the empirical class-mean gap, per-class
/// variances, and masked AUROC against the theory evaluated at the
/// *measured* homophily levels. Concentration constants are reported for
/// tolerance selection.
pub fn validate_theory(
    cfg: &PlantedConfig,
    layers: &[usize],
    replicates: usize,
) -> Result<ValidationReport> {
    cfg.validate()?;
    if replicates == 0 || layers.is_empty() {
        return Err(Error::InvalidParameter(
            "validation needs at least one replicate and one layer".into(),
        ));
    }
    let runs: Vec<(PlantedOutputStats, Vec<LayerValidation>)> =
        par::try_map_range(replicates, |r| {
            let mut sub = *cfg;
            sub.seed = seeds::derive(cfg.seed, "validate-replicate", r as u64);
            let out = gen_planted(&sub)?;
            let s0 = out.graph.snapshot(0)?;
            let max_layer = layers.iter().copied().max().unwrap_or(0);
            let mut reps = Representations::from_features(s0)?;
            let mut per_layer = Vec::new();
            for l in 0..=max_layer {
                if l > 0 {
                    reps = gcn_layer(s0, &reps)?;
                }
                if !layers.contains(&l) {
                    continue;
                }
                let mut plus = Vec::new();
                let mut minus = Vec::new();
                let mut samples = Vec::new();
                for (node, v) in reps.iter() {
                    let future = out.future_labels[&node];
                    samples.push((v[0], future == 1));
                    if future == 1 {
                        plus.push(v[0]);
                    } else {
                        minus.push(v[0]);
                    }
                }
                let (mean_p, var_p) = mean_and_var(&plus);
                let (mean_m, var_m) = mean_and_var(&minus);
                // the closed forms require sigma2 > 0; clamp the degenerate
                // sigma = 0 case to a tiny base so the report stays total
                let sigma2 = cfg.sigma2.max(f64::MIN_POSITIVE);
                let p = TheoryParams::new(cfg.mu, sigma2, l)?;
                let v = variance_bounds(&p, out.measured_h_plus, out.measured_h_minus);
                let conc = distance_concentration(
                    s0,
                    &out.future_labels,
                    &TheoryParams::new(cfg.mu, sigma2, l.max(1))?,
                )?;
                per_layer.push(LayerValidation {
                    layers: l,
                    empirical_gap: mean_p - mean_m,
                    theoretical_gap: expected_distance(
                        &p,
                        out.measured_h_plus,
                        out.measured_h_minus,
                    ),
                    empirical_var_plus: var_p,
                    empirical_var_minus: var_m,
                    bound_var_plus: v.v_plus,
                    bound_var_minus: v.v_minus,
                    empirical_auroc: auroc(&samples),
                    auroc_bound: auroc_upper_bound_with(
                        &p,
                        out.measured_h_plus,
                        out.measured_h_minus,
                        Denominator::Variance,
                    ),
                    concentration: conc,
                });
            }
            Ok::<_, Error>((
                PlantedOutputStats {
                    h_plus: out.measured_h_plus,
                    h_minus: out.measured_h_minus,
                    discarded: out.discarded_stubs as f64,
                },
                per_layer,
            ))
        })?;

    let n = runs.len() as f64;
    let mut per_layer: Vec<LayerValidation> = runs[0].1.clone();
    for (_, layers_r) in runs.iter().skip(1) {
        for (acc, lv) in per_layer.iter_mut().zip(layers_r) {
            acc.empirical_gap += lv.empirical_gap;
            acc.theoretical_gap += lv.theoretical_gap;
            acc.empirical_var_plus += lv.empirical_var_plus;
            acc.empirical_var_minus += lv.empirical_var_minus;
            acc.bound_var_plus += lv.bound_var_plus;
            acc.bound_var_minus += lv.bound_var_minus;
            acc.empirical_auroc = match (acc.empirical_auroc, lv.empirical_auroc) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
            acc.auroc_bound += lv.auroc_bound;
            acc.concentration.l_plus = match (acc.concentration.l_plus, lv.concentration.l_plus) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
            acc.concentration.l_minus = match (acc.concentration.l_minus, lv.concentration.l_minus)
            {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
        }
    }
    for lv in &mut per_layer {
        lv.empirical_gap /= n;
        lv.theoretical_gap /= n;
        lv.empirical_var_plus /= n;
        lv.empirical_var_minus /= n;
        lv.bound_var_plus /= n;
        lv.bound_var_minus /= n;
        lv.empirical_auroc = lv.empirical_auroc.map(|a| a / n);
        lv.auroc_bound /= n;
        lv.concentration.l_plus = lv.concentration.l_plus.map(|v| v / n);
        lv.concentration.l_minus = lv.concentration.l_minus.map(|v| v / n);
    }
    Ok(ValidationReport {
        config: *cfg,
        denominator: Denominator::Variance,
        replicates,
        nodes_per_class: cfg.n_per_class,
        measured_h_plus: runs.iter().map(|(s, _)| s.h_plus).sum::<f64>() / n,
        measured_h_minus: runs.iter().map(|(s, _)| s.h_minus).sum::<f64>() / n,
        discarded_stubs: runs.iter().map(|(s, _)| s.discarded).sum::<f64>() / n,
        per_layer,
    })
}

struct PlantedOutputStats {
    h_plus: f64,
    h_minus: f64,
    discarded: f64,
}
