//! Closed-form discriminability theory.
//!
//! Under the Gaussian feature model (per-node features drawn around a
//! signed class mean of magnitude `mu` with variance `sigma2`), these
//! operations evaluate the expected class-mean distance after `l` mean
//! aggregation layers, the per-class variance recursion, the resulting
//! AUROC upper bound, and the graph-dependent concentration constants that
//! control how fast empirical class means approach their expectations.
//!
//! The AUROC bound divides the distance by the *sum* of the two per-class
//! variances by default; [`Denominator::StdDev`] switches to the
//! standard-deviation convention for sensitivity analysis. Big-O constants
//! in the concentration tails are taken as 1, and all degree terms use the
//! closed degree `d + 1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ClassId, NodeId, Snapshot};
use crate::homophily::CompatibilityMatrix;
use crate::par;

/// Parameters of the Gaussian feature model plus a layer count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Class-mean magnitude, `> 0`.
    pub mu: f64,
    /// Feature variance, `> 0`.
    pub sigma2: f64,
    /// Number of aggregation layers.
    pub layers: usize,
}

impl TheoryParams {
    pub fn new(mu: f64, sigma2: f64, layers: usize) -> Result<TheoryParams> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu {mu} must be > 0")));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma2 {sigma2} must be > 0"
            )));
        }
        Ok(TheoryParams { mu, sigma2, layers })
    }
}

/// Which denominator the AUROC bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// Sum of the two variance bounds (the default convention).
    #[default]
    Variance,
    /// Square root of the variance sum.
    StdDev,
}

/// Per-class variance lower bounds after some number of layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariancePair {
    pub v_plus: f64,
    pub v_minus: f64,
    pub layers: usize,
}

/// Graph-dependent concentration exponents for the two classes. A constant
/// is `None` when its class is empty (the bound is vacuous there).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConstants {
    pub l_plus: Option<f64>,
    pub l_minus: Option<f64>,
    pub n_plus: usize,
    pub n_minus: usize,
}

impl ConcentrationConstants {
    /// Two-exponential tail value `exp(-eps^2 L+) + exp(-eps^2 L-)` with
    /// the big-O constant taken as 1; `None` when either class is empty.
    pub fn tail_bound(&self, eps: f64) -> Option<f64> {
        let (lp, lm) = (self.l_plus?, self.l_minus?);
        Some((-eps * eps * lp).exp() + (-eps * eps * lm).exp())
    }
}

// Rational Chebyshev approximation of erf/erfc after W. J. Cody, accurate
// to near machine precision over the whole real line.
mod erf {
    // coefficients carry the published precision
    #![allow(clippy::excessive_precision)]

    const THRESH: f64 = 0.46875;
    const SQRPI: f64 = 5.641_895_835_477_562_9e-1; // 1/sqrt(pi)

    const A: [f64; 5] = [
        3.161_123_743_870_565_6e0,
        1.138_641_541_510_501_56e2,
        3.774_852_376_853_020_2e2,
        3.209_377_589_138_469_47e3,
        1.857_777_061_846_031_53e-1,
    ];
    const B: [f64; 4] = [
        2.360_129_095_234_412_09e1,
        2.440_246_379_344_441_73e2,
        1.282_616_526_077_372_28e3,
        2.844_236_833_439_170_62e3,
    ];
    const C: [f64; 9] = [
        5.641_884_969_886_700_89e-1,
        8.883_149_794_388_375_94e0,
        6.611_919_063_714_162_95e1,
        2.986_351_381_974_001_31e2,
        8.819_522_212_417_690_9e2,
        1.712_047_612_634_070_58e3,
        2.051_078_377_826_071_47e3,
        1.230_339_354_797_997_25e3,
        2.153_115_354_744_038_46e-8,
    ];
    const D: [f64; 8] = [
        1.574_492_611_070_983_47e1,
        1.176_939_508_913_124_99e2,
        5.371_811_018_620_098_58e2,
        1.621_389_574_566_690_19e3,
        3.290_799_235_733_459_63e3,
        4.362_619_090_143_247_16e3,
        3.439_367_674_143_721_64e3,
        1.230_339_354_803_749_42e3,
    ];
    const P: [f64; 6] = [
        3.053_266_349_612_323_44e-1,
        3.603_448_999_498_044_39e-1,
        1.257_817_261_112_292_46e-1,
        1.608_378_514_874_227_66e-2,
        6.587_491_615_298_378_03e-4,
        1.631_538_713_730_209_78e-2,
    ];
    const Q: [f64; 5] = [
        2.568_520_192_289_822_42e0,
        1.872_952_849_923_460_47e0,
        5.279_051_029_514_284_12e-1,
        6.051_834_131_244_131_91e-2,
        2.335_204_976_268_691_85e-3,
    ];

    /// Complementary error function.
    pub fn erfc(x: f64) -> f64 {
        let y = x.abs();
        if y <= THRESH {
            // erfc(x) = 1 - erf(x) via the central rational approximation
            let z = y * y;
            let mut xnum = A[4] * z;
            let mut xden = z;
            for i in 0..3 {
                xnum = (xnum + A[i]) * z;
                xden = (xden + B[i]) * z;
            }
            return 1.0 - x * (xnum + A[3]) / (xden + B[3]);
        }
        let result = if y <= 4.0 {
            let mut xnum = C[8] * y;
            let mut xden = y;
            for i in 0..7 {
                xnum = (xnum + C[i]) * y;
                xden = (xden + D[i]) * y;
            }
            let r = (xnum + C[7]) / (xden + D[7]);
            scaled_exp(y) * r
        } else if y >= 26.543 {
            0.0
        } else {
            let z = 1.0 / (y * y);
            let mut xnum = P[5] * z;
            let mut xden = z;
            for i in 0..4 {
                xnum = (xnum + P[i]) * z;
                xden = (xden + Q[i]) * z;
            }
            let r = z * (xnum + P[4]) / (xden + Q[4]);
            scaled_exp(y) * (SQRPI - r) / y
        };
        if x < 0.0 {
            2.0 - result
        } else {
            result
        }
    }

    // exp(-y^2) split to avoid cancellation, per the reference scheme
    fn scaled_exp(y: f64) -> f64 {
        let ysq = (y * 16.0).trunc() / 16.0;
        let del = (y - ysq) * (y + ysq);
        (-ysq * ysq).exp() * (-del).exp()
    }
}

/// Standard normal cumulative distribution function.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Expected class-mean distance after `l` layers:
/// `2 * mu * (h_plus + h_minus - 1)^l`. Negative for odd/even interplay of
/// the base sign and the layer count.
pub fn expected_distance(p: &TheoryParams, h_plus: f64, h_minus: f64) -> f64 {
    2.0 * p.mu * (h_plus + h_minus - 1.0).powi(p.layers as i32)
}

/// Per-class variance recursion with base `sigma2`:
/// `v+(l) = h+^2 v+(l-1) + (1-h+)^2 v-(l-1)` and symmetrically for `v-`.
pub fn variance_bounds(p: &TheoryParams, h_plus: f64, h_minus: f64) -> VariancePair {
    let mut v_plus = p.sigma2;
    let mut v_minus = p.sigma2;
    for _ in 0..p.layers {
        let next_plus = h_plus * h_plus * v_plus + (1.0 - h_plus) * (1.0 - h_plus) * v_minus;
        let next_minus = h_minus * h_minus * v_minus + (1.0 - h_minus) * (1.0 - h_minus) * v_plus;
        v_plus = next_plus;
        v_minus = next_minus;
    }
    VariancePair {
        v_plus,
        v_minus,
        layers: p.layers,
    }
}

/// AUROC upper bound under the default variance-sum denominator.
pub fn auroc_upper_bound(p: &TheoryParams, h_plus: f64, h_minus: f64) -> f64 {
    auroc_upper_bound_with(p, h_plus, h_minus, Denominator::Variance)
}

/// AUROC upper bound `1 - cdf(-distance / denom)` with an explicit
/// denominator convention.
pub fn auroc_upper_bound_with(
    p: &TheoryParams,
    h_plus: f64,
    h_minus: f64,
    denom: Denominator,
) -> f64 {
    let dist = expected_distance(p, h_plus, h_minus);
    let v = variance_bounds(p, h_plus, h_minus);
    let den = match denom {
        Denominator::Variance => v.v_plus + v.v_minus,
        Denominator::StdDev => (v.v_plus + v.v_minus).sqrt(),
    };
    1.0 - gaussian_cdf(-dist / den)
}

/// Concentration constants for the distance between empirical and expected
/// class means after `p.layers` layers:
/// `L = |V|^2 / (sigma^4 * sum over i of (sum over closed neighbors j of
/// l / (d(j)+1)^l)^2)`, per future class. Only nodes present in `s` count.
pub fn distance_concentration(
    s: &Snapshot,
    future_labels: &BTreeMap<NodeId, ClassId>,
    p: &TheoryParams,
) -> Result<ConcentrationConstants> {
    if p.layers == 0 {
        return Err(Error::InvalidParameter(
            "concentration constants need at least one layer".into(),
        ));
    }
    let l = p.layers as f64;
    let sigma4 = p.sigma2 * p.sigma2;
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (&node, &class) in future_labels {
        if !s.contains(node) {
            continue;
        }
        let side = match class {
            1 => 0,
            -1 => 1,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "binary concentration requires labels in {{-1, +1}}, got {other}"
                )))
            }
        };
        let pos = s.position(node)?;
        let mut inner = l / closed_degree_pow(s, pos, p.layers);
        for &q in s.adj_positions(pos) {
            inner += l / closed_degree_pow(s, q, p.layers);
        }
        sums[side] += inner * inner;
        counts[side] += 1;
    }
    let constant =
        |sum: f64, n: usize| -> Option<f64> { (n > 0).then(|| (n * n) as f64 / (sigma4 * sum)) };
    Ok(ConcentrationConstants {
        l_plus: constant(sums[0], counts[0]),
        l_minus: constant(sums[1], counts[1]),
        n_plus: counts[0],
        n_minus: counts[1],
    })
}

fn closed_degree_pow(s: &Snapshot, pos: usize, layers: usize) -> f64 {
    ((s.adj_positions(pos).len() + 1) as f64).powi(layers as i32)
}

/// Deviation bound between empirical and expected AUROC:
/// `exp(-2 n+ n- eps^2 / (n+ + n-))`.
pub fn auroc_deviation_bound(n_plus: usize, n_minus: usize, eps: f64) -> Result<f64> {
    if n_plus == 0 {
        return Err(Error::EmptyClass(1));
    }
    if n_minus == 0 {
        return Err(Error::EmptyClass(-1));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {eps} must be nonnegative"
        )));
    }
    let (np, nm) = (n_plus as f64, n_minus as f64);
    Ok((-2.0 * np * nm * eps * eps / (np + nm)).exp())
}

/// Multiclass model: one-hot class means of magnitude `mu` with a measured
/// compatibility matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassTheoryParams {
    pub mu: f64,
    pub compat: CompatibilityMatrix,
}

/// One-layer expected distance between classes `c_m` and `c_n`:
/// `mu * sqrt(sum over k of (T[c_m,k] - T[c_n,k])^2)`. Zero iff the two
/// compatibility rows are identical.
pub fn multiclass_expected_distance(
    p: &MulticlassTheoryParams,
    c_m: ClassId,
    c_n: ClassId,
) -> Result<f64> {
    let row_m = p.compat.row(c_m).ok_or(Error::EmptyClass(c_m))?;
    let row_n = p.compat.row(c_n).ok_or(Error::EmptyClass(c_n))?;
    let sq: f64 = row_m
        .iter()
        .zip(row_n)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(p.mu * sq.sqrt())
}

/// One-layer multiclass concentration tail for classes `c_m` and `c_n`:
/// two exponentials with `num_classes` multiplying each exponent and the
/// big-O constant taken as 1.
pub fn multiclass_concentration(
    s: &Snapshot,
    future_labels: &BTreeMap<NodeId, ClassId>,
    c_m: ClassId,
    c_n: ClassId,
    sigma2: f64,
    num_classes: usize,
    eps: f64,
) -> Result<f64> {
    let sigma4 = sigma2 * sigma2;
    let exponent = |class: ClassId| -> Result<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (&node, &c) in future_labels {
            if c != class || !s.contains(node) {
                continue;
            }
            let pos = s.position(node)?;
            let mut inner = 1.0 / closed_degree_pow(s, pos, 1);
            for &q in s.adj_positions(pos) {
                inner += 1.0 / closed_degree_pow(s, q, 1);
            }
            sum += inner * inner;
            count += 1;
        }
        if count == 0 {
            return Err(Error::EmptyClass(class));
        }
        Ok((count * count) as f64 * num_classes as f64 / (sigma4 * sum))
    };
    let lm = exponent(c_m)?;
    let ln = exponent(c_n)?;
    Ok((-eps * eps * lm).exp() + (-eps * eps * ln).exp())
}

/// One cell of a bound heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub h_plus: f64,
    pub h_minus: f64,
    pub bound: f64,
}

/// Evaluate the AUROC upper bound on a uniform `resolution x resolution`
/// grid over `[0, 1]^2`.
pub fn bound_grid(p: &TheoryParams, resolution: usize) -> Result<Vec<GridPoint>> {
    bound_grid_with(p, resolution, Denominator::Variance)
}

/// Grid evaluation with an explicit denominator convention.
pub fn bound_grid_with(
    p: &TheoryParams,
    resolution: usize,
    denom: Denominator,
) -> Result<Vec<GridPoint>> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {resolution} must be at least 2"
        )));
    }
    let step = |i: usize| i as f64 / (resolution - 1) as f64;
    let params = *p;
    let rows = par::map_range(resolution, move |i| {
        let h_plus = step(i);
        (0..resolution)
            .map(|j| {
                let h_minus = step(j);
                GridPoint {
                    h_plus,
                    h_minus,
                    bound: auroc_upper_bound_with(&params, h_plus, h_minus, denom),
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Snapshot;

    fn params(mu: f64, sigma2: f64, layers: usize) -> TheoryParams {
        TheoryParams::new(mu, sigma2, layers).unwrap()
    }

    /// Adaptive Simpson quadrature of the standard normal density, used as
    /// an independent oracle for the CDF.
    fn phi_oracle(x: f64) -> f64 {
        fn density(t: f64) -> f64 {
            (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
        fn simpson(a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (density(a) + 4.0 * density(0.5 * (a + b)) + density(b))
        }
        fn adaptive(a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(a, m);
            let right = simpson(m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                adaptive(a, m, left, tol / 2.0, depth - 1)
                    + adaptive(m, b, right, tol / 2.0, depth - 1)
            }
        }
        // integrate from 0 to |x| and use symmetry; mass below -10 is
        // negligible at the tolerances under test
        let half = adaptive(0.0, x.abs(), simpson(0.0, x.abs()), 1e-13, 40);
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    #[test]
    fn cdf_at_zero_is_exactly_half() {
        assert_eq!(gaussian_cdf(0.0), 0.5);
    }

    #[test]
    fn cdf_symmetry() {
        for &x in &[0.1, 0.5, 1.0, 2.3, 4.7, 6.0] {
            assert!((gaussian_cdf(x) + gaussian_cdf(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        // frozen from the quadrature oracle
        assert!((gaussian_cdf(1.0) - 0.841_344_746_068_543).abs() < 1e-9);
        let mut x = -6.0;
        while x <= 6.0 {
            assert!(
                (gaussian_cdf(x) - phi_oracle(x)).abs() < 1e-9,
                "x = {x}: {} vs {}",
                gaussian_cdf(x),
                phi_oracle(x)
            );
            x += 0.125;
        }
    }

    #[test]
    fn cdf_is_nondecreasing() {
        let mut prev = 0.0;
        let mut x = -8.0;
        while x <= 8.0 {
            let v = gaussian_cdf(x);
            assert!(v >= prev);
            prev = v;
            x += 0.01;
        }
    }

    #[test]
    fn expected_distance_examples() {
        assert_eq!(expected_distance(&params(1.0, 1.0, 3), 1.0, 1.0), 2.0);
        for l in 1..5 {
            assert_eq!(expected_distance(&params(1.0, 1.0, l), 0.3, 0.7), 0.0);
        }
        let v = expected_distance(&params(1.0, 1.0, 2), 0.9, 0.8);
        assert!((v - 0.98).abs() < 1e-12);
    }

    #[test]
    fn expected_distance_oversmooths() {
        let v = expected_distance(&params(1.0, 1.0, 200), 0.9, 0.9);
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn variance_examples() {
        let v0 = variance_bounds(&params(1.0, 2.5, 0), 0.3, 0.9);
        assert_eq!((v0.v_plus, v0.v_minus), (2.5, 2.5));

        for l in 0..6 {
            let v = variance_bounds(&params(1.0, 2.5, l), 1.0, 1.0);
            assert_eq!((v.v_plus, v.v_minus), (2.5, 2.5));
        }

        let v1 = variance_bounds(&params(1.0, 1.0, 1), 0.5, 0.5);
        assert_eq!((v1.v_plus, v1.v_minus), (0.5, 0.5));
    }

    #[test]
    fn variance_closed_form_on_diagonal() {
        for &h in &[0.0, 0.2, 0.5, 0.8, 1.0] {
            for l in 0..6 {
                let v = variance_bounds(&params(1.0, 1.7, l), h, h);
                let want = 1.7 * (h * h + (1.0 - h) * (1.0 - h)).powi(l as i32);
                assert!((v.v_plus - want).abs() < 1e-12);
                assert!((v.v_minus - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn variance_sum_never_exceeds_twice_sigma2() {
        for hp in 0..=10 {
            for hm in 0..=10 {
                for l in 0..8 {
                    let v =
                        variance_bounds(&params(1.0, 1.3, l), hp as f64 / 10.0, hm as f64 / 10.0);
                    assert!(v.v_plus + v.v_minus <= 2.0 * 1.3 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn auroc_bound_examples() {
        assert_eq!(auroc_upper_bound(&params(1.0, 1.0, 1), 0.5, 0.5), 0.5);

        let v = auroc_upper_bound(&params(1.0, 1.0, 1), 1.0, 1.0);
        assert!((v - 0.841_344_746_068_543).abs() < 1e-9);

        let v2 = auroc_upper_bound(&params(1.0, 1.0, 2), 0.0, 0.0);
        assert!((v2 - 0.841_344_746_068_543).abs() < 1e-9);
    }

    #[test]
    fn auroc_bound_swap_symmetry_exact() {
        for l in 1..4 {
            for hp in 0..=20 {
                for hm in 0..=20 {
                    let (a, b) = (hp as f64 / 20.0, hm as f64 / 20.0);
                    let p = params(1.3, 0.9, l);
                    assert_eq!(auroc_upper_bound(&p, a, b), auroc_upper_bound(&p, b, a));
                }
            }
        }
    }

    #[test]
    fn auroc_bound_monotone_on_upper_diagonal_odd_layers() {
        for &l in &[1usize, 3, 5] {
            let p = params(1.0, 1.0, l);
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=50 {
                let h = 0.5 + 0.5 * i as f64 / 50.0;
                let v = auroc_upper_bound(&p, h, h);
                assert!(v >= prev - 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn stddev_denominator_differs() {
        let p = params(1.0, 1.0, 1);
        let by_variance = auroc_upper_bound_with(&p, 0.9, 0.9, Denominator::Variance);
        let by_stddev = auroc_upper_bound_with(&p, 0.9, 0.9, Denominator::StdDev);
        assert!(by_stddev > by_variance);
    }

    /// Circulant 4-regular graph on `n` nodes (closed degree 5 everywhere)
    /// with labels alternating by parity.
    fn circulant_4_regular(n: u32) -> (Snapshot, BTreeMap<NodeId, ClassId>) {
        let mut edges = Vec::new();
        for i in 0..n {
            edges.push((NodeId(i), NodeId((i + 1) % n)));
            edges.push((NodeId(i), NodeId((i + 2) % n)));
        }
        let s = Snapshot::from_structure(n, &edges).unwrap();
        let labels: BTreeMap<NodeId, ClassId> = (0..n)
            .map(|i| (NodeId(i), if i % 2 == 0 { 1 } else { -1 }))
            .collect();
        (s, labels)
    }

    #[test]
    fn concentration_hand_example() {
        // every closed degree is 5 and l = 1, so each node's inner sum is
        // 5 * (1/5) = 1 and L = |V|^2 / |V| = |V|
        let (s, labels) = circulant_4_regular(20);
        let c = distance_concentration(&s, &labels, &params(1.0, 1.0, 1)).unwrap();
        assert_eq!(c.n_plus, 10);
        assert_eq!(c.n_minus, 10);
        assert!((c.l_plus.unwrap() - 10.0).abs() < 1e-12);
        assert!((c.l_minus.unwrap() - 10.0).abs() < 1e-12);
        assert!((c.tail_bound(0.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn concentration_doubles_with_class_sizes_on_regular_graphs() {
        let (s1, l1) = circulant_4_regular(20);
        // two disjoint copies
        let mut edges: Vec<(NodeId, NodeId)> = s1.edges().collect();
        edges.extend(
            s1.edges()
                .map(|(u, v)| (NodeId(u.0 + 20), NodeId(v.0 + 20))),
        );
        let s2 = Snapshot::from_structure(40, &edges).unwrap();
        let mut l2 = l1.clone();
        for (&node, &c) in &l1 {
            l2.insert(NodeId(node.0 + 20), c);
        }
        let p = params(1.0, 1.0, 1);
        let a = distance_concentration(&s1, &l1, &p).unwrap();
        let b = distance_concentration(&s2, &l2, &p).unwrap();
        assert!((b.l_plus.unwrap() - 2.0 * a.l_plus.unwrap()).abs() < 1e-9);
        assert!((b.l_minus.unwrap() - 2.0 * a.l_minus.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn concentration_empty_class_flagged() {
        let (s, mut labels) = circulant_4_regular(20);
        for v in labels.values_mut() {
            *v = 1;
        }
        let c = distance_concentration(&s, &labels, &params(1.0, 1.0, 1)).unwrap();
        assert!(c.l_plus.is_some());
        assert!(c.l_minus.is_none());
        assert!(c.tail_bound(0.5).is_none());
    }

    #[test]
    fn deviation_bound_examples() {
        assert_eq!(auroc_deviation_bound(10, 20, 0.0).unwrap(), 1.0);
        let v = auroc_deviation_bound(100, 100, 0.1).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
        let mut prev = 1.0;
        for i in 1..=10 {
            let v = auroc_deviation_bound(50, 70, i as f64 * 0.05).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(auroc_deviation_bound(0, 5, 0.1).is_err());
    }

    fn compat(classes: Vec<ClassId>, entries: Vec<Vec<f64>>) -> CompatibilityMatrix {
        let support = vec![1; classes.len()];
        CompatibilityMatrix {
            classes,
            entries,
            support,
        }
    }

    #[test]
    fn multiclass_distance_examples() {
        let identity = compat(
            vec![1, 2, 3],
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        );
        let p = MulticlassTheoryParams {
            mu: 1.0,
            compat: identity,
        };
        assert_eq!(multiclass_expected_distance(&p, 1, 1).unwrap(), 0.0);
        let d = multiclass_expected_distance(&p, 1, 2).unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-12);

        // row difference (0.5, -0.5, 0) with mu = 2 gives 2 * sqrt(0.5)
        let m = compat(
            vec![1, 2, 3],
            vec![
                vec![0.5, 0.5, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        );
        let p2 = MulticlassTheoryParams { mu: 2.0, compat: m };
        let d2 = multiclass_expected_distance(&p2, 1, 2).unwrap();
        assert!((d2 - 2.0 * 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn multiclass_distance_rejects_undefined_rows() {
        let mut m = compat(vec![1, 2], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        m.support[1] = 0;
        let p = MulticlassTheoryParams { mu: 1.0, compat: m };
        assert!(matches!(
            multiclass_expected_distance(&p, 1, 2),
            Err(Error::EmptyClass(2))
        ));
        assert!(matches!(
            multiclass_expected_distance(&p, 1, 9),
            Err(Error::EmptyClass(9))
        ));
    }

    #[test]
    fn multiclass_concentration_examples() {
        let (s, labels) = circulant_4_regular(20);
        // at eps = 0 both exponentials are 1
        let tail = multiclass_concentration(&s, &labels, 1, -1, 1.0, 3, 0.0).unwrap();
        assert!((tail - 2.0).abs() < 1e-15);
        // hand evaluation: inner sums are 1, so L_c = |V_c|^2 * K / |V_c|
        // = 10 K and the tail is 2 exp(-eps^2 10 K)
        for k in 2..6usize {
            let eps = 0.3;
            let tail = multiclass_concentration(&s, &labels, 1, -1, 1.0, k, eps).unwrap();
            let want = 2.0 * (-eps * eps * 10.0 * k as f64).exp();
            assert!((tail - want).abs() < 1e-12);
        }
        // more classes shrink the tail, all else fixed
        let t3 = multiclass_concentration(&s, &labels, 1, -1, 1.0, 3, 0.2).unwrap();
        let t5 = multiclass_concentration(&s, &labels, 1, -1, 1.0, 5, 0.2).unwrap();
        assert!(t5 < t3);
    }

    #[test]
    fn bound_grid_shape() {
        let p = params(1.0, 1.0, 2);
        let grid = bound_grid(&p, 21).unwrap();
        assert_eq!(grid.len(), 21 * 21);
        for g in &grid {
            assert!(g.bound >= 0.0 && g.bound <= 1.0);
        }
        // symmetric under swapping the two levels
        for g in &grid {
            let mirror = grid
                .iter()
                .find(|m| m.h_plus == g.h_minus && m.h_minus == g.h_plus)
                .unwrap();
            assert_eq!(g.bound, mirror.bound);
        }
        // even layer count: near-zero levels beat the midpoint
        let low = auroc_upper_bound(&p, 0.05, 0.05);
        let mid = auroc_upper_bound(&p, 0.5, 0.5);
        assert!(low > mid);
        assert!(bound_grid(&p, 1).is_err());
    }
}
