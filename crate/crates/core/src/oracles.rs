//! Plaintext distance-based Byzantine-robust selection rules, plus the
//! plaintext reference aggregator used as the exactness oracle.
//!
//! All comparisons are on squared distances under the signed two's-complement
//! interpretation; thresholds arrive pre-squared at scale 2 so no square
//! roots are ever taken in the ring.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{RingConfig, RingVector};

/// The multiset `{ ||x_i - x_j||^2 }_{i<j}` in double-scale fixed point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceSet {
    n: usize,
    d2: Vec<u64>,
}

impl DistanceSet {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut d2 = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                d2.push(f(i, j));
            }
        }
        DistanceSet { n, d2 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Symmetric access; the diagonal is zero.
    pub fn get(&self, i: usize, j: usize) -> u64 {
        if i == j {
            return 0;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.d2[i * (2 * self.n - i - 1) / 2 + (j - i - 1)]
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .zip(self.d2.iter().copied())
    }
}

/// Plaintext per-worker weights; selection rules emit entries in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightVector {
    pub p: Vec<u64>,
}

impl WeightVector {
    pub fn selected(&self) -> Vec<usize> {
        self.p
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count_selected(&self) -> usize {
        self.p.iter().filter(|&&w| w != 0).count()
    }
}

/// Thresholds for the stateful ByzantineSGD filter, all pre-squared at scale
/// 2 except `t_a` which bounds `|A_i - A_med|` directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByzSgdParams {
    pub t_a: u64,
    /// Squared threshold on `||B_i - B_med||`.
    pub t_b: u64,
    /// Squared gradient-deviation bound `nu^2`; candidate radius `2 nu` and the
    /// final filter radius `4 nu` become `4 nu^2` and `16 nu^2`.
    pub nu: u64,
}

/// Oracle state carried across rounds: accumulated inner products and
/// accumulated gradients (the latter secret-shared between the servers).
#[derive(Debug, Clone, Default)]
pub struct ByzSgdState {
    pub a_old: Vec<u64>,
    pub b_old: Vec<RingVector>,
}

fn signed(cfg: &RingConfig, v: u64) -> i128 {
    cfg.to_signed(v) as i128
}

/// Multi-Krum: score each worker by the sum of its `n - f - 2` smallest
/// squared distances to peers, keep the `m` lowest scores, ties broken by
/// lower index.
pub fn multi_krum(d: &DistanceSet, f: usize, m: usize, cfg: &RingConfig) -> Result<WeightVector> {
    let n = d.n();
    if n < f + 3 {
        return Err(Error::TooFewWorkers { needed: f + 3, got: n });
    }
    if m < 1 || m > n - f {
        return Err(Error::InvalidConfig(format!("multi-krum m={m} outside 1..=n-f")));
    }
    let k = n - f - 2;
    let mut scores: Vec<(i128, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<u64> = (0..n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
        row.sort_by_key(|&v| signed(cfg, v));
        // sum of the k closest peers, wrapping in the ring like the secure path
        let score = row[..k].iter().fold(0u64, |acc, &v| cfg.add(acc, v));
        scores.push((signed(cfg, score), i));
    }
    scores.sort();
    let mut p = vec![0u64; n];
    for &(_, i) in scores.iter().take(m) {
        p[i] = 1;
    }
    Ok(WeightVector { p })
}

/// The ByzantineSGD filter: lower-median of the accumulated inner products,
/// majority-based medoids for accumulated gradients and current gradients,
/// then three conjunctive tests.
pub fn byzantine_sgd_select(
    a: &[u64],
    dist_b: &DistanceSet,
    dist_g: &DistanceSet,
    params: &ByzSgdParams,
    good_set: &BTreeSet<usize>,
    cfg: &RingConfig,
) -> Result<WeightVector> {
    let m = a.len();
    if m == 0 || good_set.is_empty() {
        return Err(Error::InvalidConfig("byzantine-sgd needs at least one worker".into()));
    }
    let mut sorted_a: Vec<i128> = a.iter().map(|&v| signed(cfg, v)).collect();
    sorted_a.sort();
    let a_med = sorted_a[(m - 1) / 2];

    let t_a = signed(cfg, params.t_a);
    let t_b = signed(cfg, params.t_b);
    let nu2 = signed(cfg, params.nu);

    // lowest-index medoid with a strict majority inside the radius
    let medoid = |d: &DistanceSet, radius: i128| -> Option<usize> {
        (0..m).find(|&i| {
            let within = (0..m).filter(|&j| signed(cfg, d.get(j, i)) <= radius).count();
            within * 2 > m
        })
    };
    let b_med = medoid(dist_b, t_b).ok_or(Error::NoMedianCandidate)?;
    let g_med = medoid(dist_g, 4 * nu2).ok_or(Error::NoMedianCandidate)?;

    let mut p = vec![0u64; m];
    for &i in good_set {
        let pass_a = (signed(cfg, a[i]) - a_med).abs() <= t_a;
        let pass_b = signed(cfg, dist_b.get(i, b_med)) <= t_b;
        let pass_g = signed(cfg, dist_g.get(i, g_med)) <= 16 * nu2;
        if pass_a && pass_b && pass_g {
            p[i] = 1;
        }
    }
    Ok(WeightVector { p })
}

/// Non-robust mean: all-ones weights.
pub fn mean_weights(n: usize) -> WeightVector {
    WeightVector { p: vec![1; n] }
}

/// Aggregation rule selector shared by the reference and secure paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rule {
    Mean,
    MultiKrum { f: usize, m: usize },
    ByzSgd { params: ByzSgdParams },
}

/// Pairwise squared distances in plaintext ring arithmetic, identical to
/// what the secure path reveals to S2.
pub fn plaintext_distances(xs: &[RingVector], cfg: &RingConfig) -> Result<DistanceSet> {
    let n = xs.len();
    let mut entries = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = xs[i].sub(&xs[j], cfg)?;
            let d2 = diff
                .elems
                .iter()
                .fold(0u64, |acc, &e| cfg.add(acc, cfg.mul(e, e)));
            entries.push(d2);
        }
    }
    let mut it = entries.into_iter();
    Ok(DistanceSet::from_fn(n, |_, _| it.next().unwrap()))
}

/// Weighted ring sum `sum_i p_i x_i`.
pub fn weighted_sum(xs: &[RingVector], p: &WeightVector, cfg: &RingConfig) -> Result<RingVector> {
    let dim = xs.first().map(|x| x.dim()).unwrap_or(0);
    let mut z = RingVector::zeros(dim);
    for (x, &w) in xs.iter().zip(&p.p) {
        for (acc, &e) in z.elems.iter_mut().zip(&x.elems) {
            *acc = cfg.add(*acc, cfg.mul(w, e));
        }
    }
    Ok(z)
}

/// Plaintext reference for the whole robust pipeline: identical fixed-point
/// distances, the same oracle, then the weighted ring sum. The exactness
/// tests compare the secure output against this bit-for-bit.
pub struct ReferenceAggregator {
    pub rule: Rule,
    pub cfg: RingConfig,
    pub state: ByzSgdState,
}

impl ReferenceAggregator {
    pub fn new(rule: Rule, cfg: RingConfig) -> Self {
        ReferenceAggregator { rule, cfg, state: ByzSgdState::default() }
    }

    /// `w_minus_w0` is only consulted by the stateful ByzantineSGD rule.
    pub fn aggregate(
        &mut self,
        xs: &[RingVector],
        w_minus_w0: Option<&RingVector>,
    ) -> Result<(RingVector, WeightVector)> {
        let cfg = self.cfg;
        let n = xs.len();
        let p = match self.rule {
            Rule::Mean => mean_weights(n),
            Rule::MultiKrum { f, m } => {
                multi_krum(&plaintext_distances(xs, &cfg)?, f, m, &cfg)?
            }
            Rule::ByzSgd { params } => {
                let w = w_minus_w0
                    .ok_or_else(|| Error::Protocol("byzantine-sgd needs w - w0".into()))?;
                if self.state.a_old.is_empty() {
                    self.state.a_old = vec![0; n];
                    self.state.b_old = vec![RingVector::zeros(xs[0].dim()); n];
                }
                let a: Vec<u64> = xs
                    .iter()
                    .zip(&self.state.a_old)
                    .map(|(x, &old)| {
                        let inner = x
                            .elems
                            .iter()
                            .zip(&w.elems)
                            .fold(0u64, |acc, (&e, &we)| cfg.add(acc, cfg.mul(e, we)));
                        cfg.add(inner, old)
                    })
                    .collect();
                let b: Vec<RingVector> = xs
                    .iter()
                    .zip(&self.state.b_old)
                    .map(|(x, old)| x.add(old, &cfg))
                    .collect::<Result<_>>()?;
                let dist_b = plaintext_distances(&b, &cfg)?;
                let dist_g = plaintext_distances(xs, &cfg)?;
                let good: BTreeSet<usize> = (0..n).collect();
                let p = byzantine_sgd_select(&a, &dist_b, &dist_g, &params, &good, &cfg)?;
                if p.count_selected() < 2 {
                    return Err(Error::OracleAbort);
                }
                self.state.a_old = a;
                self.state.b_old = b;
                p
            }
        };
        let z = weighted_sum(xs, &p, &cfg)?;
        Ok((z, p))
    }
}
