//! Affinity and variation distance between measures on a finite sample space.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Largest sample space handled by exhaustive subset enumeration (2^20 sets).
pub const MAX_ENUMERATED_OUTCOMES: usize = 20;

const SUM_TOLERANCE: f64 = 1e-12;

/// Two probability vectors on the same finite sample space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModelPair {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl DiscreteModelPair {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty sample space".into()));
        }
        if p.len() != q.len() {
            return Err(Error::InvalidDistribution(format!(
                "length mismatch: {} vs {}",
                p.len(),
                q.len()
            )));
        }
        for (name, v) in [("p", &p), ("q", &q)] {
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidDistribution(format!("{name} has invalid entry {x}")));
            }
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("{name} sums to {total}")));
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn outcomes(&self) -> usize {
        self.p.len()
    }

    fn ensure_enumerable(&self) -> Result<()> {
        if self.outcomes() > MAX_ENUMERATED_OUTCOMES {
            Err(Error::TooManyOutcomes { outcomes: self.outcomes(), limit: MAX_ENUMERATED_OUTCOMES })
        } else {
            Ok(())
        }
    }
}

/// π(P, Q) together with an event attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityResult {
    pub value: f64,
    /// Sample-space indices of the minimizing event E (ascending).
    pub witness_set: Vec<usize>,
}

fn mask_sums(pair: &DiscreteModelPair, mask: u32) -> (f64, f64) {
    let mut p = 0.0;
    let mut q = 0.0;
    for i in 0..pair.outcomes() {
        if mask >> i & 1 == 1 {
            p += pair.p[i];
            q += pair.q[i];
        }
    }
    (p, q)
}

fn mask_indices(mask: u32, k: usize) -> Vec<usize> {
    (0..k).filter(|i| mask >> i & 1 == 1).collect()
}

/// min over all 2^k events E of max(P(E), Q(E^c)), by enumeration.
pub fn affinity_bruteforce_discrete(pair: &DiscreteModelPair) -> Result<AffinityResult> {
    pair.ensure_enumerable()?;
    let k = pair.outcomes();
    let mut best = f64::INFINITY;
    let mut best_mask = 0u32;
    for mask in 0..(1u32 << k) {
        let (p, q) = mask_sums(pair, mask);
        let value = p.max(1.0 - q);
        if value < best {
            best = value;
            best_mask = mask;
        }
    }
    Ok(AffinityResult { value: best, witness_set: mask_indices(best_mask, k) })
}

/// sup over all 2^k events of |P(E) − Q(E)|, by enumeration.
pub fn variation_distance_bruteforce_discrete(pair: &DiscreteModelPair) -> Result<f64> {
    pair.ensure_enumerable()?;
    let k = pair.outcomes();
    Ok((0..(1u32 << k))
        .map(|mask| {
            let (p, q) = mask_sums(pair, mask);
            (p - q).abs()
        })
        .fold(0.0, f64::max))
}

/// ‖P − Q‖ = Σ max(p_i − q_i, 0).
pub fn variation_distance_discrete(pair: &DiscreteModelPair) -> f64 {
    pair.p.iter().zip(&pair.q).map(|(p, q)| (p - q).max(0.0)).sum()
}

/// Lower bound π(P, Q) ≥ (1 − ‖P − Q‖)/2.
pub fn affinity_lower_bound_from_tv(tv: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tv) {
        return Err(Error::domain(format!("variation distance must lie in [0, 1], got {tv}")));
    }
    Ok(0.5 * (1.0 - tv))
}

/// Outcomes that can enter an optimal event, ordered by likelihood ratio q/p
/// (largest first), plus the outcomes every optimal event may include for free.
struct RatioOrder {
    items: Vec<usize>,
    /// Q-mass of outcomes with p = 0 < q; including them never hurts.
    free_q: f64,
    free: Vec<usize>,
}

impl RatioOrder {
    fn new(pair: &DiscreteModelPair) -> Self {
        let mut items = Vec::new();
        let mut free = Vec::new();
        let mut free_q = 0.0;
        for i in 0..pair.outcomes() {
            let (p, q) = (pair.p[i], pair.q[i]);
            if p == 0.0 && q > 0.0 {
                free.push(i);
                free_q += q;
            } else if p > 0.0 && q > 0.0 {
                items.push(i);
            }
            // q = 0: adding the outcome only raises P(E).
        }
        items.sort_by(|&i, &j| compare_ratio(pair, j, i).then(i.cmp(&j)));
        Self { items, free_q, free }
    }
}

/// Compares q_i/p_i with q_j/p_j without division.
fn compare_ratio(pair: &DiscreteModelPair, i: usize, j: usize) -> Ordering {
    (pair.q[i] * pair.p[j]).total_cmp(&(pair.q[j] * pair.p[i]))
}

/// Value of the best randomized test that may still add (fractions of) the
/// outcomes `order[from..]` to an event with masses (p, q): walk the
/// likelihood-ratio frontier until max(P, 1 − Q) stops decreasing.
fn frontier_bound(pair: &DiscreteModelPair, order: &[usize], from: usize, mut p: f64, mut q: f64) -> f64 {
    for &i in &order[from..] {
        if p >= 1.0 - q {
            return p;
        }
        let (pi, qi) = (pair.p[i], pair.q[i]);
        if p + pi <= 1.0 - q - qi {
            p += pi;
            q += qi;
        } else {
            let t = (1.0 - q - p) / (pi + qi);
            return p + t * pi;
        }
    }
    p.max(1.0 - q)
}

/// Affinity of randomized tests: inf over φ: Ω → [0,1] of
/// max(E_P φ, 1 − E_Q φ), obtained by one sweep along the likelihood ratio.
///
/// O(k log k). This is a lower bound on the discrete affinity and coincides
/// with it for atomless pairs (e.g. the Gaussian location model).
pub fn affinity_randomized_discrete(pair: &DiscreteModelPair) -> f64 {
    let order = RatioOrder::new(pair);
    frontier_bound(pair, &order.items, 0, 0.0, order.free_q)
}

/// Exact discrete affinity via the Neyman–Pearson ordering.
///
/// Level sets of the likelihood ratio q/p (tied ratios taken as one block)
/// give the starting incumbent; a depth-first search over outcomes in ratio
/// order then closes the gap left by the atoms, pruning with the randomized
/// frontier bound. The result equals exhaustive enumeration. Worst-case cost is
/// exponential (with p = q the problem contains number partitioning) but the
/// bound prunes most of the tree in practice and there is no size limit.
pub fn affinity_neyman_pearson_discrete(pair: &DiscreteModelPair) -> AffinityResult {
    let order = RatioOrder::new(pair);
    let mut search = Search {
        pair,
        order: &order.items,
        best: f64::INFINITY,
        best_set: Vec::new(),
        current: Vec::new(),
    };
    search.seed_with_level_sets(order.free_q);
    search.descend(0, 0.0, order.free_q);

    let mut witness_set = search.best_set;
    witness_set.extend(&order.free);
    witness_set.sort_unstable();
    AffinityResult { value: search.best, witness_set }
}

struct Search<'a> {
    pair: &'a DiscreteModelPair,
    order: &'a [usize],
    best: f64,
    best_set: Vec<usize>,
    current: Vec<usize>,
}

impl Search<'_> {
    fn offer(&mut self, value: f64, members: &[usize]) {
        if value < self.best {
            self.best = value;
            self.best_set = members.to_vec();
        }
    }

    fn seed_with_level_sets(&mut self, free_q: f64) {
        let order = self.order;
        let (mut p, mut q) = (0.0f64, free_q);
        self.offer(p.max(1.0 - q), &[]);
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && compare_ratio(self.pair, order[start], order[end]) == Ordering::Equal {
                end += 1;
            }
            for &i in &order[start..end] {
                p += self.pair.p[i];
                q += self.pair.q[i];
            }
            self.offer(p.max(1.0 - q), &order[..end]);
            start = end;
        }
    }

    fn descend(&mut self, depth: usize, p: f64, q: f64) {
        let here = p.max(1.0 - q);
        if here < self.best {
            let members = self.current.clone();
            self.offer(here, &members);
        }
        if depth == self.order.len() {
            return;
        }
        if frontier_bound(self.pair, self.order, depth, p, q) >= self.best {
            return;
        }
        let i = self.order[depth];
        self.current.push(i);
        self.descend(depth + 1, p + self.pair.p[i], q + self.pair.q[i]);
        self.current.pop();
        self.descend(depth + 1, p, q);
    }
}
