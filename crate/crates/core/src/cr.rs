//! Monotone contention-resolution schemes.
//!
//! A scheme receives a random set `I` containing each element independently
//! with probability `b·z_e` and prunes it to an independent set. Two families
//! are provided: greedy pruning along an order, valid for any k-system, and
//! one-per-part choice rules for partition matroids with unit capacities.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraint::{ConstraintSystem, SystemKind};
use crate::error::{ProbingError, Result};
use crate::rng::{trial_rng, MeanEstimate};
use crate::set::{ElementId, ElementSet};

/// Support size up to which retention is computed by enumerating every `I`.
pub const EXACT_RETENTION_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderPolicy {
    ByWeightDesc,
    ByIndex,
    /// A fresh uniformly random permutation for every resolution.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionRule {
    /// Keep a uniformly random sampled member of each part.
    RandomChoice,
    /// Keep a sampled member with probability tilted by the marginals of the
    /// absent members, which equalizes retention across the part.
    Balanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CrKind {
    OrderedKSystem { order: OrderPolicy },
    Partition { rule: PartitionRule },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrSchemeSpec {
    pub kind: CrKind,
    pub b: f64,
    pub target_c: f64,
}

/// `(1 − e^{−b}) / b`, the retention target of the partition rules.
pub fn partition_target(b: f64) -> f64 {
    if b == 0.0 {
        1.0
    } else {
        -(-b).exp_m1() / b
    }
}

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(ProbingError::config(format!("b = {b} must lie in (0, 1]")));
    }
    Ok(())
}

impl CrSchemeSpec {
    /// Ordered scheme with target `1 − k·b` on a k-system (`1` on a free system).
    pub fn ordered(system: &ConstraintSystem, order: OrderPolicy, b: f64) -> Result<Self> {
        check_b(b)?;
        let target_c = if system.is_free() {
            1.0
        } else {
            let k = system.k_parameter()? as f64;
            if k * b >= 1.0 {
                return Err(ProbingError::config(format!(
                    "ordered scheme on a {k}-system needs b < 1/{k}, got {b}"
                )));
            }
            1.0 - k * b
        };
        Ok(CrSchemeSpec {
            kind: CrKind::OrderedKSystem { order },
            b,
            target_c,
        })
    }

    pub fn partition(rule: PartitionRule, b: f64) -> Result<Self> {
        check_b(b)?;
        Ok(CrSchemeSpec {
            kind: CrKind::Partition { rule },
            b,
            target_c: partition_target(b),
        })
    }

    pub fn is_ordered(&self) -> bool {
        matches!(self.kind, CrKind::OrderedKSystem { .. })
    }
}

/// Greedy pruning: scan `order`, keep `e ∈ i` when the kept set stays independent.
pub fn resolve_ordered(
    system: &ConstraintSystem,
    order: &[ElementId],
    i: ElementSet,
) -> ElementSet {
    let mut kept = ElementSet::empty();
    for &e in order {
        if i.contains(e) && system.independent(kept.with(e)) {
            kept.insert(e);
        }
    }
    debug_assert!(system.independent(kept));
    kept
}

/// Unit-capacity parts of a partition-like system.
fn unit_parts(system: &ConstraintSystem) -> Result<Vec<ElementSet>> {
    match system.kind() {
        SystemKind::Partition { parts } => parts
            .iter()
            .map(|p| {
                if p.capacity == 1 {
                    Ok(p.members)
                } else {
                    Err(ProbingError::capability(format!(
                        "partition rule needs unit capacities, part {:?} has {}",
                        p.members, p.capacity
                    )))
                }
            })
            .collect(),
        SystemKind::Uniform { rank: 1 } => Ok(vec![system.ground_set()]),
        _ => Err(ProbingError::capability(
            "partition rules apply to unit-capacity partition matroids; use an ordered scheme",
        )),
    }
}

/// Probability that the rule keeps `e` out of `a = I ∩ part`, given the
/// sampling probabilities of the part's members.
fn rule_keep_probability(
    rule: PartitionRule,
    part: ElementSet,
    a: ElementSet,
    e: ElementId,
    sampling: &[f64],
) -> f64 {
    if !a.contains(e) {
        return 0.0;
    }
    let size = a.len() as f64;
    if a.len() == 1 {
        return 1.0;
    }
    match rule {
        PartitionRule::RandomChoice => 1.0 / size,
        PartitionRule::Balanced => {
            let total: f64 = part.iter().map(|j| sampling[j]).sum();
            if total <= 0.0 {
                return 1.0 / size;
            }
            let inside: f64 = a.iter().filter(|&j| j != e).map(|j| sampling[j]).sum();
            let outside: f64 = part.difference(&a).iter().map(|j| sampling[j]).sum();
            (inside / (size - 1.0) + outside / size) / total
        }
    }
}

/// One-per-part resolution: each part keeps at most one sampled member, chosen
/// by `rule`; elements outside every part are always kept.
pub fn resolve_partition<R: Rng + ?Sized>(
    system: &ConstraintSystem,
    rule: PartitionRule,
    sampling: &[f64],
    i: ElementSet,
    rng: &mut R,
) -> Result<ElementSet> {
    let parts = unit_parts(system)?;
    Ok(resolve_parts(&parts, rule, sampling, i, rng))
}

fn resolve_parts<R: Rng + ?Sized>(
    parts: &[ElementSet],
    rule: PartitionRule,
    sampling: &[f64],
    i: ElementSet,
    rng: &mut R,
) -> ElementSet {
    let mut kept = i;
    for &part in parts {
        let a = i.intersection(&part);
        if a.len() <= 1 {
            continue;
        }
        kept = kept.difference(&a);
        let members = a.to_vec();
        let chosen = match rule {
            PartitionRule::RandomChoice => members[rng.gen_range(0..members.len())],
            PartitionRule::Balanced => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = *members.last().expect("part has members");
                for &e in &members {
                    acc += rule_keep_probability(rule, part, a, e, sampling);
                    if u < acc {
                        pick = e;
                        break;
                    }
                }
                pick
            }
        };
        kept.insert(chosen);
    }
    kept
}

/// A scheme bound to a system and the sampling probabilities `b·z`.
#[derive(Clone, Debug)]
pub struct CrScheme<'a> {
    pub spec: CrSchemeSpec,
    system: &'a ConstraintSystem,
    sampling: Vec<f64>,
    order: Vec<ElementId>,
    parts: Vec<ElementSet>,
}

impl<'a> CrScheme<'a> {
    /// `z` is the fractional point; `weights` drive the weight-descending order.
    pub fn new(
        spec: CrSchemeSpec,
        system: &'a ConstraintSystem,
        z: &[f64],
        weights: &[f64],
    ) -> Result<Self> {
        let n = system.universe();
        if z.len() != n || weights.len() != n {
            return Err(ProbingError::domain(format!(
                "scheme over {n} elements given {} marginals and {} weights",
                z.len(),
                weights.len()
            )));
        }
        let sampling: Vec<f64> = z.iter().map(|z| (spec.b * z).clamp(0.0, 1.0)).collect();
        let mut order: Vec<ElementId> = (0..n).collect();
        let mut parts = Vec::new();
        match spec.kind {
            CrKind::OrderedKSystem { order: policy } => {
                if policy == OrderPolicy::ByWeightDesc {
                    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
                }
            }
            CrKind::Partition { .. } => parts = unit_parts(system)?,
        }
        Ok(CrScheme {
            spec,
            system,
            sampling,
            order,
            parts,
        })
    }

    pub fn system(&self) -> &ConstraintSystem {
        self.system
    }

    /// Per-element probability of entering `I`.
    pub fn sampling(&self) -> &[f64] {
        &self.sampling
    }

    /// The fixed scan order (unused by partition rules and random orders).
    pub fn order(&self) -> &[ElementId] {
        &self.order
    }

    /// Draws `I`, skipping elements that cannot be sampled.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ElementSet {
        let mut i = ElementSet::empty();
        for (e, &q) in self.sampling.iter().enumerate() {
            if q > 0.0 && rng.gen::<f64>() < q {
                i.insert(e);
            }
        }
        i
    }

    /// An order for one resolution: the fixed order, or a fresh shuffle.
    pub fn draw_order<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ElementId> {
        let mut order = self.order.clone();
        if self.spec.kind
            == (CrKind::OrderedKSystem {
                order: OrderPolicy::Random,
            })
        {
            order.shuffle(rng);
        }
        order
    }

    pub fn resolve<R: Rng + ?Sized>(&self, i: ElementSet, rng: &mut R) -> ElementSet {
        let kept = match self.spec.kind {
            CrKind::OrderedKSystem { .. } => resolve_ordered(self.system, &self.draw_order(rng), i),
            CrKind::Partition { rule } => resolve_parts(&self.parts, rule, &self.sampling, i, rng),
        };
        debug_assert!(kept.is_subset(&i) && self.system.independent(kept));
        kept
    }

    /// Exact `Pr[e ∈ π(I)]` for a fixed `I`; `None` for random orders.
    pub fn keep_probability(&self, i: ElementSet, e: ElementId) -> Option<f64> {
        if !i.contains(e) {
            return Some(0.0);
        }
        match self.spec.kind {
            CrKind::OrderedKSystem {
                order: OrderPolicy::Random,
            } => None,
            CrKind::OrderedKSystem { .. } => Some(f64::from(u8::from(
                resolve_ordered(self.system, &self.order, i).contains(e),
            ))),
            CrKind::Partition { rule } => Some(
                self.parts
                    .iter()
                    .find(|p| p.contains(e))
                    .map_or(1.0, |&part| {
                        rule_keep_probability(rule, part, i.intersection(&part), e, &self.sampling)
                    }),
            ),
        }
    }

    /// Every resolution of `I` with its probability; `None` for random orders.
    pub fn outcomes(&self, i: ElementSet) -> Option<Vec<(ElementSet, f64)>> {
        match self.spec.kind {
            CrKind::OrderedKSystem {
                order: OrderPolicy::Random,
            } => None,
            CrKind::OrderedKSystem { .. } => {
                Some(vec![(resolve_ordered(self.system, &self.order, i), 1.0)])
            }
            CrKind::Partition { rule } => {
                let mut out = vec![(i, 1.0)];
                for &part in &self.parts {
                    let a = i.intersection(&part);
                    if a.len() <= 1 {
                        continue;
                    }
                    let mut next = Vec::with_capacity(out.len() * a.len());
                    for (kept, prob) in &out {
                        let base = kept.difference(&a);
                        for e in a.iter() {
                            let q = rule_keep_probability(rule, part, a, e, &self.sampling);
                            if q > 0.0 {
                                next.push((base.with(e), prob * q));
                            }
                        }
                    }
                    out = next;
                }
                Some(out)
            }
        }
    }

    /// Exact `Pr[e ∈ π(I) | e ∈ I]` for every element by enumerating `I` over
    /// the sampling support; `1` for elements that are never sampled.
    pub fn exact_retention(&self) -> Result<Vec<f64>> {
        let n = self.sampling.len();
        let support: ElementSet = (0..n).filter(|&e| self.sampling[e] > 0.0).collect();
        if support.len() > EXACT_RETENTION_CAP {
            return Err(ProbingError::capability(format!(
                "exact retention over {} sampled elements exceeds {EXACT_RETENTION_CAP}",
                support.len()
            )));
        }
        if matches!(
            self.spec.kind,
            CrKind::OrderedKSystem {
                order: OrderPolicy::Random
            }
        ) {
            return Err(ProbingError::capability(
                "exact retention of a random-order scheme is not enumerated",
            ));
        }
        let mut kept = vec![0.0; n];
        for i in support.subsets() {
            let prob = set_probability(&self.sampling, support, i);
            if prob == 0.0 {
                continue;
            }
            for e in i.iter() {
                kept[e] += prob * self.keep_probability(i, e).expect("non-random scheme");
            }
        }
        Ok((0..n)
            .map(|e| {
                if self.sampling[e] > 0.0 {
                    kept[e] / self.sampling[e]
                } else {
                    1.0
                }
            })
            .collect())
    }
}

/// `Pr[I = i]` when each `e ∈ support` is included independently with `q[e]`.
pub fn set_probability(q: &[f64], support: ElementSet, i: ElementSet) -> f64 {
    support
        .iter()
        .map(|e| if i.contains(e) { q[e] } else { 1.0 - q[e] })
        .product()
}

/// Closed-form retention of the uniform choice rule:
/// `E[1 / (1 + X)]` with `X` the number of other sampled members.
pub fn random_choice_retention(others: &[f64]) -> f64 {
    // distribution of X by dynamic programming
    let mut dist = vec![1.0];
    for &q in others {
        let mut next = vec![0.0; dist.len() + 1];
        for (k, &mass) in dist.iter().enumerate() {
            next[k] += mass * (1.0 - q);
            next[k + 1] += mass * q;
        }
        dist = next;
    }
    dist.iter()
        .enumerate()
        .map(|(k, mass)| mass / (k as f64 + 1.0))
        .sum()
}

/// Closed-form retention of the balanced rule, identical for every member:
/// `(1 − Π(1 − q_j)) / Σ q_j` over the whole part.
pub fn balanced_retention(part: &[f64]) -> f64 {
    let total: f64 = part.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    (1.0 - part.iter().map(|q| 1.0 - q).product::<f64>()) / total
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RetentionEstimate {
    pub element: ElementId,
    pub sampled: usize,
    pub kept: usize,
    pub c_hat: f64,
    pub std_error: f64,
    /// 99% normal-approximation half-width.
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeVerification {
    pub spec: CrSchemeSpec,
    pub trials: usize,
    pub per_element: Vec<RetentionEstimate>,
    /// Every estimate is at least `target_c − 3·std_error`.
    pub passed: bool,
}

impl SchemeVerification {
    /// Smallest `c_hat − (target − 3σ)` over elements that were sampled.
    pub fn worst_margin(&self) -> f64 {
        self.per_element
            .iter()
            .filter(|r| r.sampled > 0)
            .map(|r| r.c_hat - (self.spec.target_c - 3.0 * r.std_error))
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_point(system: &ConstraintSystem, z: &[f64]) -> Result<()> {
    if z.len() != system.universe() {
        return Err(ProbingError::domain(format!(
            "point has {} coordinates, system has {} elements",
            z.len(),
            system.universe()
        )));
    }
    if let Some(w) = system.separate(z)? {
        return Err(ProbingError::domain(format!(
            "point violates rank constraint on {:?}: {} > {}",
            w.members, w.value, w.rank
        )));
    }
    Ok(())
}

/// Estimates `Pr[e ∈ π(I) | e ∈ I]` per element over `trials` independent draws.
pub fn verify_scheme(
    spec: CrSchemeSpec,
    system: &ConstraintSystem,
    z: &[f64],
    weights: &[f64],
    trials: usize,
    seed: u64,
) -> Result<SchemeVerification> {
    if trials == 0 {
        return Err(ProbingError::config("trials must be at least 1"));
    }
    check_point(system, z)?;
    let scheme = CrScheme::new(spec, system, z, weights)?;
    let draws: Vec<(ElementSet, ElementSet)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let i = scheme.sample(&mut rng);
            (i, scheme.resolve(i, &mut rng))
        })
        .collect();
    let n = system.universe();
    let mut sampled = vec![0usize; n];
    let mut kept = vec![0usize; n];
    for (i, k) in &draws {
        for e in i.iter() {
            sampled[e] += 1;
        }
        for e in k.iter() {
            kept[e] += 1;
        }
    }
    let per_element: Vec<RetentionEstimate> = (0..n)
        .map(|e| {
            let est = if sampled[e] == 0 {
                MeanEstimate {
                    mean: 1.0,
                    std_error: 0.0,
                    samples: 0,
                }
            } else {
                MeanEstimate::proportion(kept[e], sampled[e])
            };
            RetentionEstimate {
                element: e,
                sampled: sampled[e],
                kept: kept[e],
                c_hat: est.mean,
                std_error: est.std_error,
                radius: est.radius(),
            }
        })
        .collect();
    let passed = per_element
        .iter()
        .all(|r| r.sampled == 0 || r.c_hat >= spec.target_c - 3.0 * r.std_error);
    Ok(SchemeVerification {
        spec,
        trials,
        per_element,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityCheck {
    /// `Pr[e ∈ π(I_1)]`.
    pub p_small: f64,
    /// `Pr[e ∈ π(I_2)]`.
    pub p_large: f64,
    pub exact: bool,
    /// Allowed shortfall (zero when exact).
    pub slack: f64,
    pub holds: bool,
}

/// Compares `Pr[e ∈ π(I_1)]` with `Pr[e ∈ π(I_2)]` for `e ∈ I_1 ⊆ I_2`; exact
/// unless the scheme draws a random order, in which case Monte Carlo with a
/// one-sided slack of three radii.
#[allow(clippy::too_many_arguments)]
pub fn verify_monotonicity(
    spec: CrSchemeSpec,
    system: &ConstraintSystem,
    z: &[f64],
    weights: &[f64],
    small: ElementSet,
    large: ElementSet,
    e: ElementId,
    trials: usize,
    seed: u64,
) -> Result<MonotonicityCheck> {
    if !small.contains(e) || !small.is_subset(&large) {
        return Err(ProbingError::contract("need e ∈ I1 ⊆ I2"));
    }
    let scheme = CrScheme::new(spec, system, z, weights)?;
    if let (Some(p_small), Some(p_large)) = (
        scheme.keep_probability(small, e),
        scheme.keep_probability(large, e),
    ) {
        return Ok(MonotonicityCheck {
            p_small,
            p_large,
            exact: true,
            slack: 0.0,
            holds: p_small >= p_large - 1e-12,
        });
    }
    if trials == 0 {
        return Err(ProbingError::config("trials must be at least 1"));
    }
    let hits: Vec<(bool, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let a = scheme.resolve(small, &mut rng).contains(e);
            let b = scheme.resolve(large, &mut rng).contains(e);
            (a, b)
        })
        .collect();
    let small_est = MeanEstimate::proportion(hits.iter().filter(|h| h.0).count(), trials);
    let large_est = MeanEstimate::proportion(hits.iter().filter(|h| h.1).count(), trials);
    let slack = 3.0 * (small_est.radius().powi(2) + large_est.radius().powi(2)).sqrt();
    Ok(MonotonicityCheck {
        p_small: small_est.mean,
        p_large: large_est.mean,
        exact: false,
        slack,
        holds: small_est.mean >= large_est.mean - slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::CapacitySet;
    use crate::rng::trial_rng;

    fn set(items: &[usize]) -> ElementSet {
        items.iter().copied().collect()
    }

    fn triangle() -> ConstraintSystem {
        ConstraintSystem::graphic(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn one_part(n: usize) -> ConstraintSystem {
        ConstraintSystem::partition(n, vec![CapacitySet::new(0..n, 1)]).unwrap()
    }

    #[test]
    fn ordered_examples() {
        let u1 = ConstraintSystem::uniform(2, 1).unwrap();
        assert_eq!(
            resolve_ordered(&u1, &[0, 1], ElementSet::empty()),
            ElementSet::empty()
        );
        assert_eq!(resolve_ordered(&u1, &[0, 1], set(&[0, 1])), set(&[0]));
        assert_eq!(
            resolve_ordered(&triangle(), &[0, 1, 2], set(&[0, 1, 2])),
            set(&[0, 1])
        );
    }

    #[test]
    fn partition_examples() {
        let sys = ConstraintSystem::partition(3, vec![CapacitySet::new([0, 1], 1)]).unwrap();
        let q = [0.5, 0.5, 0.5];
        let mut rng = trial_rng(1, 0);
        for rule in [PartitionRule::RandomChoice, PartitionRule::Balanced] {
            let kept = resolve_partition(&sys, rule, &q, set(&[0, 2]), &mut rng).unwrap();
            assert_eq!(kept, set(&[0, 2]));
        }
        let spec = CrSchemeSpec::partition(PartitionRule::RandomChoice, 0.5).unwrap();
        let scheme = CrScheme::new(spec, &sys, &[1.0, 1.0, 1.0], &[1.0; 3]).unwrap();
        assert_eq!(scheme.keep_probability(set(&[0, 1]), 0), Some(0.5));
        let outcomes = scheme.outcomes(set(&[0, 1, 2])).unwrap();
        assert_eq!(outcomes.len(), 2);
        assert!(outcomes.iter().all(|(k, p)| k.len() == 2 && *p == 0.5));
    }

    #[test]
    fn non_unit_capacity_is_a_capability_error() {
        let sys = ConstraintSystem::partition(2, vec![CapacitySet::new([0, 1], 2)]).unwrap();
        let err = resolve_partition(
            &sys,
            PartitionRule::RandomChoice,
            &[0.5; 2],
            set(&[0]),
            &mut trial_rng(0, 0),
        );
        assert!(matches!(err, Err(ProbingError::Capability(_))));
    }

    #[test]
    fn random_choice_closed_form_matches_enumeration() {
        // z(part) = 1 spread over six equal members, b = 1/3
        let b = 1.0 / 3.0;
        let n = 6;
        let sys = one_part(n);
        let z = vec![1.0 / n as f64; n];
        let spec = CrSchemeSpec::partition(PartitionRule::RandomChoice, b).unwrap();
        let scheme = CrScheme::new(spec, &sys, &z, &vec![1.0; n]).unwrap();
        let exact = scheme.exact_retention().unwrap();
        let closed = random_choice_retention(&vec![b / n as f64; n - 1]);
        for c in &exact {
            assert!((c - closed).abs() < 1e-12);
        }
        assert!(closed >= partition_target(b));
        assert!((partition_target(b) - 0.850_4).abs() < 1e-4);
    }

    #[test]
    fn balanced_closed_form_matches_enumeration() {
        let sys = one_part(4);
        let z = [0.5, 0.3, 0.15, 0.05];
        let b = 0.8;
        let spec = CrSchemeSpec::partition(PartitionRule::Balanced, b).unwrap();
        let scheme = CrScheme::new(spec, &sys, &z, &[1.0; 4]).unwrap();
        let exact = scheme.exact_retention().unwrap();
        let closed = balanced_retention(&z.map(|z| b * z));
        for c in &exact {
            assert!((c - closed).abs() < 1e-12, "{c} vs {closed}");
        }
        assert!(closed >= partition_target(b));
    }

    /// Uniform choice falls below `(1 − e^{−b})/b` when a single competitor
    /// carries most of the part's mass; the balanced rule does not.
    #[test]
    fn random_choice_misses_target_on_concentrated_mass() {
        let b = 0.25;
        let z = [0.001, 0.999];
        let uniform = random_choice_retention(&[b * z[1]]);
        assert!(uniform < partition_target(b));
        let balanced = balanced_retention(&z.map(|z| b * z));
        assert!(balanced >= partition_target(b));
    }

    #[test]
    fn verify_single_sampled_element_keeps_everything() {
        let sys = ConstraintSystem::uniform(3, 1).unwrap();
        let spec = CrSchemeSpec::ordered(&sys, OrderPolicy::ByIndex, 0.5).unwrap();
        let report = verify_scheme(spec, &sys, &[0.0, 1.0, 0.0], &[1.0; 3], 2_000, 3).unwrap();
        assert_eq!(report.per_element[1].c_hat, 1.0);
        assert!(report.passed);
    }

    #[test]
    fn verify_rejects_infeasible_point() {
        let sys = ConstraintSystem::uniform(2, 1).unwrap();
        let spec = CrSchemeSpec::ordered(&sys, OrderPolicy::ByIndex, 0.25).unwrap();
        assert!(matches!(
            verify_scheme(spec, &sys, &[0.6, 0.6], &[1.0; 2], 10, 0),
            Err(ProbingError::Domain(_))
        ));
    }

    #[test]
    fn ordered_matroid_meets_one_minus_b() {
        let sys = triangle();
        let z = [2.0 / 3.0; 3];
        let spec = CrSchemeSpec::ordered(&sys, OrderPolicy::ByIndex, 0.25).unwrap();
        assert_eq!(spec.target_c, 0.75);
        let report = verify_scheme(spec, &sys, &z, &[1.0; 3], 20_000, 9).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn ordered_needs_b_below_one_over_k() {
        let sys = ConstraintSystem::intersection(vec![one_part(2), one_part(2)]).unwrap();
        assert!(CrSchemeSpec::ordered(&sys, OrderPolicy::ByIndex, 0.5).is_err());
        assert!(CrSchemeSpec::ordered(&sys, OrderPolicy::ByIndex, 0.4).is_ok());
    }

    #[test]
    fn monotonicity_examples() {
        let sys = ConstraintSystem::partition(3, vec![CapacitySet::new([0, 1], 1)]).unwrap();
        let z = [0.5, 0.5, 1.0];
        for rule in [PartitionRule::RandomChoice, PartitionRule::Balanced] {
            let spec = CrSchemeSpec::partition(rule, 0.5).unwrap();
            let same =
                verify_monotonicity(spec, &sys, &z, &[1.0; 3], set(&[0]), set(&[0]), 0, 0, 0)
                    .unwrap();
            assert!(same.holds && same.p_small == same.p_large);
            let grown =
                verify_monotonicity(spec, &sys, &z, &[1.0; 3], set(&[0]), set(&[0, 1]), 0, 0, 0)
                    .unwrap();
            assert!(grown.exact && grown.holds);
            assert_eq!(grown.p_small, 1.0);
            assert_eq!(grown.p_large, 0.5);
        }
        let tri = triangle();
        let spec = CrSchemeSpec::ordered(&tri, OrderPolicy::Random, 0.3).unwrap();
        let check = verify_monotonicity(
            spec,
            &tri,
            &[0.5; 3],
            &[1.0; 3],
            set(&[2]),
            set(&[0, 1, 2]),
            2,
            10_000,
            4,
        )
        .unwrap();
        assert!(!check.exact && check.holds);
    }

    #[test]
    fn balanced_rule_is_monotone_on_every_nested_pair() {
        let sys = one_part(4);
        let z = [0.4, 0.3, 0.2, 0.1];
        let spec = CrSchemeSpec::partition(PartitionRule::Balanced, 0.7).unwrap();
        let scheme = CrScheme::new(spec, &sys, &z, &[1.0; 4]).unwrap();
        for large in ElementSet::full(4).subsets() {
            for small in large.subsets() {
                for e in small.iter() {
                    let a = scheme.keep_probability(small, e).unwrap();
                    let b = scheme.keep_probability(large, e).unwrap();
                    assert!(a >= b - 1e-12, "{small:?} {large:?} {e}");
                }
            }
        }
    }
}
