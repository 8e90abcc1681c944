//! Brute-force optimal adaptive policies.
//!
//! A state records, per element, whether it is unprobed, probed inactive or
//! probed active, so `(Q, S)` is encoded as a base-3 number and memoized in a
//! flat table of `3^n` entries.

use crate::constraint::ConstraintSystem;
use crate::error::{ProbingError, Result};
use crate::instance::ProbingInstance;
use crate::set::{ElementId, ElementSet};

/// Universe cap of the general oracle.
pub const OPT_CAP: usize = 12;

/// Universe cap of the deadline-aware oracle.
pub const OPT_DEADLINE_CAP: usize = 10;

/// Candidate cap of the all-deterministic branch and bound.
pub const DETERMINISTIC_CAP: usize = 64;

struct Dp<'a> {
    instance: &'a ProbingInstance,
    deadlines: Option<Vec<u32>>,
    pow3: Vec<usize>,
    memo: Vec<f64>,
}

impl Dp<'_> {
    fn allowed(&self, q: ElementSet, s: ElementSet, e: ElementId) -> bool {
        if let Some(d) = &self.deadlines {
            // the clock reads |Q| + 1 before the next probe
            if q.len() as u32 + 1 > d[e] {
                return false;
            }
        }
        self.instance.can_probe(q, s, e)
    }

    fn value(&mut self, code: usize, q: ElementSet, s: ElementSet) -> f64 {
        let cached = self.memo[code];
        if !cached.is_nan() {
            return cached;
        }
        let mut best = 0.0f64;
        for e in 0..self.instance.len() {
            if q.contains(e) || !self.allowed(q, s, e) {
                continue;
            }
            let p = self.instance.p(e);
            let mut v = 0.0;
            if p > 0.0 {
                let hit = self.value(code + 2 * self.pow3[e], q.with(e), s.with(e));
                v += p * (self.instance.weight(e) + hit);
            }
            if p < 1.0 {
                v += (1.0 - p) * self.value(code + self.pow3[e], q.with(e), s);
            }
            best = best.max(v);
        }
        self.memo[code] = best;
        best
    }
}

fn solve(instance: &ProbingInstance, deadlines: Option<Vec<u32>>) -> f64 {
    let n = instance.len();
    let pow3: Vec<usize> = (0..n).map(|e| 3usize.pow(e as u32)).collect();
    let mut dp = Dp {
        instance,
        deadlines,
        pow3,
        memo: vec![f64::NAN; 3usize.pow(n as u32)],
    };
    dp.value(0, ElementSet::empty(), ElementSet::empty())
}

fn is_deterministic(instance: &ProbingInstance) -> bool {
    instance
        .elements
        .iter()
        .all(|el| el.p == 0.0 || el.p == 1.0)
}

/// Expected value of the optimal adaptive policy.
///
/// Instances whose probabilities are all 0 or 1 have no uncertainty, so the
/// optimum is a maximum-weight set independent in both systems; that case is
/// solved by branch and bound beyond the general cap.
pub fn optimal_adaptive(instance: &ProbingInstance) -> Result<f64> {
    if is_deterministic(instance) && instance.len() > OPT_CAP {
        return max_weight_common_independent(instance);
    }
    if instance.len() > OPT_CAP {
        return Err(ProbingError::capability(format!(
            "optimal adaptive policy over {} elements exceeds {OPT_CAP}",
            instance.len()
        )));
    }
    Ok(solve(instance, None))
}

/// Optimal adaptive value when element `e` may only be probed at time
/// `t <= d_e`, with the clock advancing on every probe.
pub fn optimal_adaptive_deadline(instance: &ProbingInstance) -> Result<f64> {
    let deadlines = instance.deadlines()?;
    if instance.len() > OPT_DEADLINE_CAP {
        return Err(ProbingError::capability(format!(
            "deadline oracle over {} elements exceeds {OPT_DEADLINE_CAP}",
            instance.len()
        )));
    }
    Ok(solve(instance, Some(deadlines)))
}

/// Upper bound on how many more elements of `rest` fit next to `chosen`,
/// from the rank of each member matroid.
fn room(systems: &[&ConstraintSystem], chosen: ElementSet, rest: ElementSet) -> Result<usize> {
    let mut room = rest.len();
    for sys in systems {
        if sys.is_matroid() {
            room = room.min(sys.rank(&chosen.union(&rest))? - chosen.len());
        }
    }
    Ok(room)
}

/// Maximum weight of a set of active elements independent in both systems.
fn max_weight_common_independent(instance: &ProbingInstance) -> Result<f64> {
    let mut candidates: Vec<ElementId> = (0..instance.len())
        .filter(|&e| instance.p(e) == 1.0 && instance.weight(e) > 0.0)
        .collect();
    if candidates.len() > DETERMINISTIC_CAP {
        return Err(ProbingError::capability(format!(
            "{} deterministic candidates exceed {DETERMINISTIC_CAP}",
            candidates.len()
        )));
    }
    candidates.sort_by(|&a, &b| {
        instance
            .weight(b)
            .total_cmp(&instance.weight(a))
            .then(a.cmp(&b))
    });
    let mut systems = instance.inner.factors();
    systems.extend(instance.outer.factors());
    let mut best = 0.0;
    branch(
        instance,
        &systems,
        &candidates,
        0,
        ElementSet::empty(),
        0.0,
        &mut best,
    )?;
    Ok(best)
}

fn branch(
    instance: &ProbingInstance,
    systems: &[&ConstraintSystem],
    candidates: &[ElementId],
    at: usize,
    chosen: ElementSet,
    value: f64,
    best: &mut f64,
) -> Result<()> {
    if value > *best {
        *best = value;
    }
    if at == candidates.len() {
        return Ok(());
    }
    let rest: ElementSet = candidates[at..].iter().collect();
    let fit = room(systems, chosen, rest)?;
    // candidates are sorted by weight, so the heaviest `fit` bound the gain
    let bound: f64 = candidates[at..]
        .iter()
        .take(fit)
        .map(|&e| instance.weight(e))
        .sum();
    if value + bound <= *best + 1e-12 {
        return Ok(());
    }
    let e = candidates[at];
    let with = chosen.with(e);
    if instance.inner.independent(with) && instance.outer.independent(with) {
        branch(
            instance,
            systems,
            candidates,
            at + 1,
            with,
            value + instance.weight(e),
            best,
        )?;
    }
    branch(instance, systems, candidates, at + 1, chosen, value, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::CapacitySet;
    use crate::eval::exact_greedy_value;
    use crate::instance::Element;

    fn free(elements: Vec<Element>) -> ProbingInstance {
        let n = elements.len();
        ProbingInstance::new(
            elements,
            ConstraintSystem::free(n).unwrap(),
            ConstraintSystem::free(n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_element() {
        let inst = free(vec![Element::new(1.0, 0.5)]);
        assert_eq!(optimal_adaptive(&inst).unwrap(), 0.5);
    }

    #[test]
    fn greedy_is_optimal_on_two_element_fixture() {
        let inst = ProbingInstance::new(
            vec![Element::new(1.0, 0.9), Element::new(1.0, 0.5)],
            ConstraintSystem::uniform(2, 1).unwrap(),
            ConstraintSystem::uniform(2, 2).unwrap(),
        )
        .unwrap();
        let opt = optimal_adaptive(&inst).unwrap();
        assert!((opt - 0.95).abs() < 1e-12);
        assert!(opt >= exact_greedy_value(&inst).unwrap() - 1e-12);
    }

    /// A probe budget of one with a heavy unlikely element and a light sure one.
    #[test]
    fn adaptive_choice_under_outer_budget() {
        let inst = ProbingInstance::new(
            vec![Element::new(10.0, 0.2), Element::new(1.0, 1.0)],
            ConstraintSystem::free(2).unwrap(),
            ConstraintSystem::uniform(2, 1).unwrap(),
        )
        .unwrap();
        assert!((optimal_adaptive(&inst).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deadline_oracle_respects_clock() {
        let inst = free(vec![
            Element::new(1.0, 1.0).with_deadline(1),
            Element::new(1.0, 1.0).with_deadline(1),
            Element::new(1.0, 0.5).with_deadline(2),
        ]);
        // one of the deadline-1 elements at t = 1, then the third at t = 2
        assert!((optimal_adaptive_deadline(&inst).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn oversized_universe_is_a_capability_error() {
        let inst = free(vec![Element::new(1.0, 0.5); OPT_CAP + 1]);
        assert!(matches!(
            optimal_adaptive(&inst),
            Err(ProbingError::Capability(_))
        ));
    }

    #[test]
    fn deterministic_branch_and_bound_matches_dp() {
        let parts = |groups: &[&[usize]]| {
            ConstraintSystem::partition(
                6,
                groups
                    .iter()
                    .map(|g| CapacitySet::new(g.iter().copied(), 1))
                    .collect(),
            )
            .unwrap()
        };
        let inner = ConstraintSystem::intersection(vec![
            parts(&[&[0, 1], &[2, 3], &[4, 5]]),
            parts(&[&[0, 2], &[1, 4], &[3, 5]]),
        ])
        .unwrap();
        let outer = parts(&[&[0, 5], &[1, 2], &[3, 4]]);
        let weights = [3.0, 1.0, 2.0, 5.0, 4.0, 1.5];
        let inst = ProbingInstance::new(
            weights.iter().map(|&w| Element::new(w, 1.0)).collect(),
            inner,
            outer,
        )
        .unwrap();
        let dp = solve(&inst, None);
        let bb = max_weight_common_independent(&inst).unwrap();
        assert!((dp - bb).abs() < 1e-12, "{dp} vs {bb}");
    }
}
