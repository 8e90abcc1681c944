//! Policy evaluation: Monte Carlo simulation, exact expectations by outcome
//! enumeration, the brute-force optimal adaptive policy, and the adversarial
//! fixtures on which naive rounding orders fail.

pub mod appendix;
pub mod oracle;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ProbingError, Result};
use crate::greedy::{
    enumerate_order_paths, greedy_order, run_greedy_deadline, run_order, sample_activity,
};
use crate::instance::ProbingInstance;
use crate::rng::{trial_rng, MeanEstimate, TrialRng};
use crate::rounding::Rounder;
use crate::set::ElementId;

pub use appendix::{
    appendix_fixtures, load_appendix_fixtures, AppendixFixture, BaselineOrder, BaselinePolicy,
};
pub use oracle::{optimal_adaptive, optimal_adaptive_deadline, OPT_CAP, OPT_DEADLINE_CAP};

/// Universe cap for exact evaluation of a permutation policy.
pub const EXACT_CAP: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolicyValueReport {
    pub mean: f64,
    /// 99% half-width; zero for exact values.
    pub radius: f64,
    /// Standard error of the mean; zero for exact values.
    pub std_error: f64,
    /// Zero for exact values.
    pub trials: usize,
    pub method: Method,
}

impl PolicyValueReport {
    pub fn exact(mean: f64) -> Self {
        PolicyValueReport {
            mean,
            radius: 0.0,
            std_error: 0.0,
            trials: 0,
            method: Method::Exact,
        }
    }

    pub fn oracle(mean: f64) -> Self {
        PolicyValueReport {
            method: Method::Oracle,
            ..Self::exact(mean)
        }
    }

    pub fn from_estimate(est: MeanEstimate, method: Method) -> Self {
        PolicyValueReport {
            mean: est.mean,
            radius: est.radius(),
            std_error: est.std_error,
            trials: est.samples,
            method,
        }
    }
}

/// Anything that can be run once against fresh randomness.
pub trait Policy: Sync {
    /// Weight collected by one run.
    fn realize(&self, instance: &ProbingInstance, rng: &mut TrialRng) -> f64;
}

/// A fixed order probed whenever both constraints allow.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PermutationPolicy {
    pub order: Vec<ElementId>,
}

impl PermutationPolicy {
    pub fn greedy(instance: &ProbingInstance) -> Self {
        PermutationPolicy {
            order: greedy_order(instance),
        }
    }
}

impl Policy for PermutationPolicy {
    fn realize(&self, instance: &ProbingInstance, rng: &mut TrialRng) -> f64 {
        let active = sample_activity(instance, rng);
        instance.weight_of(&run_order(instance, &self.order, &active).chosen)
    }
}

/// The deadline greedy, scored by the picks made before their deadlines.
#[derive(Clone, Copy, Debug, Default)]
pub struct DeadlineGreedyPolicy;

impl Policy for DeadlineGreedyPolicy {
    fn realize(&self, instance: &ProbingInstance, rng: &mut TrialRng) -> f64 {
        let active = sample_activity(instance, rng);
        run_greedy_deadline(instance, &active)
            .map(|path| path.realized_value(instance))
            .unwrap_or(0.0)
    }
}

impl Policy for Rounder<'_> {
    fn realize(&self, instance: &ProbingInstance, rng: &mut TrialRng) -> f64 {
        instance.weight_of(&Rounder::realize(self, rng).chosen)
    }
}

/// Mean realized weight over `trials` runs, each on its own derived stream.
pub fn simulate<P: Policy + ?Sized>(
    policy: &P,
    instance: &ProbingInstance,
    trials: usize,
    seed: u64,
) -> Result<PolicyValueReport> {
    if trials == 0 {
        return Err(ProbingError::config("trials must be at least 1"));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| policy.realize(instance, &mut trial_rng(seed, t)))
        .collect();
    Ok(PolicyValueReport::from_estimate(
        MeanEstimate::from_values(&values),
        Method::MonteCarlo,
    ))
}

/// Exact expected chosen weight of a permutation policy.
pub fn exact_nonadaptive_value(order: &[ElementId], instance: &ProbingInstance) -> Result<f64> {
    if instance.len() > EXACT_CAP {
        return Err(ProbingError::capability(format!(
            "exact evaluation of {} elements exceeds {EXACT_CAP}",
            instance.len()
        )));
    }
    Ok(enumerate_order_paths(instance, order)
        .iter()
        .map(|path| path.probability * instance.weight_of(&path.chosen))
        .sum())
}

/// Exact expected value of the greedy policy.
pub fn exact_greedy_value(instance: &ProbingInstance) -> Result<f64> {
    exact_nonadaptive_value(&greedy_order(instance), instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::ConstraintSystem;
    use crate::instance::Element;

    fn two_element() -> ProbingInstance {
        ProbingInstance::new(
            vec![Element::new(1.0, 0.9), Element::new(1.0, 0.5)],
            ConstraintSystem::uniform(2, 1).unwrap(),
            ConstraintSystem::uniform(2, 2).unwrap(),
        )
        .unwrap()
    }

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
    fn exact_value_examples() {
        let empty = free(vec![]);
        assert_eq!(exact_nonadaptive_value(&[], &empty).unwrap(), 0.0);
        let one = free(vec![Element::new(10.0, 0.3)]);
        assert!((exact_nonadaptive_value(&[0], &one).unwrap() - 3.0).abs() < 1e-12);
        assert!((exact_greedy_value(&two_element()).unwrap() - 0.95).abs() < 1e-12);
    }

    #[test]
    fn deterministic_simulation_has_zero_variance() {
        let inst = free(vec![Element::new(2.0, 1.0), Element::new(3.0, 1.0)]);
        let report = simulate(&PermutationPolicy::greedy(&inst), &inst, 500, 1).unwrap();
        assert_eq!(report.mean, 5.0);
        assert_eq!(report.radius, 0.0);
    }

    #[test]
    fn bernoulli_simulation_is_within_radius() {
        let inst = free(vec![Element::new(2.0, 0.5)]);
        let report = simulate(&PermutationPolicy { order: vec![0] }, &inst, 20_000, 2).unwrap();
        assert!((report.mean - 1.0).abs() <= report.radius);
    }

    #[test]
    fn greedy_simulation_matches_exact() {
        let inst = two_element();
        let report = simulate(&PermutationPolicy::greedy(&inst), &inst, 50_000, 3).unwrap();
        assert!((report.mean - 0.95).abs() <= report.radius);
    }

    #[test]
    fn simulation_is_reproducible() {
        let inst = two_element();
        let policy = PermutationPolicy::greedy(&inst);
        let a = simulate(&policy, &inst, 1_000, 9).unwrap();
        let b = simulate(&policy, &inst, 1_000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_trials_is_rejected() {
        let inst = two_element();
        assert!(simulate(&PermutationPolicy::greedy(&inst), &inst, 0, 0).is_err());
    }
}
