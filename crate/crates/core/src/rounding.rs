//! Rounding a fractional solution into a non-adaptive probing policy.
//!
//! Sample `I` with probabilities `b·y`, prune it with the outer scheme to a
//! probe-feasible set `P`, order `P` by the inner scheme's permutation, then
//! probe along that order whenever the chosen set stays inner-independent.

use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cr::{CrKind, CrScheme, CrSchemeSpec, OrderPolicy, PartitionRule};
use crate::error::{ProbingError, Result};
use crate::eval::{Method, PolicyValueReport};
use crate::instance::ProbingInstance;
use crate::lp::FractionalSolution;
use crate::rng::{trial_rng, MeanEstimate};
use crate::set::{ElementId, ElementSet};

/// Support size up to which per-element marginals are enumerated exactly.
pub const EXACT_MARGINAL_CAP: usize = 16;

/// Scheme selector accepted on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SchemeChoice(pub CrKind);

impl FromStr for SchemeChoice {
    type Err = ProbingError;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "ordered-by-weight" => CrKind::OrderedKSystem {
                order: OrderPolicy::ByWeightDesc,
            },
            "ordered-by-index" => CrKind::OrderedKSystem {
                order: OrderPolicy::ByIndex,
            },
            "ordered-random" => CrKind::OrderedKSystem {
                order: OrderPolicy::Random,
            },
            "partition-random-choice" => CrKind::Partition {
                rule: PartitionRule::RandomChoice,
            },
            "partition-balanced" => CrKind::Partition {
                rule: PartitionRule::Balanced,
            },
            other => {
                return Err(ProbingError::config(format!(
                    "unknown scheme '{other}'; expected ordered-by-weight, ordered-by-index, \
                     ordered-random, partition-random-choice or partition-balanced"
                )))
            }
        };
        Ok(SchemeChoice(kind))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundingConfig {
    pub b: f64,
    pub outer: CrSchemeSpec,
    pub inner: CrSchemeSpec,
    pub seed: u64,
}

/// `1 / (2(k_in + k_out))`.
pub fn default_b(instance: &ProbingInstance) -> Result<f64> {
    let k = instance.inner.k_parameter()? + instance.outer.k_parameter()?;
    Ok(1.0 / (2.0 * k as f64))
}

fn spec_for(
    system: &crate::constraint::ConstraintSystem,
    kind: CrKind,
    b: f64,
) -> Result<CrSchemeSpec> {
    match kind {
        CrKind::OrderedKSystem { order } => CrSchemeSpec::ordered(system, order, b),
        CrKind::Partition { rule } => CrSchemeSpec::partition(rule, b),
    }
}

impl RoundingConfig {
    pub fn new(b: f64, outer: CrSchemeSpec, inner: CrSchemeSpec, seed: u64) -> Result<Self> {
        if !inner.is_ordered() {
            return Err(ProbingError::config(
                "the inner scheme must be an ordered scheme",
            ));
        }
        if outer.b != b || inner.b != b {
            return Err(ProbingError::config(format!(
                "scheme scalings ({}, {}) differ from b = {b}",
                outer.b, inner.b
            )));
        }
        let config = RoundingConfig {
            b,
            outer,
            inner,
            seed,
        };
        if config.guarantee() <= 0.0 {
            return Err(ProbingError::config(format!(
                "b·(c_out + c_in − 1) = {} is not positive",
                config.guarantee()
            )));
        }
        Ok(config)
    }

    /// Builds both scheme specs for `instance` from their kinds.
    pub fn for_instance(
        instance: &ProbingInstance,
        b: f64,
        outer: CrKind,
        inner: CrKind,
        seed: u64,
    ) -> Result<Self> {
        if !matches!(inner, CrKind::OrderedKSystem { .. }) {
            return Err(ProbingError::config(
                "the inner scheme must be an ordered scheme",
            ));
        }
        Self::new(
            b,
            spec_for(&instance.outer, outer, b)?,
            spec_for(&instance.inner, inner, b)?,
            seed,
        )
    }

    /// `b = 1/(2(k_in + k_out))`, ordered by index outside and by weight inside.
    pub fn default_for(instance: &ProbingInstance, seed: u64) -> Result<Self> {
        Self::for_instance(
            instance,
            default_b(instance)?,
            CrKind::OrderedKSystem {
                order: OrderPolicy::ByIndex,
            },
            CrKind::OrderedKSystem {
                order: OrderPolicy::ByWeightDesc,
            },
            seed,
        )
    }

    /// `b·(c_out + c_in − 1)`.
    pub fn guarantee(&self) -> f64 {
        self.b * (self.outer.target_c + self.inner.target_c - 1.0)
    }
}

/// The probe sequence of one rounding.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NonAdaptivePolicy {
    pub probe_sequence: Vec<ElementId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Execution {
    pub probed: Vec<ElementId>,
    pub chosen: ElementSet,
}

/// Both schemes bound to one instance and solution.
pub struct Rounder<'a> {
    instance: &'a ProbingInstance,
    config: RoundingConfig,
    outer: CrScheme<'a>,
    inner: CrScheme<'a>,
}

impl<'a> Rounder<'a> {
    pub fn new(
        instance: &'a ProbingInstance,
        solution: &FractionalSolution,
        config: RoundingConfig,
    ) -> Result<Self> {
        if !config.inner.is_ordered() {
            return Err(ProbingError::config(
                "the inner scheme must be an ordered scheme",
            ));
        }
        if solution.y.len() != instance.len() {
            return Err(ProbingError::domain(
                "solution length does not match instance",
            ));
        }
        let weights = instance.weights();
        Ok(Rounder {
            instance,
            config,
            outer: CrScheme::new(config.outer, &instance.outer, &solution.y, &weights)?,
            inner: CrScheme::new(config.inner, &instance.inner, &solution.x, &weights)?,
        })
    }

    pub fn config(&self) -> &RoundingConfig {
        &self.config
    }

    /// Steps 1-3: sample `I`, prune to `P = π_out(I)`, order `P` by `σ`.
    pub fn round<R: Rng + ?Sized>(&self, rng: &mut R) -> NonAdaptivePolicy {
        let i = self.outer.sample(rng);
        let p = self.outer.resolve(i, rng);
        debug_assert!(self.instance.outer.independent(p));
        let sigma = self.inner.draw_order(rng);
        NonAdaptivePolicy {
            probe_sequence: sigma.into_iter().filter(|&e| p.contains(e)).collect(),
        }
    }

    /// Rounds and executes once, drawing activity only for sequence elements.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Execution {
        let policy = self.round(rng);
        let mut active = vec![false; self.instance.len()];
        for &e in &policy.probe_sequence {
            active[e] = rng.gen::<f64>() < self.instance.p(e);
        }
        execute(&policy, self.instance, &active)
    }

    /// Exact `Pr[e ∈ S]` for every element by enumerating `I`, the outer
    /// resolution and the activity of every probe.
    pub fn exact_marginals(&self) -> Result<Vec<f64>> {
        let n = self.instance.len();
        let q = self.outer.sampling();
        let support: ElementSet = (0..n).filter(|&e| q[e] > 0.0).collect();
        if support.len() > EXACT_MARGINAL_CAP {
            return Err(ProbingError::capability(format!(
                "exact marginals over {} sampled elements exceed {EXACT_MARGINAL_CAP}",
                support.len()
            )));
        }
        let random_inner = matches!(
            self.config.inner.kind,
            CrKind::OrderedKSystem {
                order: OrderPolicy::Random
            }
        );
        if random_inner {
            return Err(ProbingError::capability(
                "exact marginals need a fixed inner order",
            ));
        }
        let mut marginal = vec![0.0; n];
        for i in support.subsets() {
            let prob_i = crate::cr::set_probability(q, support, i);
            if prob_i == 0.0 {
                continue;
            }
            let outcomes = self.outer.outcomes(i).ok_or_else(|| {
                ProbingError::capability("exact marginals need a non-random outer scheme")
            })?;
            for (p, prob_p) in outcomes {
                let sequence: Vec<ElementId> = self
                    .inner
                    .order()
                    .iter()
                    .copied()
                    .filter(|&e| p.contains(e))
                    .collect();
                self.accumulate(
                    &sequence,
                    0,
                    ElementSet::empty(),
                    prob_i * prob_p,
                    &mut marginal,
                );
            }
        }
        Ok(marginal)
    }

    fn accumulate(
        &self,
        sequence: &[ElementId],
        at: usize,
        chosen: ElementSet,
        prob: f64,
        marginal: &mut [f64],
    ) {
        let next = sequence[at..]
            .iter()
            .position(|&e| self.instance.inner.independent(chosen.with(e)))
            .map(|k| at + k);
        let Some(pos) = next else { return };
        let e = sequence[pos];
        let p = self.instance.p(e);
        if p > 0.0 {
            marginal[e] += prob * p;
            self.accumulate(sequence, pos + 1, chosen.with(e), prob * p, marginal);
        }
        if p < 1.0 {
            self.accumulate(sequence, pos + 1, chosen, prob * (1.0 - p), marginal);
        }
    }
}

pub fn round<R: Rng + ?Sized>(
    instance: &ProbingInstance,
    solution: &FractionalSolution,
    config: RoundingConfig,
    rng: &mut R,
) -> Result<NonAdaptivePolicy> {
    Ok(Rounder::new(instance, solution, config)?.round(rng))
}

/// Steps 4-7: probe each sequence element whose addition keeps the chosen
/// set inner-independent; keep it when active.
pub fn execute(
    policy: &NonAdaptivePolicy,
    instance: &ProbingInstance,
    active: &[bool],
) -> Execution {
    let mut chosen = ElementSet::empty();
    let mut probed = Vec::new();
    for &e in &policy.probe_sequence {
        if instance.inner.independent(chosen.with(e)) {
            probed.push(e);
            if active[e] {
                chosen.insert(e);
            }
        }
    }
    debug_assert!(instance.outer.independent(probed.iter().collect()));
    debug_assert!(instance.inner.independent(chosen));
    Execution { probed, chosen }
}

/// Mean chosen weight over `trials` independent roundings and activity draws.
pub fn estimate_policy_value(
    instance: &ProbingInstance,
    solution: &FractionalSolution,
    config: RoundingConfig,
    trials: usize,
) -> Result<PolicyValueReport> {
    if trials == 0 {
        return Err(ProbingError::config("trials must be at least 1"));
    }
    let rounder = Rounder::new(instance, solution, config)?;
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(config.seed, t);
            instance.weight_of(&rounder.realize(&mut rng).chosen)
        })
        .collect();
    Ok(PolicyValueReport::from_estimate(
        MeanEstimate::from_values(&values),
        Method::MonteCarlo,
    ))
}

/// Per-element chosen frequency over `trials` roundings.
pub fn estimate_marginals(
    instance: &ProbingInstance,
    solution: &FractionalSolution,
    config: RoundingConfig,
    trials: usize,
) -> Result<Vec<MeanEstimate>> {
    if trials == 0 {
        return Err(ProbingError::config("trials must be at least 1"));
    }
    let rounder = Rounder::new(instance, solution, config)?;
    let chosen: Vec<ElementSet> = (0..trials as u64)
        .into_par_iter()
        .map(|t| rounder.realize(&mut trial_rng(config.seed, t)).chosen)
        .collect();
    let mut hits = vec![0usize; instance.len()];
    for s in &chosen {
        for e in s.iter() {
            hits[e] += 1;
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| MeanEstimate::proportion(h, trials))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{CapacitySet, ConstraintSystem};
    use crate::instance::Element;
    use crate::lp::solve_probing_lp;

    fn instance(
        elements: Vec<Element>,
        inner: ConstraintSystem,
        outer: ConstraintSystem,
    ) -> ProbingInstance {
        ProbingInstance::new(elements, inner, outer).unwrap()
    }

    fn ordered(order: OrderPolicy) -> CrKind {
        CrKind::OrderedKSystem { order }
    }

    #[test]
    fn zero_solution_gives_empty_policy() {
        let inst = instance(
            vec![Element::new(1.0, 0.5); 3],
            ConstraintSystem::uniform(3, 1).unwrap(),
            ConstraintSystem::uniform(3, 3).unwrap(),
        );
        let sol = FractionalSolution::from_y(&inst, vec![0.0; 3]);
        let config = RoundingConfig::default_for(&inst, 1).unwrap();
        let policy = round(&inst, &sol, config, &mut trial_rng(1, 0)).unwrap();
        assert!(policy.probe_sequence.is_empty());
    }

    #[test]
    fn single_element_with_b_one_is_always_probed() {
        let free = ConstraintSystem::free(1).unwrap();
        let inst = instance(vec![Element::new(1.0, 1.0)], free.clone(), free);
        let sol = FractionalSolution::from_y(&inst, vec![1.0]);
        let config = RoundingConfig::for_instance(
            &inst,
            1.0,
            ordered(OrderPolicy::ByIndex),
            ordered(OrderPolicy::ByIndex),
            0,
        )
        .unwrap();
        let policy = round(&inst, &sol, config, &mut trial_rng(0, 0)).unwrap();
        assert_eq!(policy.probe_sequence, vec![0]);
    }

    #[test]
    fn execute_examples() {
        let inst = instance(
            vec![Element::new(1.0, 0.5); 2],
            ConstraintSystem::uniform(2, 1).unwrap(),
            ConstraintSystem::uniform(2, 2).unwrap(),
        );
        let policy = NonAdaptivePolicy {
            probe_sequence: vec![0, 1],
        };
        let run = execute(&policy, &inst, &[false, false]);
        assert!(run.chosen.is_empty());
        let run = execute(&policy, &inst, &[true, true]);
        assert_eq!(run.chosen.to_vec(), vec![0]);
        assert_eq!(run.probed, vec![0]);
    }

    #[test]
    fn inner_scheme_must_be_ordered() {
        let inst = instance(
            vec![Element::new(1.0, 0.5); 2],
            ConstraintSystem::uniform(2, 1).unwrap(),
            ConstraintSystem::uniform(2, 1).unwrap(),
        );
        let partition = CrKind::Partition {
            rule: PartitionRule::Balanced,
        };
        assert!(matches!(
            RoundingConfig::for_instance(&inst, 0.25, partition, partition, 0),
            Err(ProbingError::Config(_))
        ));
    }

    #[test]
    fn non_positive_guarantee_is_rejected() {
        let k2 = ConstraintSystem::intersection(vec![
            ConstraintSystem::uniform(2, 1).unwrap(),
            ConstraintSystem::uniform(2, 1).unwrap(),
        ])
        .unwrap();
        let inst = instance(vec![Element::new(1.0, 0.5); 2], k2.clone(), k2);
        // c_in = c_out = 1 − 2·0.25 = 0.5, guarantee b·0 = 0
        assert!(RoundingConfig::for_instance(
            &inst,
            0.25,
            ordered(OrderPolicy::ByIndex),
            ordered(OrderPolicy::ByIndex),
            0
        )
        .is_err());
    }

    #[test]
    fn deterministic_instance_recovers_lp_value() {
        let free = ConstraintSystem::free(3).unwrap();
        let inst = instance(
            vec![
                Element::new(1.0, 1.0),
                Element::new(2.0, 1.0),
                Element::new(3.0, 1.0),
            ],
            free.clone(),
            free,
        );
        let sol = solve_probing_lp(&inst).unwrap();
        let config = RoundingConfig::for_instance(
            &inst,
            1.0,
            ordered(OrderPolicy::ByIndex),
            ordered(OrderPolicy::ByIndex),
            5,
        )
        .unwrap();
        let report = estimate_policy_value(&inst, &sol, config, 100).unwrap();
        assert_eq!(report.mean, sol.objective);
        assert_eq!(report.radius, 0.0);
    }

    #[test]
    fn exact_marginals_match_simulation_and_bound() {
        let outer = ConstraintSystem::partition(
            4,
            vec![CapacitySet::new([0, 1], 1), CapacitySet::new([2, 3], 1)],
        )
        .unwrap();
        let inner = ConstraintSystem::uniform(4, 1).unwrap();
        let inst = instance(
            vec![
                Element::new(3.0, 0.6),
                Element::new(1.0, 0.9),
                Element::new(2.0, 0.5),
                Element::new(4.0, 0.3),
            ],
            inner,
            outer,
        );
        let sol = solve_probing_lp(&inst).unwrap();
        let config = RoundingConfig::for_instance(
            &inst,
            1.0 / 3.0,
            CrKind::Partition {
                rule: PartitionRule::Balanced,
            },
            ordered(OrderPolicy::ByWeightDesc),
            11,
        )
        .unwrap();
        let rounder = Rounder::new(&inst, &sol, config).unwrap();
        let exact = rounder.exact_marginals().unwrap();
        let sampled = estimate_marginals(&inst, &sol, config, 40_000).unwrap();
        for e in 0..4 {
            assert!((exact[e] - sampled[e].mean).abs() <= 4.0 * sampled[e].std_error + 1e-9);
            assert!(exact[e] >= config.guarantee() * sol.x[e] - 1e-9);
        }
    }

    #[test]
    fn scheme_names_parse() {
        assert_eq!(
            "partition-balanced".parse::<SchemeChoice>().unwrap().0,
            CrKind::Partition {
                rule: PartitionRule::Balanced
            }
        );
        assert!("bogus".parse::<SchemeChoice>().is_err());
    }
}
