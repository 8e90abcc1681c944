//! Sequential posted-price mechanisms through stochastic probing.
//!
//! Copy `(i, c)` stands for "offer agent `i` price `c`": it weighs `c` and is
//! active with probability `Pr[v_i >= c]`. Each agent is probed at most once
//! (outer partition matroid) and the served agents must be feasible (the
//! feasibility system lifted to the copies).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constraint::{CapacitySet, ConstraintSystem, SystemKind};
use crate::cr::{CrKind, CrSchemeSpec, OrderPolicy, PartitionRule};
use crate::error::{ProbingError, Result};
use crate::eval::{Method, PolicyValueReport};
use crate::instance::{Element, ProbingInstance};
use crate::lp::simplex::{maximize, Constraint};
use crate::lp::{solve_probing_lp, FractionalSolution};
use crate::rng::{trial_rng, MeanEstimate};
use crate::rounding::{Rounder, RoundingConfig};
use crate::set::ElementSet;

/// Tolerance on distribution mass.
pub const MASS_TOL: f64 = 1e-9;
/// Agent cap for exact revenue evaluation.
pub const EXACT_AGENT_CAP: usize = 12;
/// Default number of sampled mechanisms for best-of selection.
pub const DEFAULT_BEST_OF: usize = 20;

const MAX_ROUNDS: usize = 5_000;

/// Bayesian single-parameter auction: valuation distributions over
/// `{0..B}` and a feasibility system over agents.
#[derive(Clone, Debug, PartialEq)]
pub struct AuctionSpec {
    /// `distributions[i][c] = Pr[v_i = c]`.
    pub distributions: Vec<Vec<f64>>,
    pub feasibility: ConstraintSystem,
}

impl AuctionSpec {
    pub fn new(distributions: Vec<Vec<f64>>, feasibility: ConstraintSystem) -> Result<Self> {
        let n = distributions.len();
        if feasibility.universe() != n {
            return Err(ProbingError::domain(format!(
                "feasibility system covers {} agents, spec has {n}",
                feasibility.universe()
            )));
        }
        let width = distributions.first().map_or(1, Vec::len);
        if width == 0 {
            return Err(ProbingError::domain(
                "distributions need at least one value",
            ));
        }
        for (i, d) in distributions.iter().enumerate() {
            if d.len() != width {
                return Err(ProbingError::domain(format!(
                    "agent {i} has {} masses, expected {width}",
                    d.len()
                )));
            }
            if let Some(c) = d.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
                return Err(ProbingError::domain(format!(
                    "agent {i} has invalid mass {} at value {c}",
                    d[c]
                )));
            }
            let total: f64 = d.iter().sum();
            if (total - 1.0).abs() > MASS_TOL {
                return Err(ProbingError::domain(format!(
                    "agent {i} distribution sums to {total}"
                )));
            }
        }
        if matches!(feasibility.kind(), SystemKind::Explicit { .. }) {
            return Err(ProbingError::capability(
                "feasibility must be a matroid or an intersection of matroids",
            ));
        }
        Ok(AuctionSpec {
            distributions,
            feasibility,
        })
    }

    pub fn agents(&self) -> usize {
        self.distributions.len()
    }

    /// The maximum valuation `B`.
    pub fn max_value(&self) -> usize {
        self.distributions.first().map_or(0, |d| d.len() - 1)
    }

    /// Universe index of copy `(agent, price)`.
    pub fn copy(&self, agent: usize, price: usize) -> usize {
        agent * (self.max_value() + 1) + price
    }

    /// `Pr[v_i >= c]`.
    pub fn survival(&self, agent: usize, price: usize) -> f64 {
        self.distributions[agent][price..]
            .iter()
            .sum::<f64>()
            .min(1.0)
    }

    /// Number of matroids in the feasibility intersection.
    pub fn k(&self) -> Result<usize> {
        self.feasibility.k_parameter()
    }
}

/// The probing instance over copies `(i, c)`.
///
/// The lifted feasibility system already allows at most one copy per agent
/// in each member matroid, so it is used as the inner system directly.
pub fn build_probing_instance(spec: &AuctionSpec) -> Result<ProbingInstance> {
    let n = spec.agents();
    let width = spec.max_value() + 1;
    let size = n * width;
    let mut elements = Vec::with_capacity(size);
    for i in 0..n {
        for c in 0..width {
            elements.push(Element::new(c as f64, spec.survival(i, c)));
        }
    }
    let copies: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..width).map(|c| spec.copy(i, c)).collect())
        .collect();
    let outer = ConstraintSystem::partition(
        size,
        copies
            .iter()
            .map(|c| CapacitySet::new(c.iter().copied(), 1))
            .collect(),
    )?;
    let inner = spec.feasibility.lift(&copies, size)?;
    ProbingInstance::new(elements, inner, outer)
}

pub fn solve_lp_p(spec: &AuctionSpec) -> Result<FractionalSolution> {
    solve_probing_lp(&build_probing_instance(spec)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismLpSolution {
    /// `z[i][c]`: probability agent `i` is served when bidding `c`.
    pub z: Vec<Vec<f64>>,
    /// `x_i = Σ_c Pr[v_i = c] z[i][c]`.
    pub x: Vec<f64>,
    pub objective: f64,
}

/// `Σ_i Σ_c Pr[v_i = c]·(c·z_{i,c} − Σ_{h<c} z_{i,h})`.
pub fn lp_m_objective(spec: &AuctionSpec, z: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, d) in spec.distributions.iter().enumerate() {
        let mut prefix = 0.0;
        for (c, &mass) in d.iter().enumerate() {
            total += mass * (c as f64 * z[i][c] - prefix);
            prefix += z[i][c];
        }
    }
    total
}

/// Service probabilities `x_i` of a `z` table.
pub fn service_probabilities(spec: &AuctionSpec, z: &[Vec<f64>]) -> Vec<f64> {
    spec.distributions
        .iter()
        .zip(z)
        .map(|(d, zi)| d.iter().zip(zi).map(|(m, z)| m * z).sum())
        .collect()
}

/// Maximizes the mechanism relaxation by cut generation on the feasibility system.
pub fn solve_lp_m(spec: &AuctionSpec) -> Result<MechanismLpSolution> {
    let n = spec.agents();
    let width = spec.max_value() + 1;
    let vars = n * width;
    let index = |i: usize, c: usize| i * width + c;
    // coefficient of z_{i,c}: c·Pr[v=c] − Pr[v>c]
    let objective: Vec<f64> = (0..vars)
        .map(|k| {
            let (i, c) = (k / width, k % width);
            c as f64 * spec.distributions[i][c] - spec.distributions[i][c + 1..].iter().sum::<f64>()
        })
        .collect();
    let mut rows = Vec::new();
    for i in 0..n {
        for c in 0..width {
            let mut coefficients = vec![0.0; vars];
            coefficients[index(i, c)] = 1.0;
            if c + 1 < width {
                coefficients[index(i, c + 1)] = -1.0;
                rows.push(Constraint {
                    coefficients,
                    rhs: 0.0,
                });
            } else {
                rows.push(Constraint {
                    coefficients,
                    rhs: 1.0,
                });
            }
        }
    }
    let mut seen: Vec<ElementSet> = Vec::new();
    for _ in 0..MAX_ROUNDS {
        let opt = maximize(&objective, &rows)?;
        let z: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..width)
                    .map(|c| opt.x[index(i, c)].clamp(0.0, 1.0))
                    .collect()
            })
            .collect();
        let x = service_probabilities(spec, &z);
        let clamped: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        match spec.feasibility.separate(&clamped)? {
            Some(w) if !seen.contains(&w.members) => {
                let mut coefficients = vec![0.0; vars];
                for i in w.members.iter() {
                    for c in 0..width {
                        coefficients[index(i, c)] = spec.distributions[i][c];
                    }
                }
                rows.push(Constraint {
                    coefficients,
                    rhs: w.rank as f64,
                });
                seen.push(w.members);
            }
            Some(w) if w.violation() > 1e-7 => {
                return Err(ProbingError::capability(format!(
                    "cut on {:?} re-separated with violation {}",
                    w.members,
                    w.violation()
                )))
            }
            _ => {
                let objective = lp_m_objective(spec, &z);
                return Ok(MechanismLpSolution { z, x, objective });
            }
        }
    }
    Err(ProbingError::capability(format!(
        "mechanism LP did not converge in {MAX_ROUNDS} rounds"
    )))
}

/// Maps a mechanism point to a probing point with `y_{i,c} = z_{i,c} − z_{i,c−1}`.
pub fn transform_z_to_y(spec: &AuctionSpec, z: &[Vec<f64>]) -> Result<FractionalSolution> {
    let instance = build_probing_instance(spec)?;
    let width = spec.max_value() + 1;
    let mut y = vec![0.0; instance.len()];
    for (i, zi) in z.iter().enumerate() {
        if zi.len() != width {
            return Err(ProbingError::domain(format!(
                "z row {i} has {} entries, expected {width}",
                zi.len()
            )));
        }
        let mut previous = 0.0;
        for (c, &zc) in zi.iter().enumerate() {
            y[spec.copy(i, c)] = zc - previous;
            previous = zc;
        }
    }
    Ok(FractionalSolution::from_y(&instance, y))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Offer {
    pub agent: usize,
    pub price: usize,
}

/// Take-it-or-leave-it offers made in sequence; prices never depend on bids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SpmMechanism {
    pub offers: Vec<Offer>,
}

/// `b = 1/(2k+1)`, balanced one-per-agent choice outside, price-descending order inside.
pub fn spm_rounding_config(
    spec: &AuctionSpec,
    instance: &ProbingInstance,
    seed: u64,
) -> Result<RoundingConfig> {
    let b = 1.0 / (2.0 * spec.k()? as f64 + 1.0);
    RoundingConfig::new(
        b,
        CrSchemeSpec::partition(PartitionRule::Balanced, b)?,
        CrSchemeSpec::ordered(&instance.inner, OrderPolicy::ByWeightDesc, b)?,
        seed,
    )
}

/// Builds SPMs from one LP solution.
pub struct SpmBuilder<'a> {
    spec: &'a AuctionSpec,
    rounder: Rounder<'a>,
}

impl<'a> SpmBuilder<'a> {
    pub fn new(
        spec: &'a AuctionSpec,
        instance: &'a ProbingInstance,
        lp: &FractionalSolution,
        config: RoundingConfig,
    ) -> Result<Self> {
        if !matches!(config.inner.kind, CrKind::OrderedKSystem { .. }) {
            return Err(ProbingError::config(
                "the inner scheme must be an ordered scheme",
            ));
        }
        Ok(SpmBuilder {
            spec,
            rounder: Rounder::new(instance, lp, config)?,
        })
    }

    /// One rounding, collapsed to at most one nonzero-price offer per agent.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SpmMechanism {
        let width = self.spec.max_value() + 1;
        let mut offered = vec![false; self.spec.agents()];
        let mut offers = Vec::new();
        for e in self.rounder.round(rng).probe_sequence {
            let (agent, price) = (e / width, e % width);
            if price == 0 || offered[agent] {
                continue;
            }
            offered[agent] = true;
            offers.push(Offer { agent, price });
        }
        SpmMechanism { offers }
    }
}

/// One mechanism sample from the LP rounding.
pub fn build_spm(spec: &AuctionSpec, seed: u64) -> Result<SpmMechanism> {
    let instance = build_probing_instance(spec)?;
    let lp = solve_probing_lp(&instance)?;
    let config = spm_rounding_config(spec, &instance, seed)?;
    let builder = SpmBuilder::new(spec, &instance, &lp, config)?;
    Ok(builder.draw(&mut trial_rng(seed, 0)))
}

/// The best of `m` sampled mechanisms by exact revenue.
pub fn build_spm_best_of(spec: &AuctionSpec, m: usize, seed: u64) -> Result<(SpmMechanism, f64)> {
    if m == 0 {
        return Err(ProbingError::config("best-of needs at least one sample"));
    }
    let instance = build_probing_instance(spec)?;
    let lp = solve_probing_lp(&instance)?;
    let config = spm_rounding_config(spec, &instance, seed)?;
    let builder = SpmBuilder::new(spec, &instance, &lp, config)?;
    let mut best: Option<(SpmMechanism, f64)> = None;
    for t in 0..m as u64 {
        let mech = builder.draw(&mut trial_rng(seed, t));
        let revenue = exact_revenue(&mech, spec)?;
        if best.as_ref().is_none_or(|(_, r)| revenue > *r) {
            best = Some((mech, revenue));
        }
    }
    Ok(best.expect("m >= 1"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

fn check_offers(mech: &SpmMechanism, spec: &AuctionSpec) -> Result<()> {
    let mut seen = vec![false; spec.agents()];
    for o in &mech.offers {
        if o.agent >= spec.agents() || o.price > spec.max_value() {
            return Err(ProbingError::domain(format!(
                "offer {o:?} outside the auction"
            )));
        }
        if std::mem::replace(&mut seen[o.agent], true) {
            return Err(ProbingError::domain(format!(
                "agent {} receives two offers",
                o.agent
            )));
        }
    }
    Ok(())
}

/// Exact expected revenue. With one offer per agent the acceptance events are
/// independent, so branching on each offer enumerates all valuation profiles.
pub fn exact_revenue(mech: &SpmMechanism, spec: &AuctionSpec) -> Result<f64> {
    check_offers(mech, spec)?;
    if spec.agents() > EXACT_AGENT_CAP {
        return Err(ProbingError::capability(format!(
            "exact revenue over {} agents exceeds {EXACT_AGENT_CAP}",
            spec.agents()
        )));
    }
    Ok(revenue_rec(mech, spec, 0, ElementSet::empty()))
}

fn revenue_rec(mech: &SpmMechanism, spec: &AuctionSpec, at: usize, served: ElementSet) -> f64 {
    let Some(offer) = mech.offers.get(at) else {
        return 0.0;
    };
    if !spec.feasibility.independent(served.with(offer.agent)) {
        return revenue_rec(mech, spec, at + 1, served);
    }
    let accept = spec.survival(offer.agent, offer.price);
    let mut value = 0.0;
    if accept > 0.0 {
        value += accept
            * (offer.price as f64 + revenue_rec(mech, spec, at + 1, served.with(offer.agent)));
    }
    if accept < 1.0 {
        value += (1.0 - accept) * revenue_rec(mech, spec, at + 1, served);
    }
    value
}

/// Revenue of one valuation profile.
pub fn realized_revenue(mech: &SpmMechanism, spec: &AuctionSpec, values: &[usize]) -> f64 {
    let mut served = ElementSet::empty();
    let mut revenue = 0.0;
    for o in &mech.offers {
        if values[o.agent] >= o.price && spec.feasibility.independent(served.with(o.agent)) {
            served.insert(o.agent);
            revenue += o.price as f64;
        }
    }
    revenue
}

fn sample_values<R: Rng + ?Sized>(spec: &AuctionSpec, rng: &mut R) -> Vec<usize> {
    spec.distributions
        .iter()
        .map(|d| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (c, &m) in d.iter().enumerate() {
                acc += m;
                if u < acc {
                    return c;
                }
            }
            d.iter().rposition(|&m| m > 0.0).unwrap_or(0)
        })
        .collect()
}

pub fn evaluate_spm(
    mech: &SpmMechanism,
    spec: &AuctionSpec,
    mode: EvalMode,
) -> Result<PolicyValueReport> {
    match mode {
        EvalMode::Exact => Ok(PolicyValueReport::exact(exact_revenue(mech, spec)?)),
        EvalMode::MonteCarlo { trials, seed } => {
            check_offers(mech, spec)?;
            if trials == 0 {
                return Err(ProbingError::config("trials must be at least 1"));
            }
            let values: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    realized_revenue(mech, spec, &sample_values(spec, &mut trial_rng(seed, t)))
                })
                .collect();
            Ok(PolicyValueReport::from_estimate(
                MeanEstimate::from_values(&values),
                Method::MonteCarlo,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_agent() -> AuctionSpec {
        AuctionSpec::new(
            vec![vec![0.0, 0.5, 0.5]],
            ConstraintSystem::uniform(1, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_agent_instance() {
        let inst = build_probing_instance(&single_agent()).unwrap();
        assert_eq!(inst.probabilities(), vec![1.0, 1.0, 0.5]);
        assert_eq!(inst.weights(), vec![0.0, 1.0, 2.0]);
        assert_eq!(inst.inner.k_parameter().unwrap(), 1);
    }

    #[test]
    fn deterministic_value_has_step_survival() {
        let spec = AuctionSpec::new(
            vec![vec![0.0, 0.0, 1.0, 0.0]],
            ConstraintSystem::uniform(1, 1).unwrap(),
        )
        .unwrap();
        let ps: Vec<f64> = (0..4).map(|c| spec.survival(0, c)).collect();
        assert_eq!(ps, vec![1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn invalid_distributions_are_rejected() {
        let u = ConstraintSystem::uniform(1, 1).unwrap();
        assert!(AuctionSpec::new(vec![vec![0.5, 0.4]], u.clone()).is_err());
        assert!(AuctionSpec::new(vec![vec![1.5, -0.5]], u).is_err());
    }

    #[test]
    fn single_agent_lps() {
        let spec = single_agent();
        assert!((solve_lp_p(&spec).unwrap().objective - 1.0).abs() < 1e-9);
        let m = solve_lp_m(&spec).unwrap();
        assert!((m.objective - 1.0).abs() < 1e-9);
        // objective reduces to z_2 − z_0
        assert!((m.objective - (m.z[0][2] - m.z[0][0])).abs() < 1e-9);
    }

    #[test]
    fn zero_valuations_give_nothing() {
        let spec = AuctionSpec::new(
            vec![vec![1.0, 0.0, 0.0]; 3],
            ConstraintSystem::uniform(3, 2).unwrap(),
        )
        .unwrap();
        assert!(solve_lp_p(&spec).unwrap().objective.abs() < 1e-12);
        assert!(solve_lp_m(&spec).unwrap().objective.abs() < 1e-12);
        assert!(build_spm(&spec, 3).unwrap().offers.is_empty());
    }

    #[test]
    fn second_identical_agent_does_not_lower_lp_p() {
        let one = single_agent();
        let two = AuctionSpec::new(
            vec![vec![0.0, 0.5, 0.5]; 2],
            ConstraintSystem::uniform(2, 1).unwrap(),
        )
        .unwrap();
        let a = solve_lp_p(&one).unwrap().objective;
        let b = solve_lp_p(&two).unwrap().objective;
        assert!(b >= a - 1e-9);
        assert!(b >= solve_lp_m(&two).unwrap().objective - 1e-6);
    }

    #[test]
    fn single_agent_mechanism_and_revenue() {
        let spec = single_agent();
        for seed in 0..20 {
            let mech = build_spm(&spec, seed).unwrap();
            assert!(mech.offers.len() <= 1);
            assert!(mech.offers.iter().all(|o| o.price == 1 || o.price == 2));
        }
        let offer_two = SpmMechanism {
            offers: vec![Offer { agent: 0, price: 2 }],
        };
        assert!((exact_revenue(&offer_two, &spec).unwrap() - 1.0).abs() < 1e-12);
        let free = SpmMechanism {
            offers: vec![Offer { agent: 0, price: 0 }],
        };
        assert_eq!(exact_revenue(&free, &spec).unwrap(), 0.0);
        let mc = evaluate_spm(
            &offer_two,
            &spec,
            EvalMode::MonteCarlo {
                trials: 20_000,
                seed: 1,
            },
        )
        .unwrap();
        assert!((mc.mean - 1.0).abs() <= mc.radius);
    }

    #[test]
    fn transformer_preserves_objective() {
        let spec = AuctionSpec::new(
            vec![vec![0.2, 0.3, 0.5], vec![0.1, 0.6, 0.3]],
            ConstraintSystem::uniform(2, 1).unwrap(),
        )
        .unwrap();
        let m = solve_lp_m(&spec).unwrap();
        let sol = transform_z_to_y(&spec, &m.z).unwrap();
        let inst = build_probing_instance(&spec).unwrap();
        sol.check_feasible(&inst).unwrap();
        assert!((sol.objective - m.objective).abs() < 1e-9);
    }
}
