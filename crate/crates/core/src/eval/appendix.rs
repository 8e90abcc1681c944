//! Instances on which rounding along a natural fixed order fails.
//!
//! Graph `G` has vertices `u`, `v` and middle vertices `m_1..m_n`, edges
//! `e_i = (u, m_i)`, `f_i = (m_i, v)` and `g = (u, v)`, so every `{e_i, f_i, g}`
//! is a triangle and `g` is spanned as soon as some pair `e_i, f_i` is present.
//! Graph `H` replaces `g` by `N = n²` parallel copies `g_1..g_N`.
//!
//! The baseline scans the named order and probes each permitted element with
//! probability `b·y_e`.

use rand::Rng;
use serde::Serialize;

use crate::constraint::ConstraintSystem;
use crate::error::{ProbingError, Result};
use crate::eval::Policy;
use crate::instance::{Element, ProbingInstance};
use crate::rng::TrialRng;
use crate::set::{ElementId, ElementSet};

/// Heavy weight on `E` in the weight-order instance.
pub const HEAVY_WEIGHT: f64 = 100.0;
/// Activity of `E` in the weight-order instance, well below `1/(n·M)`.
pub const TINY_PROBABILITY: f64 = 1e-5;
/// Weight of `g` in the probability-order instance, as a multiple of `n`.
pub const LARGE_WEIGHT_FACTOR: f64 = 100.0;
/// Size used by [`load_appendix_fixtures`].
pub const DEFAULT_N: usize = 10;
/// Cap on elements with positive probe probability for exact baseline values.
pub const EXACT_BASELINE_CAP: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineOrder {
    WeightDesc,
    ProbabilityDesc,
    ExpectedWeightDesc,
}

impl BaselineOrder {
    /// Elements sorted by the named key, descending, ties by index.
    pub fn order(&self, instance: &ProbingInstance) -> Vec<ElementId> {
        let key = |e: ElementId| match self {
            BaselineOrder::WeightDesc => instance.weight(e),
            BaselineOrder::ProbabilityDesc => instance.p(e),
            BaselineOrder::ExpectedWeightDesc => instance.weight(e) * instance.p(e),
        };
        let mut order: Vec<ElementId> = (0..instance.len()).collect();
        order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
        order
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AppendixFixture {
    pub name: String,
    pub instance: ProbingInstance,
    pub baseline: BaselineOrder,
    /// The fractional solution the failure argument rounds.
    pub y: Vec<f64>,
    pub n: usize,
    /// Index of `g` (graph G) or of the first `g_j` (graph H).
    pub first_g: ElementId,
}

/// Edges of `G`: `e_1..e_n`, `f_1..f_n`, then `copies` parallel `u–v` edges.
fn theta_edges(n: usize, copies: usize) -> (usize, Vec<(usize, usize)>) {
    let (u, v) = (0, 1);
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (u, 2 + i)).collect();
    edges.extend((0..n).map(|i| (2 + i, v)));
    edges.extend(std::iter::repeat_n((u, v), copies));
    (n + 2, edges)
}

/// Graph `G` as a graphic matroid over `e_1..e_n, f_1..f_n, g`.
pub fn graph_g(n: usize) -> Result<ConstraintSystem> {
    let (vertices, edges) = theta_edges(n, 1);
    ConstraintSystem::graphic(vertices, edges)
}

/// Graph `H` as a graphic matroid over `e_1..e_n, f_1..f_n, g_1..g_{n²}`.
pub fn graph_h(n: usize) -> Result<ConstraintSystem> {
    let (vertices, edges) = theta_edges(n, n * n);
    ConstraintSystem::graphic(vertices, edges)
}

/// The three instances at size `n`.
pub fn appendix_fixtures(n: usize) -> Result<Vec<AppendixFixture>> {
    if n == 0 {
        return Err(ProbingError::domain("appendix fixtures need n >= 1"));
    }
    let g_size = 2 * n + 1;
    let mut out = Vec::new();

    // heavy unlikely E, light certain g
    let mut elements = vec![Element::new(HEAVY_WEIGHT, TINY_PROBABILITY); 2 * n];
    elements.push(Element::new(1.0, 1.0));
    let mut y = vec![0.5; 2 * n];
    y.push(1.0);
    out.push(AppendixFixture {
        name: format!("g-weight-order-n{n}"),
        instance: ProbingInstance::new(elements, ConstraintSystem::free(g_size)?, graph_g(n)?)?,
        baseline: BaselineOrder::WeightDesc,
        y: y.clone(),
        n,
        first_g: 2 * n,
    });

    // certain light E, heavy coin-flip g
    let mut elements = vec![Element::new(1.0, 1.0); 2 * n];
    elements.push(Element::new(LARGE_WEIGHT_FACTOR * n as f64, 0.5));
    out.push(AppendixFixture {
        name: format!("g-probability-order-n{n}"),
        instance: ProbingInstance::new(elements, ConstraintSystem::free(g_size)?, graph_g(n)?)?,
        baseline: BaselineOrder::ProbabilityDesc,
        y,
        n,
        first_g: 2 * n,
    });

    // H: E before E' by expected weight
    let big_n = n * n;
    let h_size = 2 * n + big_n;
    let mut elements = vec![Element::new(2.0, 1.0 / 3.0); 2 * n];
    elements.extend(vec![
        Element::new(big_n as f64, 1.0 / (3.0 * big_n as f64));
        big_n
    ]);
    out.push(AppendixFixture {
        name: format!("h-expected-weight-order-n{n}"),
        instance: ProbingInstance::new(elements, graph_h(n)?, ConstraintSystem::free(h_size)?)?,
        baseline: BaselineOrder::ExpectedWeightDesc,
        y: vec![1.0; h_size],
        n,
        first_g: 2 * n,
    });
    Ok(out)
}

pub fn load_appendix_fixtures() -> Result<Vec<AppendixFixture>> {
    appendix_fixtures(DEFAULT_N)
}

impl AppendixFixture {
    pub fn baseline_policy(&self, b: f64) -> BaselinePolicy {
        BaselinePolicy {
            order: self.baseline.order(&self.instance),
            probe_probability: self.y.iter().map(|y| (b * y).clamp(0.0, 1.0)).collect(),
        }
    }
}

/// Scan `order`; probe each permitted element with its probe probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselinePolicy {
    pub order: Vec<ElementId>,
    pub probe_probability: Vec<f64>,
}

/// Exact statistics of a baseline run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineExact {
    pub value: f64,
    /// Probability that each element is permitted when the scan reaches it.
    pub permitted: Vec<f64>,
}

impl BaselinePolicy {
    /// Exact value and permit probabilities by enumerating every coin and activity.
    pub fn exact(&self, instance: &ProbingInstance) -> Result<BaselineExact> {
        let random = self.probe_probability.iter().filter(|&&q| q > 0.0).count();
        if random > EXACT_BASELINE_CAP {
            return Err(ProbingError::capability(format!(
                "exact baseline over {random} randomized elements exceeds {EXACT_BASELINE_CAP}"
            )));
        }
        let mut out = BaselineExact {
            value: 0.0,
            permitted: vec![0.0; instance.len()],
        };
        self.exact_rec(
            instance,
            0,
            ElementSet::empty(),
            ElementSet::empty(),
            1.0,
            &mut out,
        );
        Ok(out)
    }

    fn exact_rec(
        &self,
        instance: &ProbingInstance,
        at: usize,
        q: ElementSet,
        s: ElementSet,
        prob: f64,
        out: &mut BaselineExact,
    ) {
        let Some(&e) = self.order.get(at) else {
            out.value += prob * instance.weight_of(&s);
            return;
        };
        let coin = self.probe_probability[e];
        if !instance.can_probe(q, s, e) || coin == 0.0 {
            if instance.can_probe(q, s, e) {
                out.permitted[e] += prob;
            }
            self.exact_rec(instance, at + 1, q, s, prob, out);
            return;
        }
        out.permitted[e] += prob;
        let p = instance.p(e);
        if coin < 1.0 {
            self.exact_rec(instance, at + 1, q, s, prob * (1.0 - coin), out);
        }
        if p > 0.0 {
            self.exact_rec(instance, at + 1, q.with(e), s.with(e), prob * coin * p, out);
        }
        if p < 1.0 {
            self.exact_rec(instance, at + 1, q.with(e), s, prob * coin * (1.0 - p), out);
        }
    }
}

impl Policy for BaselinePolicy {
    fn realize(&self, instance: &ProbingInstance, rng: &mut TrialRng) -> f64 {
        let mut q = ElementSet::empty();
        let mut s = ElementSet::empty();
        for &e in &self.order {
            let coin = self.probe_probability[e];
            if coin == 0.0 || !instance.can_probe(q, s, e) {
                continue;
            }
            if rng.gen::<f64>() >= coin {
                continue;
            }
            q.insert(e);
            if rng.gen::<f64>() < instance.p(e) {
                s.insert(e);
            }
        }
        instance.weight_of(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::simulate;
    use crate::lp::{solve_probing_lp, FractionalSolution};

    #[test]
    fn g_edges_form_triangles_with_g() {
        let g = graph_g(3).unwrap();
        for i in 0..3 {
            let tri: ElementSet = [i, 3 + i, 6].into_iter().collect();
            assert!(!g.independent(tri));
            assert!(g.independent(tri.without(6)));
        }
    }

    #[test]
    fn h_copies_are_spanned_by_a_path() {
        let h = graph_h(2).unwrap();
        let path: ElementSet = [0, 2].into_iter().collect();
        let spanned = h.span(&path).unwrap();
        for j in 4..8 {
            assert!(spanned.contains(j));
        }
    }

    #[test]
    fn fixture_solutions_are_feasible() {
        for fx in appendix_fixtures(4).unwrap() {
            let sol = FractionalSolution::from_y(&fx.instance, fx.y.clone());
            sol.check_feasible(&fx.instance).unwrap();
        }
    }

    /// With `b = 1/2` each pair `e_i, f_i` is probed with probability
    /// `(b/2)^2 = 1/16`, and `g` is permitted iff no pair is complete.
    #[test]
    fn g_unblocked_probability_at_n5() {
        let fx = &appendix_fixtures(5).unwrap()[0];
        let exact = fx.baseline_policy(0.5).exact(&fx.instance).unwrap();
        let oracle = (1.0f64 - 1.0 / 16.0).powi(5);
        assert!((exact.permitted[fx.first_g] - oracle).abs() < 1e-12);
        assert!((oracle - 0.724).abs() < 1e-3);
    }

    #[test]
    fn weight_order_baseline_respects_appendix_bound() {
        for n in [3, 5] {
            let fx = &appendix_fixtures(n).unwrap()[0];
            let b = 0.5;
            let value = fx.baseline_policy(b).exact(&fx.instance).unwrap().value;
            let bound = 2.0 * n as f64 * HEAVY_WEIGHT * TINY_PROBABILITY
                + (1.0 - b * b / 4.0).powi(n as i32);
            assert!(value <= bound + 1e-12, "{value} > {bound}");
        }
    }

    #[test]
    fn h_lp_objective_is_at_least_n_over_three() {
        let fx = &appendix_fixtures(3).unwrap()[2];
        let lp = solve_probing_lp(&fx.instance).unwrap();
        assert!(lp.objective >= 9.0 / 3.0 - 1e-9);
    }

    #[test]
    fn simulation_agrees_with_exact_baseline() {
        let fx = &appendix_fixtures(3).unwrap()[1];
        let policy = fx.baseline_policy(0.5);
        let exact = policy.exact(&fx.instance).unwrap().value;
        let sim = simulate(&policy, &fx.instance, 40_000, 8).unwrap();
        assert!((sim.mean - exact).abs() <= 4.0 * sim.std_error + 1e-9);
    }
}
