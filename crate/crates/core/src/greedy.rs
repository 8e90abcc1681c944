//! Greedy probing in decreasing order of activity probability, its per-path
//! dual certificates, and the deadline variant.

use rand::Rng;
use serde::Serialize;

use crate::constraint::{CapacitySet, ConstraintSystem};
use crate::error::{ProbingError, Result};
use crate::instance::ProbingInstance;
use crate::lp::DualCertificate;
use crate::set::{ElementId, ElementSet};

/// One realized run of a probing policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathOutcome {
    /// Elements that entered the probed set, in order.
    pub probed: Vec<ElementId>,
    pub chosen: ElementSet,
    /// Deadline runs only: elements accounted as probed after their deadline.
    pub skipped_deadline: ElementSet,
    /// Probability of this path over the activity outcomes it branched on.
    pub probability: f64,
}

impl PathOutcome {
    pub fn probed_set(&self) -> ElementSet {
        self.probed.iter().collect()
    }

    /// Weight actually collected: chosen elements outside the deadline-skipped set.
    pub fn realized_value(&self, instance: &ProbingInstance) -> f64 {
        instance.weight_of(&self.chosen.difference(&self.skipped_deadline))
    }

    /// Weight including deadline-skipped picks (the coupled relaxed run).
    pub fn coupled_value(&self, instance: &ProbingInstance) -> f64 {
        instance.weight_of(&self.chosen)
    }

    /// `Σ_{e∈Q} p_e`.
    pub fn probed_mass(&self, instance: &ProbingInstance) -> f64 {
        self.probed.iter().map(|&e| instance.p(e)).sum()
    }

    /// `Σ_{e∈Q∖B} p_e`.
    pub fn real_probe_mass(&self, instance: &ProbingInstance) -> f64 {
        self.probed
            .iter()
            .filter(|&&e| !self.skipped_deadline.contains(e))
            .map(|&e| instance.p(e))
            .sum()
    }
}

/// Elements by decreasing `p`, ties by ascending index.
pub fn greedy_order(instance: &ProbingInstance) -> Vec<ElementId> {
    let mut order: Vec<ElementId> = (0..instance.len()).collect();
    order.sort_by(|&a, &b| instance.p(b).total_cmp(&instance.p(a)).then(a.cmp(&b)));
    order
}

/// Runs a permutation policy against a fixed activity vector: probe each
/// element in order when both constraints allow, keep it if active.
pub fn run_order(instance: &ProbingInstance, order: &[ElementId], active: &[bool]) -> PathOutcome {
    let mut q = ElementSet::empty();
    let mut s = ElementSet::empty();
    let mut probed = Vec::new();
    let mut probability = 1.0;
    for &e in order {
        if instance.can_probe(q, s, e) {
            q.insert(e);
            probed.push(e);
            let p = instance.p(e);
            if active[e] {
                s.insert(e);
                probability *= p;
            } else {
                probability *= 1.0 - p;
            }
        }
    }
    PathOutcome {
        probed,
        chosen: s,
        skipped_deadline: ElementSet::empty(),
        probability,
    }
}

pub fn run_greedy(instance: &ProbingInstance, active: &[bool]) -> PathOutcome {
    run_order(instance, &greedy_order(instance), active)
}

/// Draws an independent activity vector.
pub fn sample_activity<R: Rng + ?Sized>(instance: &ProbingInstance, rng: &mut R) -> Vec<bool> {
    instance
        .elements
        .iter()
        .map(|el| rng.gen::<f64>() < el.p)
        .collect()
}

/// Every path of a permutation policy with positive probability.
pub fn enumerate_order_paths(instance: &ProbingInstance, order: &[ElementId]) -> Vec<PathOutcome> {
    let mut out = Vec::new();
    let mut probed = Vec::new();
    enumerate_rec(
        instance,
        order,
        0,
        ElementSet::empty(),
        ElementSet::empty(),
        &mut probed,
        1.0,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    instance: &ProbingInstance,
    order: &[ElementId],
    at: usize,
    q: ElementSet,
    s: ElementSet,
    probed: &mut Vec<ElementId>,
    probability: f64,
    out: &mut Vec<PathOutcome>,
) {
    let next = order[at..]
        .iter()
        .position(|&e| instance.can_probe(q, s, e))
        .map(|i| at + i);
    let Some(pos) = next else {
        out.push(PathOutcome {
            probed: probed.clone(),
            chosen: s,
            skipped_deadline: ElementSet::empty(),
            probability,
        });
        return;
    };
    let e = order[pos];
    let p = instance.p(e);
    probed.push(e);
    if p > 0.0 {
        enumerate_rec(
            instance,
            order,
            pos + 1,
            q.with(e),
            s.with(e),
            probed,
            probability * p,
            out,
        );
    }
    if p < 1.0 {
        enumerate_rec(
            instance,
            order,
            pos + 1,
            q.with(e),
            s,
            probed,
            probability * (1.0 - p),
            out,
        );
    }
    probed.pop();
}

pub fn enumerate_greedy_paths(instance: &ProbingInstance) -> Vec<PathOutcome> {
    enumerate_order_paths(instance, &greedy_order(instance))
}

/// Dual certificate for one greedy path: `α(span_in(S)) = 1` and, for the
/// probed sequence `a_1..a_ℓ`, `β(span_out({a_1..a_h})) = p_{a_h} − p_{a_{h+1}}`.
pub fn build_dual_certificate(
    instance: &ProbingInstance,
    path: &PathOutcome,
) -> Result<DualCertificate> {
    let mut cert = DualCertificate::default();
    let inner_span = instance.inner.span(&path.chosen)?;
    if !inner_span.is_empty() {
        cert.add_alpha(inner_span, 1.0);
    }
    let mut prefix = ElementSet::empty();
    for (h, &a) in path.probed.iter().enumerate() {
        prefix.insert(a);
        let next_p = path.probed.get(h + 1).map_or(0.0, |&b| instance.p(b));
        let weight = instance.p(a) - next_p;
        if weight < 0.0 {
            return Err(ProbingError::contract(format!(
                "probed order is not greedy: p[{a}] = {} before p = {next_p}",
                instance.p(a)
            )));
        }
        if weight > 0.0 {
            cert.add_beta(instance.outer.span(&prefix)?, weight);
        }
    }
    Ok(cert)
}

/// `k_in·|S_π| + k_out·Σ_{e∈Q_π} p_e`, the per-path certificate budget.
pub fn certificate_bound(instance: &ProbingInstance, path: &PathOutcome) -> Result<f64> {
    let k_in = instance.inner.k_parameter()? as f64;
    let k_out = instance.outer.k_parameter()? as f64;
    Ok(k_in * path.chosen.len() as f64 + k_out * path.probed_mass(instance))
}

/// The chain-capacity matroid `{U : |U ∩ {e : d_e <= t}| <= t for all t >= 1}`.
pub fn build_deadline_laminar(instance: &ProbingInstance) -> Result<ConstraintSystem> {
    let deadlines = instance.deadlines()?;
    if let Some(e) = deadlines.iter().position(|&d| d == 0) {
        return Err(ProbingError::domain(format!(
            "element {e} has deadline 0; deadlines start at 1"
        )));
    }
    let mut thresholds: Vec<u32> = deadlines.clone();
    thresholds.sort_unstable();
    thresholds.dedup();
    let sets = thresholds
        .into_iter()
        .map(|t| {
            CapacitySet::new(
                (0..deadlines.len()).filter(|&e| deadlines[e] <= t),
                t as usize,
            )
        })
        .collect();
    ConstraintSystem::laminar(instance.len(), sets)
}

struct DeadlineRun<'a> {
    instance: &'a ProbingInstance,
    laminar: ConstraintSystem,
    deadlines: Vec<u32>,
    order: Vec<ElementId>,
}

impl<'a> DeadlineRun<'a> {
    fn new(instance: &'a ProbingInstance) -> Result<Self> {
        Ok(DeadlineRun {
            laminar: build_deadline_laminar(instance)?,
            deadlines: instance.deadlines()?,
            order: greedy_order(instance),
            instance,
        })
    }

    fn admits(&self, q: ElementSet, s: ElementSet, e: ElementId) -> bool {
        let q2 = q.with(e);
        self.instance.outer.independent(q2)
            && self.laminar.independent(q2)
            && self.instance.inner.independent(s.with(e))
    }
}

/// The deadline greedy: a global clock advances only on real probes; an
/// element admitted after its deadline joins the skipped set and is picked
/// with the same activity draw, without consuming time.
pub fn run_greedy_deadline(instance: &ProbingInstance, active: &[bool]) -> Result<PathOutcome> {
    let run = DeadlineRun::new(instance)?;
    let mut q = ElementSet::empty();
    let mut s = ElementSet::empty();
    let mut skipped = ElementSet::empty();
    let mut probed = Vec::new();
    let mut clock = 1u32;
    let mut probability = 1.0;
    for &e in &run.order {
        if !run.admits(q, s, e) {
            continue;
        }
        q.insert(e);
        probed.push(e);
        if clock <= run.deadlines[e] {
            clock += 1;
        } else {
            skipped.insert(e);
        }
        let p = instance.p(e);
        if active[e] {
            s.insert(e);
            probability *= p;
        } else {
            probability *= 1.0 - p;
        }
    }
    Ok(PathOutcome {
        probed,
        chosen: s,
        skipped_deadline: skipped,
        probability,
    })
}

/// Every path of the deadline greedy with positive probability.
pub fn enumerate_deadline_paths(instance: &ProbingInstance) -> Result<Vec<PathOutcome>> {
    let run = DeadlineRun::new(instance)?;
    let mut out = Vec::new();
    let mut probed = Vec::new();
    deadline_rec(
        &run,
        0,
        ElementSet::empty(),
        ElementSet::empty(),
        ElementSet::empty(),
        1,
        &mut probed,
        1.0,
        &mut out,
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn deadline_rec(
    run: &DeadlineRun,
    at: usize,
    q: ElementSet,
    s: ElementSet,
    skipped: ElementSet,
    clock: u32,
    probed: &mut Vec<ElementId>,
    probability: f64,
    out: &mut Vec<PathOutcome>,
) {
    let next = run.order[at..]
        .iter()
        .position(|&e| run.admits(q, s, e))
        .map(|i| at + i);
    let Some(pos) = next else {
        out.push(PathOutcome {
            probed: probed.clone(),
            chosen: s,
            skipped_deadline: skipped,
            probability,
        });
        return;
    };
    let e = run.order[pos];
    let (clock, skipped) = if clock <= run.deadlines[e] {
        (clock + 1, skipped)
    } else {
        (clock, skipped.with(e))
    };
    let p = run.instance.p(e);
    probed.push(e);
    if p > 0.0 {
        deadline_rec(
            run,
            pos + 1,
            q.with(e),
            s.with(e),
            skipped,
            clock,
            probed,
            probability * p,
            out,
        );
    }
    if p < 1.0 {
        deadline_rec(
            run,
            pos + 1,
            q.with(e),
            s,
            skipped,
            clock,
            probed,
            probability * (1.0 - p),
            out,
        );
    }
    probed.pop();
}

/// Exact expected weight of `S∖B` under the deadline greedy.
pub fn exact_deadline_greedy_value(instance: &ProbingInstance) -> Result<f64> {
    Ok(enumerate_deadline_paths(instance)?
        .iter()
        .map(|path| path.probability * path.realized_value(instance))
        .sum())
}
