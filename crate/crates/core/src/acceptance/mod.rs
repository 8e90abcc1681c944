//! The acceptance suite: eleven property checks, each reported as one
//! [`CriterionResult`] with a pass flag, the worst margin and the runtime.

pub mod fixtures;

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cr::{
    balanced_retention, partition_target, verify_scheme, CrScheme, CrSchemeSpec, OrderPolicy,
    PartitionRule,
};
use crate::error::{ProbingError, Result};
use crate::eval::{
    appendix_fixtures, exact_greedy_value, optimal_adaptive, optimal_adaptive_deadline, simulate,
    Method, PolicyValueReport,
};
use crate::greedy::{
    build_dual_certificate, certificate_bound, enumerate_deadline_paths, enumerate_greedy_paths,
    exact_deadline_greedy_value, run_greedy,
};
use crate::instance::ProbingInstance;
use crate::lp::{check_dual, solve_probing_lp, DualCertificate};
use crate::rng::{derive_seed, trial_rng, DEFAULT_SEED};
use crate::rounding::{estimate_marginals, Rounder, RoundingConfig};
use crate::spm::{
    build_probing_instance, exact_revenue, lp_m_objective, service_probabilities, solve_lp_m,
    spm_rounding_config, transform_z_to_y, AuctionSpec, SpmBuilder,
};

use fixtures::*;

pub const CRITERIA: usize = 11;
pub const DEFAULT_TRIALS: usize = 100_000;
const MAX_NOTES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AcceptanceConfig {
    pub seed: u64,
    /// Monte Carlo trials per simulated estimate.
    pub trials: usize,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig {
            seed: DEFAULT_SEED,
            trials: DEFAULT_TRIALS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Smallest `lhs − rhs` over all checked inequalities.
    pub worst_margin: f64,
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
    pub notes: Vec<String>,
}

impl CriterionResult {
    pub fn summary_line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} cases, {} failures, worst margin {:.3e}, {:.2}s",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.worst_margin,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceptanceReport {
    pub config: AcceptanceConfig,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

/// Counts checks and keeps the first few failure descriptions.
#[derive(Debug)]
struct Tally {
    cases: usize,
    failures: usize,
    worst: f64,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            cases: 0,
            failures: 0,
            worst: f64::INFINITY,
            notes: Vec::new(),
        }
    }

    /// Records `lhs ≥ rhs − tol`.
    fn at_least(&mut self, lhs: f64, rhs: f64, tol: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        let margin = lhs - rhs;
        self.worst = self.worst.min(margin);
        if margin < -tol || margin.is_nan() {
            self.failures += 1;
            if self.notes.len() < MAX_NOTES {
                self.notes.push(format!("{}: {lhs} < {rhs}", what()));
            }
        }
    }

    fn holds(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.notes.len() < MAX_NOTES {
                self.notes.push(what());
            }
        }
    }

    fn note(&mut self, text: String) {
        self.notes.push(text);
    }

    fn merge(&mut self, other: Tally) {
        self.cases += other.cases;
        self.failures += other.failures;
        self.worst = self.worst.min(other.worst);
        for n in other.notes {
            if self.notes.len() < MAX_NOTES {
                self.notes.push(n);
            }
        }
    }

    fn finish(self, id: usize, start: Instant, budget: Option<f64>) -> CriterionResult {
        let seconds = start.elapsed().as_secs_f64();
        let mut notes = self.notes;
        let within = budget.is_none_or(|b| seconds < b);
        if !within {
            notes.push(format!(
                "runtime {seconds:.1}s exceeds budget {:.0}s",
                budget.unwrap_or(0.0)
            ));
        }
        CriterionResult {
            id,
            name: NAMES[id - 1],
            passed: self.failures == 0 && self.cases > 0 && within,
            cases: self.cases,
            failures: self.failures,
            worst_margin: if self.worst.is_finite() {
                self.worst
            } else {
                0.0
            },
            seconds,
            budget_seconds: budget,
            notes,
        }
    }
}

const NAMES: [&str; CRITERIA] = [
    "unweighted greedy ratio",
    "greedy dual certificates",
    "tightness fixture",
    "LP upper-bounds OPT",
    "contention resolution bounds",
    "rounding marginals and value",
    "default-b constant",
    "posted-price revenue",
    "mechanism-to-probing transform",
    "deadline greedy ratio",
    "naive-ordering separation",
];

pub fn criterion_name(id: usize) -> Option<&'static str> {
    id.checked_sub(1).and_then(|i| NAMES.get(i).copied())
}

pub const SUITE_INSTANCES: usize = 200;
pub const WEIGHTED_FIXTURES: usize = 50;
pub const DEADLINE_INSTANCES: usize = 100;
pub const TRANSFORM_POINTS: usize = 100;
pub const SPM_DRAWS: usize = 100;
pub const APPENDIX_N: usize = 10;

const K_PAIRS: [(usize, usize); 4] = [(1, 1), (1, 2), (2, 1), (2, 2)];

/// The random unweighted suite shared by criteria 1, 2 and 4.
pub fn unweighted_suite(seed: u64) -> Result<Vec<(ProbingInstance, usize, usize)>> {
    let stream = derive_seed(seed, 1);
    (0..SUITE_INSTANCES)
        .map(|i| {
            let (k_in, k_out) = K_PAIRS[i % K_PAIRS.len()];
            let inst = random_unweighted(&mut trial_rng(stream, i as u64), k_in, k_out)?;
            Ok((inst, k_in, k_out))
        })
        .collect()
}

fn run_suite<F>(seed: u64, check: F) -> Result<Tally>
where
    F: Fn(&ProbingInstance, usize, usize, usize) -> Result<Tally> + Sync,
{
    let suite = unweighted_suite(seed)?;
    let tallies = suite
        .par_iter()
        .enumerate()
        .map(|(i, (inst, k_in, k_out))| check(inst, *k_in, *k_out, i))
        .collect::<Vec<Result<Tally>>>();
    let mut total = Tally::new();
    for t in tallies {
        total.merge(t?);
    }
    Ok(total)
}

fn criterion_1(config: &AcceptanceConfig) -> Result<Tally> {
    run_suite(config.seed, |inst, k_in, k_out, i| {
        let mut t = Tally::new();
        let greedy = exact_greedy_value(inst)?;
        let opt = optimal_adaptive(inst)?;
        t.at_least(greedy, opt / (k_in + k_out) as f64, 1e-9, || {
            format!("instance {i} (k_in={k_in}, k_out={k_out}) greedy vs OPT/k")
        });
        Ok(t)
    })
}

fn criterion_2(config: &AcceptanceConfig) -> Result<Tally> {
    run_suite(config.seed, |inst, k_in, k_out, i| {
        let mut t = Tally::new();
        let paths = enumerate_greedy_paths(inst);
        let mut certs = Vec::with_capacity(paths.len());
        let mut expected = 0.0;
        for (j, path) in paths.iter().enumerate() {
            let cert = build_dual_certificate(inst, path)?;
            let check = check_dual(&cert, inst)?;
            t.holds(check.feasible, || {
                format!("instance {i} path {j} certificate infeasible")
            });
            t.at_least(certificate_bound(inst, path)?, check.value, 1e-9, || {
                format!("instance {i} path {j} budget vs certificate value")
            });
            expected += path.probability * path.chosen.len() as f64;
            certs.push(cert);
        }
        let combined = DualCertificate::combine(paths.iter().map(|p| p.probability).zip(&certs));
        let check = check_dual(&combined, inst)?;
        t.holds(check.feasible, || {
            format!("instance {i} expected certificate infeasible")
        });
        t.at_least((k_in + k_out) as f64 * expected, check.value, 1e-6, || {
            format!("instance {i} k·E[alg] vs expected certificate value")
        });
        Ok(t)
    })
}

fn criterion_3(_: &AcceptanceConfig) -> Result<Tally> {
    let mut t = Tally::new();
    let inst = tightness_fixture(TIGHTNESS_GADGETS)?;
    let greedy = inst.weight_of(&run_greedy(&inst, &vec![true; inst.len()]).chosen);
    let opt = optimal_adaptive(&inst)?;
    let k = inst.inner.k_parameter()? + inst.outer.k_parameter()?;
    t.holds(k == 3 && inst.len() >= 27, || {
        format!("fixture has k = {k} over {} elements", inst.len())
    });
    t.at_least(1.0 / 3.0 + 0.1, greedy / opt, 0.0, || {
        "greedy/OPT ratio".into()
    });
    t.note(format!(
        "greedy {greedy}, OPT {opt}, ratio {}",
        greedy / opt
    ));
    Ok(t)
}

fn criterion_4(config: &AcceptanceConfig) -> Result<Tally> {
    run_suite(config.seed, |inst, _, _, i| {
        let mut t = Tally::new();
        let lp = solve_probing_lp(inst)?;
        t.at_least(lp.objective, optimal_adaptive(inst)?, 1e-6, || {
            format!("instance {i} LP vs OPT")
        });
        Ok(t)
    })
}

fn criterion_5(config: &AcceptanceConfig) -> Result<Tally> {
    let mut t = Tally::new();
    let stream = derive_seed(config.seed, 5);
    let mut run = 0u64;
    for f in ordered_cr_fixtures()? {
        for b in [0.1, 1.0 / (2.0 * f.k as f64 + 1.0)] {
            let spec = CrSchemeSpec::ordered(&f.system, OrderPolicy::ByWeightDesc, b)?;
            let v = verify_scheme(
                spec,
                &f.system,
                &f.z,
                &f.weights,
                config.trials,
                derive_seed(stream, run),
            )?;
            run += 1;
            for r in v.per_element.iter().filter(|r| r.sampled > 0) {
                t.at_least(r.c_hat, spec.target_c - 3.0 * r.std_error, 0.0, || {
                    format!("{} b={b:.4} element {}", f.name, r.element)
                });
            }
        }
    }
    let f = partition_cr_fixture()?;
    let b = 0.25;
    let spec = CrSchemeSpec::partition(PartitionRule::Balanced, b)?;
    let target = partition_target(b);
    let v = verify_scheme(
        spec,
        &f.system,
        &f.z,
        &f.weights,
        config.trials,
        derive_seed(stream, run),
    )?;
    for r in v.per_element.iter().filter(|r| r.sampled > 0) {
        t.at_least(r.c_hat, target - 3.0 * r.std_error, 0.0, || {
            format!("{} balanced element {}", f.name, r.element)
        });
    }
    let exact = CrScheme::new(spec, &f.system, &f.z, &f.weights)?.exact_retention()?;
    for part in [0..4usize, 4..6, 6..7] {
        let q: Vec<f64> = part.clone().map(|e| b * f.z[e]).collect();
        let closed = balanced_retention(&q);
        for e in part {
            t.at_least(1e-9, (exact[e] - closed).abs(), 0.0, || {
                format!("element {e} enumeration vs closed form")
            });
            t.at_least(closed, target, 1e-12, || {
                format!("element {e} closed form vs target")
            });
        }
    }
    Ok(t)
}

/// Checks exact marginals and the simulated value of the rounding on one instance.
fn check_rounding(
    t: &mut Tally,
    label: &str,
    inst: &ProbingInstance,
    config: RoundingConfig,
    trials: usize,
    exact_marginals: bool,
) -> Result<()> {
    let lp = solve_probing_lp(inst)?;
    let g = config.guarantee();
    let rounder = Rounder::new(inst, &lp, config)?;
    if exact_marginals {
        for (e, m) in rounder.exact_marginals()?.iter().enumerate() {
            t.at_least(*m, g * lp.x[e], 1e-6, || {
                format!("{label} element {e} exact marginal")
            });
        }
    } else {
        for (e, m) in estimate_marginals(inst, &lp, config, trials)?
            .iter()
            .enumerate()
        {
            t.at_least(m.mean, g * lp.x[e] - 3.0 * m.std_error, 0.0, || {
                format!("{label} element {e} simulated marginal")
            });
        }
    }
    let value = simulate(&rounder, inst, trials, config.seed)?;
    t.at_least(
        value.mean,
        g * lp.objective - 3.0 * value.std_error,
        0.0,
        || format!("{label} simulated value vs b(c_out + c_in − 1)·LP"),
    );
    Ok(())
}

fn criterion_6(config: &AcceptanceConfig) -> Result<Tally> {
    let mut t = Tally::new();
    let stream = derive_seed(config.seed, 6);
    for i in 0..WEIGHTED_FIXTURES {
        let (k_in, k_out) = K_PAIRS[i % K_PAIRS.len()];
        let inst = random_weighted(&mut trial_rng(stream, i as u64), k_in, k_out)?;
        let rc = RoundingConfig::default_for(&inst, derive_seed(stream, 1_000 + i as u64))?;
        check_rounding(
            &mut t,
            &format!("fixture {i}"),
            &inst,
            rc,
            config.trials,
            true,
        )?;
    }
    Ok(t)
}

fn criterion_7(config: &AcceptanceConfig) -> Result<Tally> {
    let mut t = Tally::new();
    let stream = derive_seed(config.seed, 7);
    let pairs = [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1)];
    let mut index = 0u64;
    for (k_in, k_out) in pairs {
        for _ in 0..3 {
            let inst = random_weighted(&mut trial_rng(stream, index), k_in, k_out)?;
            let rc = RoundingConfig::default_for(&inst, derive_seed(stream, 1_000 + index))?;
            index += 1;
            let k = (k_in + k_out) as f64;
            t.holds((rc.b - 1.0 / (2.0 * k)).abs() < 1e-15, || {
                format!("default b = {}", rc.b)
            });
            let lp = solve_probing_lp(&inst)?;
            let rounder = Rounder::new(&inst, &lp, rc)?;
            let value = simulate(&rounder, &inst, config.trials, rc.seed)?;
            t.at_least(
                value.mean,
                lp.objective / (4.0 * k) - 3.0 * value.std_error,
                0.0,
                || format!("k_in={k_in}, k_out={k_out} fixture {index} value vs LP/(4k)"),
            );
        }
    }
    Ok(t)
}

/// Auction fixtures: six under uniform matroids, four under bipartite matchings.
pub fn spm_fixtures(seed: u64) -> Result<Vec<AuctionSpec>> {
    let stream = derive_seed(seed, 8);
    let mut out = Vec::new();
    for i in 0..6 {
        out.push(spm_uniform(&mut trial_rng(stream, i))?);
    }
    for i in 6..10 {
        out.push(spm_matching(&mut trial_rng(stream, i))?);
    }
    Ok(out)
}

fn criterion_8(config: &AcceptanceConfig) -> Result<Tally> {
    let mut t = Tally::new();
    for (i, spec) in spm_fixtures(config.seed)?.iter().enumerate() {
        let k = spec.k()? as f64;
        let instance = build_probing_instance(spec)?;
        let lp_p = solve_probing_lp(&instance)?;
        let lp_m = solve_lp_m(spec)?;
        t.at_least(lp_p.objective, lp_m.objective, 1e-6, || {
            format!("auction {i} LP_P vs LP_M")
        });
        let seed = derive_seed(config.seed, 800 + i as u64);
        let rc = spm_rounding_config(spec, &instance, seed)?;
        let builder = SpmBuilder::new(spec, &instance, &lp_p, rc)?;
        let revenues = (0..SPM_DRAWS as u64)
            .map(|d| exact_revenue(&builder.draw(&mut trial_rng(seed, d)), spec))
            .collect::<Result<Vec<f64>>>()?;
        let mean = revenues.iter().sum::<f64>() / revenues.len() as f64;
        t.at_least(mean, lp_m.objective / (4.0 * k + 2.0), 1e-3, || {
            format!("auction {i} (k={k}) mean revenue vs LP_M/(4k+2)")
        });
    }
    Ok(t)
}

/// A random monotone allocation table scaled into the feasibility polytope.
pub fn random_mechanism_point<R: Rng + ?Sized>(
    spec: &AuctionSpec,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let width = spec.max_value() + 1;
    let mut z: Vec<Vec<f64>> = (0..spec.agents())
        .map(|_| {
            let mut row: Vec<f64> = (0..width).map(|_| rng.gen::<f64>()).collect();
            row.sort_by(f64::total_cmp);
            row
        })
        .collect();
    for _ in 0..1_000 {
        let x = service_probabilities(spec, &z);
        let Some(w) = spec.feasibility.separate(&x)? else {
            return Ok(z);
        };
        let scale = w.rank as f64 / w.value * (1.0 - 1e-12);
        for row in &mut z {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
    Err(ProbingError::contract(
        "random mechanism point did not settle",
    ))
}

fn criterion_9(config: &AcceptanceConfig) -> Result<Tally> {
    let mut t = Tally::new();
    let specs = spm_fixtures(config.seed)?;
    let stream = derive_seed(config.seed, 9);
    for j in 0..TRANSFORM_POINTS {
        let spec = &specs[j % specs.len()];
        let z = random_mechanism_point(spec, &mut trial_rng(stream, j as u64))?;
        let y = transform_z_to_y(spec, &z)?;
        let instance = build_probing_instance(spec)?;
        let feasible = y.check_feasible(&instance);
        t.holds(feasible.is_ok(), || {
            format!("point {j}: {}", feasible.as_ref().unwrap_err())
        });
        t.at_least(
            1e-9,
            (y.objective - lp_m_objective(spec, &z)).abs(),
            0.0,
            || format!("point {j} objective gap"),
        );
    }
    Ok(t)
}

fn criterion_10(config: &AcceptanceConfig) -> Result<Tally> {
    let stream = derive_seed(config.seed, 10);
    let tallies = (0..DEADLINE_INSTANCES)
        .into_par_iter()
        .map(|i| -> Result<Tally> {
            let mut t = Tally::new();
            let (k_in, k_out) = K_PAIRS[i % K_PAIRS.len()];
            let inst = random_deadline(&mut trial_rng(stream, i as u64), k_in, k_out)?;
            let alg = exact_deadline_greedy_value(&inst)?;
            let opt = optimal_adaptive_deadline(&inst)?;
            t.at_least(alg, opt / (2.0 * (k_in + k_out + 1) as f64), 1e-9, || {
                format!("instance {i} (k_in={k_in}, k_out={k_out}) deadline greedy vs OPT")
            });
            for (j, path) in enumerate_deadline_paths(&inst)?.iter().enumerate() {
                t.at_least(
                    2.0 * path.real_probe_mass(&inst),
                    path.probed_mass(&inst),
                    1e-12,
                    || format!("instance {i} path {j} probe mass"),
                );
            }
            Ok(t)
        })
        .collect::<Vec<_>>();
    let mut total = Tally::new();
    for t in tallies {
        total.merge(t?);
    }
    Ok(total)
}

fn criterion_11(config: &AcceptanceConfig) -> Result<Tally> {
    let mut t = Tally::new();
    let stream = derive_seed(config.seed, 11);
    for (i, f) in appendix_fixtures(APPENDIX_N)?.iter().enumerate() {
        let inst = &f.instance;
        let rc = RoundingConfig::default_for(inst, derive_seed(stream, i as u64))?;
        let lp = solve_probing_lp(inst)?;
        let bound = rc.guarantee() * lp.objective;
        let policy = f.baseline_policy(rc.b);
        let baseline: PolicyValueReport = match policy.exact(inst) {
            Ok(exact) => PolicyValueReport::exact(exact.value),
            Err(ProbingError::Capability(_)) => simulate(
                &policy,
                inst,
                config.trials,
                derive_seed(stream, 100 + i as u64),
            )?,
            Err(e) => return Err(e),
        };
        let how = if baseline.method == Method::Exact {
            "exact"
        } else {
            "simulated"
        };
        t.note(format!(
            "{}: baseline {how} {:.6} vs half bound {:.6} (b = {}, LP = {:.6})",
            f.name,
            baseline.mean,
            0.5 * bound,
            rc.b,
            lp.objective
        ));
        t.at_least(0.5 * bound, baseline.mean, 0.0, || {
            format!("{} baseline below half the bound", f.name)
        });
        let exact =
            lp.x.iter().filter(|&&x| x > 0.0).count() <= crate::rounding::EXACT_MARGINAL_CAP;
        check_rounding(&mut t, &f.name, inst, rc, config.trials, exact)?;
    }
    Ok(t)
}

/// Runs one criterion by its number.
pub fn run_criterion(id: usize, config: &AcceptanceConfig) -> Result<CriterionResult> {
    if config.trials == 0 {
        return Err(ProbingError::config("trials must be at least 1"));
    }
    let start = Instant::now();
    let (tally, budget) = match id {
        1 => (criterion_1(config)?, Some(60.0)),
        2 => (criterion_2(config)?, None),
        3 => (criterion_3(config)?, None),
        4 => (criterion_4(config)?, None),
        5 => (criterion_5(config)?, Some(120.0)),
        6 => (criterion_6(config)?, None),
        7 => (criterion_7(config)?, None),
        8 => (criterion_8(config)?, Some(120.0)),
        9 => (criterion_9(config)?, None),
        10 => (criterion_10(config)?, None),
        11 => (criterion_11(config)?, None),
        _ => {
            return Err(ProbingError::config(format!(
                "no criterion {id}; valid ids are 1..={CRITERIA}"
            )))
        }
    };
    Ok(tally.finish(id, start, budget))
}

pub fn run_all(config: &AcceptanceConfig) -> Result<AcceptanceReport> {
    let criteria = (1..=CRITERIA)
        .map(|id| run_criterion(id, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(AcceptanceReport {
        config: *config,
        criteria,
    })
}
