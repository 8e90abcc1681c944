use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use probing::acceptance::{run_criterion, AcceptanceConfig, CRITERIA, DEFAULT_TRIALS};
use probing::cr::{verify_scheme, CrKind, CrSchemeSpec, OrderPolicy};
use probing::eval::{
    exact_nonadaptive_value, optimal_adaptive, optimal_adaptive_deadline, simulate,
    DeadlineGreedyPolicy, PermutationPolicy, PolicyValueReport, EXACT_CAP, OPT_CAP,
    OPT_DEADLINE_CAP,
};
use probing::format::{parse_auction, parse_instance, Parsed};
use probing::greedy::{
    build_dual_certificate, certificate_bound, enumerate_greedy_paths, exact_deadline_greedy_value,
    greedy_order,
};
use probing::lp::{check_dual, solve_probing_lp, DualCertificate};
use probing::rng::{trial_rng, DEFAULT_SEED};
use probing::rounding::{default_b, estimate_policy_value, Rounder, RoundingConfig, SchemeChoice};
use probing::spm::{
    build_probing_instance, build_spm_best_of, evaluate_spm, solve_lp_m, spm_rounding_config,
    EvalMode, SpmBuilder,
};
use probing::ProbingInstance;

use crate::report::{Provenance, RunReport};
use crate::{Cli, Command, PolicyKind};

const DEFAULT_CLI_TRIALS: usize = 10_000;
/// Largest instance whose deadline paths are enumerated.
const DEADLINE_EXACT_CAP: usize = 12;

pub fn run(cli: &Cli, argv: Vec<String>) -> Result<RunReport> {
    let mut echo = vec!["probe".to_string()];
    echo.extend(argv.into_iter().skip(1));
    let mut report = RunReport::new(echo);
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let trials = cli.trials.unwrap_or(DEFAULT_CLI_TRIALS);
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    match &cli.command {
        Command::Acceptance { criteria } => acceptance(cli, criteria, &mut report)?,
        Command::Spm => spm(cli, seed, &mut report)?,
        command => {
            let instance = load_instance(cli, &mut report)?;
            match command {
                Command::Greedy => greedy(&instance, seed, trials, &mut report)?,
                Command::GreedyDeadline => greedy_deadline(&instance, seed, trials, &mut report)?,
                Command::Lp => lp(&instance, &mut report)?,
                Command::Round => round(cli, &instance, seed, trials, &mut report)?,
                Command::Simulate { policy } => {
                    simulate_cmd(cli, policy, &instance, seed, trials, &mut report)?
                }
                Command::Oracle { deadline } => oracle(&instance, *deadline, &mut report)?,
                Command::Certify => certify(&instance, &mut report)?,
                Command::VerifyCr => verify_cr(cli, &instance, seed, trials, &mut report)?,
                Command::Acceptance { .. } | Command::Spm => unreachable!("handled above"),
            }
            report.config("seed", seed);
        }
    }
    Ok(report)
}

fn read_document(cli: &Cli) -> Result<String> {
    let path = cli
        .instance
        .as_ref()
        .context("--instance <path> is required")?;
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_instance(cli: &Cli, report: &mut RunReport) -> Result<ProbingInstance> {
    let Parsed { value, warnings } = parse_instance(&read_document(cli)?, cli.strict)?;
    report.warnings = warnings;
    report.config("elements", value.len());
    report.config("k_in", value.inner.k_parameter()?);
    report.config("k_out", value.outer.k_parameter()?);
    Ok(value)
}

fn greedy(
    instance: &ProbingInstance,
    seed: u64,
    trials: usize,
    report: &mut RunReport,
) -> Result<()> {
    let order = greedy_order(instance);
    report.detail("order", json!(order));
    if instance.len() <= EXACT_CAP {
        report.metric(
            "greedy_value",
            exact_nonadaptive_value(&order, instance)?,
            Provenance::Exact,
        );
    } else {
        report.estimate(
            "greedy_value",
            &simulate(&PermutationPolicy { order }, instance, trials, seed)?,
        );
        report.config("trials", trials);
    }
    if instance.len() <= OPT_CAP {
        let opt = optimal_adaptive(instance)?;
        report.metric("opt", opt, Provenance::Oracle);
        report.ratio("greedy_over_opt", "greedy_value", "opt");
    }
    Ok(())
}

fn greedy_deadline(
    instance: &ProbingInstance,
    seed: u64,
    trials: usize,
    report: &mut RunReport,
) -> Result<()> {
    instance.deadlines()?;
    if instance.len() <= DEADLINE_EXACT_CAP {
        report.metric(
            "greedy_value",
            exact_deadline_greedy_value(instance)?,
            Provenance::Exact,
        );
    } else {
        report.estimate(
            "greedy_value",
            &simulate(&DeadlineGreedyPolicy, instance, trials, seed)?,
        );
        report.config("trials", trials);
    }
    if instance.len() <= OPT_DEADLINE_CAP {
        report.metric(
            "opt",
            optimal_adaptive_deadline(instance)?,
            Provenance::Oracle,
        );
        report.ratio("greedy_over_opt", "greedy_value", "opt");
    }
    Ok(())
}

fn lp(instance: &ProbingInstance, report: &mut RunReport) -> Result<()> {
    let sol = solve_probing_lp(instance)?;
    report.metric("lp_objective", sol.objective, Provenance::Exact);
    report.detail("x", json!(sol.x));
    report.detail("y", json!(sol.y));
    report.detail("cuts", json!(sol.cuts.len()));
    report.detail("rounds", json!(sol.rounds));
    Ok(())
}

fn scheme(flag: &Option<String>, default: CrKind) -> Result<CrKind> {
    match flag {
        Some(text) => Ok(text.parse::<SchemeChoice>()?.0),
        None => Ok(default),
    }
}

fn rounding_config(
    cli: &Cli,
    instance: &ProbingInstance,
    seed: u64,
    report: &mut RunReport,
) -> Result<RoundingConfig> {
    let b = match cli.b {
        Some(b) => b,
        None => default_b(instance)?,
    };
    let outer = scheme(
        &cli.outer_scheme,
        CrKind::OrderedKSystem {
            order: OrderPolicy::ByIndex,
        },
    )?;
    let inner = scheme(
        &cli.inner_scheme,
        CrKind::OrderedKSystem {
            order: OrderPolicy::ByWeightDesc,
        },
    )?;
    let config = RoundingConfig::for_instance(instance, b, outer, inner, seed)?;
    report.config("b", b);
    report.config("outer_scheme", serde_json::to_value(config.outer)?);
    report.config("inner_scheme", serde_json::to_value(config.inner)?);
    report.metric("guarantee", config.guarantee(), Provenance::Exact);
    Ok(config)
}

fn round(
    cli: &Cli,
    instance: &ProbingInstance,
    seed: u64,
    trials: usize,
    report: &mut RunReport,
) -> Result<()> {
    let lp = solve_probing_lp(instance)?;
    let config = rounding_config(cli, instance, seed, report)?;
    report.metric("lp_objective", lp.objective, Provenance::Exact);
    report.metric(
        "bound",
        config.guarantee() * lp.objective,
        Provenance::Exact,
    );
    let rounder = Rounder::new(instance, &lp, config)?;
    let policy = rounder.round(&mut trial_rng(seed, 0));
    report.detail("probe_sequence", json!(policy.probe_sequence));
    if instance.len() <= EXACT_CAP {
        report.metric(
            "drawn_policy_value",
            exact_nonadaptive_value(&policy.probe_sequence, instance)?,
            Provenance::Exact,
        );
    }
    report.estimate(
        "expected_value",
        &estimate_policy_value(instance, &lp, config, trials)?,
    );
    report.config("trials", trials);
    report.ratio("value_over_lp", "expected_value", "lp_objective");
    Ok(())
}

fn simulate_cmd(
    cli: &Cli,
    policy: &PolicyKind,
    instance: &ProbingInstance,
    seed: u64,
    trials: usize,
    report: &mut RunReport,
) -> Result<()> {
    report.config("trials", trials);
    let value: PolicyValueReport = match policy {
        PolicyKind::Greedy => {
            report.config("policy", "greedy");
            simulate(&PermutationPolicy::greedy(instance), instance, trials, seed)?
        }
        PolicyKind::DeadlineGreedy => {
            report.config("policy", "deadline-greedy");
            instance.deadlines()?;
            simulate(&DeadlineGreedyPolicy, instance, trials, seed)?
        }
        PolicyKind::Rounding => {
            report.config("policy", "rounding");
            let lp = solve_probing_lp(instance)?;
            let config = rounding_config(cli, instance, seed, report)?;
            report.metric("lp_objective", lp.objective, Provenance::Exact);
            let value = simulate(
                &Rounder::new(instance, &lp, config)?,
                instance,
                trials,
                seed,
            )?;
            report.estimate("value", &value);
            report.ratio("value_over_lp", "value", "lp_objective");
            return Ok(());
        }
    };
    report.estimate("value", &value);
    Ok(())
}

fn oracle(instance: &ProbingInstance, deadline: bool, report: &mut RunReport) -> Result<()> {
    let opt = if deadline {
        optimal_adaptive_deadline(instance)?
    } else {
        optimal_adaptive(instance)?
    };
    report.config("deadline", deadline);
    report.metric("opt", opt, Provenance::Oracle);
    Ok(())
}

fn certify(instance: &ProbingInstance, report: &mut RunReport) -> Result<()> {
    if instance.len() > EXACT_CAP {
        bail!("certify enumerates greedy paths and supports at most {EXACT_CAP} elements");
    }
    let unit = instance.weights().iter().all(|&w| w == 1.0);
    let inst = if unit {
        instance.clone()
    } else {
        instance.unweighted()
    };
    if !unit {
        report
            .warnings
            .push("weights replaced by 1 for the unweighted certificate".into());
    }
    let k = (inst.inner.k_parameter()? + inst.outer.k_parameter()?) as f64;
    let paths = enumerate_greedy_paths(&inst);
    let mut certs = Vec::with_capacity(paths.len());
    let mut rows = Vec::with_capacity(paths.len());
    let mut all_feasible = true;
    let mut all_within = true;
    let mut expected = 0.0;
    for path in &paths {
        let cert = build_dual_certificate(&inst, path)?;
        let check = check_dual(&cert, &inst)?;
        let budget = certificate_bound(&inst, path)?;
        let within = check.value <= budget + 1e-9;
        all_feasible &= check.feasible;
        all_within &= within;
        expected += path.probability * path.chosen.len() as f64;
        rows.push(json!({
            "probability": path.probability,
            "probed": path.probed,
            "chosen": path.chosen.to_vec(),
            "feasible": check.feasible,
            "min_slack": check.min_slack,
            "value": check.value,
            "budget": budget,
        }));
        certs.push(cert);
    }
    let combined = DualCertificate::combine(paths.iter().map(|p| p.probability).zip(&certs));
    let check = check_dual(&combined, &inst)?;
    report.metric("greedy_value", expected, Provenance::Exact);
    report.metric("expected_certificate", check.value, Provenance::Exact);
    report.ratio(
        "certificate_over_greedy",
        "expected_certificate",
        "greedy_value",
    );
    report.detail("paths", Value::Array(rows));
    report.check(
        "paths_dual_feasible",
        all_feasible,
        format!("{} paths", paths.len()),
    );
    report.check(
        "paths_within_budget",
        all_within,
        "value <= k_in|S| + k_out·p(Q)",
    );
    report.check(
        "expected_certificate_feasible",
        check.feasible,
        format!("min slack {}", check.min_slack),
    );
    report.check(
        "expected_certificate_bound",
        check.value <= k * expected + 1e-6,
        format!("{} <= {k}·{expected}", check.value),
    );
    Ok(())
}

fn verify_cr(
    cli: &Cli,
    instance: &ProbingInstance,
    seed: u64,
    trials: usize,
    report: &mut RunReport,
) -> Result<()> {
    let lp = solve_probing_lp(instance)?;
    let config = rounding_config(cli, instance, seed, report)?;
    report.config("trials", trials);
    let weights = instance.weights();
    let sides: [(&str, CrSchemeSpec, &probing::ConstraintSystem, &[f64]); 2] = [
        ("outer", config.outer, &instance.outer, &lp.y),
        ("inner", config.inner, &instance.inner, &lp.x),
    ];
    for (k, (side, spec, system, z)) in sides.into_iter().enumerate() {
        let z: Vec<f64> = z.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let v = verify_scheme(
            spec,
            system,
            &z,
            &weights,
            trials,
            probing::rng::derive_seed(seed, k as u64),
        )?;
        report.metric(
            &format!("{side}_target_c"),
            spec.target_c,
            Provenance::Exact,
        );
        report.detail(
            &format!("{side}_retention"),
            serde_json::to_value(&v.per_element)?,
        );
        report.check(
            &format!("{side}_retention"),
            v.passed,
            format!("worst margin {}", v.worst_margin()),
        );
    }
    Ok(())
}

fn spm(cli: &Cli, seed: u64, report: &mut RunReport) -> Result<()> {
    let Parsed {
        value: spec,
        warnings,
    } = parse_auction(&read_document(cli)?, cli.strict)?;
    report.warnings = warnings;
    let k = spec.k()?;
    let m = cli.best_of.unwrap_or(1);
    report.config("seed", seed);
    report.config("agents", spec.agents());
    report.config("max_value", spec.max_value());
    report.config("k", k);
    report.config("best_of", m);
    let instance = build_probing_instance(&spec)?;
    let lp_p = solve_probing_lp(&instance)?;
    let lp_m = solve_lp_m(&spec)?;
    report.metric("lp_p", lp_p.objective, Provenance::Exact);
    report.metric("lp_m", lp_m.objective, Provenance::Exact);
    let (mech, revenue) = if m > 1 {
        build_spm_best_of(&spec, m, seed)?
    } else {
        let config = spm_rounding_config(&spec, &instance, seed)?;
        let mech = SpmBuilder::new(&spec, &instance, &lp_p, config)?.draw(&mut trial_rng(seed, 0));
        let revenue = evaluate_spm(&mech, &spec, EvalMode::Exact)?.mean;
        (mech, revenue)
    };
    report.metric("revenue", revenue, Provenance::Exact);
    report.metric(
        "bound",
        lp_m.objective / (4.0 * k as f64 + 2.0),
        Provenance::Exact,
    );
    report.ratio("revenue_over_lp_m", "revenue", "lp_m");
    report.detail("offers", serde_json::to_value(&mech.offers)?);
    report.check(
        "lp_p_dominates_lp_m",
        lp_p.objective >= lp_m.objective - 1e-6,
        format!("{} >= {}", lp_p.objective, lp_m.objective),
    );
    Ok(())
}

fn acceptance(cli: &Cli, criteria: &[usize], report: &mut RunReport) -> Result<()> {
    let seed = cli.seed.context("acceptance requires an explicit --seed")?;
    let config = AcceptanceConfig {
        seed,
        trials: cli.trials.unwrap_or(DEFAULT_TRIALS),
    };
    report.config("seed", seed);
    report.config("trials", config.trials);
    let ids: Vec<usize> = if criteria.is_empty() {
        (1..=CRITERIA).collect()
    } else {
        criteria.to_vec()
    };
    let mut table = Vec::new();
    for id in ids {
        let r = run_criterion(id, &config)?;
        report.check(
            &format!("criterion_{id:02}"),
            r.passed,
            format!(
                "{}: {} cases, {} failures, worst margin {:e}",
                r.name, r.cases, r.failures, r.worst_margin
            ),
        );
        table.push(json!({
            "id": r.id,
            "name": r.name,
            "passed": r.passed,
            "cases": r.cases,
            "failures": r.failures,
            "worst_margin": r.worst_margin,
            "notes": r.notes,
        }));
    }
    report.detail("criteria", Value::Array(table));
    Ok(())
}
