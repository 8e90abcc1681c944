use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use probing::acceptance::fixtures::{random_system, random_unweighted, MatroidFamily};
use probing::eval::{appendix_fixtures, exact_greedy_value, optimal_adaptive};
use probing::format::{emit_instance, parse_instance};
use probing::greedy::{build_dual_certificate, enumerate_greedy_paths};
use probing::lp::{check_dual, solve_probing_lp, DualCertificate};
use probing::{ConstraintSystem, Element, ElementSet, ProbingInstance};

fn system(seed: u64, n: usize, k: usize) -> ConstraintSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_system(&mut rng, n, k, MatroidFamily::PartitionOrGraphic).unwrap()
}

fn brute_rank(sys: &ConstraintSystem, s: ElementSet) -> usize {
    s.subsets()
        .filter(|t| sys.independent(*t))
        .map(|t| t.len())
        .max()
        .unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn arbitrary_floats_round_trip(ps in prop::collection::vec(0.0f64..=1.0, 1..12), scale in 0.0f64..1e6) {
        let n = ps.len();
        let elements = ps.iter().map(|&p| Element::new(p * scale, p)).collect();
        let inst = ProbingInstance::new(elements, ConstraintSystem::free(n).unwrap(), ConstraintSystem::uniform(n, 1).unwrap()).unwrap();
        prop_assert_eq!(parse_instance(&emit_instance(&inst), true).unwrap().value, inst);
    }

    #[test]
    fn independence_is_downward_closed(seed in any::<u64>(), n in 2usize..9, k in 1usize..3) {
        let sys = system(seed, n, k);
        for s in ElementSet::full(n).subsets().filter(|s| sys.independent(*s)) {
            for e in s.iter() {
                prop_assert!(sys.independent(s.without(e)));
            }
        }
    }

    #[test]
    fn single_matroids_satisfy_exchange(seed in any::<u64>(), n in 2usize..8) {
        let sys = system(seed, n, 1);
        let independent: Vec<ElementSet> =
            ElementSet::full(n).subsets().filter(|s| sys.independent(*s)).collect();
        for a in &independent {
            for b in independent.iter().filter(|b| b.len() > a.len()) {
                prop_assert!(b.difference(a).iter().any(|e| sys.independent(a.with(e))));
            }
        }
    }

    #[test]
    fn rank_and_span_agree_with_enumeration(seed in any::<u64>(), n in 2usize..8, k in 1usize..3, mask in any::<u64>()) {
        let sys = system(seed, n, k);
        let t = ElementSet::from_mask(mask & ((1 << n) - 1));
        prop_assert_eq!(sys.rank(&t).unwrap(), brute_rank(&sys, t));
        if k == 1 {
            let span = sys.span(&t).unwrap();
            let r = brute_rank(&sys, t);
            for e in 0..n {
                prop_assert_eq!(span.contains(e), brute_rank(&sys, t.with(e)) == r);
            }
        }
    }

    #[test]
    fn separation_matches_enumeration(seed in any::<u64>(), n in 2usize..8, xs in prop::collection::vec(0.0f64..1.0, 8)) {
        let sys = system(seed, n, 1);
        let x = &xs[..n];
        let violated = ElementSet::full(n)
            .subsets()
            .any(|s| s.iter().map(|e| x[e]).sum::<f64>() > sys.rank(&s).unwrap() as f64 + 1e-9);
        prop_assert_eq!(sys.separate(x).unwrap().is_some(), violated);
    }

    #[test]
    fn lp_scales_with_weights(seed in any::<u64>(), factor in 0.5f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_unweighted(&mut rng, 1, 1).unwrap();
        let mut scaled = inst.clone();
        for el in &mut scaled.elements {
            el.weight *= factor;
        }
        let a = solve_probing_lp(&inst).unwrap().objective;
        let b = solve_probing_lp(&scaled).unwrap().objective;
        prop_assert!((b - factor * a).abs() <= 1e-6 * (1.0 + b.abs()));
    }

    #[test]
    fn expected_certificate_bounds_opt(seed in any::<u64>(), k_in in 1usize..3, k_out in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_unweighted(&mut rng, k_in, k_out).unwrap();
        let paths = enumerate_greedy_paths(&inst);
        let certs: Vec<DualCertificate> =
            paths.iter().map(|p| build_dual_certificate(&inst, p).unwrap()).collect();
        let combined = DualCertificate::combine(paths.iter().map(|p| p.probability).zip(&certs));
        let check = check_dual(&combined, &inst).unwrap();
        prop_assert!(check.feasible);
        let opt = optimal_adaptive(&inst).unwrap();
        prop_assert!(check.value >= opt - 1e-6);
        prop_assert!(exact_greedy_value(&inst).unwrap() <= opt + 1e-9);
    }
}

#[test]
fn appendix_fixtures_round_trip() {
    for n in [3, 10] {
        for f in appendix_fixtures(n).unwrap() {
            let text = emit_instance(&f.instance);
            let back = parse_instance(&text, true).unwrap().value;
            assert_eq!(back, f.instance, "{}", f.name);
            assert_eq!(emit_instance(&back), text);
        }
    }
}
