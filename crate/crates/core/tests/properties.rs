use num_bigint::BigUint;
use proptest::prelude::*;
use rand::Rng;
use sharpk_core::decider::{ExactDecider, SatDecider, SchoeningDecider};
use sharpk_core::rng::stream;
use sharpk_core::{
    brute_force_count, count_2sat_exact, count_exact, generate, parse_dimacs, serialize_dimacs,
    Clause, CnfFormula, GeneratorMode, GeneratorSpec, PartialAssignment,
};

fn formula(max_n: u32, max_k: usize, max_m: usize) -> impl Strategy<Value = CnfFormula> {
    (1..=max_n).prop_flat_map(move |n| {
        let lit = (1..=n as i64, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v });
        let clause = prop::collection::vec(lit, 1..=max_k);
        prop::collection::vec(clause, 0..=max_m).prop_map(move |cs| {
            let clauses: Vec<Clause> = cs.iter().filter_map(|c| Clause::from_dimacs(c)).collect();
            CnfFormula::new(n, clauses).unwrap()
        })
    })
}

fn assignment(n: u32) -> impl Strategy<Value = Vec<Option<bool>>> {
    prop::collection::vec(prop::option::of(any::<bool>()), n as usize)
}

fn from_options(vals: &[Option<bool>], keep: impl Fn(usize) -> bool) -> PartialAssignment {
    PartialAssignment::from_pairs(
        vals.iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .filter_map(|(i, v)| v.map(|b| (i as u32 + 1, b))),
    )
}

fn canonical(phi: &CnfFormula) -> Vec<Clause> {
    let mut cs = phi.clauses().to_vec();
    cs.sort();
    cs.dedup();
    cs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn restriction_composes(
        (phi, vals, split) in formula(10, 4, 12)
            .prop_flat_map(|phi| { let n = phi.num_vars(); (Just(phi), assignment(n), 0..=n as usize) })
    ) {
        let b1 = from_options(&vals, |i| i < split);
        let b2 = from_options(&vals, |i| i >= split);
        let both = from_options(&vals, |_| true);
        let stepwise = phi.restrict(&b1).restrict(&b2);
        let once = phi.restrict(&both);
        prop_assert_eq!(canonical(&stepwise), canonical(&once));
        prop_assert_eq!(stepwise.num_free_vars(), once.num_free_vars());
    }

    #[test]
    fn full_restriction_matches_evaluation(
        (phi, mask) in formula(10, 4, 12).prop_flat_map(|phi| (Just(phi), any::<u64>()))
    ) {
        let b = PartialAssignment::from_mask(phi.num_vars(), mask);
        let r = phi.restrict(&b);
        prop_assert_eq!(
            phi.evaluate(&b).unwrap(),
            r.num_clauses() == 0 && !r.has_empty_clause()
        );
    }

    #[test]
    fn dimacs_round_trip_preserves_count(phi in formula(12, 4, 20)) {
        let back = parse_dimacs(&serialize_dimacs(&phi)).unwrap();
        prop_assert_eq!(count_exact(&back).value, count_exact(&phi).value);
        prop_assert_eq!(back.num_vars(), phi.num_vars());
    }

    #[test]
    fn restricted_round_trip_preserves_count(
        (phi, vals) in formula(12, 3, 20).prop_flat_map(|phi| { let n = phi.num_vars(); (Just(phi), assignment(n)) })
    ) {
        let r = phi.restrict(&from_options(&vals, |i| i % 2 == 0));
        let back = parse_dimacs(&serialize_dimacs(&r)).unwrap();
        prop_assert_eq!(count_exact(&back).value, count_exact(&r).value);
    }

    #[test]
    fn branching_counter_matches_brute_force(phi in formula(14, 4, 30)) {
        prop_assert_eq!(count_exact(&phi).value, brute_force_count(&phi, 28).unwrap().value);
    }

    #[test]
    fn counts_of_restrictions_match_brute_force(
        (phi, vals) in formula(12, 3, 24).prop_flat_map(|phi| { let n = phi.num_vars(); (Just(phi), assignment(n)) })
    ) {
        let r = phi.restrict(&from_options(&vals, |_| true));
        prop_assert_eq!(count_exact(&r).value, brute_force_count(&r, 28).unwrap().value);
    }

    #[test]
    fn disjoint_parts_multiply(a in formula(8, 3, 10), b in formula(8, 3, 10)) {
        // shift b onto fresh variables
        let shift = a.num_vars() as i64;
        let shifted: Vec<Clause> = b
            .clauses()
            .iter()
            .map(|c| {
                let lits: Vec<i64> = c
                    .literals()
                    .iter()
                    .map(|l| { let d = l.to_dimacs(); d.signum() * (d.abs() + shift) })
                    .collect();
                Clause::from_dimacs(&lits).unwrap()
            })
            .collect();
        let mut all = a.clauses().to_vec();
        all.extend(shifted);
        let joint = CnfFormula::new(a.num_vars() + b.num_vars(), all).unwrap();
        let product = brute_force_count(&a, 28).unwrap().value * brute_force_count(&b, 28).unwrap().value;
        prop_assert_eq!(brute_force_count(&joint, 28).unwrap().value, product.clone());
        prop_assert_eq!(count_exact(&joint).value, product);
    }

    #[test]
    fn witnesses_are_models(phi in formula(12, 3, 30), seed in any::<u64>()) {
        let d = SchoeningDecider { exhaustive_threshold: 0 };
        let out = d.decide(&phi, 0.01, &mut stream(seed));
        if let Some(w) = &out.witness {
            prop_assert!(phi.evaluate(w).unwrap());
        }
        prop_assert_eq!(out.satisfiable, out.witness.is_some());
        // one-sided: never SAT on an unsatisfiable formula
        if count_exact(&phi).value == BigUint::ZERO {
            prop_assert!(!out.satisfiable);
        }
    }
}

#[test]
fn two_sat_counter_matches_brute_force_on_500_formulas() {
    let mut rng = stream(2024);
    for case in 0..500 {
        let n: u32 = rng.gen_range(1..=18);
        let m = rng.gen_range(0..=2 * n as usize);
        let clauses: Vec<Clause> = (0..m)
            .filter_map(|_| {
                let len = rng.gen_range(1..=2);
                let lits: Vec<i64> = (0..len)
                    .map(|_| {
                        let v = rng.gen_range(1..=n as i64);
                        if rng.gen() {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect();
                Clause::from_dimacs(&lits)
            })
            .collect();
        let phi = CnfFormula::new(n, clauses).unwrap();
        assert_eq!(
            count_2sat_exact(&phi).unwrap().value,
            brute_force_count(&phi, 28).unwrap().value,
            "case {case}"
        );
    }
}

#[test]
fn untouched_variables_double_the_count() {
    let phi = CnfFormula::from_dimacs_clauses(3, &[&[1, -2]]);
    let wider = CnfFormula::from_dimacs_clauses(6, &[&[1, -2]]);
    assert_eq!(count_exact(&wider).value, count_exact(&phi).value * 8u32);
}

#[test]
fn decider_is_right_on_unsatisfiable_formulas() {
    // small formulas use complete search: zero wrong verdicts allowed
    let d = SchoeningDecider::default();
    let mut rng = stream(5);
    let mut checked = 0;
    for seed in 0..4000 {
        let phi = generate(&GeneratorSpec {
            n: 8,
            m: 60,
            k: 3,
            seed,
            mode: GeneratorMode::Uniform,
        })
        .unwrap();
        if ExactDecider.decide(&phi, 0.01, &mut rng).satisfiable {
            continue;
        }
        checked += 1;
        assert!(!d.decide(&phi, 0.01, &mut rng).satisfiable);
    }
    assert!(checked > 100, "only {checked} unsatisfiable samples");
}

#[test]
fn random_walk_misses_at_most_rarely() {
    // satisfiable inputs with the walk forced: wrong UNSAT rate within slack
    let d = SchoeningDecider {
        exhaustive_threshold: 0,
    };
    let mut wrong = 0;
    let trials = 2000;
    for seed in 0..trials {
        let phi = generate(&GeneratorSpec {
            n: 16,
            m: 64,
            k: 3,
            seed,
            mode: GeneratorMode::Planted,
        })
        .unwrap();
        if !d.decide(&phi, 0.01, &mut stream(seed ^ 0xABCD)).satisfiable {
            wrong += 1;
        }
    }
    assert!(
        wrong as f64 / trials as f64 <= 0.02,
        "{wrong} wrong verdicts"
    );
}

#[test]
fn planted_thirty_variable_instance_is_found() {
    let phi = generate(&GeneratorSpec {
        n: 30,
        m: 120,
        k: 3,
        seed: 11,
        mode: GeneratorMode::Planted,
    })
    .unwrap();
    let out = SchoeningDecider::default().decide(&phi, 1e-6, &mut stream(3));
    assert!(out.satisfiable);
    assert!(phi.evaluate(out.witness.as_ref().unwrap()).unwrap());
}
