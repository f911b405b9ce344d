mod common;

use common::*;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use sharpk_core::rng::stream;
use sharpk_core::{
    chi_square_uniformity, count_exact, mc_estimate, sample_universe, CnfFormula, McOptions,
    Struct, StructSet, Universe,
};

#[test]
fn universe_size_matches_brute_force() {
    let mut rng = stream(77);
    for _ in 0..60 {
        let (phi, psi) = random_struct_set(&mut rng, 18);
        let u = Universe::new(&phi, &psi).unwrap();
        assert_eq!(u.size(), &brute_universe(phi.num_vars(), &psi));
    }
}

#[test]
fn every_sample_satisfies_the_structs() {
    let mut rng = stream(78);
    for _ in 0..40 {
        let (phi, psi) = random_struct_set(&mut rng, 20);
        let u = Universe::new(&phi, &psi).unwrap();
        for _ in 0..50 {
            let b = sample_universe(&u, &mut rng);
            assert_eq!(b.len(), phi.num_vars() as usize);
            for s in psi.iter() {
                assert!(s.clauses().iter().all(|c| c.eval_partial(&b) == Some(true)));
            }
        }
    }
}

fn uniformity_p(phi: &CnfFormula, psi: &StructSet, draws: usize, seed: u64) -> f64 {
    let u = Universe::new(phi, psi).unwrap();
    let mut rng = stream(seed);
    let samples: Vec<_> = (0..draws).map(|_| sample_universe(&u, &mut rng)).collect();
    chi_square_uniformity(&samples, &u).unwrap().1
}

#[test]
fn plain_coin_flips_are_uniform() {
    let phi = CnfFormula::new(3, vec![]).unwrap();
    assert!(uniformity_p(&phi, &StructSet::empty(), 8000, 1) > 0.01);
}

#[test]
fn single_clause_universe_is_uniform() {
    let c = cl(&[1, 2, 3]);
    let phi = CnfFormula::new(3, vec![c.clone()]).unwrap();
    let psi = StructSet::new(vec![Struct::fully_closed(vec![c]).unwrap()]).unwrap();
    let u = Universe::new(&phi, &psi).unwrap();
    assert_eq!(u.size(), &BigUint::from(7u32));
    assert!(uniformity_p(&phi, &psi, 7000, 2) > 0.01);
}

#[test]
fn star_universe_is_uniform() {
    let star = star3();
    let phi = CnfFormula::new(7, star.clauses().to_vec()).unwrap();
    let psi = StructSet::new(vec![star]).unwrap();
    assert_eq!(
        Universe::new(&phi, &psi).unwrap().size(),
        &BigUint::from(89u32)
    );
    assert!(uniformity_p(&phi, &psi, 10_000, 3) > 0.01);
}

#[test]
fn whole_formula_as_struct_gives_exact_hits() {
    let c = cl(&[1, 2, 3]);
    let phi = CnfFormula::new(3, vec![c.clone()]).unwrap();
    let psi = StructSet::new(vec![Struct::fully_closed(vec![c]).unwrap()]).unwrap();
    let est = mc_estimate(
        &phi,
        &psi,
        &BigUint::from(7u32),
        0.2,
        0.1,
        9,
        McOptions::default(),
    )
    .unwrap();
    assert_eq!(est.hits, est.samples);
    assert_eq!(est.as_integer(), Some(BigUint::from(7u32)));
}

#[test]
fn implication_chain_estimates_are_mostly_accurate() {
    let phi = implication_chain();
    let ell = BigUint::from(4u32);
    let good = (0..200)
        .filter(|&seed| {
            let e = mc_estimate(
                &phi,
                &StructSet::empty(),
                &ell,
                0.25,
                0.1,
                seed,
                McOptions::default(),
            )
            .unwrap()
            .value_f64();
            (3.0..=5.0).contains(&e)
        })
        .count();
    assert!(good >= 180, "{good}/200 in [3, 5]");
}

#[test]
fn unsatisfiable_formula_estimates_zero() {
    let phi = CnfFormula::from_dimacs_clauses(2, &[&[1], &[-1]]);
    let est = mc_estimate(
        &phi,
        &StructSet::empty(),
        &BigUint::from(1u32),
        0.5,
        0.1,
        4,
        McOptions::default(),
    )
    .unwrap();
    assert_eq!(est.hits, 0);
}

#[test]
fn tiny_sample_estimates_are_unbiased() {
    let phi = random_cnf(10, 20, 3, 31);
    let truth = count_exact(&phi).value.to_f64().unwrap();
    let opts = McOptions {
        max_samples: Some(4),
        threads: 1,
    };
    let runs = 10_000;
    let values: Vec<f64> = (0..runs)
        .map(|seed| {
            let e = mc_estimate(
                &phi,
                &StructSet::empty(),
                &BigUint::from(1u32),
                0.5,
                0.1,
                seed,
                opts,
            )
            .unwrap();
            assert!(e.undersampled);
            e.value_f64()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / runs as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
    let se = (var / runs as f64).sqrt();
    assert!(
        (mean - truth).abs() <= 3.0 * se,
        "mean {mean}, truth {truth}, se {se}"
    );
}

#[test]
fn restricted_and_plain_universes_agree() {
    let phi = random_cnf(12, 30, 3, 8);
    let truth = count_exact(&phi).value;
    let ell = (&truth / 2u32).max(BigUint::from(1u32));
    let psi = sharpk_core::build_structs(&phi, 3, &Default::default())
        .unwrap()
        .0;
    let (eps, delta) = (0.2, 0.1);
    let runs = 200;
    let t = truth.to_f64().unwrap();
    let overlapping = (0..runs)
        .filter(|&seed| {
            let a =
                mc_estimate(&phi, &psi, &ell, eps, delta, 2 * seed, McOptions::default()).unwrap();
            let b = mc_estimate(
                &phi,
                &StructSet::empty(),
                &ell,
                eps,
                delta,
                2 * seed + 1,
                McOptions::default(),
            )
            .unwrap();
            let (a, b) = (a.value_f64(), b.value_f64());
            // both intervals around the estimates contain the truth
            (a / (1.0 + eps)..=a / (1.0 - eps)).contains(&t)
                && (b / (1.0 + eps)..=b / (1.0 - eps)).contains(&t)
        })
        .count();
    assert!(
        overlapping as f64 >= (1.0 - 2.0 * delta) * runs as f64,
        "{overlapping}/{runs}"
    );
}

#[test]
fn threaded_sampling_is_deterministic_per_seed() {
    let phi = random_cnf(14, 40, 3, 12);
    let opts = McOptions {
        max_samples: None,
        threads: 4,
    };
    let a = mc_estimate(
        &phi,
        &StructSet::empty(),
        &BigUint::from(2u32),
        0.3,
        0.1,
        5,
        opts,
    )
    .unwrap();
    let b = mc_estimate(
        &phi,
        &StructSet::empty(),
        &BigUint::from(2u32),
        0.3,
        0.1,
        5,
        opts,
    )
    .unwrap();
    assert!(a.samples >= 4096);
    assert_eq!(a, b);
}
