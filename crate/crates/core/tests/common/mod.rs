#![allow(dead_code)]

use num_bigint::BigUint;
use rand::Rng;
use sharpk_core::rng::Stream;
use sharpk_core::structs::build_independent_clauses;
use sharpk_core::{
    brute_force_count, build_structs, generate, Clause, CnfFormula, GeneratorMode, GeneratorSpec,
    Struct, StructLibrary, StructSet,
};

pub fn implication_chain() -> CnfFormula {
    CnfFormula::from_dimacs_clauses(3, &[&[-1, 2], &[-2, 3]])
}

pub fn two_model_chain() -> CnfFormula {
    CnfFormula::from_dimacs_clauses(4, &[&[1, 2], &[-2, 3], &[-3, 4], &[-1, 2]])
}

pub fn cl(lits: &[i64]) -> Clause {
    Clause::from_dimacs(lits).unwrap()
}

/// The three-clause star of the 3-CNF library, closed on its two hubs.
pub fn star3() -> Struct {
    Struct::new(
        vec![cl(&[1, 2, 3]), cl(&[1, 4, 5]), cl(&[2, 6, 7])],
        vec![1, 2],
    )
    .unwrap()
}

pub fn random_cnf(n: u32, m: usize, k: usize, seed: u64) -> CnfFormula {
    generate(&GeneratorSpec {
        n,
        m,
        k,
        seed,
        mode: GeneratorMode::Uniform,
    })
    .unwrap()
}

/// A random struct set over at most `max_n` variables, built either by the
/// greedy struct builder or as an independent clause set.
pub fn random_struct_set(rng: &mut Stream, max_n: u32) -> (CnfFormula, StructSet) {
    let k = rng.gen_range(2..=4usize);
    let n = rng.gen_range(k as u32..=max_n);
    let m = rng.gen_range(0..=2 * n as usize);
    let phi = random_cnf(n, m, k, rng.gen());
    let psi = if rng.gen_bool(0.5) {
        build_structs(&phi, k, &StructLibrary::default()).unwrap().0
    } else {
        build_independent_clauses(&phi).unwrap()
    };
    (phi, psi)
}

/// Brute-force number of assignments over `n` variables satisfying `psi`.
pub fn brute_universe(n: u32, psi: &StructSet) -> BigUint {
    let clauses: Vec<Clause> = psi
        .iter()
        .flat_map(|s| s.clauses().iter().cloned())
        .collect();
    let phi = CnfFormula::new(n, clauses).unwrap();
    brute_force_count(&phi, 28).unwrap().value
}

pub fn brute(phi: &CnfFormula) -> BigUint {
    brute_force_count(phi, 28).unwrap().value
}
