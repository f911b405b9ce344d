//! Seeded random k-CNF instances.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cnf::{Clause, CnfFormula, Literal, Var};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMode {
    /// Each clause: k distinct variables, fair polarities.
    #[default]
    Uniform,
    /// Like uniform, but every clause is satisfied by a hidden assignment.
    Planted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: u32,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub mode: GeneratorMode,
}

/// Retries per clause before a duplicate is accepted.
const DUPLICATE_RETRIES: usize = 64;

pub fn generate(spec: &GeneratorSpec) -> Result<CnfFormula> {
    if spec.k == 0 || (spec.n as usize) < spec.k {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= n, got n = {}, k = {}",
            spec.n, spec.k
        )));
    }
    let mut rng = rng::stream(spec.seed);
    let hidden: Vec<bool> = match spec.mode {
        GeneratorMode::Planted => (0..=spec.n).map(|_| rng.gen()).collect(),
        GeneratorMode::Uniform => Vec::new(),
    };
    let mut seen: HashSet<Clause> = HashSet::new();
    let mut clauses = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        let mut clause = None;
        for _ in 0..DUPLICATE_RETRIES {
            let mut vars: Vec<Var> = sample(&mut rng, spec.n as usize, spec.k)
                .into_iter()
                .map(|i| i as Var + 1)
                .collect();
            vars.sort_unstable();
            let mut lits: Vec<Literal> = vars.iter().map(|&v| Literal::new(v, rng.gen())).collect();
            if spec.mode == GeneratorMode::Planted
                && !lits.iter().any(|l| l.eval(hidden[l.var() as usize]))
            {
                let i = rng.gen_range(0..lits.len());
                lits[i] = lits[i].negate();
            }
            let c = Clause::new(lits).expect("distinct variables give no tautology");
            let fresh = !seen.contains(&c);
            clause = Some(c);
            if fresh {
                break;
            }
        }
        let c = clause.expect("at least one attempt");
        seen.insert(c.clone());
        clauses.push(c);
    }
    CnfFormula::new(spec.n, clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force_count;

    fn spec(n: u32, m: usize, k: usize, seed: u64, mode: GeneratorMode) -> GeneratorSpec {
        GeneratorSpec {
            n,
            m,
            k,
            seed,
            mode,
        }
    }

    #[test]
    fn zero_clauses() {
        let phi = generate(&spec(3, 0, 3, 1, GeneratorMode::Uniform)).unwrap();
        assert_eq!((phi.num_vars(), phi.num_clauses()), (3, 0));
    }

    #[test]
    fn deterministic() {
        let s = spec(12, 30, 3, 9, GeneratorMode::Uniform);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
    }

    #[test]
    fn clauses_have_k_distinct_vars_and_no_duplicates() {
        let phi = generate(&spec(10, 60, 3, 4, GeneratorMode::Uniform)).unwrap();
        let mut seen = HashSet::new();
        for c in phi.clauses() {
            assert_eq!(c.len(), 3);
            assert!(seen.insert(c.clone()));
        }
    }

    #[test]
    fn planted_is_satisfiable() {
        for seed in 0..20 {
            let phi = generate(&spec(12, 80, 3, seed, GeneratorMode::Planted)).unwrap();
            assert!(brute_force_count(&phi, 28).unwrap().value >= 1u32.into());
        }
    }

    #[test]
    fn rejects_n_below_k() {
        assert!(generate(&spec(2, 1, 3, 0, GeneratorMode::Uniform)).is_err());
    }
}
