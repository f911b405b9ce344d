//! Satisfiability oracles with a one-sided error contract.
//!
//! A SAT verdict always carries a witness that has been checked against the
//! formula. An UNSAT verdict may be wrong, with probability at most the
//! failure bound passed to [`SatDecider::decide`].

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::cnf::{CnfFormula, PartialAssignment, Var};

/// Formulas with at most this many occurring variables are decided by
/// complete search.
pub const EXHAUSTIVE_THRESHOLD: usize = 22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub satisfiable: bool,
    /// Assignment to every free variable; present iff `satisfiable`.
    pub witness: Option<PartialAssignment>,
    pub failure_bound: f64,
}

impl DecisionOutcome {
    fn sat(witness: PartialAssignment, failure_bound: f64) -> Self {
        Self {
            satisfiable: true,
            witness: Some(witness),
            failure_bound,
        }
    }

    fn unsat(failure_bound: f64) -> Self {
        Self {
            satisfiable: false,
            witness: None,
            failure_bound,
        }
    }
}

pub trait SatDecider: Send + Sync {
    fn decide(
        &self,
        phi: &CnfFormula,
        failure_bound: f64,
        rng: &mut dyn RngCore,
    ) -> DecisionOutcome;

    fn name(&self) -> &'static str;
}

/// Complete backtracking search. Never wrong; used as the perfect oracle in
/// tests and as the small-instance path of [`SchoeningDecider`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactDecider;

impl SatDecider for ExactDecider {
    fn decide(
        &self,
        phi: &CnfFormula,
        failure_bound: f64,
        _rng: &mut dyn RngCore,
    ) -> DecisionOutcome {
        match solve_complete(phi) {
            Some(w) => DecisionOutcome::sat(w, failure_bound),
            None => DecisionOutcome::unsat(failure_bound),
        }
    }

    fn name(&self) -> &'static str {
        "exact"
    }
}

/// Random-walk decider (restart from a uniform assignment, then `3n` steps
/// that flip a random variable of a random falsified clause), amplified by
/// [`repetitions_for`]. Falls back to complete search for small instances
/// and for 2-CNFs.
#[derive(Clone, Copy, Debug)]
pub struct SchoeningDecider {
    pub exhaustive_threshold: usize,
}

impl Default for SchoeningDecider {
    fn default() -> Self {
        Self {
            exhaustive_threshold: EXHAUSTIVE_THRESHOLD,
        }
    }
}

impl SatDecider for SchoeningDecider {
    fn decide(
        &self,
        phi: &CnfFormula,
        failure_bound: f64,
        rng: &mut dyn RngCore,
    ) -> DecisionOutcome {
        if phi.has_empty_clause() {
            return DecisionOutcome::unsat(failure_bound);
        }
        let vars = phi.occurring_vars();
        let k = phi.max_clause_len();
        if vars.len() <= self.exhaustive_threshold || k <= 2 {
            return ExactDecider.decide(phi, failure_bound, rng);
        }
        let trials = repetitions_for_success(walk_success_bound(vars.len(), k), failure_bound);
        let steps = 3 * vars.len();
        let mut values = vec![false; phi.num_vars() as usize + 1];
        let mut unsat: Vec<usize> = Vec::with_capacity(phi.num_clauses());
        for _ in 0..trials {
            for &v in &vars {
                values[v as usize] = rng.gen();
            }
            for step in 0..=steps {
                unsat.clear();
                unsat.extend(
                    phi.clauses()
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| !c.eval_dense(&values))
                        .map(|(i, _)| i),
                );
                if unsat.is_empty() {
                    let w = witness_from_dense(phi, &values);
                    debug_assert_eq!(phi.evaluate(&w), Ok(true));
                    return DecisionOutcome::sat(w, failure_bound);
                }
                if step == steps {
                    break;
                }
                let clause = &phi.clauses()[unsat[rng.gen_range(0..unsat.len())]];
                let lit = clause.literals()[rng.gen_range(0..clause.len())];
                values[lit.var() as usize] ^= true;
            }
        }
        DecisionOutcome::unsat(failure_bound)
    }

    fn name(&self) -> &'static str {
        "schoening"
    }
}

/// Per-trial success probability bound of one `3n`-step walk on a
/// satisfiable k-CNF with `n` variables: `(k / (2(k-1)))^n`.
pub fn walk_success_bound(n: usize, k: usize) -> f64 {
    if k <= 2 {
        return 1.0;
    }
    (k as f64 / (2.0 * (k as f64 - 1.0))).powi(n as i32)
}

/// Independent trials needed so that `(1 - p)^t <= failure_bound`, using
/// `t = ceil(ln(1/failure_bound) / p)`.
pub fn repetitions_for_success(p: f64, failure_bound: f64) -> u64 {
    assert!(p > 0.0 && p <= 1.0, "success probability must be in (0, 1]");
    assert!(
        failure_bound > 0.0 && failure_bound < 1.0,
        "failure bound must be in (0, 1)"
    );
    let t = ((1.0 / failure_bound).ln() / p).ceil();
    if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        (t as u64).max(1)
    }
}

/// Number of walks the default decider spends on an `n`-variable k-CNF.
pub fn repetitions_for(n: usize, k: usize, failure_bound: f64) -> u64 {
    assert!(k >= 2, "k must be at least 2");
    if n <= EXHAUSTIVE_THRESHOLD || k <= 2 {
        return 1;
    }
    repetitions_for_success(walk_success_bound(n, k), failure_bound)
}

fn witness_from_dense(phi: &CnfFormula, values: &[bool]) -> PartialAssignment {
    PartialAssignment::from_pairs(phi.free_vars().map(|v| (v, values[v as usize])))
}

/// Complete DPLL search with unit propagation. Returns an assignment of all
/// free variables if one satisfies `phi`.
pub fn solve_complete(phi: &CnfFormula) -> Option<PartialAssignment> {
    if phi.has_empty_clause() {
        return None;
    }
    let clauses: Vec<Vec<i32>> = phi
        .clauses()
        .iter()
        .map(|c| c.literals().iter().map(|l| l.to_dimacs() as i32).collect())
        .collect();
    let mut values: Vec<Option<bool>> = vec![None; phi.num_vars() as usize + 1];
    if !dpll(&clauses, &mut values) {
        return None;
    }
    let w = PartialAssignment::from_pairs(
        phi.free_vars()
            .map(|v: Var| (v, values[v as usize].unwrap_or(false))),
    );
    debug_assert_eq!(phi.evaluate(&w), Ok(true));
    Some(w)
}

fn lit_value(values: &[Option<bool>], lit: i32) -> Option<bool> {
    values[lit.unsigned_abs() as usize].map(|v| v == (lit > 0))
}

fn dpll(clauses: &[Vec<i32>], values: &mut Vec<Option<bool>>) -> bool {
    let mut trail: Vec<usize> = Vec::new();
    // unit propagation to fixpoint
    loop {
        let mut unit = None;
        let mut branch_on = None;
        let mut all_sat = true;
        for c in clauses {
            let mut open = 0;
            let mut last_open = 0;
            let mut sat = false;
            for &l in c {
                match lit_value(values, l) {
                    Some(true) => {
                        sat = true;
                        break;
                    }
                    Some(false) => {}
                    None => {
                        open += 1;
                        last_open = l;
                    }
                }
            }
            if sat {
                continue;
            }
            all_sat = false;
            match open {
                0 => {
                    for v in trail {
                        values[v] = None;
                    }
                    return false;
                }
                1 => {
                    unit = Some(last_open);
                    break;
                }
                _ => {
                    if branch_on.is_none() {
                        branch_on = Some(last_open);
                    }
                }
            }
        }
        if all_sat {
            return true;
        }
        if let Some(l) = unit {
            let v = l.unsigned_abs() as usize;
            values[v] = Some(l > 0);
            trail.push(v);
            continue;
        }
        let l = branch_on.expect("open clause exists");
        let v = l.unsigned_abs() as usize;
        for val in [l > 0, l < 0] {
            values[v] = Some(val);
            if dpll(clauses, values) {
                return true;
            }
        }
        values[v] = None;
        for t in trail {
            values[t] = None;
        }
        return false;
    }
}
