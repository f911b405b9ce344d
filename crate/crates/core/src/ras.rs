//! Top-level approximate counter: reduction, cut, then Monte Carlo, with
//! recursion into narrower formulas.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;

use crate::cnf::CnfFormula;
use crate::cut::{cut, BranchingStrategy, CutKind, CutOptions, CutResult, EliminationOrder};
use crate::decider::{ExactDecider, SatDecider, SchoeningDecider};
use crate::error::{Error, Result};
use crate::exact::{brute_force_count, count_exact, BRUTE_FORCE_LIMIT};
use crate::mc::{mc_estimate, Estimate, McOptions, WorkCounters};
use crate::params::{params_with_alphas, Strategy};
use crate::rng::SeedSplitter;
use crate::structs::{red_clauses, red_structs, RedOutcome, StructLibrary, StructSet};

/// Formulas with at most this many free variables are counted exactly.
pub const DEFAULT_SMALL_N: usize = 18;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DeciderKind {
    /// Random walk with complete search on small inputs.
    #[default]
    Schoening,
    /// Complete search only; never wrong.
    Exact,
}

#[derive(Clone, Debug)]
pub struct RasConfig {
    pub small_n: usize,
    pub mc: McOptions,
    pub alpha_overrides: BTreeMap<usize, f64>,
    pub library: StructLibrary,
    pub decider: DeciderKind,
    /// Per-node decider failure bound `2^(-n^c)` instead of `delta / 2^n`.
    pub strict_reliability: Option<u32>,
    /// Variable order of the binary tree (Thurley strategy).
    pub binary_order: EliminationOrder,
}

impl Default for RasConfig {
    fn default() -> Self {
        Self {
            small_n: DEFAULT_SMALL_N,
            mc: McOptions::default(),
            alpha_overrides: BTreeMap::new(),
            library: StructLibrary::default(),
            decider: DeciderKind::default(),
            strict_reliability: None,
            binary_order: EliminationOrder::MostFrequent,
        }
    }
}

impl RasConfig {
    fn decider(&self) -> &'static dyn SatDecider {
        static SCHOENING: SchoeningDecider = SchoeningDecider {
            exhaustive_threshold: crate::decider::EXHAUSTIVE_THRESHOLD,
        };
        match self.decider {
            DeciderKind::Schoening => &SCHOENING,
            DeciderKind::Exact => &ExactDecider,
        }
    }
}

/// `(1 +- eps)`-approximation of `#phi` with probability at least
/// `1 - delta`, using the default configuration.
pub fn approx_count(
    phi: &CnfFormula,
    eps: f64,
    delta: f64,
    strategy: Strategy,
    seed: u64,
) -> Result<Estimate> {
    approx_count_with(phi, eps, delta, strategy, seed, &RasConfig::default())
}

pub fn approx_count_with(
    phi: &CnfFormula,
    eps: f64,
    delta: f64,
    strategy: Strategy,
    seed: u64,
    config: &RasConfig,
) -> Result<Estimate> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps}; need 0 < eps <= 1"
        )));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta}; need 0 < delta < 1/2"
        )));
    }
    let run = Run {
        config,
        eps,
        top_k: phi.max_clause_len(),
    };
    let mut est = match strategy {
        Strategy::BruteForce => {
            let c = brute_force_count(phi, BRUTE_FORCE_LIMIT)?;
            Estimate::exact_count(c.value, eps, delta)
        }
        Strategy::Thurley | Strategy::PrunedTree => run.tree_only(phi, delta, strategy, seed)?,
        Strategy::IndepClauses | Strategy::IndepStructs => {
            run.independent(phi, delta, strategy, seed, 0)?
        }
    };
    est.epsilon = eps;
    est.delta = delta;
    est.seed = Some(seed);
    Ok(est)
}

struct Run<'a> {
    config: &'a RasConfig,
    eps: f64,
    top_k: usize,
}

impl Run<'_> {
    /// Counts that need no search: contradictions, clause-free formulas,
    /// small inputs and 2-CNFs.
    fn base_case(&self, phi: &CnfFormula, delta: f64) -> Option<Estimate> {
        let exact = |v: BigUint| Some(Estimate::exact_count(v, self.eps, delta));
        if phi.has_empty_clause() {
            return exact(BigUint::ZERO);
        }
        if phi.num_clauses() == 0 {
            return exact(BigUint::one() << phi.num_free_vars());
        }
        if phi.num_free_vars() <= self.config.small_n || phi.max_clause_len() <= 2 {
            return exact(count_exact(phi).value);
        }
        None
    }

    fn cut_then_sample(
        &self,
        phi: &CnfFormula,
        psi: &StructSet,
        ell: &BigUint,
        delta: f64,
        branching: &BranchingStrategy,
        seed: u64,
    ) -> Result<Estimate> {
        let mut seeds = SeedSplitter::new(seed);
        let mut opts = CutOptions::new(self.config.decider(), seeds.next_seed());
        opts.strict_reliability = self.config.strict_reliability;
        let r = cut(phi, psi, ell, delta, branching, &opts);
        let work = cut_work(&r);
        let mut est = match r.kind {
            CutKind::Exact => Estimate::exact_count(r.count, self.eps, delta),
            CutKind::AtLeastEll => mc_estimate(
                phi,
                psi,
                ell,
                self.eps,
                delta,
                seeds.next_seed(),
                self.config.mc,
            )?,
        };
        est.work.add(&work);
        Ok(est)
    }

    fn tree_only(
        &self,
        phi: &CnfFormula,
        delta: f64,
        strategy: Strategy,
        seed: u64,
    ) -> Result<Estimate> {
        if let Some(e) = self.base_case(phi, delta) {
            return Ok(e);
        }
        let k = phi.max_clause_len();
        let params = params_with_alphas(
            k,
            phi.num_free_vars(),
            strategy,
            &self.config.alpha_overrides,
        )?;
        let branching = match strategy {
            Strategy::Thurley => BranchingStrategy::Binary(self.config.binary_order.clone()),
            _ => BranchingStrategy::PrunedClause,
        };
        self.cut_then_sample(
            phi,
            &StructSet::empty(),
            &params.ell,
            delta,
            &branching,
            seed,
        )
    }

    fn independent(
        &self,
        phi: &CnfFormula,
        delta: f64,
        strategy: Strategy,
        seed: u64,
        depth: usize,
    ) -> Result<Estimate> {
        assert!(
            depth + 2 <= self.top_k.max(2),
            "recursion depth {depth} exceeds k - 2 for k = {}",
            self.top_k
        );
        if let Some(e) = self.base_case(phi, delta) {
            return Ok(e);
        }
        let k = phi.max_clause_len();
        let n = phi.num_free_vars();
        let params = params_with_alphas(k, n, strategy, &self.config.alpha_overrides)?;
        let mut seeds = SeedSplitter::new(seed);
        let mut nested = 0u64;
        let mut recurse = |sub: &CnfFormula, eps: f64, d: f64| -> Result<Estimate> {
            assert!(sub.max_clause_len() < k, "nested input must be a (k-1)-CNF");
            debug_assert_eq!(eps, self.eps);
            nested += 1;
            self.independent(sub, d, strategy, seeds.next_seed(), depth + 1)
        };
        let outcome = match strategy {
            Strategy::IndepStructs => red_structs(
                phi,
                &params,
                &self.config.library,
                self.eps,
                delta,
                &mut recurse,
            )?,
            _ => red_clauses(phi, params.m_hat, self.eps, delta, &mut recurse)?,
        };
        match outcome {
            RedOutcome::Counted(mut est) => {
                est.work.recursive_calls += nested;
                Ok(est)
            }
            RedOutcome::Structs(psi) => self.cut_then_sample(
                phi,
                &psi,
                &params.ell,
                delta,
                &BranchingStrategy::StructGuided,
                seeds.next_seed(),
            ),
        }
    }
}

fn cut_work(r: &CutResult) -> WorkCounters {
    WorkCounters {
        decider_calls: r.decider_calls,
        branch_nodes: r.branch_nodes,
        leaves: r.leaves,
        recursive_calls: 0,
    }
}
