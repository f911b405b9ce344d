//! The ell-cut phase: depth-first search of an elimination tree that either
//! finishes with the exact count or stops once `ell` models are certified.

use std::ops::ControlFlow;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cnf::{CnfFormula, PartialAssignment, Var};
use crate::decider::SatDecider;
use crate::rng::{self, Stream};
use crate::structs::StructSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutKind {
    /// The search completed; `count` is `#phi` (up to decider error).
    Exact,
    /// The search found at least `ell` models and stopped.
    AtLeastEll,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutResult {
    pub kind: CutKind,
    pub count: BigUint,
    pub branch_nodes: u64,
    pub decider_calls: u64,
    /// Nodes without children: counted leaves and refuted nodes.
    pub leaves: u64,
    /// Longest clause branched on after the struct set ran out
    /// (struct-guided mode only).
    pub max_residual_clause_len: usize,
    pub trace: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EliminationOrder {
    /// Variables by decreasing occurrence count, ties by index.
    MostFrequent,
    InputOrder,
    Explicit(Vec<Var>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchingStrategy {
    /// Fix one variable per level.
    Binary(EliminationOrder),
    /// Branch over the satisfying assignments of a shortest residual clause.
    PrunedClause,
    /// Consume the struct set first, then fall back to residual clauses.
    StructGuided,
}

pub struct CutOptions<'a> {
    pub decider: &'a dyn SatDecider,
    pub seed: u64,
    pub trace: bool,
    /// Tighten the per-node failure bound to `2^(-n^c)`.
    pub strict_reliability: Option<u32>,
}

impl<'a> CutOptions<'a> {
    pub fn new(decider: &'a dyn SatDecider, seed: u64) -> Self {
        Self {
            decider,
            seed,
            trace: false,
            strict_reliability: None,
        }
    }
}

/// Failure bound for every decider call of one cut run over `n` variables.
pub fn node_failure_bound(delta: f64, n: usize, strict: Option<u32>) -> f64 {
    let mut bound = delta / 2f64.powi(n as i32);
    if let Some(c) = strict {
        bound = bound.min(2f64.powf(-(n as f64).powi(c as i32)));
    }
    bound.max(f64::MIN_POSITIVE)
}

struct Search<'a> {
    decider: &'a dyn SatDecider,
    rng: Stream,
    node_bound: f64,
    ell: &'a BigUint,
    psi: &'a StructSet,
    strategy: &'a BranchingStrategy,
    order: Vec<Var>,
    total: BigUint,
    branch_nodes: u64,
    decider_calls: u64,
    leaves: u64,
    max_residual: usize,
    trace: Option<Vec<String>>,
}

impl Search<'_> {
    fn visit(&mut self, phi: &CnfFormula, next_struct: usize, depth: usize) -> ControlFlow<()> {
        self.decider_calls += 1;
        let verdict = self.decider.decide(phi, self.node_bound, &mut self.rng);
        if !verdict.satisfiable {
            self.leaves += 1;
            return ControlFlow::Continue(());
        }
        if phi.num_clauses() == 0 {
            self.leaves += 1;
            self.total += BigUint::one() << phi.num_free_vars();
            if &self.total >= self.ell {
                return ControlFlow::Break(());
            }
            return ControlFlow::Continue(());
        }
        self.branch_nodes += 1;

        if matches!(self.strategy, BranchingStrategy::StructGuided) && next_struct < self.psi.len()
        {
            let sigma = &self.psi.structs()[next_struct];
            self.log(depth, &sigma.to_string(), sigma.stats().l);
            return sigma.for_each_solution(|m| {
                let b = PartialAssignment::from_pairs(sigma.decode(m));
                self.child(phi, &b, next_struct + 1, depth)
            });
        }

        if let BranchingStrategy::Binary(_) = self.strategy {
            let occurring = phi.occurring_vars();
            let v = *self
                .order
                .iter()
                .find(|v| occurring.binary_search(v).is_ok())
                .expect("a variable of a residual clause is in the order");
            self.log(depth, &format!("x{v}"), 2);
            for val in [false, true] {
                self.child(
                    phi,
                    &PartialAssignment::from_pairs([(v, val)]),
                    next_struct,
                    depth,
                )?;
            }
            return ControlFlow::Continue(());
        }

        // shortest residual clause, ties by position
        let clause = phi
            .clauses()
            .iter()
            .min_by_key(|c| c.len())
            .expect("non-empty clause list")
            .clone();
        if matches!(self.strategy, BranchingStrategy::StructGuided) {
            self.max_residual = self.max_residual.max(clause.len());
        }
        let width = clause.len();
        self.log(depth, &clause.to_string(), (1u64 << width) - 1);
        for mask in 0..1u64 << width {
            let b = PartialAssignment::from_pairs(
                clause
                    .literals()
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.var(), mask >> i & 1 == 1)),
            );
            if clause.eval_partial(&b) != Some(true) {
                continue;
            }
            self.child(phi, &b, next_struct, depth)?;
        }
        ControlFlow::Continue(())
    }

    fn child(
        &mut self,
        phi: &CnfFormula,
        b: &PartialAssignment,
        next_struct: usize,
        depth: usize,
    ) -> ControlFlow<()> {
        let sub = phi.restrict(b);
        if sub.has_empty_clause() {
            return ControlFlow::Continue(());
        }
        self.visit(&sub, next_struct, depth + 1)
    }

    fn log(&mut self, depth: usize, what: &str, factor: u64) {
        if let Some(t) = self.trace.as_mut() {
            t.push(format!("depth={depth} branch={what} factor={factor}"));
        }
    }
}

fn elimination_order(phi: &CnfFormula, order: &EliminationOrder) -> Vec<Var> {
    match order {
        EliminationOrder::InputOrder => phi.free_vars().collect(),
        EliminationOrder::Explicit(v) => {
            let mut out = v.clone();
            // anything the caller left out goes last, in index order
            out.extend(phi.free_vars().filter(|x| !v.contains(x)));
            out
        }
        EliminationOrder::MostFrequent => {
            let mut freq = vec![0usize; phi.num_vars() as usize + 1];
            for c in phi.clauses() {
                for v in c.vars() {
                    freq[v as usize] += 1;
                }
            }
            let mut vars: Vec<Var> = phi.free_vars().collect();
            vars.sort_by_key(|&v| (std::cmp::Reverse(freq[v as usize]), v));
            vars
        }
    }
}

/// Explores the elimination tree of `phi` until it either completes or the
/// running leaf total reaches `ell`. Every decider call gets the failure
/// bound `delta / 2^n`.
pub fn cut(
    phi: &CnfFormula,
    psi: &StructSet,
    ell: &BigUint,
    delta: f64,
    strategy: &BranchingStrategy,
    opts: &CutOptions<'_>,
) -> CutResult {
    assert!(!ell.is_zero(), "ell must be at least 1");
    let order = match strategy {
        BranchingStrategy::Binary(o) => elimination_order(phi, o),
        _ => Vec::new(),
    };
    let mut search = Search {
        decider: opts.decider,
        rng: rng::stream(opts.seed),
        node_bound: node_failure_bound(delta, phi.num_free_vars(), opts.strict_reliability),
        ell,
        psi,
        strategy,
        order,
        total: BigUint::zero(),
        branch_nodes: 0,
        decider_calls: 0,
        leaves: 0,
        max_residual: 0,
        trace: opts.trace.then(Vec::new),
    };
    let kind = if phi.has_empty_clause() {
        CutKind::Exact
    } else {
        match search.visit(phi, 0, 0) {
            ControlFlow::Break(()) => CutKind::AtLeastEll,
            ControlFlow::Continue(()) => CutKind::Exact,
        }
    };
    CutResult {
        kind,
        count: search.total,
        branch_nodes: search.branch_nodes,
        decider_calls: search.decider_calls,
        leaves: search.leaves,
        max_residual_clause_len: search.max_residual,
        trace: search.trace,
    }
}

/// Number of tree levels needed before `ell` leaves can exist: the shortest
/// struct prefix whose model product reaches `ell`, or, past the whole set,
/// `|psi|` plus the levels of `(2^(k-1) - 1)`-way clause branching.
/// `None` when clause branching cannot grow the tree (`k <= 2`).
pub fn ell_for_cut(psi: &StructSet, ell: &BigUint, k: usize) -> Option<usize> {
    if *ell <= BigUint::one() {
        return Some(0);
    }
    let mut prod = BigUint::one();
    for (i, s) in psi.iter().enumerate() {
        prod *= s.stats().l;
        if prod >= *ell {
            return Some(i + 1);
        }
    }
    if k <= 2 {
        return None;
    }
    let base = (1u64 << (k - 1)) - 1;
    let mut extra = 0;
    while prod < *ell {
        prod *= base;
        extra += 1;
    }
    Some(psi.len() + extra)
}
