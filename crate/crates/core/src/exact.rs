//! Exact model counting: plain enumeration and a component-caching
//! branching counter.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::cnf::{CnfFormula, Var};
use crate::error::{Error, Result};

/// Refuse enumeration above this many free variables unless the caller
/// passes a larger guard.
pub const BRUTE_FORCE_LIMIT: usize = 28;

/// Beyond 63 free variables the bitmask enumerator cannot represent an
/// assignment, whatever the guard says.
const MASK_BITS: usize = 63;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactCount {
    pub value: BigUint,
    pub nodes_visited: u64,
}

/// Counts `phi`'s models over its free variables by enumerating all `2^n`
/// assignments.
pub fn brute_force_count(phi: &CnfFormula, max_n: usize) -> Result<ExactCount> {
    let free: Vec<Var> = phi.free_vars().collect();
    let n = free.len();
    if n > max_n || n > MASK_BITS {
        return Err(Error::TooManyVars {
            n,
            limit: max_n.min(MASK_BITS),
        });
    }
    let mut bit_of = vec![0u32; phi.num_vars() as usize + 1];
    for (i, &v) in free.iter().enumerate() {
        bit_of[v as usize] = i as u32;
    }
    let masks: Vec<(u64, u64)> = phi
        .clauses()
        .iter()
        .map(|c| {
            c.literals().iter().fold((0u64, 0u64), |(pos, neg), l| {
                let bit = 1u64 << bit_of[l.var() as usize];
                if l.is_negated() {
                    (pos, neg | bit)
                } else {
                    (pos | bit, neg)
                }
            })
        })
        .collect();

    let total: u64 = 1u64 << n;
    let count_range = |lo: u64, hi: u64| -> u64 {
        (lo..hi)
            .filter(|&a| {
                masks
                    .iter()
                    .all(|&(pos, neg)| a & pos != 0 || !a & neg != 0)
            })
            .count() as u64
    };

    let workers = std::thread::available_parallelism()
        .map(|w| w.get())
        .unwrap_or(1);
    let value = if n < 18 || workers == 1 {
        count_range(0, total)
    } else {
        let shards = workers.min(64) as u64;
        let step = total.div_ceil(shards);
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..shards)
                .map(|i| {
                    let lo = i * step;
                    let hi = ((i + 1) * step).min(total);
                    s.spawn(move || count_range(lo, hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        })
    };
    Ok(ExactCount {
        value: BigUint::from(value),
        nodes_visited: total,
    })
}

/// Exact `#phi` for a formula whose clauses have at most two literals.
pub fn count_2sat_exact(phi: &CnfFormula) -> Result<ExactCount> {
    let len = phi.max_clause_len();
    if len > 2 {
        return Err(Error::ClauseTooLong { len, max: 2 });
    }
    Ok(count_exact(phi))
}

/// Exact `#phi` for any clause width: connected components, unit
/// propagation, branching on a most frequent variable, and a cache of
/// residual components.
pub fn count_exact(phi: &CnfFormula) -> ExactCount {
    let clauses: Vec<Vec<i32>> = phi
        .clauses()
        .iter()
        .map(|c| c.literals().iter().map(|l| l.to_dimacs() as i32).collect())
        .collect();
    let occurring = phi.occurring_vars().len();
    let mut counter = BranchCounter::default();
    let inner = counter.count(clauses);
    ExactCount {
        value: inner << (phi.num_free_vars() - occurring),
        nodes_visited: counter.nodes,
    }
}

const CACHE_LIMIT: usize = 1 << 20;

#[derive(Default)]
struct BranchCounter {
    cache: HashMap<Vec<Vec<i32>>, BigUint>,
    nodes: u64,
}

fn var_count(clauses: &[Vec<i32>]) -> usize {
    let mut vars: Vec<u32> = clauses
        .iter()
        .flat_map(|c| c.iter().map(|l| l.unsigned_abs()))
        .collect();
    vars.sort_unstable();
    vars.dedup();
    vars.len()
}

/// Substitutes `lit = true`. `None` when a clause becomes empty.
fn assign(clauses: &[Vec<i32>], lit: i32) -> Option<Vec<Vec<i32>>> {
    let mut out = Vec::with_capacity(clauses.len());
    for c in clauses {
        if c.contains(&lit) {
            continue;
        }
        let rest: Vec<i32> = c.iter().copied().filter(|&l| l != -lit).collect();
        if rest.is_empty() {
            return None;
        }
        out.push(rest);
    }
    Some(out)
}

fn split_components(clauses: Vec<Vec<i32>>) -> Vec<Vec<Vec<i32>>> {
    let max_var = clauses
        .iter()
        .flat_map(|c| c.iter().map(|l| l.unsigned_abs() as usize))
        .max()
        .unwrap_or(0);
    let mut uf = UnionFind::new(max_var + 1);
    for c in &clauses {
        for w in c.windows(2) {
            uf.union(w[0].unsigned_abs() as usize, w[1].unsigned_abs() as usize);
        }
    }
    let mut by_root: HashMap<usize, Vec<Vec<i32>>> = HashMap::new();
    let mut order = Vec::new();
    for c in clauses {
        let root = uf.find(c[0].unsigned_abs() as usize);
        by_root
            .entry(root)
            .or_insert_with(|| {
                order.push(root);
                Vec::new()
            })
            .push(c);
    }
    order
        .into_iter()
        .map(|r| by_root.remove(&r).unwrap())
        .collect()
}

impl BranchCounter {
    /// Model count over exactly the variables occurring in `clauses`.
    fn count(&mut self, clauses: Vec<Vec<i32>>) -> BigUint {
        self.nodes += 1;
        if clauses.is_empty() {
            return BigUint::one();
        }
        if clauses.iter().any(Vec::is_empty) {
            return BigUint::zero();
        }
        let mut product = BigUint::one();
        for comp in split_components(clauses) {
            let c = self.count_component(comp);
            if c.is_zero() {
                return c;
            }
            product *= c;
        }
        product
    }

    fn count_component(&mut self, mut clauses: Vec<Vec<i32>>) -> BigUint {
        for c in clauses.iter_mut() {
            c.sort_unstable();
        }
        clauses.sort_unstable();
        clauses.dedup();
        if let Some(hit) = self.cache.get(&clauses) {
            return hit.clone();
        }
        let nv = var_count(&clauses);

        let branch_lits: Vec<i32> = match clauses.iter().find(|c| c.len() == 1) {
            Some(unit) => vec![unit[0]],
            None => {
                let mut freq: HashMap<u32, usize> = HashMap::new();
                for c in &clauses {
                    for l in c {
                        *freq.entry(l.unsigned_abs()).or_default() += 1;
                    }
                }
                let (&v, _) = freq
                    .iter()
                    .max_by_key(|(&v, &f)| (f, std::cmp::Reverse(v)))
                    .expect("non-empty component");
                vec![-(v as i32), v as i32]
            }
        };

        let mut total = BigUint::zero();
        for lit in branch_lits {
            if let Some(rest) = assign(&clauses, lit) {
                let free = nv - 1 - var_count(&rest);
                total += self.count(rest) << free;
            }
        }
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(clauses, total.clone());
        total
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Clauses grouped by shared variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    /// Clause indices per part, parts ordered by their first clause.
    pub parts: Vec<Vec<usize>>,
    /// Free variables occurring in no clause.
    pub untouched_vars: usize,
}

pub fn connected_components(phi: &CnfFormula) -> Components {
    let mut uf = UnionFind::new(phi.num_vars() as usize + 1);
    for c in phi.clauses() {
        let vars: Vec<Var> = c.vars().collect();
        for w in vars.windows(2) {
            uf.union(w[0] as usize, w[1] as usize);
        }
    }
    let mut parts: Vec<Vec<usize>> = Vec::new();
    let mut part_of_root: HashMap<usize, usize> = HashMap::new();
    for (i, c) in phi.clauses().iter().enumerate() {
        match c.vars().next() {
            Some(v) => {
                let root = uf.find(v as usize);
                let idx = *part_of_root.entry(root).or_insert_with(|| {
                    parts.push(Vec::new());
                    parts.len() - 1
                });
                parts[idx].push(i);
            }
            // the empty clause shares nothing with anyone
            None => parts.push(vec![i]),
        }
    }
    Components {
        parts,
        untouched_vars: phi.num_free_vars() - phi.occurring_vars().len(),
    }
}
