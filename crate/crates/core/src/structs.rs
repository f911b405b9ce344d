//! Independent subformulas ("structs"), the closed-variable pattern
//! library, and the greedy reduction that either builds a maximal struct
//! set or resolves the count by recursing on (k-1)-CNFs.
//!
//! A struct is a small group of clauses. Its *closed* variables are the ones
//! no further clause may attach through. Once every clause of the formula
//! contains a closed variable of some struct, fixing all closed variables
//! shortens every clause by at least one literal.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::ControlFlow;

use num_bigint::BigUint;
use num_traits::One;
use rand::{Rng, RngCore};

use crate::cnf::{Clause, CnfFormula, Literal, PartialAssignment, Var};
use crate::error::{Error, Result};
use crate::exact::count_exact;
use crate::mc::Estimate;
use crate::params::ParamSet;

/// Largest struct whose statistics are computed by plain enumeration.
pub const STRUCT_CAP: usize = 16;

/// Bitmask representation limit for struct-local assignments.
const LOCAL_BITS: usize = 63;

/// Structs larger than [`STRUCT_CAP`] keep an explicit solution list only
/// up to this many entries.
const SOLUTION_LIST_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StructStats {
    /// Variables in the struct.
    pub n: usize,
    /// Satisfying assignments over those variables.
    pub l: u64,
    /// Assignments to the closed variables that falsify no clause.
    pub w: u64,
    /// Closed variables.
    pub f: usize,
}

/// Local bit layout: bit `i` of a mask is `vars[i]`.
fn local_masks(clauses: &[Clause], vars: &[Var]) -> Vec<(u64, u64)> {
    let idx: HashMap<Var, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    clauses
        .iter()
        .map(|c| {
            c.literals().iter().fold((0, 0), |(pos, neg), l| {
                let bit = 1u64 << idx[&l.var()];
                if l.is_negated() {
                    (pos, neg | bit)
                } else {
                    (pos | bit, neg)
                }
            })
        })
        .collect()
}

fn sorted_vars(clauses: &[Clause]) -> Vec<Var> {
    clauses
        .iter()
        .flat_map(Clause::vars)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn closed_mask(vars: &[Var], closed: &[Var]) -> u64 {
    vars.iter()
        .enumerate()
        .filter(|(_, v)| closed.contains(v))
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// Non-falsifying assignments to the closed variables, as masks restricted
/// to the closed bits. A clause is falsified only when all of its variables
/// are closed and every literal is false.
fn closed_assignments(masks: &[(u64, u64)], closed_bits: u64) -> Vec<u64> {
    let closed: Vec<u32> = (0..64).filter(|i| closed_bits >> i & 1 == 1).collect();
    let guarded: Vec<(u64, u64)> = masks
        .iter()
        .copied()
        .filter(|&(pos, neg)| (pos | neg) & !closed_bits == 0)
        .collect();
    (0..1u64 << closed.len())
        .map(|sub| {
            closed
                .iter()
                .enumerate()
                .fold(0u64, |m, (j, &bit)| m | (sub >> j & 1) << bit)
        })
        .filter(|&a| {
            guarded
                .iter()
                .all(|&(pos, neg)| a & pos != 0 || !a & neg != 0)
        })
        .collect()
}

/// Exhaustive statistics of a clause group with the given closed variables.
pub fn struct_stats(clauses: &[Clause], closed: &[Var]) -> Result<StructStats> {
    let vars = sorted_vars(clauses);
    let n = vars.len();
    if n > STRUCT_CAP {
        return Err(Error::StructTooLarge { n, cap: STRUCT_CAP });
    }
    let masks = local_masks(clauses, &vars);
    let l = (0..1u64 << n)
        .filter(|&a| {
            masks
                .iter()
                .all(|&(pos, neg)| a & pos != 0 || !a & neg != 0)
        })
        .count() as u64;
    let cm = closed_mask(&vars, closed);
    let w = closed_assignments(&masks, cm).len() as u64;
    Ok(StructStats {
        n,
        l,
        w,
        f: cm.count_ones() as usize,
    })
}

#[derive(Clone, Debug)]
pub struct Struct {
    clauses: Vec<Clause>,
    vars: Vec<Var>,
    closed: Vec<Var>,
    stats: StructStats,
    /// All satisfying local masks, when small enough to list.
    solutions: Option<Vec<u64>>,
}

impl Struct {
    pub fn new(clauses: Vec<Clause>, closed: Vec<Var>) -> Result<Self> {
        let vars = sorted_vars(&clauses);
        let mut closed: Vec<Var> = closed
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        closed.retain(|v| vars.contains(v));
        let n = vars.len();
        if n > LOCAL_BITS {
            return Err(Error::StructTooLarge { n, cap: LOCAL_BITS });
        }
        let masks = local_masks(&clauses, &vars);
        let cm = closed_mask(&vars, &closed);
        let (stats, solutions) = if n <= STRUCT_CAP {
            let sols: Vec<u64> = (0..1u64 << n)
                .filter(|&a| {
                    masks
                        .iter()
                        .all(|&(pos, neg)| a & pos != 0 || !a & neg != 0)
                })
                .collect();
            let w = closed_assignments(&masks, cm).len() as u64;
            let stats = StructStats {
                n,
                l: sols.len() as u64,
                w,
                f: closed.len(),
            };
            (stats, Some(sols))
        } else {
            let local = local_formula(&clauses, &vars);
            let l: u64 = count_exact(&local)
                .value
                .try_into()
                .expect("at most 2^63 local models");
            let w = if closed.len() == n {
                l
            } else if closed.len() <= STRUCT_CAP {
                closed_assignments(&masks, cm).len() as u64
            } else {
                return Err(Error::StructTooLarge { n, cap: STRUCT_CAP });
            };
            let sols = (l <= SOLUTION_LIST_LIMIT).then(|| enumerate_solutions(&masks, n));
            (
                StructStats {
                    n,
                    l,
                    w,
                    f: closed.len(),
                },
                sols,
            )
        };
        Ok(Self {
            clauses,
            vars,
            closed,
            stats,
            solutions,
        })
    }

    /// A struct with every variable closed.
    pub fn fully_closed(clauses: Vec<Clause>) -> Result<Self> {
        let vars = sorted_vars(&clauses);
        Self::new(clauses, vars)
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn closed_vars(&self) -> &[Var] {
        &self.closed
    }

    pub fn stats(&self) -> StructStats {
        self.stats
    }

    pub fn is_closed(&self) -> bool {
        self.closed.len() == self.vars.len()
    }

    pub fn is_closed_var(&self, v: Var) -> bool {
        self.closed.binary_search(&v).is_ok()
    }

    /// Decodes a local mask into `(var, value)` pairs.
    pub fn decode(&self, mask: u64) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.vars
            .iter()
            .enumerate()
            .map(move |(i, &v)| (v, mask >> i & 1 == 1))
    }

    /// Visits every satisfying assignment once.
    pub fn for_each_solution(&self, mut f: impl FnMut(u64) -> ControlFlow<()>) -> ControlFlow<()> {
        match &self.solutions {
            Some(list) => {
                for &m in list {
                    f(m)?;
                }
                ControlFlow::Continue(())
            }
            None => {
                let masks = local_masks(&self.clauses, &self.vars);
                visit_solutions(&masks, self.vars.len(), 0, 0, &mut f)
            }
        }
    }

    /// A uniformly random satisfying assignment as a local mask.
    pub fn sample(&self, rng: &mut dyn RngCore) -> u64 {
        if let Some(list) = &self.solutions {
            return list[rng.gen_range(0..list.len())];
        }
        // Too many models to list: sample variable by variable using exact
        // conditional counts.
        let local = local_formula(&self.clauses, &self.vars);
        let mut fixed = PartialAssignment::new();
        let mut remaining: u64 = self.stats.l;
        let mut mask = 0u64;
        for i in 0..self.vars.len() {
            let var = (i + 1) as Var;
            let mut with_zero = fixed.clone();
            with_zero.set(var, false);
            let zeros: u64 = count_exact(&local.restrict(&with_zero))
                .value
                .try_into()
                .expect("fits");
            let pick_zero = rng.gen_range(0..remaining) < zeros;
            fixed.set(var, !pick_zero);
            if pick_zero {
                remaining = zeros;
            } else {
                remaining -= zeros;
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Non-falsifying assignments to the closed variables.
    pub fn closed_assignments(&self) -> Vec<PartialAssignment> {
        if self.is_closed() {
            let mut out = Vec::with_capacity(self.stats.l as usize);
            let _ = self.for_each_solution(|m| {
                out.push(PartialAssignment::from_pairs(self.decode(m)));
                ControlFlow::Continue(())
            });
            return out;
        }
        let masks = local_masks(&self.clauses, &self.vars);
        let cm = closed_mask(&self.vars, &self.closed);
        closed_assignments(&masks, cm)
            .into_iter()
            .map(|a| {
                PartialAssignment::from_pairs(
                    self.decode(a).filter(|(v, _)| self.is_closed_var(*v)),
                )
            })
            .collect()
    }
}

impl fmt::Display for Struct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// The struct's clauses renumbered onto `1..=n`.
fn local_formula(clauses: &[Clause], vars: &[Var]) -> CnfFormula {
    let idx: HashMap<Var, Var> = vars
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, (i + 1) as Var))
        .collect();
    let local = clauses
        .iter()
        .map(|c| {
            Clause::new(
                c.literals()
                    .iter()
                    .map(|l| Literal::new(idx[&l.var()], l.is_negated())),
            )
            .expect("struct clauses are not tautologies")
        })
        .collect();
    CnfFormula::new(vars.len() as u32, local).expect("renumbered within range")
}

fn visit_solutions(
    masks: &[(u64, u64)],
    n: usize,
    depth: usize,
    partial: u64,
    f: &mut impl FnMut(u64) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let assigned = if depth == 64 {
        u64::MAX
    } else {
        (1u64 << depth) - 1
    };
    // prune as soon as a clause is fully assigned and false
    for &(pos, neg) in masks {
        if (pos | neg) & !assigned == 0 && partial & pos == 0 && !partial & neg == 0 {
            return ControlFlow::Continue(());
        }
    }
    if depth == n {
        return f(partial);
    }
    visit_solutions(masks, n, depth + 1, partial, f)?;
    visit_solutions(masks, n, depth + 1, partial | 1 << depth, f)
}

fn enumerate_solutions(masks: &[(u64, u64)], n: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let _ = visit_solutions(masks, n, 0, 0, &mut |m| {
        out.push(m);
        ControlFlow::Continue(())
    });
    out
}

/// Pairwise variable-disjoint structs.
#[derive(Clone, Debug, Default)]
pub struct StructSet {
    structs: Vec<Struct>,
}

impl StructSet {
    pub fn new(structs: Vec<Struct>) -> Result<Self> {
        let set = Self { structs };
        if !set.is_pairwise_disjoint() {
            return Err(Error::InvalidParameter(
                "structs of a struct set must not share variables".into(),
            ));
        }
        Ok(set)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn structs(&self) -> &[Struct] {
        &self.structs
    }

    pub fn len(&self) -> usize {
        self.structs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.structs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Struct> {
        self.structs.iter()
    }

    pub fn is_pairwise_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.structs
            .iter()
            .flat_map(|s| s.vars.iter())
            .all(|v| seen.insert(*v))
    }

    /// Every clause of `phi` contains a closed variable of some member.
    pub fn is_maximal_for(&self, phi: &CnfFormula) -> bool {
        let closed: BTreeSet<Var> = self
            .structs
            .iter()
            .flat_map(|s| s.closed.iter().copied())
            .collect();
        phi.clauses()
            .iter()
            .all(|c| c.vars().any(|v| closed.contains(&v)))
    }

    pub fn total_vars(&self) -> usize {
        self.structs.iter().map(|s| s.stats.n).sum()
    }

    pub fn product_l(&self) -> BigUint {
        self.structs
            .iter()
            .fold(BigUint::one(), |acc, s| acc * s.stats.l)
    }

    pub fn product_w(&self) -> BigUint {
        self.structs
            .iter()
            .fold(BigUint::one(), |acc, s| acc * s.stats.w)
    }

    /// Visits every combination of non-falsifying closed-variable
    /// assignments, one per struct (`prod w` of them).
    pub fn for_each_closed_assignment(
        &self,
        mut f: impl FnMut(&PartialAssignment) -> Result<()>,
    ) -> Result<()> {
        let per_struct: Vec<Vec<PartialAssignment>> = self
            .structs
            .iter()
            .map(Struct::closed_assignments)
            .collect();
        if per_struct.iter().any(Vec::is_empty) {
            return Ok(());
        }
        let mut odometer = vec![0usize; per_struct.len()];
        loop {
            let b = odometer
                .iter()
                .zip(&per_struct)
                .fold(PartialAssignment::new(), |acc, (&i, list)| {
                    acc.union(&list[i])
                });
            f(&b)?;
            let mut pos = 0;
            loop {
                if pos == odometer.len() {
                    return Ok(());
                }
                odometer[pos] += 1;
                if odometer[pos] < per_struct[pos].len() {
                    break;
                }
                odometer[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// One library entry: a struct shape over variables `1..=n` and the
/// variables it declares closed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub k: usize,
    pub clauses: Vec<Clause>,
    pub closed: Vec<Var>,
}

/// Shapes that stay open for further growth. A shape matches a struct when
/// some renaming of variables, together with flipping the polarity of
/// individual variables, maps one clause set onto the other. Shared
/// variables therefore have to agree in polarity exactly as in the pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructLibrary {
    patterns: Vec<Pattern>,
}

const DEFAULT_LIBRARY: &str = "\
# k = 3
3: 1 2 3 => 3
3: 1 2 3 ; 1 4 5 => 1
3: 1 2 3 ; 1 2 4 => 1
3: 1 2 3 ; 1 4 5 ; 2 6 7 => 1 2
# k = 4
4: 1 2 3 4 => 4
4: 1 2 3 4 ; 1 5 6 7 => 1
4: 1 2 3 4 ; 1 5 6 7 ; 2 8 9 10 => 1 2
";

impl Default for StructLibrary {
    fn default() -> Self {
        Self::parse(DEFAULT_LIBRARY).expect("built-in library parses")
    }
}

impl StructLibrary {
    pub fn empty() -> Self {
        Self { patterns: vec![] }
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn patterns_for(&self, k: usize) -> impl Iterator<Item = &Pattern> {
        self.patterns.iter().filter(move |p| p.k == k)
    }

    /// Parses the line format
    /// `<k>: <clause> ; <clause> ... => <closed vars>`, with `#` comments.
    /// Clauses are DIMACS literals without the trailing 0.
    pub fn parse(text: &str) -> Result<Self> {
        let mut patterns = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Library {
                line: line_no,
                msg: msg.to_string(),
            };
            let (k_part, rest) = line
                .split_once(':')
                .ok_or_else(|| err("missing 'k:' prefix"))?;
            let k: usize = k_part.trim().parse().map_err(|_| err("bad k"))?;
            let (shape, closed_part) = rest
                .split_once("=>")
                .ok_or_else(|| err("missing '=>' before the closed variables"))?;
            let mut clauses = Vec::new();
            for c in shape.split(';') {
                let lits: Vec<i64> = c
                    .split_whitespace()
                    .map(|t| t.parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err("bad literal"))?;
                if lits.len() != k || lits.contains(&0) {
                    return Err(err("every pattern clause needs exactly k nonzero literals"));
                }
                let clause = Clause::from_dimacs(&lits)
                    .filter(|cl| cl.len() == k)
                    .ok_or_else(|| err("tautological or repeated literal"))?;
                clauses.push(clause);
            }
            let closed: Vec<Var> = closed_part
                .split_whitespace()
                .map(|t| t.parse::<Var>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err("bad closed variable"))?;
            let vars = sorted_vars(&clauses);
            if vars.iter().enumerate().any(|(i, &v)| v as usize != i + 1) {
                return Err(err("pattern variables must be exactly 1..n"));
            }
            if closed.iter().any(|v| !vars.contains(v)) {
                return Err(err("closed variable not in pattern"));
            }
            if clauses
                .iter()
                .any(|c| !c.vars().any(|v| closed.contains(&v)))
            {
                return Err(err("every pattern clause must contain a closed variable"));
            }
            patterns.push(Pattern { k, clauses, closed });
        }
        Ok(Self { patterns })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.patterns {
            let shape: Vec<String> = p
                .clauses
                .iter()
                .map(|c| {
                    c.literals()
                        .iter()
                        .map(|l| l.to_dimacs().to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            let closed: Vec<String> = p.closed.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{}: {} => {}\n",
                p.k,
                shape.join(" ; "),
                closed.join(" ")
            ));
        }
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Struct variable -> (pattern variable, polarity flipped).
type VarMap = HashMap<Var, (Var, bool)>;

fn extend_iso(
    sigma: &[Clause],
    pattern: &[Clause],
    ci: usize,
    used: &mut [bool],
    map: &mut VarMap,
    image: &mut HashMap<Var, Var>,
) -> bool {
    if ci == sigma.len() {
        return true;
    }
    let sc = &sigma[ci];
    for pj in 0..pattern.len() {
        if used[pj] || pattern[pj].len() != sc.len() {
            continue;
        }
        for perm in permutations(sc.len()) {
            let mut added: Vec<Var> = Vec::new();
            let mut ok = true;
            for (pos, &target) in perm.iter().enumerate() {
                let s = sc.literals()[pos];
                let p = pattern[pj].literals()[target];
                let flip = s.is_negated() != p.is_negated();
                match map.get(&s.var()) {
                    Some(&(pv, pf)) => {
                        if pv != p.var() || pf != flip {
                            ok = false;
                        }
                    }
                    None => match image.entry(p.var()) {
                        Entry::Occupied(_) => ok = false,
                        Entry::Vacant(slot) => {
                            slot.insert(s.var());
                            map.insert(s.var(), (p.var(), flip));
                            added.push(s.var());
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                used[pj] = true;
                if extend_iso(sigma, pattern, ci + 1, used, map, image) {
                    return true;
                }
                used[pj] = false;
            }
            for v in added {
                let (pv, _) = map.remove(&v).unwrap();
                image.remove(&pv);
            }
        }
    }
    false
}

/// Closed variables for `clauses` under `lib`: the designated variables of
/// the first matching width-`k` pattern, or every variable when none match.
pub fn match_library(clauses: &[Clause], k: usize, lib: &StructLibrary) -> Vec<Var> {
    let vars = sorted_vars(clauses);
    for pat in lib.patterns_for(k) {
        if pat.clauses.len() != clauses.len() || sorted_vars(&pat.clauses).len() != vars.len() {
            continue;
        }
        let mut map = VarMap::new();
        let mut image = HashMap::new();
        let mut used = vec![false; pat.clauses.len()];
        if extend_iso(clauses, &pat.clauses, 0, &mut used, &mut map, &mut image) {
            let mut closed: Vec<Var> = pat.closed.iter().map(|pv| image[pv]).collect();
            closed.sort_unstable();
            return closed;
        }
    }
    vars
}

/// Result of a reduction step.
#[derive(Clone, Debug)]
pub enum RedOutcome {
    Structs(StructSet),
    Counted(Estimate),
}

/// Greedy struct growth. Scans clauses in input order; any clause without a
/// closed variable absorbs every struct it touches into one new struct,
/// whose closed variables come from the library.
///
/// Returns the set and the number of loop iterations.
pub fn build_structs(
    phi: &CnfFormula,
    k: usize,
    lib: &StructLibrary,
) -> Result<(StructSet, usize)> {
    let mut psi: Vec<Struct> = Vec::new();
    let mut owner: HashMap<Var, usize> = HashMap::new();
    let mut closed: BTreeSet<Var> = BTreeSet::new();
    let mut iterations = 0;

    while let Some(c) = phi
        .clauses()
        .iter()
        .find(|c| !c.is_empty() && !c.vars().any(|v| closed.contains(&v)))
    {
        iterations += 1;
        let mut chi: Vec<usize> = c.vars().filter_map(|v| owner.get(&v).copied()).collect();
        chi.sort_unstable();
        chi.dedup();

        let mut merged: Vec<Clause> = chi
            .iter()
            .flat_map(|&i| psi[i].clauses.iter().cloned())
            .collect();
        merged.push(c.clone());
        let designated = match_library(&merged, k, lib);
        let sigma = Struct::new(merged, designated)?;

        for &i in chi.iter().rev() {
            psi.remove(i);
        }
        psi.push(sigma);
        owner.clear();
        closed.clear();
        for (i, s) in psi.iter().enumerate() {
            for &v in &s.vars {
                owner.insert(v, i);
            }
            closed.extend(s.closed.iter().copied());
        }
    }
    Ok((StructSet { structs: psi }, iterations))
}

/// Greedy maximal set of pairwise independent clauses, each as a fully
/// closed single-clause struct.
pub fn build_independent_clauses(phi: &CnfFormula) -> Result<StructSet> {
    let mut used: BTreeSet<Var> = BTreeSet::new();
    let mut structs = Vec::new();
    for c in phi.clauses() {
        if c.is_empty() || c.vars().any(|v| used.contains(&v)) {
            continue;
        }
        used.extend(c.vars());
        structs.push(Struct::fully_closed(vec![c.clone()])?);
    }
    Ok(StructSet { structs })
}

/// Keep the struct set iff `alpha_prev^n * prod(w * alpha_prev^-f) >= alpha_k^n`.
pub fn keep_structs(n: usize, psi: &StructSet, alpha_k: f64, alpha_prev: f64) -> bool {
    let lhs = n as f64 * alpha_prev.ln()
        + psi
            .iter()
            .map(|s| (s.stats.w as f64).ln() - s.stats.f as f64 * alpha_prev.ln())
            .sum::<f64>();
    lhs >= n as f64 * alpha_k.ln()
}

/// Counts `phi` as the sum over all non-falsifying closed-variable
/// assignments `b` of `recursive(phi_b)`. Each `phi_b` must have clauses of
/// length at most `k - 1`.
fn sum_over_closed<F>(
    phi: &CnfFormula,
    psi: &StructSet,
    k: usize,
    eps: f64,
    delta: f64,
    recursive: &mut F,
) -> Result<Estimate>
where
    F: FnMut(&CnfFormula, f64, f64) -> Result<Estimate>,
{
    let n = phi.num_free_vars();
    let sub_delta = delta / 2f64.powi(n as i32);
    let mut total = Estimate::exact_count(BigUint::from(0u32), eps, delta);
    psi.for_each_closed_assignment(|b| {
        let sub = phi.restrict(b);
        assert!(
            sub.max_clause_len() < k.max(1),
            "fixing closed variables must leave a (k-1)-CNF"
        );
        let est = recursive(&sub, eps, sub_delta)?;
        total = total.add(&est);
        Ok(())
    })?;
    Ok(total)
}

/// Struct-mode reduction.
pub fn red_structs<F>(
    phi: &CnfFormula,
    params: &ParamSet,
    lib: &StructLibrary,
    eps: f64,
    delta: f64,
    mut recursive: F,
) -> Result<RedOutcome>
where
    F: FnMut(&CnfFormula, f64, f64) -> Result<Estimate>,
{
    if phi.has_empty_clause() {
        return Ok(RedOutcome::Counted(Estimate::exact_count(
            BigUint::from(0u32),
            eps,
            delta,
        )));
    }
    if phi.num_clauses() == 0 {
        return Ok(RedOutcome::Structs(StructSet::empty()));
    }
    let k = phi.max_clause_len();
    let (psi, _) = build_structs(phi, k, lib)?;
    let n = phi.num_free_vars();
    if keep_structs(n, &psi, params.alpha(k), params.alpha(k - 1)) {
        return Ok(RedOutcome::Structs(psi));
    }
    sum_over_closed(phi, &psi, k, eps, delta, &mut recursive).map(RedOutcome::Counted)
}

/// Clause-mode reduction: keep a maximal independent clause set of size at
/// least `m_hat`, otherwise branch over its satisfying assignments.
pub fn red_clauses<F>(
    phi: &CnfFormula,
    m_hat: usize,
    eps: f64,
    delta: f64,
    mut recursive: F,
) -> Result<RedOutcome>
where
    F: FnMut(&CnfFormula, f64, f64) -> Result<Estimate>,
{
    if phi.has_empty_clause() {
        return Ok(RedOutcome::Counted(Estimate::exact_count(
            BigUint::from(0u32),
            eps,
            delta,
        )));
    }
    let psi = build_independent_clauses(phi)?;
    if psi.len() >= m_hat {
        return Ok(RedOutcome::Structs(psi));
    }
    let k = phi.max_clause_len();
    if k == 0 {
        // no clauses: one base-case call on phi itself
        let est = recursive(phi, eps, delta / 2f64.powi(phi.num_free_vars() as i32))?;
        return Ok(RedOutcome::Counted(est));
    }
    sum_over_closed(phi, &psi, k, eps, delta, &mut recursive).map(RedOutcome::Counted)
}
