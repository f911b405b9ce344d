//! CNF formulas over dense 1-based variables, DIMACS I/O and restriction.
//!
//! A [`CnfFormula`] remembers which variables were fixed by earlier calls to
//! [`CnfFormula::restrict`]. Counting always ranges over the *free* variables,
//! so `#restrict(phi, b)` summed over a partition of assignments `b` gives
//! `#phi` without any correction factors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Var = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    var: Var,
    negated: bool,
}

impl Literal {
    pub fn new(var: Var, negated: bool) -> Self {
        assert!(var >= 1, "variables are 1-based");
        Self { var, negated }
    }

    pub fn positive(var: Var) -> Self {
        Self::new(var, false)
    }

    pub fn negative(var: Var) -> Self {
        Self::new(var, true)
    }

    /// `None` for 0, which DIMACS reserves as the clause terminator.
    pub fn from_dimacs(lit: i64) -> Option<Self> {
        if lit == 0 || lit.unsigned_abs() > Var::MAX as u64 {
            return None;
        }
        Some(Self::new(lit.unsigned_abs() as Var, lit < 0))
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn var(self) -> Var {
        self.var
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    pub fn negate(self) -> Self {
        Self {
            var: self.var,
            negated: !self.negated,
        }
    }

    /// Truth value of the literal when its variable takes `value`.
    #[inline]
    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of literals over pairwise distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    /// Builds a clause, merging repeated literals. Returns `None` for a
    /// tautology (a variable occurring in both polarities).
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Option<Self> {
        let mut out: Vec<Literal> = Vec::new();
        for lit in literals {
            match out.iter().find(|l| l.var == lit.var) {
                Some(prev) if prev.negated == lit.negated => {}
                Some(_) => return None,
                None => out.push(lit),
            }
        }
        Some(Self { literals: out })
    }

    /// Convenience constructor from signed DIMACS integers.
    ///
    /// Panics on a zero literal.
    pub fn from_dimacs(lits: &[i64]) -> Option<Self> {
        Self::new(
            lits.iter()
                .map(|&l| Literal::from_dimacs(l).expect("0 is not a literal")),
        )
    }

    pub fn empty() -> Self {
        Self {
            literals: Vec::new(),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.literals.iter().map(|l| l.var)
    }

    pub fn contains_var(&self, var: Var) -> bool {
        self.literals.iter().any(|l| l.var == var)
    }

    pub fn literal_of(&self, var: Var) -> Option<Literal> {
        self.literals.iter().copied().find(|l| l.var == var)
    }

    /// Three-valued evaluation: `Some(true)` if some literal is true,
    /// `Some(false)` if all literals are assigned false, `None` otherwise.
    pub fn eval_partial(&self, b: &PartialAssignment) -> Option<bool> {
        let mut open = false;
        for lit in &self.literals {
            match b.get(lit.var) {
                Some(v) if lit.eval(v) => return Some(true),
                Some(_) => {}
                None => open = true,
            }
        }
        if open {
            None
        } else {
            Some(false)
        }
    }

    /// Evaluation against a dense value table indexed by variable.
    #[inline]
    pub fn eval_dense(&self, values: &[bool]) -> bool {
        self.literals.iter().any(|l| l.eval(values[l.var as usize]))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{lit}")?;
        }
        write!(f, ")")
    }
}

/// Map from variables to truth values, stored densely by variable index.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PartialAssignment {
    values: Vec<Option<bool>>,
}

impl PartialAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, bool)>) -> Self {
        let mut b = Self::new();
        for (v, val) in pairs {
            b.set(v, val);
        }
        b
    }

    /// Full assignment of `1..=num_vars` taken from the low bits of `mask`
    /// (bit `i - 1` is variable `i`).
    pub fn from_mask(num_vars: u32, mask: u64) -> Self {
        Self::from_pairs((1..=num_vars).map(|v| (v, mask >> (v - 1) & 1 == 1)))
    }

    pub fn get(&self, var: Var) -> Option<bool> {
        self.values.get(var as usize).copied().flatten()
    }

    pub fn set(&mut self, var: Var, value: bool) {
        assert!(var >= 1, "variables are 1-based");
        let idx = var as usize;
        if self.values.len() <= idx {
            self.values.resize(idx + 1, None);
        }
        self.values[idx] = Some(value);
    }

    pub fn unset(&mut self, var: Var) {
        if let Some(slot) = self.values.get_mut(var as usize) {
            *slot = None;
        }
    }

    pub fn is_assigned(&self, var: Var) -> bool {
        self.get(var).is_some()
    }

    pub fn len(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    /// Bindings in increasing variable order.
    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|val| (i as Var, val)))
    }

    pub fn max_var(&self) -> Option<Var> {
        self.iter().last().map(|(v, _)| v)
    }

    /// Union of two assignments; bindings of `other` win on overlap.
    pub fn union(&self, other: &PartialAssignment) -> PartialAssignment {
        let mut out = self.clone();
        for (v, val) in other.iter() {
            out.set(v, val);
        }
        out
    }

    /// Dense value table of length `num_vars + 1`; unassigned slots are false.
    pub fn to_dense(&self, num_vars: u32) -> Vec<bool> {
        let mut out = vec![false; num_vars as usize + 1];
        for (v, val) in self.iter() {
            if (v as usize) < out.len() {
                out[v as usize] = val;
            }
        }
        out
    }
}

impl PartialEq for PartialAssignment {
    fn eq(&self, other: &Self) -> bool {
        self.iter().eq(other.iter())
    }
}

impl Eq for PartialAssignment {}

/// A k-CNF formula.
///
/// `fixed` records variables eliminated by restriction. They no longer occur
/// in any clause and are excluded from every count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: u32,
    k: usize,
    clauses: Vec<Clause>,
    fixed: PartialAssignment,
}

impl CnfFormula {
    pub fn new(num_vars: u32, clauses: Vec<Clause>) -> Result<Self> {
        for c in &clauses {
            for lit in c.literals() {
                if lit.var() > num_vars {
                    return Err(Error::VarOutOfRange {
                        var: lit.var() as i64,
                        num_vars,
                    });
                }
            }
        }
        let k = clauses.iter().map(Clause::len).max().unwrap_or(0);
        Ok(Self {
            num_vars,
            k,
            clauses,
            fixed: PartialAssignment::new(),
        })
    }

    /// Test helper: builds from DIMACS-style integer clauses, dropping
    /// tautologies. Panics on out-of-range variables.
    pub fn from_dimacs_clauses(num_vars: u32, clauses: &[&[i64]]) -> Self {
        let cl = clauses
            .iter()
            .filter_map(|c| Clause::from_dimacs(c))
            .collect();
        Self::new(num_vars, cl).expect("clause variables within range")
    }

    /// Overrides the clause-length bound. It may not be below the longest clause.
    pub fn with_k(mut self, k: usize) -> Result<Self> {
        let observed = self.max_clause_len();
        if k < observed {
            return Err(Error::ClauseBound { bound: k, observed });
        }
        self.k = k;
        Ok(self)
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Declared clause-length bound.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn fixed(&self) -> &PartialAssignment {
        &self.fixed
    }

    pub fn is_fixed(&self, var: Var) -> bool {
        self.fixed.is_assigned(var)
    }

    pub fn free_vars(&self) -> impl Iterator<Item = Var> + '_ {
        (1..=self.num_vars).filter(move |&v| !self.fixed.is_assigned(v))
    }

    pub fn num_free_vars(&self) -> usize {
        self.num_vars as usize - self.fixed.len()
    }

    pub fn max_clause_len(&self) -> usize {
        self.clauses.iter().map(Clause::len).max().unwrap_or(0)
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }

    /// Sorted, deduplicated variables occurring in some clause.
    pub fn occurring_vars(&self) -> Vec<Var> {
        let mut seen = vec![false; self.num_vars as usize + 1];
        for c in &self.clauses {
            for v in c.vars() {
                seen[v as usize] = true;
            }
        }
        (1..=self.num_vars).filter(|&v| seen[v as usize]).collect()
    }

    /// Substitutes `b` into the formula. Satisfied clauses disappear, false
    /// literals are stripped, and an all-false clause stays as the empty
    /// clause. Bindings for already fixed variables are ignored.
    pub fn restrict(&self, b: &PartialAssignment) -> CnfFormula {
        let mut clauses = Vec::with_capacity(self.clauses.len());
        'clauses: for c in &self.clauses {
            let mut kept = Vec::with_capacity(c.len());
            for &lit in c.literals() {
                match b.get(lit.var()) {
                    Some(v) if lit.eval(v) => continue 'clauses,
                    Some(_) => {}
                    None => kept.push(lit),
                }
            }
            clauses.push(Clause { literals: kept });
        }
        let mut fixed = self.fixed.clone();
        for (v, val) in b.iter() {
            if v <= self.num_vars && !fixed.is_assigned(v) {
                fixed.set(v, val);
            }
        }
        CnfFormula {
            num_vars: self.num_vars,
            k: self.k,
            clauses,
            fixed,
        }
    }

    /// True iff every clause has a true literal under `b`, which must assign
    /// every free variable.
    pub fn evaluate(&self, b: &PartialAssignment) -> Result<bool> {
        if let Some(v) = self.free_vars().find(|&v| !b.is_assigned(v)) {
            return Err(Error::Unassigned(v));
        }
        Ok(self.clauses.iter().all(|c| c.eval_partial(b) == Some(true)))
    }

    /// Hot-path evaluation against a dense table of length `num_vars + 1`.
    #[inline]
    pub fn evaluate_dense(&self, values: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.eval_dense(values))
    }
}

/// Non-fatal observations made while parsing DIMACS text.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub declared_clauses: usize,
    pub parsed_clauses: usize,
    pub tautologies_dropped: usize,
    pub duplicate_literals_merged: usize,
}

impl ParseReport {
    pub fn clause_count_mismatch(&self) -> bool {
        self.declared_clauses != self.parsed_clauses
    }
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    parse_dimacs_with_report(text).map(|(f, _)| f)
}

pub fn parse_dimacs_with_report(text: &str) -> Result<(CnfFormula, ParseReport)> {
    let mut header: Option<(u32, usize)> = None;
    let mut report = ParseReport::default();
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut finish = |lits: &mut Vec<Literal>, report: &mut ParseReport| {
        report.parsed_clauses += 1;
        let raw_len = lits.len();
        match Clause::new(lits.drain(..)) {
            Some(c) => {
                report.duplicate_literals_merged += raw_len - c.len();
                clauses.push(c);
            }
            None => report.tautologies_dropped += 1,
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "duplicate problem line".into(),
                });
            }
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(Error::Parse {
                line: line_no,
                msg: "clause data before the 'p cnf' header".into(),
            });
        };
        for tok in line.split_whitespace() {
            let lit: i64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("expected an integer literal, found {tok:?}"),
            })?;
            if lit == 0 {
                finish(&mut current, &mut report);
                continue;
            }
            if lit.unsigned_abs() > num_vars as u64 {
                return Err(Error::VarOutOfRange { var: lit, num_vars });
            }
            current.push(Literal::from_dimacs(lit).expect("nonzero literal"));
        }
    }
    if !current.is_empty() {
        // unterminated last clause
        finish(&mut current, &mut report);
    }

    let (num_vars, declared) = header.ok_or(Error::Parse {
        line: 0,
        msg: "missing 'p cnf' header".into(),
    })?;
    report.declared_clauses = declared;
    let formula = CnfFormula::new(num_vars, clauses)?;
    Ok((formula, report))
}

fn parse_header(line: &str, line_no: usize) -> Result<(u32, usize)> {
    let bad = |msg: &str| Error::Parse {
        line: line_no,
        msg: msg.to_string(),
    };
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "p" || toks[1] != "cnf" {
        return Err(bad("header must read 'p cnf <vars> <clauses>'"));
    }
    let n = toks[2]
        .parse::<u32>()
        .map_err(|_| bad("variable count is not a non-negative integer"))?;
    let m = toks[3]
        .parse::<usize>()
        .map_err(|_| bad("clause count is not a non-negative integer"))?;
    Ok((n, m))
}

/// DIMACS text for `phi`. Fixed variables are written as unit clauses so the
/// model count over all variables equals the count over free variables.
pub fn serialize_dimacs(phi: &CnfFormula) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let units: Vec<(Var, bool)> = phi.fixed().iter().collect();
    writeln!(
        out,
        "p cnf {} {}",
        phi.num_vars(),
        phi.num_clauses() + units.len()
    )
    .unwrap();
    for c in phi.clauses() {
        for lit in c.literals() {
            write!(out, "{} ", lit.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    for (v, val) in units {
        let lit = Literal::new(v, !val);
        writeln!(out, "{} 0", lit.to_dimacs()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const IMPLICATION_CHAIN: &str = "p cnf 3 2\n-1 2 0\n-2 3 0\n";
    const TWO_MODEL_CHAIN: &str = "p cnf 4 4\n1 2 0\n-2 3 0\n-3 4 0\n-1 2 0\n";

    fn implication_chain() -> CnfFormula {
        parse_dimacs(IMPLICATION_CHAIN).unwrap()
    }

    #[test]
    fn parses_implication_chain() {
        let phi = implication_chain();
        assert_eq!(phi.num_vars(), 3);
        assert_eq!(phi.num_clauses(), 2);
        assert_eq!(phi.clauses()[0], Clause::from_dimacs(&[-1, 2]).unwrap());
        assert_eq!(phi.clauses()[1], Clause::from_dimacs(&[-2, 3]).unwrap());
        assert_eq!(phi.k(), 2);
    }

    #[test]
    fn parses_empty_formula() {
        let phi = parse_dimacs("p cnf 2 0\n").unwrap();
        assert_eq!(phi.num_vars(), 2);
        assert_eq!(phi.num_clauses(), 0);
    }

    #[test]
    fn parses_two_model_chain() {
        let phi = parse_dimacs(TWO_MODEL_CHAIN).unwrap();
        assert_eq!(phi.num_clauses(), 4);
        assert_eq!(phi.clauses()[0], Clause::from_dimacs(&[1, 2]).unwrap());
    }

    #[test]
    fn crlf_and_comments() {
        let text = "c hello\r\np cnf 3 2\r\n-1 2 0\r\nc mid\r\n-2 3 0\r\n";
        assert_eq!(parse_dimacs(text).unwrap(), implication_chain());
    }

    #[test]
    fn clauses_may_span_lines() {
        let phi = parse_dimacs("p cnf 3 1\n1 2\n3 0\n").unwrap();
        assert_eq!(phi.clauses()[0].len(), 3);
    }

    #[test]
    fn tautologies_and_duplicates() {
        let (phi, rep) = parse_dimacs_with_report("p cnf 3 3\n1 -1 2 0\n2 2 3 0\n1 0\n").unwrap();
        assert_eq!(phi.num_clauses(), 2);
        assert_eq!(rep.tautologies_dropped, 1);
        assert_eq!(rep.duplicate_literals_merged, 1);
        assert_eq!(phi.clauses()[0], Clause::from_dimacs(&[2, 3]).unwrap());
        assert!(!rep.clause_count_mismatch());
    }

    #[test]
    fn count_mismatch_is_a_warning() {
        let (phi, rep) = parse_dimacs_with_report("p cnf 3 5\n1 2 0\n").unwrap();
        assert_eq!(phi.num_clauses(), 1);
        assert!(rep.clause_count_mismatch());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_dimacs("p cnf x 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_dimacs("p dnf 2 2\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 3 0\n"),
            Err(Error::VarOutOfRange { var: 3, .. })
        ));
        assert!(matches!(parse_dimacs("1 2 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_dimacs("c only\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 a 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn restrict_examples() {
        let phi = implication_chain();
        let r = phi.restrict(&PartialAssignment::from_pairs([(2, false)]));
        // x2 = 0 satisfies the second clause
        assert_eq!(r.clauses(), &[Clause::from_dimacs(&[-1]).unwrap()]);
        assert_eq!(r.num_free_vars(), 2);
        let r = phi.restrict(&PartialAssignment::from_pairs([(1, true), (3, false)]));
        assert_eq!(
            r.clauses(),
            &[
                Clause::from_dimacs(&[2]).unwrap(),
                Clause::from_dimacs(&[-2]).unwrap()
            ]
        );

        let phi = CnfFormula::from_dimacs_clauses(2, &[&[1, 2]]);
        let r = phi.restrict(&PartialAssignment::from_pairs([(1, true)]));
        assert!(r.clauses().is_empty());

        let r = phi.restrict(&PartialAssignment::from_pairs([(1, false), (2, false)]));
        assert!(r.has_empty_clause());
    }

    #[test]
    fn evaluate_examples() {
        let phi = implication_chain();
        assert!(phi
            .evaluate(&PartialAssignment::from_mask(3, 0b000))
            .unwrap());
        assert!(!phi
            .evaluate(&PartialAssignment::from_mask(3, 0b001))
            .unwrap());
        let empty = parse_dimacs("p cnf 2 0\n").unwrap();
        assert!(empty
            .evaluate(&PartialAssignment::from_mask(2, 0b10))
            .unwrap());
        assert_eq!(
            phi.evaluate(&PartialAssignment::from_pairs([(1, true)])),
            Err(Error::Unassigned(2))
        );
    }

    #[test]
    fn serialize_examples() {
        let phi = implication_chain();
        assert_eq!(parse_dimacs(&serialize_dimacs(&phi)).unwrap(), phi);
        let empty = parse_dimacs("p cnf 2 0\n").unwrap();
        assert_eq!(serialize_dimacs(&empty), "p cnf 2 0\n");
        let two_model_chain = parse_dimacs(TWO_MODEL_CHAIN).unwrap();
        let text = serialize_dimacs(&two_model_chain);
        assert_eq!(text.lines().filter(|l| !l.starts_with('p')).count(), 4);
    }

    #[test]
    fn empty_clause_round_trips() {
        let phi = CnfFormula::new(2, vec![Clause::empty()]).unwrap();
        let back = parse_dimacs(&serialize_dimacs(&phi)).unwrap();
        assert!(back.has_empty_clause());
    }

    #[test]
    fn with_k_rejects_small_bound() {
        let phi = implication_chain();
        assert!(phi.clone().with_k(3).is_ok());
        assert!(matches!(phi.with_k(1), Err(Error::ClauseBound { .. })));
    }
}
