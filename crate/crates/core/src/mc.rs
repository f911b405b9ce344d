//! Monte Carlo counting over the universe of assignments that satisfy a
//! struct set.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::cnf::{CnfFormula, PartialAssignment, Var};
use crate::error::{Error, Result};
use crate::rng::{self, SeedSplitter};
use crate::structs::StructSet;

/// Multiplicative Chernoff constant in the sample size.
pub const CHERNOFF_C: f64 = 3.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub decider_calls: u64,
    pub branch_nodes: u64,
    pub leaves: u64,
    pub recursive_calls: u64,
}

impl WorkCounters {
    pub fn add(&mut self, other: &WorkCounters) {
        self.decider_calls += other.decider_calls;
        self.branch_nodes += other.branch_nodes;
        self.leaves += other.leaves;
        self.recursive_calls += other.recursive_calls;
    }
}

/// A model count, exact or estimated.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: BigRational,
    pub exact: bool,
    pub epsilon: f64,
    pub delta: f64,
    /// Monte Carlo samples drawn (summed over nested calls).
    pub samples: u64,
    /// Samples that satisfied the formula.
    pub hits: u64,
    pub seed: Option<u64>,
    /// The sample size was capped by the budget, so the (eps, delta)
    /// guarantee does not hold.
    pub undersampled: bool,
    pub work: WorkCounters,
}

impl Estimate {
    pub fn exact_count(value: BigUint, epsilon: f64, delta: f64) -> Self {
        Self {
            value: BigRational::from_integer(BigInt::from(value)),
            exact: true,
            epsilon,
            delta,
            samples: 0,
            hits: 0,
            seed: None,
            undersampled: false,
            work: WorkCounters::default(),
        }
    }

    /// Sum of two counts of disjoint parts.
    pub fn add(&self, other: &Estimate) -> Estimate {
        let mut work = self.work;
        work.add(&other.work);
        Estimate {
            value: &self.value + &other.value,
            exact: self.exact && other.exact,
            epsilon: self.epsilon,
            delta: self.delta,
            samples: self.samples + other.samples,
            hits: self.hits + other.hits,
            seed: self.seed,
            undersampled: self.undersampled || other.undersampled,
            work,
        }
    }

    pub fn value_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::INFINITY)
    }

    /// The value as an integer, when it is one.
    pub fn as_integer(&self) -> Option<BigUint> {
        self.value
            .is_integer()
            .then(|| self.value.to_integer().to_biguint())
            .flatten()
    }

    /// Whether the value is within relative error `eps` of `truth`.
    pub fn within(&self, truth: &BigUint, eps: f64) -> bool {
        let truth = truth.to_f64().unwrap_or(f64::INFINITY);
        let v = self.value_f64();
        (1.0 - eps) * truth <= v && v <= (1.0 + eps) * truth
    }
}

/// The assignments satisfying every struct of `psi`, over the free
/// variables of a formula.
#[derive(Clone, Debug)]
pub struct Universe<'a> {
    psi: &'a StructSet,
    num_vars: u32,
    /// Free variables outside every struct; these get fair coin flips.
    loose: Vec<Var>,
    size: BigUint,
}

impl<'a> Universe<'a> {
    pub fn new(phi: &CnfFormula, psi: &'a StructSet) -> Result<Self> {
        let mut in_struct = vec![false; phi.num_vars() as usize + 1];
        for s in psi.iter() {
            for &v in s.vars() {
                if v > phi.num_vars() || phi.is_fixed(v) {
                    return Err(Error::InvalidParameter(format!(
                        "struct variable {v} is not a free variable of the formula"
                    )));
                }
                in_struct[v as usize] = true;
            }
        }
        let loose: Vec<Var> = phi
            .free_vars()
            .filter(|&v| !in_struct[v as usize])
            .collect();
        let size = psi.product_l() << loose.len();
        Ok(Self {
            psi,
            num_vars: phi.num_vars(),
            loose,
            size,
        })
    }

    /// `2^(n - sum n_sigma) * prod L_sigma`.
    pub fn size(&self) -> &BigUint {
        &self.size
    }

    pub fn psi(&self) -> &StructSet {
        self.psi
    }

    /// Fills `values` (indexed by variable) with a uniform draw.
    pub fn sample_into(&self, rng: &mut dyn RngCore, values: &mut [bool]) {
        for s in self.psi.iter() {
            let m = s.sample(rng);
            for (v, val) in s.decode(m) {
                values[v as usize] = val;
            }
        }
        for &v in &self.loose {
            values[v as usize] = rng.gen();
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> PartialAssignment {
        let mut values = vec![false; self.num_vars as usize + 1];
        self.sample_into(rng, &mut values);
        let vars = self
            .psi
            .iter()
            .flat_map(|s| s.vars().iter().copied())
            .chain(self.loose.iter().copied());
        PartialAssignment::from_pairs(vars.map(|v| (v, values[v as usize])))
    }

    /// Every member of the universe, for small universes only.
    pub fn enumerate(&self, limit: u64) -> Result<Vec<PartialAssignment>> {
        if self.size > BigUint::from(limit) {
            return Err(Error::UniverseTooLarge {
                size: self.size.to_string(),
                limit,
            });
        }
        let mut out = vec![PartialAssignment::new()];
        for s in self.psi.iter() {
            let mut sols = Vec::new();
            let _ = s.for_each_solution(|m| {
                sols.push(m);
                std::ops::ControlFlow::Continue(())
            });
            out = out
                .iter()
                .flat_map(|b| {
                    sols.iter()
                        .map(move |&m| b.union(&PartialAssignment::from_pairs(s.decode(m))))
                })
                .collect();
        }
        for &v in &self.loose {
            out = out
                .iter()
                .flat_map(|b| {
                    [false, true].map(|val| {
                        let mut c = b.clone();
                        c.set(v, val);
                        c
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

pub fn sample_universe(universe: &Universe<'_>, rng: &mut dyn RngCore) -> PartialAssignment {
    universe.sample(rng)
}

fn check_eps_delta(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {eps} outside (0, 1]"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} outside (0, 1)"
        )));
    }
    Ok(())
}

/// `T = ceil(3 * ln(2/delta) * U / (eps^2 * ell))`.
pub fn sample_size(universe: &BigUint, ell: &BigUint, eps: f64, delta: f64) -> Result<u64> {
    check_eps_delta(eps, delta)?;
    if ell.is_zero() {
        return Err(Error::InvalidParameter("ell must be at least 1".into()));
    }
    let ratio = BigRational::new(BigInt::from(universe.clone()), BigInt::from(ell.clone()))
        .to_f64()
        .unwrap_or(f64::INFINITY);
    let t = CHERNOFF_C * (2.0 / delta).ln() * ratio / (eps * eps);
    // absorb rounding noise so exact products do not round up
    let t = (t * (1.0 - 1e-12)).ceil();
    Ok(if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        t as u64
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McOptions {
    /// Cap on the number of samples; above it the estimate is flagged.
    pub max_samples: Option<u64>,
    /// Worker threads; each runs its own child stream. `1` is bit-reproducible
    /// independent of the machine.
    pub threads: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            max_samples: None,
            threads: 1,
        }
    }
}

/// Samples uniformly from the universe of `psi` and scales the hit rate by
/// its size. The guarantee needs `#phi >= ell`.
pub fn mc_estimate(
    phi: &CnfFormula,
    psi: &StructSet,
    ell: &BigUint,
    eps: f64,
    delta: f64,
    seed: u64,
    opts: McOptions,
) -> Result<Estimate> {
    let universe = Universe::new(phi, psi)?;
    let wanted = sample_size(universe.size(), ell, eps, delta)?;
    let (samples, undersampled) = match opts.max_samples {
        Some(cap) if wanted > cap => (cap.max(1), true),
        _ => (wanted.max(1), false),
    };

    let run = |count: u64, seed: u64| -> u64 {
        let mut rng = rng::stream(seed);
        let mut values = vec![false; phi.num_vars() as usize + 1];
        let mut hits = 0;
        for _ in 0..count {
            universe.sample_into(&mut rng, &mut values);
            if phi.evaluate_dense(&values) {
                hits += 1;
            }
        }
        hits
    };

    let threads = opts.threads.max(1) as u64;
    let hits = if threads == 1 || samples < 4096 {
        run(samples, seed)
    } else {
        let mut split = SeedSplitter::new(seed);
        let seeds: Vec<u64> = (0..threads).map(|_| split.next_seed()).collect();
        let per = samples / threads;
        let extra = samples % threads;
        std::thread::scope(|s| {
            let handles: Vec<_> = seeds
                .iter()
                .enumerate()
                .map(|(i, &sd)| {
                    let count = per + u64::from((i as u64) < extra);
                    let run = &run;
                    s.spawn(move || run(count, sd))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        })
    };

    let value = BigRational::new(BigInt::from(universe.size() * hits), BigInt::from(samples));
    Ok(Estimate {
        value,
        exact: false,
        epsilon: eps,
        delta,
        samples,
        hits,
        seed: Some(seed),
        undersampled,
        work: WorkCounters::default(),
    })
}

/// Median by value of an odd number of runs.
pub fn median_boost(runs: &[Estimate]) -> Result<Estimate> {
    if runs.len().is_multiple_of(2) {
        return Err(Error::EvenRunCount(runs.len()));
    }
    let mut sorted: Vec<&Estimate> = runs.iter().collect();
    sorted.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(Ordering::Equal));
    Ok(sorted[runs.len() / 2].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Clause;
    use crate::structs::Struct;

    fn est(v: u32) -> Estimate {
        Estimate::exact_count(BigUint::from(v), 0.1, 0.1)
    }

    #[test]
    fn sample_size_examples() {
        let u = BigUint::from(100u32);
        let delta = 2.0 / std::f64::consts::E;
        assert_eq!(sample_size(&u, &u, 1.0, delta).unwrap(), 3);
        let t1 = sample_size(&BigUint::from(1000u32), &BigUint::from(7u32), 0.2, 0.1).unwrap();
        let t2 = sample_size(&BigUint::from(2000u32), &BigUint::from(7u32), 0.2, 0.1).unwrap();
        assert!(t2 == 2 * t1 || t2 == 2 * t1 - 1);
        let t4 = sample_size(&BigUint::from(1000u32), &BigUint::from(7u32), 0.1, 0.1).unwrap();
        assert!((t4 as i64 - 4 * t1 as i64).abs() <= 4);
    }

    #[test]
    fn sample_size_rejects_bad_params() {
        let u = BigUint::from(8u32);
        assert!(sample_size(&u, &u, 0.0, 0.1).is_err());
        assert!(sample_size(&u, &u, 1.5, 0.1).is_err());
        assert!(sample_size(&u, &u, 0.5, 1.0).is_err());
        assert!(sample_size(&u, &BigUint::zero(), 0.5, 0.1).is_err());
    }

    #[test]
    fn median_examples() {
        let m = median_boost(&[est(3), est(4), est(100)]).unwrap();
        assert_eq!(m.as_integer(), Some(4u32.into()));
        assert_eq!(median_boost(&[est(9)]).unwrap(), est(9));
        assert_eq!(median_boost(&[est(1), est(2)]), Err(Error::EvenRunCount(2)));
    }

    #[test]
    fn whole_formula_as_struct_is_exact() {
        let c = Clause::from_dimacs(&[1, 2, 3]).unwrap();
        let phi = CnfFormula::new(3, vec![c.clone()]).unwrap();
        let psi = StructSet::new(vec![Struct::fully_closed(vec![c]).unwrap()]).unwrap();
        let e = mc_estimate(
            &phi,
            &psi,
            &BigUint::from(7u32),
            0.5,
            0.1,
            5,
            McOptions::default(),
        )
        .unwrap();
        assert_eq!(e.hits, e.samples);
        assert_eq!(e.as_integer(), Some(7u32.into()));
    }

    #[test]
    fn unsat_formula_estimates_zero() {
        let phi = CnfFormula::from_dimacs_clauses(2, &[&[1], &[-1]]);
        let e = mc_estimate(
            &phi,
            &StructSet::empty(),
            &BigUint::from(1u32),
            0.5,
            0.1,
            1,
            McOptions::default(),
        )
        .unwrap();
        assert_eq!(e.hits, 0);
        assert!(e.value.is_zero());
    }

    #[test]
    fn budget_flags_undersampling() {
        let phi = CnfFormula::from_dimacs_clauses(10, &[&[1, 2]]);
        let e = mc_estimate(
            &phi,
            &StructSet::empty(),
            &BigUint::from(1u32),
            0.1,
            0.1,
            1,
            McOptions {
                max_samples: Some(50),
                threads: 1,
            },
        )
        .unwrap();
        assert!(e.undersampled);
        assert_eq!(e.samples, 50);
    }

    #[test]
    fn threaded_runs_are_reproducible() {
        let phi = CnfFormula::from_dimacs_clauses(12, &[&[1, 2, 3], &[-4, 5, 6], &[7, -8, 9]]);
        let opts = McOptions {
            max_samples: None,
            threads: 4,
        };
        let a = mc_estimate(
            &phi,
            &StructSet::empty(),
            &BigUint::from(2u32),
            0.2,
            0.1,
            9,
            opts,
        )
        .unwrap();
        let b = mc_estimate(
            &phi,
            &StructSet::empty(),
            &BigUint::from(2u32),
            0.2,
            0.1,
            9,
            opts,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
