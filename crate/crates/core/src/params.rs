//! Strategy constants: decider exponents, runtime bases and the cut
//! threshold `ell` for each counting strategy.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// log2 of the best randomized 3-SAT decider's base.
pub const BETA_3: f64 = 0.3864;
/// log2 of the best randomized 4-SAT decider's base.
pub const BETA_4: f64 = 0.5548;

/// Runtime base of the exact #2-SAT recursion floor.
pub const ALPHA_2: f64 = 1.2377;
pub const ALPHA_3: f64 = 1.51426;
pub const ALPHA_4: f64 = 1.60816;

/// Cut threshold bases and clause-set sizes of the independent-clause
/// scheme, for k = 3 and k = 4.
const CLAUSES_ELL_BASE: [(usize, f64, f64); 2] = [(3, 1.2903, 0.1563), (4, 1.2372, 0.0587)];
/// Cut threshold bases of the struct scheme for k = 3 and k = 4.
const STRUCTS_ELL_BASE: [(usize, f64); 2] = [(3, 1.28794), (4, 1.23823)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[serde(rename = "brute")]
    BruteForce,
    Thurley,
    #[serde(rename = "pruned")]
    PrunedTree,
    #[serde(rename = "clauses")]
    IndepClauses,
    #[serde(rename = "structs")]
    IndepStructs,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::BruteForce,
        Strategy::Thurley,
        Strategy::PrunedTree,
        Strategy::IndepClauses,
        Strategy::IndepStructs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::BruteForce => "brute",
            Strategy::Thurley => "thurley",
            Strategy::PrunedTree => "pruned",
            Strategy::IndepClauses => "clauses",
            Strategy::IndepStructs => "structs",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy {s:?}")))
    }
}

/// `sum_{j>=1} 1 / (j (j + 1/(k-1)))` to absolute error `tol`.
///
/// Partial sum up to `N`, plus the midpoint of the integral bracket on the
/// tail, which is off by at most `1 / (2 N (N + a))`.
pub fn mu_k(k: usize, tol: f64) -> f64 {
    assert!(k >= 2, "k must be at least 2");
    assert!(tol > 0.0, "tolerance must be positive");
    let a = 1.0 / (k as f64 - 1.0);
    let mut n = 1.0f64;
    while 1.0 / (2.0 * n * (n + a)) > tol / 2.0 {
        n *= 2.0;
    }
    let terms = n as u64;
    // sum small terms first
    let partial: f64 = (1..=terms)
        .rev()
        .map(|j| {
            let j = j as f64;
            1.0 / (j * (j + a))
        })
        .sum();
    let tail_int = |x: f64| (a / x).ln_1p() / a;
    let tail = 0.5 * (tail_int(n) + tail_int(n + 1.0));
    partial + tail
}

/// log2 base of the k-SAT decider assumed by the thresholds. `k = 2` is
/// polynomial, so 0.
pub fn beta_k(k: usize) -> f64 {
    match k {
        0..=2 => 0.0,
        3 => BETA_3,
        4 => BETA_4,
        _ => 1.0 - mu_k(k, 1e-12) / (k as f64 - 1.0),
    }
}

/// `2^(1/(2 - beta_k))`: runtime base of the binary-tree scheme.
pub fn theta_k(k: usize) -> f64 {
    2f64.powf(1.0 / (2.0 - beta_k(k)))
}

/// Exponent of the pruned-tree scheme's runtime base.
pub fn p_k(k: usize) -> f64 {
    let beta = beta_k(k);
    let ratio = k as f64 / ((1u64 << k) as f64 - 1.0).log2();
    (1.0 - beta * (ratio - 1.0)) / (2.0 - beta * ratio)
}

/// Default runtime base of the struct scheme for width `k`.
pub fn default_alpha(k: usize) -> f64 {
    match k {
        0..=2 => ALPHA_2,
        3 => ALPHA_3,
        4 => ALPHA_4,
        _ => theta_k(k),
    }
}

/// `ceil(2^x)` as a big integer, at least 1.
pub fn ceil_pow2(x: f64) -> BigUint {
    if !x.is_finite() || x <= 0.0 {
        return BigUint::one();
    }
    if x < 52.0 {
        return BigUint::from(2f64.powf(x).ceil() as u64);
    }
    let whole = x.floor() as u64;
    let mantissa = 2f64.powf(x - whole as f64 + 52.0).ceil() as u64;
    (BigUint::from(mantissa) << whole) >> 52u32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub k: usize,
    pub n: usize,
    pub strategy: Strategy,
    pub beta_k: f64,
    /// Series constant behind `beta_k`, for k >= 5.
    pub mu_k: Option<f64>,
    pub alpha_by_k: BTreeMap<usize, f64>,
    pub theta_k: f64,
    pub p_k: f64,
    /// `log2(ell)`, before rounding.
    pub ell_log2: f64,
    pub ell: BigUint,
    /// Clause mode only: `m_hat / n`.
    pub m_hat_fraction: Option<f64>,
    pub m_hat: usize,
}

impl ParamSet {
    /// Runtime base for width `k`, falling back to the built-in default.
    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha_by_k
            .get(&k)
            .copied()
            .unwrap_or_else(|| default_alpha(k))
    }
}

pub fn params_for(k: usize, n: usize, strategy: Strategy) -> Result<ParamSet> {
    params_with_alphas(k, n, strategy, &BTreeMap::new())
}

/// Like [`params_for`], with per-width overrides of the struct-scheme bases.
pub fn params_with_alphas(
    k: usize,
    n: usize,
    strategy: Strategy,
    alpha_overrides: &BTreeMap<usize, f64>,
) -> Result<ParamSet> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k}; need k >= 2")));
    }
    let unsupported = || Error::Unsupported {
        strategy: strategy.name().to_string(),
        k,
    };
    let beta = beta_k(k);
    let nf = n as f64;
    let thurley_log2 = nf * (1.0 - beta) / (2.0 - beta);
    let mut m_hat_fraction = None;
    let ell_log2 = match strategy {
        Strategy::BruteForce => nf,
        Strategy::Thurley => thurley_log2,
        Strategy::PrunedTree => {
            let ratio = k as f64 / ((1u64 << k) as f64 - 1.0).log2();
            nf * (1.0 - beta) / (2.0 - beta * ratio)
        }
        Strategy::IndepClauses => {
            let &(_, base, frac) = CLAUSES_ELL_BASE
                .iter()
                .find(|(kk, _, _)| *kk == k)
                .ok_or_else(unsupported)?;
            m_hat_fraction = Some(frac);
            nf * base.log2()
        }
        Strategy::IndepStructs => {
            if k < 3 {
                return Err(unsupported());
            }
            match STRUCTS_ELL_BASE.iter().find(|(kk, _)| *kk == k) {
                Some(&(_, base)) => nf * base.log2(),
                None => thurley_log2,
            }
        }
    };
    let alpha_by_k = (2..=k)
        .map(|j| {
            (
                j,
                alpha_overrides
                    .get(&j)
                    .copied()
                    .unwrap_or_else(|| default_alpha(j)),
            )
        })
        .collect();
    Ok(ParamSet {
        k,
        n,
        strategy,
        beta_k: beta,
        mu_k: (k >= 5).then(|| mu_k(k, 1e-12)),
        alpha_by_k,
        theta_k: theta_k(k),
        p_k: p_k(k),
        ell_log2,
        ell: ceil_pow2(ell_log2),
        m_hat_fraction,
        m_hat: m_hat_fraction.map_or(0, |f| (f * nf).ceil() as usize),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_limits() {
        assert!((mu_k(2, 1e-10) - 1.0).abs() < 1e-9);
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((mu_k(1_000_000, 1e-9) - zeta2).abs() < 1e-4);
        assert!((mu_k(5, 1e-3) - mu_k(5, 1e-12)).abs() <= 1e-3);
    }

    #[test]
    fn theta5_from_series() {
        assert!((theta_k(5) - 1.6712).abs() < 5e-4);
    }

    #[test]
    fn ceil_pow2_examples() {
        assert_eq!(ceil_pow2(0.0), BigUint::one());
        assert_eq!(ceil_pow2(3.0), BigUint::from(8u32));
        assert_eq!(ceil_pow2(3.1), BigUint::from(9u32));
        assert_eq!(ceil_pow2(60.0), BigUint::one() << 60u32);
    }

    #[test]
    fn unsupported_combinations() {
        assert!(matches!(
            params_for(5, 20, Strategy::IndepClauses),
            Err(Error::Unsupported { .. })
        ));
        assert!(matches!(
            params_for(2, 20, Strategy::IndepStructs),
            Err(Error::Unsupported { .. })
        ));
        assert!(params_for(1, 20, Strategy::Thurley).is_err());
        assert!(params_for(6, 20, Strategy::IndepStructs).is_ok());
    }

    #[test]
    fn clause_mode_m_hat() {
        let p = params_for(3, 20, Strategy::IndepClauses).unwrap();
        assert_eq!(p.m_hat, 4);
        let p = params_for(4, 20, Strategy::IndepClauses).unwrap();
        assert_eq!(p.m_hat, 2);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("fast".parse::<Strategy>().is_err());
    }
}
