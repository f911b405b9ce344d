//! Goodness-of-fit checks for the samplers.

use std::collections::HashMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cnf::PartialAssignment;
use crate::error::{Error, Result};
use crate::mc::Universe;

/// Largest universe [`chi_square_uniformity`] will enumerate.
pub const UNIFORMITY_LIMIT: u64 = 100_000;

/// Pearson statistic and p-value of `counts` against the uniform
/// distribution over its cells.
pub fn chi_square_from_counts(counts: &[u64]) -> Result<(f64, f64)> {
    if counts.len() < 2 {
        return Err(Error::InvalidParameter("need at least two cells".into()));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("no observations".into()));
    }
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok((stat, dist.sf(stat)))
}

/// Chi-square test of `samples` against the uniform distribution on
/// `universe`. A sample outside the universe is an error.
pub fn chi_square_uniformity(
    samples: &[PartialAssignment],
    universe: &Universe<'_>,
) -> Result<(f64, f64)> {
    let cells = universe.enumerate(UNIFORMITY_LIMIT)?;
    let index: HashMap<Vec<(u32, bool)>, usize> = cells
        .iter()
        .enumerate()
        .map(|(i, b)| (b.iter().collect(), i))
        .collect();
    let mut counts = vec![0u64; cells.len()];
    for s in samples {
        let key: Vec<(u32, bool)> = s.iter().collect();
        let &i = index
            .get(&key)
            .ok_or_else(|| Error::InvalidParameter("sample outside the universe".into()))?;
        counts[i] += 1;
    }
    chi_square_from_counts(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_counts_give_zero() {
        let (stat, p) = chi_square_from_counts(&[10, 10, 10, 10]).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_counts_give_tiny_p() {
        let mut counts = vec![0u64; 89];
        counts[0] = 10_000;
        let (_, p) = chi_square_from_counts(&counts).unwrap();
        assert!(p < 1e-12);
    }

    #[test]
    fn needs_cells_and_data() {
        assert!(chi_square_from_counts(&[5]).is_err());
        assert!(chi_square_from_counts(&[0, 0]).is_err());
    }
}
