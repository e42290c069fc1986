//! Optimal sampling ratios: rates, balance-equation solutions, KKT checks.

mod balance;
mod context_free;
mod kkt;
mod rate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::selection::AllocationCounts;

pub use balance::{solve_balance_enumerate, BalanceOptions, BalanceReport};
pub use context_free::{compose_contexts, solve_context_free, ContextFreeSolution};
pub use kkt::{verify_kkt, KktReport, Multiplier, KKT_TOL};
pub use rate::{
    crossing_point_generic, normal_rate, normal_rate_grad, pfs_rate, rate_crossing_point,
};

/// Boundary pair (top design, other design) binding within one context.
pub type ActivePair = (usize, usize);

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Row and column minima of the rates versus z, worst over contexts.
    pub eq11: f64,
    /// Within-context quadratic balance, worst over contexts.
    pub eq12: f64,
    pub normalization: f64,
    /// Active rates versus z.
    pub active: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSolution {
    pub r: Grid<f64>,
    pub z: f64,
    /// Per context, the binding boundary pairs.
    pub active_set: Vec<Vec<ActivePair>>,
    pub multipliers: Option<KktReport>,
    pub kkt_ok: bool,
    pub residuals: Residuals,
}

/// counts / total.
pub fn empirical_ratios(counts: &AllocationCounts) -> Result<Grid<f64>> {
    if counts.total == 0 {
        return Err(Error::InvalidRatio("zero total count".into()));
    }
    let t = counts.total as f64;
    Ok(counts.counts.map(|&c| c as f64 / t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::PairIndex;

    #[test]
    fn empirical_examples() {
        let mut c = AllocationCounts::zeros(2, 2);
        assert!(empirical_ratios(&c).is_err());
        c.increment(PairIndex::new(1, 0));
        let r = empirical_ratios(&c).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 0.0, 1.0, 0.0]);
        for i in 0..2 {
            for l in 0..2 {
                for _ in 0..3 {
                    c.increment(PairIndex::new(i, l));
                }
            }
        }
        c.increment(PairIndex::new(0, 0));
        c.increment(PairIndex::new(0, 1));
        c.increment(PairIndex::new(1, 1));
        let r = empirical_ratios(&c).unwrap();
        assert!(r.iter().all(|&v| v == 0.25));
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
