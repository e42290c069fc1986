//! Single-context optima and their composition across contexts.

use serde::{Deserialize, Serialize};

use super::balance::{solve_balance_enumerate, BalanceOptions};
use super::{ActivePair, RatioSolution, Residuals};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextFreeSolution {
    pub alpha: Vec<f64>,
    pub z_ell: f64,
    pub active_set: Vec<ActivePair>,
}

/// Best KKT-verified ratios for selecting the top-m of one column.
pub fn solve_context_free(
    means_col: &[f64],
    s2_col: &[f64],
    m: usize,
) -> Result<ContextFreeSolution> {
    if means_col.len() != s2_col.len() {
        return Err(Error::DimensionMismatch("means vs variances".into()));
    }
    if let Some(&v) = s2_col.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::NonPositiveVariance(v));
    }
    let inst = Instance::uniform_m(
        m,
        means_col.iter().map(|&v| vec![v]).collect(),
        s2_col.iter().map(|&v| vec![v.sqrt()]).collect(),
    )?;
    let rep = solve_balance_enumerate(&inst, &BalanceOptions::default())?;
    let best = rep.optimal().ok_or(Error::NoKktSolution)?;
    Ok(ContextFreeSolution {
        alpha: best.r.column(0),
        z_ell: best.z,
        active_set: best.active_set[0].clone(),
    })
}

/// Stack per-context optima with context shares inversely proportional to z_ℓ.
/// Residuals and multipliers are left for `RatioSolution::evaluate`.
pub fn compose_contexts(parts: &[ContextFreeSolution]) -> Result<RatioSolution> {
    if parts.is_empty() {
        return Err(Error::DimensionMismatch("no contexts".into()));
    }
    let k = parts[0].alpha.len();
    if parts.iter().any(|p| p.alpha.len() != k) {
        return Err(Error::DimensionMismatch("alpha lengths differ".into()));
    }
    for (l, p) in parts.iter().enumerate() {
        if !(p.z_ell > 0.0) {
            return Err(Error::ZeroRate(l));
        }
    }
    let inv_sum: f64 = parts.iter().map(|p| 1.0 / p.z_ell).sum();
    let share: Vec<f64> = parts.iter().map(|p| (1.0 / p.z_ell) / inv_sum).collect();
    Ok(RatioSolution {
        r: Grid::from_fn(k, parts.len(), |i, l| parts[l].alpha[i] * share[l]),
        z: 1.0 / inv_sum,
        active_set: parts.iter().map(|p| p.active_set.clone()).collect(),
        multipliers: None,
        kkt_ok: false,
        residuals: Residuals::default(),
    })
}
