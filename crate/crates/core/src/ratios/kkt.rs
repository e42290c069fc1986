//! Lagrange multipliers of the max-min rate program at a balance solution.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::balance::contexts;
use super::rate::normal_rate_grad;
use super::RatioSolution;
use crate::error::{Error, Result};
use crate::instance::Instance;

/// Sign tolerance on multipliers.
pub const KKT_TOL: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub top: usize,
    pub other: usize,
    pub context: usize,
    pub value: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// One entry per boundary pair; inactive pairs carry 0.
    pub lambda: Vec<Multiplier>,
    pub gamma: f64,
    /// Max |Ax - b| of the least-squares solve; large means no multipliers exist.
    pub stationarity_residual: f64,
    pub rank_deficient: bool,
    pub kkt_ok: bool,
}

impl KktReport {
    pub fn get(&self, top: usize, other: usize, context: usize) -> Option<f64> {
        self.lambda
            .iter()
            .find(|m| m.top == top && m.other == other && m.context == context)
            .map(|m| m.value)
    }
}

/// Solve stationarity per (design, context) plus Σλ = 1 for the active multipliers
/// and γ, with inactive multipliers fixed at zero.
pub fn verify_kkt(solution: &RatioSolution, instance: &Instance) -> Result<KktReport> {
    let (k, q) = (instance.k, instance.q);
    if solution.r.k() != k || solution.r.q() != q || solution.active_set.len() != q {
        return Err(Error::DimensionMismatch("solution vs instance".into()));
    }
    let s2 = instance.variances();
    let ctxs = contexts(instance);
    let active: Vec<(usize, usize, usize)> = solution
        .active_set
        .iter()
        .enumerate()
        .flat_map(|(l, a)| a.iter().map(move |&(i, j)| (i, j, l)))
        .collect();
    let na = active.len();
    let rows = k * q + 1;
    let mut a = DMatrix::zeros(rows, na + 1);
    let mut b = DVector::zeros(rows);
    for (c, &(i, j, l)) in active.iter().enumerate() {
        let d = instance.means[(i, l)] - instance.means[(j, l)];
        let (gi, gj) = normal_rate_grad(
            d,
            s2[(i, l)],
            s2[(j, l)],
            solution.r[(i, l)],
            solution.r[(j, l)],
        );
        // gradients in units of z, so the residual test is scale-free
        a[(i * q + l, c)] += gi / solution.z;
        a[(j * q + l, c)] += gj / solution.z;
        a[(k * q, c)] = 1.0;
    }
    for row in 0..k * q {
        a[(row, na)] = -1.0;
    }
    b[k * q] = 1.0;

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax.max(1e-300))
        .count();
    let x = svd
        .solve(&b, 1e-10 * smax.max(1e-300))
        .map_err(|e| Error::Config(format!("svd solve: {e}")))?;
    let resid = (&a * &x - &b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rank_deficient = rank < na + 1;

    let mut lambda = Vec::new();
    for (l, ctx) in ctxs.iter().enumerate() {
        for &(i, j) in &ctx.pairs {
            let pos = active.iter().position(|&p| p == (i, j, l));
            lambda.push(Multiplier {
                top: i,
                other: j,
                context: l,
                value: pos.map_or(0.0, |p| x[p]),
                active: pos.is_some(),
            });
        }
    }
    let consistent = resid < 1e-8;
    let kkt_ok = !rank_deficient && consistent && lambda.iter().all(|m| m.value >= KKT_TOL);
    Ok(KktReport {
        lambda,
        gamma: x[na] * solution.z,
        stationarity_residual: resid,
        rank_deficient,
        kkt_ok,
    })
}
