//! Active-set enumeration of the balance equations with damped Newton refinement.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kkt::verify_kkt;
use super::rate::{normal_rate_grad, pfs_rate_unchecked, rate_unchecked};
use super::{ActivePair, RatioSolution, Residuals};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance::Instance;

/// Roots with z below this fraction of the equal-allocation rate are the
/// degenerate corner where every ratio collapses to zero.
const MIN_REL_RATE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceOptions {
    /// Upper bound on Σ m(k - m) over contexts.
    pub slot_cap: usize,
    pub max_iter: usize,
    pub residual_tol: f64,
    pub dedup_tol: f64,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        BalanceOptions {
            slot_cap: 16,
            max_iter: 200,
            residual_tol: 1e-9,
            dedup_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub solutions: Vec<RatioSolution>,
    /// Highest-z KKT-verified solution.
    pub optimal_index: Option<usize>,
    /// More than one KKT-verified solution was found.
    pub non_unique: bool,
    pub cases_tried: usize,
    pub cases_discarded: usize,
}

impl BalanceReport {
    pub fn optimal(&self) -> Option<&RatioSolution> {
        self.optimal_index.map(|i| &self.solutions[i])
    }
}

/// Per-context problem data in design indices.
pub(crate) struct Ctx {
    pub top: Vec<usize>,
    pub rest: Vec<usize>,
    pub pairs: Vec<ActivePair>,
}

pub(crate) fn contexts(instance: &Instance) -> Vec<Ctx> {
    (0..instance.q)
        .map(|l| {
            let top = instance.true_top_m(l).expect("in range");
            let col = instance.means.column(l);
            let all = crate::selection::top_m_indices(&col, instance.k);
            let rest: Vec<usize> = all[top.len()..].to_vec();
            let pairs = top
                .iter()
                .flat_map(|&i| rest.iter().map(move |&j| (i, j)))
                .collect();
            Ctx { top, rest, pairs }
        })
        .collect()
}

/// Subsets of exactly k-1 boundary pairs touching every design.
fn covers(ctx: &Ctx, k: usize) -> Vec<Vec<ActivePair>> {
    let n = ctx.pairs.len();
    let need = k - 1;
    let mut out = Vec::new();
    if need > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..need).collect();
    loop {
        let mut seen = vec![false; k];
        for &c in &idx {
            let (i, j) = ctx.pairs[c];
            seen[i] = true;
            seen[j] = true;
        }
        if seen.iter().all(|&s| s) {
            out.push(idx.iter().map(|&c| ctx.pairs[c]).collect());
        }
        // next combination in lexicographic order
        let mut p = need;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            if idx[p] != p + n - need {
                break;
            }
        }
        idx[p] += 1;
        for a in p + 1..need {
            idx[a] = idx[a - 1] + 1;
        }
    }
}

struct System<'a> {
    inst: &'a Instance,
    s2: Grid<f64>,
    ctxs: &'a [Ctx],
    acts: Vec<&'a [ActivePair]>,
    /// Rate rows are divided by this (the rate at equal allocation).
    z_scale: f64,
    /// Per-context divisor of the quadratic balance row.
    q_scale: Vec<f64>,
}

impl System<'_> {
    fn n(&self) -> usize {
        self.inst.k * self.inst.q + 1
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let q = self.inst.q;
        let z = x[self.n() - 1];
        let mut f = Vec::with_capacity(self.n());
        for (l, act) in self.acts.iter().enumerate() {
            for &(i, j) in act.iter() {
                let d = self.inst.means[(i, l)] - self.inst.means[(j, l)];
                let rate = rate_unchecked(
                    d,
                    self.s2[(i, l)],
                    self.s2[(j, l)],
                    x[i * q + l],
                    x[j * q + l],
                );
                f.push((rate - z) / self.z_scale);
            }
            f.push(eq12(&self.ctxs[l], l, q, &self.s2, |c| x[c]) / self.q_scale[l]);
        }
        f.push(x.iter().take(self.n() - 1).sum::<f64>() - 1.0);
        DVector::from_vec(f)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let q = self.inst.q;
        let n = self.n();
        let mut jm = DMatrix::zeros(n, n);
        let mut row = 0;
        for (l, act) in self.acts.iter().enumerate() {
            for &(i, j) in act.iter() {
                let d = self.inst.means[(i, l)] - self.inst.means[(j, l)];
                let (gi, gj) = normal_rate_grad(
                    d,
                    self.s2[(i, l)],
                    self.s2[(j, l)],
                    x[i * q + l],
                    x[j * q + l],
                );
                jm[(row, i * q + l)] = gi / self.z_scale;
                jm[(row, j * q + l)] = gj / self.z_scale;
                jm[(row, n - 1)] = -1.0 / self.z_scale;
                row += 1;
            }
            let qs = self.q_scale[l];
            for &h in &self.ctxs[l].top {
                jm[(row, h * q + l)] = 2.0 * x[h * q + l] / self.s2[(h, l)] / qs;
            }
            for &h in &self.ctxs[l].rest {
                jm[(row, h * q + l)] = -2.0 * x[h * q + l] / self.s2[(h, l)] / qs;
            }
            row += 1;
        }
        for c in 0..n - 1 {
            jm[(row, c)] = 1.0;
        }
        jm
    }
}

fn eq12(ctx: &Ctx, l: usize, q: usize, s2: &Grid<f64>, r: impl Fn(usize) -> f64) -> f64 {
    let side = |set: &[usize]| -> f64 {
        set.iter()
            .map(|&h| {
                let v = r(h * q + l);
                v * v / s2[(h, l)]
            })
            .sum()
    };
    side(&ctx.top) - side(&ctx.rest)
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Starting points: equal ratios, an OCBA-style guess, then a few fixed
/// pseudo-random interior points.
fn starts(inst: &Instance, ctxs: &[Ctx], s2: &Grid<f64>) -> Vec<Grid<f64>> {
    let (k, q) = (inst.k, inst.q);
    let mut out = vec![Grid::filled(k, q, 1.0)];
    out.push(Grid::from_fn(k, q, |i, l| {
        let c = &ctxs[l];
        let sep = 0.5 * (inst.means[(c.top[c.top.len() - 1], l)] + inst.means[(c.rest[0], l)]);
        let d = inst.means[(i, l)] - sep;
        s2[(i, l)] / (d * d).max(1e-12)
    }));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..6 {
        out.push(Grid::from_fn(k, q, |_, _| rng.random_range(0.05..1.0)));
    }
    for g in &mut out {
        let t: f64 = g.iter().sum();
        g.iter_mut().for_each(|v| *v /= t);
    }
    out
}

/// Damped Newton from `r0`; `None` if it stalls or hits a singular Jacobian.
fn newton(sys: &System, opts: &BalanceOptions, r0: &Grid<f64>) -> Option<DVector<f64>> {
    let n = sys.n();
    let mut x = DVector::from_iterator(
        n,
        r0.iter().copied().chain([pfs_rate_unchecked(r0, sys.inst)]),
    );
    let mut f = sys.residual(&x);
    let mut nf = f.norm();
    for _ in 0..opts.max_iter {
        if nf < 1e-14 {
            break;
        }
        let step = sys.jacobian(&x).lu().solve(&(-&f))?;
        if !step.iter().all(|v| v.is_finite()) {
            return None;
        }
        // keep every ratio strictly positive
        let mut alpha: f64 = 1.0;
        for c in 0..n - 1 {
            if step[c] < 0.0 {
                alpha = alpha.min(-0.9 * x[c] / step[c]);
            }
        }
        loop {
            let xn = &x + alpha * &step;
            let fnew = sys.residual(&xn);
            let nn = fnew.norm();
            if nn < nf {
                x = xn;
                f = fnew;
                nf = nn;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-10 {
                return (max_abs(&f) < opts.residual_tol).then_some(x);
            }
        }
    }
    Some(x)
}

/// A converged point that is a genuine solution: positive ratios, a rate
/// well away from the degenerate all-zero corner, no inactive pair below z.
fn accept(sys: &System, x: &DVector<f64>, opts: &BalanceOptions) -> Option<(Grid<f64>, f64)> {
    let (k, q) = (sys.inst.k, sys.inst.q);
    if max_abs(&sys.residual(x)) >= opts.residual_tol {
        return None;
    }
    let r = Grid::from_fn(k, q, |i, l| x[i * q + l]);
    let z = x[k * q];
    if !r.iter().all(|&v| v > 0.0 && v.is_finite()) || !(z > MIN_REL_RATE * sys.z_scale) {
        return None;
    }
    if pfs_rate_unchecked(&r, sys.inst) < z - opts.residual_tol * sys.z_scale {
        return None;
    }
    Some((r, z))
}

/// Residuals of a candidate ratio matrix against the balance conditions.
pub(crate) fn residuals(
    inst: &Instance,
    ctxs: &[Ctx],
    r: &Grid<f64>,
    z: f64,
    active: &[Vec<ActivePair>],
) -> Residuals {
    let s2 = inst.variances();
    let q = inst.q;
    let mut res = Residuals {
        normalization: (r.iter().sum::<f64>() - 1.0).abs(),
        ..Default::default()
    };
    for (l, ctx) in ctxs.iter().enumerate() {
        let rate = |i: usize, j: usize| {
            rate_unchecked(
                inst.means[(i, l)] - inst.means[(j, l)],
                s2[(i, l)],
                s2[(j, l)],
                r[(i, l)],
                r[(j, l)],
            )
        };
        for &i in &ctx.top {
            let row = ctx
                .rest
                .iter()
                .map(|&j| rate(i, j))
                .fold(f64::INFINITY, f64::min);
            res.eq11 = res.eq11.max((row - z).abs());
        }
        for &j in &ctx.rest {
            let col = ctx
                .top
                .iter()
                .map(|&i| rate(i, j))
                .fold(f64::INFINITY, f64::min);
            res.eq11 = res.eq11.max((col - z).abs());
        }
        res.eq12 = res
            .eq12
            .max(eq12(ctx, l, q, &s2, |c| r.as_slice()[c]).abs());
        for &(i, j) in active.get(l).map(|a| a.as_slice()).unwrap_or(&[]) {
            res.active = res.active.max((rate(i, j) - z).abs());
        }
    }
    res
}

impl RatioSolution {
    /// Recompute z, residuals and the KKT verdict against `instance`.
    pub fn evaluate(&mut self, instance: &Instance) -> Result<()> {
        let ctxs = contexts(instance);
        self.z = pfs_rate_unchecked(&self.r, instance);
        self.residuals = residuals(instance, &ctxs, &self.r, self.z, &self.active_set);
        let rep = verify_kkt(self, instance)?;
        self.kkt_ok = rep.kkt_ok;
        self.multipliers = Some(rep);
        Ok(())
    }
}

/// Every consistent solution of the balance equations, one active set per context
/// with k - 1 binding pairs, in enumeration order.
pub fn solve_balance_enumerate(
    instance: &Instance,
    opts: &BalanceOptions,
) -> Result<BalanceReport> {
    instance.validate()?;
    let (k, q) = (instance.k, instance.q);
    let slots: usize = instance.m.iter().map(|&m| m * (k - m)).sum();
    if slots > opts.slot_cap {
        return Err(Error::EnumerationCap {
            slots,
            cap: opts.slot_cap,
        });
    }
    let ctxs = contexts(instance);
    let per_ctx: Vec<Vec<Vec<ActivePair>>> = ctxs.iter().map(|c| covers(c, k)).collect();
    let mut cases: Vec<Vec<usize>> = vec![vec![]];
    for opts_l in &per_ctx {
        cases = cases
            .into_iter()
            .flat_map(|pre| {
                (0..opts_l.len()).map(move |c| {
                    let mut v = pre.clone();
                    v.push(c);
                    v
                })
            })
            .collect();
    }
    let s2 = instance.variances();
    let z_scale = pfs_rate_unchecked(&Grid::filled(k, q, 1.0 / (k * q) as f64), instance);
    let q_scale: Vec<f64> = (0..q)
        .map(|l| (0..k).map(|h| 1.0 / s2[(h, l)]).sum::<f64>() / ((k * q) as f64).powi(2))
        .collect();
    let x0s = starts(instance, &ctxs, &s2);
    let found: Vec<Option<RatioSolution>> = cases
        .par_iter()
        .map(|case| {
            let acts: Vec<&[ActivePair]> = case
                .iter()
                .enumerate()
                .map(|(l, &c)| per_ctx[l][c].as_slice())
                .collect();
            let sys = System {
                inst: instance,
                s2: s2.clone(),
                ctxs: &ctxs,
                acts,
                z_scale,
                q_scale: q_scale.clone(),
            };
            let (r, z) = x0s
                .iter()
                .find_map(|r0| newton(&sys, opts, r0).and_then(|x| accept(&sys, &x, opts)))?;
            let active_set: Vec<Vec<ActivePair>> = sys.acts.iter().map(|a| a.to_vec()).collect();
            let mut sol = RatioSolution {
                residuals: residuals(instance, &ctxs, &r, z, &active_set),
                r,
                z,
                active_set,
                multipliers: None,
                kkt_ok: false,
            };
            let rep = verify_kkt(&sol, instance).ok()?;
            sol.kkt_ok = rep.kkt_ok;
            sol.multipliers = Some(rep);
            Some(sol)
        })
        .collect();

    let cases_tried = found.len();
    let mut solutions: Vec<RatioSolution> = Vec::new();
    for sol in found.into_iter().flatten() {
        let dup = solutions.iter().any(|s| {
            s.r.iter()
                .zip(sol.r.iter())
                .all(|(a, b)| (a - b).abs() < opts.dedup_tol)
        });
        if !dup {
            solutions.push(sol);
        }
    }
    let mut optimal_index = None;
    let mut n_ok = 0;
    for (idx, s) in solutions.iter().enumerate() {
        if s.kkt_ok {
            n_ok += 1;
            if optimal_index.is_none_or(|o: usize| s.z > solutions[o].z) {
                optimal_index = Some(idx);
            }
        }
    }
    Ok(BalanceReport {
        cases_discarded: cases_tried - solutions.len(),
        cases_tried,
        solutions,
        optimal_index,
        non_unique: n_ok > 1,
    })
}
