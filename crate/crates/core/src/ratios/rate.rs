//! Normal large-deviations rates for pairwise comparisons.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance::Instance;

/// (y_i - y_j)^2 / (2 (s2_i / r_i + s2_j / r_j)).
pub fn normal_rate(y_i: f64, y_j: f64, s2_i: f64, s2_j: f64, r_i: f64, r_j: f64) -> Result<f64> {
    check_pos(s2_i, s2_j, r_i, r_j)?;
    Ok(rate_unchecked(y_i - y_j, s2_i, s2_j, r_i, r_j))
}

#[inline]
pub(crate) fn rate_unchecked(d: f64, s2_i: f64, s2_j: f64, r_i: f64, r_j: f64) -> f64 {
    d * d / (2.0 * (s2_i / r_i + s2_j / r_j))
}

/// Partial derivatives of the normal rate with respect to r_i and r_j.
#[inline]
pub fn normal_rate_grad(d: f64, s2_i: f64, s2_j: f64, r_i: f64, r_j: f64) -> (f64, f64) {
    let den = s2_i / r_i + s2_j / r_j;
    let c = d * d / (2.0 * den * den);
    (c * s2_i / (r_i * r_i), c * s2_j / (r_j * r_j))
}

fn check_pos(s2_i: f64, s2_j: f64, r_i: f64, r_j: f64) -> Result<()> {
    for v in [s2_i, s2_j] {
        if !(v > 0.0) {
            return Err(Error::NonPositiveVariance(v));
        }
    }
    for v in [r_i, r_j] {
        if !(v > 0.0) {
            return Err(Error::InvalidRatio(format!("ratio {v} must be positive")));
        }
    }
    Ok(())
}

/// Point x where r_i Λ*_i'(x) + r_j Λ*_j'(x) = 0 for normal rate functions.
pub fn rate_crossing_point(
    y_i: f64,
    y_j: f64,
    s2_i: f64,
    s2_j: f64,
    r_i: f64,
    r_j: f64,
) -> Result<f64> {
    check_pos(s2_i, s2_j, r_i, r_j)?;
    let (a, b) = (r_i / s2_i, r_j / s2_j);
    Ok((a * y_i + b * y_j) / (a + b))
}

/// Root of r_i dli(x) + r_j dlj(x) on [lo, hi] by bisection, for arbitrary
/// rate-function derivatives.
pub fn crossing_point_generic(
    dli: impl Fn(f64) -> f64,
    dlj: impl Fn(f64) -> f64,
    r_i: f64,
    r_j: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let f = |x: f64| r_i * dli(x) + r_j * dlj(x);
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NotBracketed(lo, hi));
    }
    let a_neg = fa < 0.0;
    for _ in 0..300 {
        let mid = 0.5 * (a + b);
        if b - a <= 1e-12 * mid.abs().max(1.0) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == a_neg {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// min over contexts and true boundary pairs of the normal rate at ratios `r`.
pub fn pfs_rate(r: &Grid<f64>, instance: &Instance) -> Result<f64> {
    if r.k() != instance.k || r.q() != instance.q {
        return Err(Error::DimensionMismatch("ratio grid vs instance".into()));
    }
    if let Some(v) = r.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidRatio(format!("entry {v} must be positive")));
    }
    let total: f64 = r.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidRatio(format!("ratios sum to {total}")));
    }
    Ok(pfs_rate_unchecked(r, instance))
}

pub(crate) fn pfs_rate_unchecked(r: &Grid<f64>, instance: &Instance) -> f64 {
    let s2 = instance.variances();
    let masks = instance.true_top_masks();
    let mut z = f64::INFINITY;
    for l in 0..instance.q {
        for i in (0..instance.k).filter(|&i| masks[l][i]) {
            for j in (0..instance.k).filter(|&j| !masks[l][j]) {
                let v = rate_unchecked(
                    instance.means[(i, l)] - instance.means[(j, l)],
                    s2[(i, l)],
                    s2[(j, l)],
                    r[(i, l)],
                    r[(j, l)],
                );
                z = z.min(v);
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_value() {
        let v = normal_rate(6.7, 3.5, 3.6, 4.4, 0.07892, 0.17015).unwrap();
        assert!((v - 0.07163).abs() < 1e-4);
    }

    #[test]
    fn equal_means_zero() {
        assert_eq!(normal_rate(1.0, 1.0, 2.0, 3.0, 0.1, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(normal_rate(1.0, 0.0, 0.0, 1.0, 0.1, 0.1).is_err());
        assert!(normal_rate(1.0, 0.0, 1.0, 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn crossing_midpoint_and_limit() {
        assert_eq!(
            rate_crossing_point(1.0, 3.0, 2.0, 2.0, 0.3, 0.3).unwrap(),
            2.0
        );
        let x = rate_crossing_point(1.0, 3.0, 2.0, 2.0, 1e9, 1e-9).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn not_bracketed() {
        let r = crossing_point_generic(|x| x, |x| x, 1.0, 1.0, 1.0, 2.0);
        assert!(matches!(r, Err(Error::NotBracketed(_, _))));
    }

    #[test]
    fn grad_matches_finite_difference() {
        let (d, si, sj, ri, rj) = (1.3, 2.0, 0.7, 0.2, 0.05);
        let (gi, gj) = normal_rate_grad(d, si, sj, ri, rj);
        let h = 1e-7;
        let fi = (rate_unchecked(d, si, sj, ri + h, rj) - rate_unchecked(d, si, sj, ri - h, rj))
            / (2.0 * h);
        let fj = (rate_unchecked(d, si, sj, ri, rj + h) - rate_unchecked(d, si, sj, ri, rj - h))
            / (2.0 * h);
        assert!((gi - fi).abs() < 1e-6 && (gj - fj).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn homogeneous_degree_one(
            yi in -10.0f64..10.0, yj in -10.0f64..10.0,
            si in 0.1f64..10.0, sj in 0.1f64..10.0,
            ri in 0.01f64..1.0, rj in 0.01f64..1.0, c in 0.1f64..10.0,
        ) {
            let a = normal_rate(yi, yj, si, sj, ri, rj).unwrap();
            let b = normal_rate(yi, yj, si, sj, c * ri, c * rj).unwrap();
            prop_assert!((b - c * a).abs() <= 1e-12 * b.abs().max(1e-300) + 1e-300);
        }

        #[test]
        fn closed_form_equals_root_finder(
            yi in -10.0f64..10.0, dy in 0.01f64..10.0,
            si in 0.1f64..10.0, sj in 0.1f64..10.0,
            ri in 0.01f64..1.0, rj in 0.01f64..1.0,
        ) {
            let yj = yi - dy;
            let x = rate_crossing_point(yi, yj, si, sj, ri, rj).unwrap();
            let g = crossing_point_generic(
                |x| (x - yi) / si, |x| (x - yj) / sj, ri, rj, yj, yi).unwrap();
            prop_assert!((x - g).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }
}
