//! Per-context approximate probability of correct selection.

use crate::error::{Error, Result};
use crate::posterior::PosteriorGrid;
use crate::selection::sort_desc;

/// Minimum over boundary pairs (i in the posterior top-m, j outside) of
/// (mean_i - mean_j)^2 / (var_i + var_j).
pub fn apcs(grid: &PosteriorGrid, context: usize, m: usize) -> Result<f64> {
    if context >= grid.q() {
        return Err(Error::ContextOutOfRange(context, grid.q()));
    }
    let k = grid.k();
    if m == 0 || m >= k {
        return Err(Error::InvalidM { context, m, k });
    }
    for i in 0..k {
        if !grid.var[(i, context)].is_finite() {
            return Err(Error::UndefinedPosterior(i, context));
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    let col: Vec<f64> = (0..k).map(|i| grid.mean[(i, context)]).collect();
    sort_desc(&mut order, &col);
    Ok(apcs_ordered(grid, context, &order, m, None))
}

/// APCS for a context with a precomputed descending order. `var_override`
/// substitutes one design's variance (the certainty-equivalent look-ahead).
#[inline]
pub(crate) fn apcs_ordered(
    grid: &PosteriorGrid,
    l: usize,
    order: &[usize],
    m: usize,
    var_override: Option<(usize, f64)>,
) -> f64 {
    let q = grid.q();
    let mean = grid.mean.as_slice();
    let var = grid.var.as_slice();
    let v = |d: usize| match var_override {
        Some((h, hv)) if h == d => hv,
        _ => var[d * q + l],
    };
    let mut best = f64::INFINITY;
    for &i in &order[..m] {
        let (mi, vi) = (mean[i * q + l], v(i));
        for &j in &order[m..] {
            let d = mi - mean[j * q + l];
            let val = d * d / (vi + v(j));
            if val < best {
                best = val;
            }
        }
    }
    best
}

/// Mark every design that appears in a boundary pair attaining `target`.
pub(crate) fn argmin_designs(
    grid: &PosteriorGrid,
    l: usize,
    order: &[usize],
    m: usize,
    target: f64,
    mark: &mut [bool],
) {
    let q = grid.q();
    let mean = grid.mean.as_slice();
    let var = grid.var.as_slice();
    for &i in &order[..m] {
        for &j in &order[m..] {
            let d = mean[i * q + l] - mean[j * q + l];
            let val = d * d / (var[i * q + l] + var[j * q + l]);
            if val == target {
                mark[i] = true;
                mark[j] = true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::posterior::PriorSpec;

    pub(crate) fn grid_from(means: &[f64], vars: &[f64]) -> PosteriorGrid {
        let k = means.len();
        PosteriorGrid::with_sampling_var(
            &PriorSpec::Informative {
                mean0: Grid::from_fn(k, 1, |i, _| means[i]),
                var0: Grid::from_fn(k, 1, |i, _| vars[i]),
            },
            Grid::filled(k, 1, 1.0),
            crate::posterior::VarianceMode::Known,
            2,
        )
        .unwrap()
    }

    #[test]
    fn direct_formula() {
        let g = grid_from(&[3.0, 1.0, 0.0], &[1.0, 1.0, 1.0]);
        assert_eq!(apcs(&g, 0, 1).unwrap(), 2.0);
    }

    #[test]
    fn equal_means_at_boundary() {
        let g = grid_from(&[3.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        assert_eq!(apcs(&g, 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn undefined_cell_is_error() {
        let g = PosteriorGrid::with_sampling_var(
            &PriorSpec::Uninformative,
            Grid::filled(3, 1, 1.0),
            crate::posterior::VarianceMode::Known,
            2,
        )
        .unwrap();
        assert!(matches!(
            apcs(&g, 0, 1),
            Err(Error::UndefinedPosterior(0, 0))
        ));
    }
}
