//! Allocation counts and the top-m selection rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance::{Instance, PairIndex};
use crate::posterior::PosteriorGrid;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationCounts {
    pub counts: Grid<u64>,
    pub total: u64,
}

impl AllocationCounts {
    pub fn zeros(k: usize, q: usize) -> Self {
        AllocationCounts {
            counts: Grid::filled(k, q, 0),
            total: 0,
        }
    }

    #[inline]
    pub fn get(&self, p: PairIndex) -> u64 {
        self.counts[(p.design, p.context)]
    }

    #[inline]
    pub fn increment(&mut self, p: PairIndex) {
        self.counts[(p.design, p.context)] += 1;
        self.total += 1;
    }

    pub fn context_total(&self, l: usize) -> u64 {
        (0..self.counts.k()).map(|i| self.counts[(i, l)]).sum()
    }

    pub fn is_consistent(&self) -> bool {
        self.counts.iter().sum::<u64>() == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: Vec<Vec<usize>>,
    pub correct_per_context: Vec<bool>,
}

impl SelectionResult {
    pub fn all_correct(&self) -> bool {
        self.correct_per_context.iter().all(|&c| c)
    }
}

/// Indices of the `m` largest values, descending; ties go to the lower index.
pub fn top_m_indices(values: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    sort_desc(&mut idx, values);
    idx.truncate(m);
    idx
}

/// Sort indices by value descending, lower index first on ties.
#[inline]
pub fn sort_desc(idx: &mut [usize], values: &[f64]) {
    sort_desc_by(idx, |d| values[d]);
}

/// Stable insertion sort keyed by `value(index)`; inputs are short and usually
/// nearly sorted between consecutive policy steps.
#[inline]
pub fn sort_desc_by(idx: &mut [usize], value: impl Fn(usize) -> f64) {
    for a in 1..idx.len() {
        let cur = idx[a];
        let v = value(cur);
        let mut b = a;
        while b > 0 {
            let prev = idx[b - 1];
            let pv = value(prev);
            if pv > v || (pv == v && prev < cur) {
                break;
            }
            idx[b] = prev;
            b -= 1;
        }
        idx[b] = cur;
    }
}

/// Per-context top-m by posterior mean, checked against the instance's true sets.
pub fn select(grid: &PosteriorGrid, instance: &Instance) -> Result<SelectionResult> {
    if grid.k() != instance.k || grid.q() != instance.q {
        return Err(Error::DimensionMismatch(format!(
            "posterior {}x{} vs instance {}x{}",
            grid.k(),
            grid.q(),
            instance.k,
            instance.q
        )));
    }
    let masks = instance.true_top_masks();
    select_with_masks(grid, &instance.m, &masks)
}

pub(crate) fn select_with_masks(
    grid: &PosteriorGrid,
    m: &[usize],
    masks: &[Vec<bool>],
) -> Result<SelectionResult> {
    let mut selected = Vec::with_capacity(grid.q());
    let mut correct = Vec::with_capacity(grid.q());
    for l in 0..grid.q() {
        let col: Vec<f64> = (0..grid.k()).map(|i| grid.mean[(i, l)]).collect();
        if let Some(i) = col.iter().position(|v| v.is_nan()) {
            return Err(Error::UndefinedPosterior(i, l));
        }
        let top = top_m_indices(&col, m[l]);
        correct.push(top.iter().all(|&i| masks[l][i]));
        selected.push(top);
    }
    Ok(SelectionResult {
        selected,
        correct_per_context: correct,
    })
}
