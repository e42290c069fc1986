use super::{PolicyState, EPS_GAP};
use crate::error::Result;
use crate::instance::PairIndex;
use crate::posterior::VarianceMode;
use crate::selection::sort_desc_by;

/// The boundary pair (top design, other design, context) with the smallest
/// sample-based rate proxy, and that proxy value.
pub fn bold_pair(state: &PolicyState) -> Result<(usize, usize, usize, f64)> {
    let need = if state.grid().mode == VarianceMode::Plugin {
        2
    } else {
        1
    };
    state.require_counts(need)?;
    let g = state.grid();
    let (k, q) = (state.k(), state.q());
    let mut ybar = vec![0.0; k];
    let mut se = vec![0.0; k];
    let mut order: Vec<usize> = (0..k).collect();
    let mut top = vec![false; k];
    let mut best = (0, 0, 0, f64::INFINITY);
    for l in 0..q {
        for i in 0..k {
            ybar[i] = g.sample_mean(i, l);
            se[i] = g.sampling_var[(i, l)] / g.counts.counts[(i, l)] as f64;
        }
        sort_desc_by(&mut order, |d| ybar[d]);
        top.iter_mut().for_each(|b| *b = false);
        for &i in &order[..state.m[l]] {
            top[i] = true;
        }
        for i in (0..k).filter(|&i| top[i]) {
            for j in (0..k).filter(|&j| !top[j]) {
                let d = ybar[i] - ybar[j];
                let v = (d * d).max(EPS_GAP) / (se[i] + se[j]);
                if v < best.3 {
                    best = (i, j, l, v);
                }
            }
        }
    }
    Ok(best)
}

/// Balance the within-context condition on the most critical boundary pair.
pub fn boldmc_next(state: &mut PolicyState) -> Result<PairIndex> {
    let (i, j, l, _) = bold_pair(state)?;
    let g = state.grid();
    let k = state.k();
    let ybar: Vec<f64> = (0..k).map(|h| g.sample_mean(h, l)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    sort_desc_by(&mut order, |d| ybar[d]);
    let m = state.m[l];
    let bal = |h: usize| {
        let t = g.counts.counts[(h, l)] as f64;
        t * t / g.sampling_var[(h, l)]
    };
    let left: f64 = order[..m].iter().map(|&h| bal(h)).sum();
    let right: f64 = order[m..].iter().map(|&h| bal(h)).sum();
    Ok(PairIndex::new(if left < right { i } else { j }, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::posterior::{PosteriorGrid, PriorSpec};

    fn state(samples: &[(usize, f64)], k: usize, m: usize) -> PolicyState {
        let mut g = PosteriorGrid::with_sampling_var(
            &PriorSpec::Uninformative,
            Grid::filled(k, 1, 1.0),
            VarianceMode::Known,
            2,
        )
        .unwrap();
        for &(i, v) in samples {
            g.update_one(PairIndex::new(i, 0), v).unwrap();
        }
        PolicyState::new(g, vec![m]).unwrap()
    }

    #[test]
    fn left_smaller_returns_top_design() {
        // design 0 top with one sample, design 1 with three: left 1 < right 9
        let mut s = state(&[(0, 2.0), (1, 0.0), (1, 0.0), (1, 0.0)], 2, 1);
        assert_eq!(boldmc_next(&mut s).unwrap(), PairIndex::new(0, 0));
    }

    #[test]
    fn equal_sums_go_to_other_design() {
        let mut s = state(&[(0, 2.0), (1, 0.0)], 2, 1);
        assert_eq!(boldmc_next(&mut s).unwrap(), PairIndex::new(1, 0));
    }

    #[test]
    fn zero_gap_floored() {
        let s = state(&[(0, 1.0), (1, 1.0)], 2, 1);
        let (_, _, _, v) = bold_pair(&s).unwrap();
        assert_eq!(v, EPS_GAP / 2.0);
    }
}
