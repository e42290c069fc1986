use super::PolicyState;
use crate::instance::PairIndex;

/// Round-robin over pairs in (design, context) order.
pub fn ea_next(state: &PolicyState) -> PairIndex {
    let q = state.q() as u64;
    let p = state.step % (state.k() as u64 * q);
    PairIndex::new((p / q) as usize, (p % q) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::posterior::{PosteriorGrid, PriorSpec, VarianceMode};

    fn st(k: usize, q: usize) -> PolicyState {
        let g = PosteriorGrid::with_sampling_var(
            &PriorSpec::Uninformative,
            Grid::filled(k, q, 1.0),
            VarianceMode::Known,
            2,
        )
        .unwrap();
        PolicyState::new(g, vec![1; q]).unwrap()
    }

    #[test]
    fn step_seven_on_two_by_two() {
        let mut s = st(2, 2);
        s.step = 7;
        assert_eq!(ea_next(&s), PairIndex::new(1, 1));
    }

    #[test]
    fn balanced_counts() {
        let mut s = st(3, 2);
        let mut counts = [0u32; 6];
        for t in 0..20 {
            s.step = t;
            let p = ea_next(&s);
            counts[p.design * 2 + p.context] += 1;
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1);
        }
    }
}
