use super::apcs::{apcs_ordered, argmin_designs};
use super::PolicyState;
use crate::error::Result;
use crate::instance::PairIndex;

/// Context with the smallest APCS; among designs in its minimising boundary pairs,
/// the one whose one-sample variance shrink raises that context's APCS the most.
/// This is always a maximiser of the worst-context look-ahead value; when the
/// second-smallest context caps several candidates, the uncapped value decides.
pub fn aoamc_next(state: &mut PolicyState) -> Result<PairIndex> {
    state.require_defined()?;
    state.refresh_all();
    let apcs = &state.cache.apcs;
    let mut lh = 0;
    for l in 1..apcs.len() {
        if apcs[l] < apcs[lh] {
            lh = l;
        }
    }
    Ok(PairIndex::new(best_design(state, lh), lh))
}

/// AOAm applied to one context at a time, contexts visited cyclically.
pub fn eaoam_next(state: &mut PolicyState) -> Result<PairIndex> {
    state.require_defined()?;
    let l = (state.step % state.q() as u64) as usize;
    state.refresh(l);
    Ok(PairIndex::new(best_design(state, l), l))
}

fn best_design(state: &mut PolicyState, l: usize) -> usize {
    let m = state.m[l];
    let target = state.cache.apcs[l];
    state.mark.iter_mut().for_each(|b| *b = false);
    argmin_designs(
        &state.grid,
        l,
        &state.cache.order[l],
        m,
        target,
        &mut state.mark,
    );
    let mut best = f64::NEG_INFINITY;
    let mut chosen = 0;
    for h in 0..state.k() {
        if !state.mark[h] {
            continue;
        }
        let hv = state.grid().hyp_var_unchecked(h, l);
        let v = apcs_ordered(state.grid(), l, &state.cache.order[l], m, Some((h, hv)));
        if v > best {
            best = v;
            chosen = h;
        }
    }
    chosen
}
