use serde::{Deserialize, Serialize};

use super::{PolicyState, EPS_GAP};
use crate::error::{Error, Result};
use crate::instance::PairIndex;
use crate::selection::top_m_indices;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EocbamConfig {
    /// c = w * mean_<m> + (1 - w) * mean_<m+1>; 0.5 is the midpoint.
    pub separator_weight: f64,
}

impl Default for EocbamConfig {
    fn default() -> Self {
        EocbamConfig {
            separator_weight: 0.5,
        }
    }
}

impl EocbamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.separator_weight) {
            return Err(Error::Config(format!(
                "separator_weight {} outside [0, 1]",
                self.separator_weight
            )));
        }
        Ok(())
    }
}

/// Unnormalised OCBAm weights s2_i / (mean_i - c)^2 for one context.
pub fn ocbam_weights(means: &[f64], s2: &[f64], m: usize, separator_weight: f64) -> Vec<f64> {
    let order = top_m_indices(means, m + 1);
    let c = separator_weight * means[order[m - 1]] + (1.0 - separator_weight) * means[order[m]];
    means
        .iter()
        .zip(s2)
        .map(|(&y, &v)| v / ((y - c) * (y - c)).max(EPS_GAP))
        .collect()
}

/// Contexts in turn; inside a context, the design furthest below its OCBAm target share.
pub fn eocbam_next(state: &mut PolicyState, cfg: &EocbamConfig) -> Result<PairIndex> {
    state.require_defined()?;
    let (k, q) = (state.k(), state.q());
    let l = (state.step % q as u64) as usize;
    let g = state.grid();
    let means: Vec<f64> = (0..k).map(|i| g.mean[(i, l)]).collect();
    let s2: Vec<f64> = (0..k).map(|i| g.sampling_var[(i, l)]).collect();
    let w = ocbam_weights(&means, &s2, state.m[l], cfg.separator_weight);
    let wsum: f64 = w.iter().sum();
    let n_next = (g.counts.context_total(l) + 1) as f64;
    let mut best = f64::NEG_INFINITY;
    let mut chosen = 0;
    for i in 0..k {
        let deficit = w[i] / wsum * n_next - g.counts.counts[(i, l)] as f64;
        if deficit > best {
            best = deficit;
            chosen = i;
        }
    }
    Ok(PairIndex::new(chosen, l))
}
