use serde::{Deserialize, Serialize};

use super::PolicyState;
use crate::error::{Error, Result};
use crate::instance::PairIndex;
use crate::selection::sort_desc_by;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaEstimator {
    /// Ridge regression of the sample means weighted by their counts.
    #[default]
    CountWeighted,
    /// Unweighted sum of sample means over contexts, as usually written.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step3Design {
    /// Design from whichever step owns the wider context.
    #[default]
    Owner,
    /// Always the step-1 design, in the wider context.
    Leader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinGapEConfig {
    pub delta: f64,
    /// Ridge λ; `None` means σ̃ / 20.
    pub ridge: Option<f64>,
    /// σ̃, std of the context covariate.
    pub context_noise_std: f64,
    pub context_dim: usize,
    /// Share one design matrix across designs instead of one per design.
    pub pooled: bool,
    pub estimator: ThetaEstimator,
    pub step3: Step3Design,
}

impl Default for LinGapEConfig {
    fn default() -> Self {
        LinGapEConfig {
            delta: 0.05,
            ridge: None,
            context_noise_std: 1.0,
            context_dim: 1,
            pooled: false,
            estimator: ThetaEstimator::CountWeighted,
            step3: Step3Design::Owner,
        }
    }
}

impl LinGapEConfig {
    pub fn ridge(&self) -> f64 {
        self.ridge.unwrap_or(self.context_noise_std / 20.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!(
                "delta {} outside (0, 1)",
                self.delta
            )));
        }
        if !(self.ridge() > 0.0) {
            return Err(Error::Config(format!(
                "ridge {} must be positive",
                self.ridge()
            )));
        }
        if !(self.context_noise_std > 0.0) {
            return Err(Error::Config("context_noise_std must be positive".into()));
        }
        if self.context_dim != 1 {
            return Err(Error::Config(
                "only scalar contexts (context_dim = 1) are supported".into(),
            ));
        }
        Ok(())
    }
}

/// Last regression quantities, kept for inspection.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinGapEScratch {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

/// sqrt(2 ln((ln t + 1) / δ)).
pub fn c_t_delta(t: u64, delta: f64) -> f64 {
    (2.0 * (((t.max(1) as f64).ln() + 1.0) / delta).ln()).sqrt()
}

pub fn mlingape_next(state: &mut PolicyState, cfg: &LinGapEConfig) -> Result<PairIndex> {
    state.require_counts(1)?;
    let x = state
        .context_values
        .clone()
        .ok_or_else(|| Error::Config("m-LinGapE needs context values".into()))?;
    let (k, q) = (state.k(), state.q());
    let g = state.grid();
    let lambda = cfg.ridge();
    let s2 = cfg.context_noise_std * cfg.context_noise_std;
    let c = c_t_delta(g.counts.total, cfg.delta);

    let pooled_v = lambda
        + (0..q)
            .map(|l| g.counts.context_total(l) as f64 * x[l] * x[l])
            .sum::<f64>();
    let mut v = vec![0.0; k];
    let mut theta = vec![0.0; k];
    for h in 0..k {
        v[h] = if cfg.pooled {
            pooled_v
        } else {
            lambda
                + (0..q)
                    .map(|l| g.counts.counts[(h, l)] as f64 * x[l] * x[l])
                    .sum::<f64>()
        };
        let b: f64 = (0..q)
            .map(|l| {
                let w = match cfg.estimator {
                    ThetaEstimator::CountWeighted => g.counts.counts[(h, l)] as f64,
                    ThetaEstimator::Literal => 1.0,
                };
                w * g.sample_mean(h, l) * x[l]
            })
            .sum();
        theta[h] = b / v[h];
    }

    // step 1: context with the narrowest estimated boundary gap, and its m-th design
    let mut order: Vec<usize> = (0..k).collect();
    let mut lead = (0usize, 0usize, f64::INFINITY);
    let mut lead_top = vec![false; k];
    for l in 0..q {
        sort_desc_by(&mut order, |h| x[l] * theta[h]);
        let m = state.m[l];
        let gap = x[l] * (theta[order[m - 1]] - theta[order[m]]);
        if gap < lead.2 {
            lead = (order[m - 1], l, gap);
            lead_top.iter_mut().for_each(|b| *b = false);
            for &h in &order[..m] {
                lead_top[h] = true;
            }
        }
    }
    let (i, l) = (lead.0, lead.1);

    // step 2: most competing (j, l~) against (i, l)
    let mut comp = (0usize, 0usize, f64::NEG_INFINITY);
    for j in (0..k).filter(|&j| !lead_top[j]) {
        for lt in 0..q {
            let val = x[lt] * theta[j] - x[l] * theta[i]
                + c * (s2 * (x[l] * x[l] / v[i] + x[lt] * x[lt] / v[j])).sqrt();
            if val > comp.2 {
                comp = (j, lt, val);
            }
        }
    }
    let (j, lt) = (comp.0, comp.1);

    // step 3: wider confidence width wins
    let w1 = c * (s2 * x[l] * x[l] / v[i]).sqrt();
    let w2 = c * (s2 * x[lt] * x[lt] / v[j]).sqrt();
    let a = PairIndex::new(i, l);
    let b = match cfg.step3 {
        Step3Design::Owner => PairIndex::new(j, lt),
        Step3Design::Leader => PairIndex::new(i, lt),
    };
    let pick = if w1 > w2 {
        a
    } else if w2 > w1 {
        b
    } else {
        a.min(b)
    };
    state.lingape = LinGapEScratch { v, theta };
    Ok(pick)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::posterior::{PosteriorGrid, PriorSpec, VarianceMode};

    #[test]
    fn c_at_t_one() {
        assert!((c_t_delta(1, 0.05) - 2.4477).abs() < 1e-4);
    }

    #[test]
    fn scalar_closed_form() {
        let mut g = PosteriorGrid::with_sampling_var(
            &PriorSpec::Uninformative,
            Grid::filled(2, 2, 1.0),
            VarianceMode::Known,
            2,
        )
        .unwrap();
        let x = [2.0, 3.0];
        let obs = [
            (0, 0, 1.0),
            (0, 0, 3.0),
            (0, 1, 5.0),
            (1, 0, 0.5),
            (1, 1, -1.0),
        ];
        for &(i, l, y) in &obs {
            g.update_one(PairIndex::new(i, l), y).unwrap();
        }
        let mut s = PolicyState::new(g, vec![1, 1])
            .unwrap()
            .with_context_values(Some(x.to_vec()));
        let cfg = LinGapEConfig::default();
        mlingape_next(&mut s, &cfg).unwrap();
        let lam = 1.0 / 20.0;
        let v0 = lam + 2.0 * 4.0 + 1.0 * 9.0;
        let th0 = (2.0 * 2.0 * 2.0 + 1.0 * 5.0 * 3.0) / v0;
        let v1 = lam + 4.0 + 9.0;
        let th1 = (0.5 * 2.0 - 1.0 * 3.0) / v1;
        assert!((s.lingape.v[0] - v0).abs() < 1e-12);
        assert!((s.lingape.theta[0] - th0).abs() < 1e-12);
        assert!((s.lingape.theta[1] - th1).abs() < 1e-12);
    }

    #[test]
    fn equal_widths_break_to_lower_pair() {
        let mut g = PosteriorGrid::with_sampling_var(
            &PriorSpec::Uninformative,
            Grid::filled(2, 2, 1.0),
            VarianceMode::Known,
            2,
        )
        .unwrap();
        for i in 0..2 {
            for l in 0..2 {
                g.update_one(PairIndex::new(i, l), if i == 0 { 1.0 } else { 0.0 })
                    .unwrap();
            }
        }
        let mut s = PolicyState::new(g, vec![1, 1])
            .unwrap()
            .with_context_values(Some(vec![1.0, 1.0]));
        let p = mlingape_next(&mut s, &LinGapEConfig::default()).unwrap();
        assert_eq!(p, PairIndex::new(0, 0));
    }

    #[test]
    fn missing_context_values() {
        let g = PosteriorGrid::with_sampling_var(
            &PriorSpec::Uninformative,
            Grid::filled(2, 1, 1.0),
            VarianceMode::Known,
            2,
        )
        .unwrap();
        let mut s = PolicyState::new(g, vec![1]).unwrap();
        assert!(mlingape_next(&mut s, &LinGapEConfig::default()).is_err());
    }
}
