//! Normal-conjugate posterior over every design-context mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance::{Instance, PairIndex};
use crate::selection::AllocationCounts;

/// Floor applied to every sampling variance in use.
pub const EPS_VAR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Uninformative,
    Informative { mean0: Grid<f64>, var0: Grid<f64> },
}

/// Prior for a single cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorCell {
    Uninformative,
    Informative { mean0: f64, var0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Sampling variances fixed at their initial values.
    Known,
    /// Re-estimated from the cell's own samples once it holds `plugin_min` of them.
    #[default]
    Plugin,
}

impl std::str::FromStr for VarianceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known" => Ok(VarianceMode::Known),
            "plugin" => Ok(VarianceMode::Plugin),
            other => Err(Error::Config(format!("unknown variance mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGrid {
    /// Posterior means; NaN while undefined (uninformative prior, no samples).
    pub mean: Grid<f64>,
    /// Posterior variances; +inf while undefined.
    pub var: Grid<f64>,
    pub counts: AllocationCounts,
    /// Running sample sums (Neumaier-compensated: `sum + sum_comp`).
    pub sum: Grid<f64>,
    pub sum_comp: Grid<f64>,
    /// Welford running mean and sum of squared deviations, for the plug-in variance.
    pub welford_mean: Grid<f64>,
    pub m2: Grid<f64>,
    pub sampling_var: Grid<f64>,
    pub mode: VarianceMode,
    pub plugin_min: u64,
    prior_mean: Grid<f64>,
    /// Prior variance per cell; +inf encodes the uninformative prior.
    prior_var: Grid<f64>,
}

impl PosteriorGrid {
    /// Fresh grid with known variances taken from the instance stds.
    pub fn init(prior: &PriorSpec, instance: &Instance) -> Result<Self> {
        Self::with_sampling_var(prior, instance.variances(), VarianceMode::Known, 2)
    }

    pub fn with_sampling_var(
        prior: &PriorSpec,
        sampling_var: Grid<f64>,
        mode: VarianceMode,
        plugin_min: u64,
    ) -> Result<Self> {
        let (k, q) = (sampling_var.k(), sampling_var.q());
        let (prior_mean, prior_var) = match prior {
            PriorSpec::Uninformative => {
                (Grid::filled(k, q, 0.0), Grid::filled(k, q, f64::INFINITY))
            }
            PriorSpec::Informative { mean0, var0 } => {
                if !mean0.same_shape(&sampling_var) || !var0.same_shape(&sampling_var) {
                    return Err(Error::DimensionMismatch("prior vs instance".into()));
                }
                if let Some(&v) = var0.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                    return Err(Error::NonPositiveVariance(v));
                }
                (mean0.clone(), var0.clone())
            }
        };
        let mean = Grid::from_fn(k, q, |i, l| {
            if prior_var[(i, l)].is_finite() {
                prior_mean[(i, l)]
            } else {
                f64::NAN
            }
        });
        Ok(PosteriorGrid {
            mean,
            var: prior_var.clone(),
            counts: AllocationCounts::zeros(k, q),
            sum: Grid::filled(k, q, 0.0),
            sum_comp: Grid::filled(k, q, 0.0),
            welford_mean: Grid::filled(k, q, 0.0),
            m2: Grid::filled(k, q, 0.0),
            sampling_var: sampling_var.map(|v| v.max(EPS_VAR)),
            mode,
            plugin_min: plugin_min.max(2),
            prior_mean,
            prior_var,
        })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.mean.k()
    }
    #[inline]
    pub fn q(&self) -> usize {
        self.mean.q()
    }

    pub fn prior_cell(&self, p: PairIndex) -> PriorCell {
        let v = self.prior_var[(p.design, p.context)];
        if v.is_finite() {
            PriorCell::Informative {
                mean0: self.prior_mean[(p.design, p.context)],
                var0: v,
            }
        } else {
            PriorCell::Uninformative
        }
    }

    #[inline]
    pub fn count(&self, p: PairIndex) -> u64 {
        self.counts.get(p)
    }

    #[inline]
    pub fn sample_mean(&self, i: usize, l: usize) -> f64 {
        let t = self.counts.counts[(i, l)];
        (self.sum[(i, l)] + self.sum_comp[(i, l)]) / t as f64
    }

    pub fn check_pair(&self, p: PairIndex) -> Result<()> {
        if p.design >= self.k() {
            return Err(Error::DesignOutOfRange(p.design, self.k()));
        }
        if p.context >= self.q() {
            return Err(Error::ContextOutOfRange(p.context, self.q()));
        }
        Ok(())
    }

    /// Record one observation for `p`; only that cell changes.
    pub fn update_one(&mut self, p: PairIndex, value: f64) -> Result<()> {
        self.check_pair(p)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteSample(value));
        }
        self.update_unchecked(p, value);
        Ok(())
    }

    #[inline]
    pub(crate) fn update_unchecked(&mut self, p: PairIndex, value: f64) {
        let (i, l) = (p.design, p.context);
        self.counts.increment(p);
        let t = self.counts.counts[(i, l)];

        let s = self.sum[(i, l)];
        let ns = s + value;
        self.sum_comp[(i, l)] += if s.abs() >= value.abs() {
            (s - ns) + value
        } else {
            (value - ns) + s
        };
        self.sum[(i, l)] = ns;

        let wm = self.welford_mean[(i, l)];
        let d = value - wm;
        let nwm = wm + d / t as f64;
        self.welford_mean[(i, l)] = nwm;
        self.m2[(i, l)] += d * (value - nwm);

        if self.mode == VarianceMode::Plugin && t >= self.plugin_min {
            self.sampling_var[(i, l)] = (self.m2[(i, l)] / (t - 1) as f64).max(EPS_VAR);
        }
        self.refresh_cell(i, l);
    }

    /// Recompute the closed-form posterior of one cell from its sufficient statistics.
    #[inline]
    pub(crate) fn refresh_cell(&mut self, i: usize, l: usize) {
        let t = self.counts.counts[(i, l)];
        let s2 = self.sampling_var[(i, l)];
        let v0 = self.prior_var[(i, l)];
        if t == 0 {
            return;
        }
        let ybar = (self.sum[(i, l)] + self.sum_comp[(i, l)]) / t as f64;
        if v0.is_finite() {
            let var = 1.0 / (1.0 / v0 + t as f64 / s2);
            self.var[(i, l)] = var;
            self.mean[(i, l)] = var * (self.prior_mean[(i, l)] / v0 + t as f64 * ybar / s2);
        } else {
            self.var[(i, l)] = s2 / t as f64;
            self.mean[(i, l)] = ybar;
        }
    }

    /// Posterior variance of `p` after one more sample, without touching state.
    #[inline]
    pub fn hypothetical_var(&self, p: PairIndex) -> Result<f64> {
        self.check_pair(p)?;
        let (i, l) = (p.design, p.context);
        let t = self.counts.counts[(i, l)];
        let v0 = self.prior_var[(i, l)];
        if !v0.is_finite() && t == 0 {
            return Err(Error::UndefinedPosterior(i, l));
        }
        Ok(self.hyp_var_unchecked(i, l))
    }

    #[inline]
    pub(crate) fn hyp_var_unchecked(&self, i: usize, l: usize) -> f64 {
        let t = (self.counts.counts[(i, l)] + 1) as f64;
        let s2 = self.sampling_var[(i, l)];
        let v0 = self.prior_var[(i, l)];
        if v0.is_finite() {
            1.0 / (1.0 / v0 + t / s2)
        } else {
            s2 / t
        }
    }

    /// Unbiased sample variance of `p`, floored at `EPS_VAR`.
    pub fn plugin_variance(&self, p: PairIndex) -> Result<f64> {
        self.check_pair(p)?;
        let t = self.count(p);
        if t < 2 {
            return Err(Error::InsufficientSamples { needed: 2, have: t });
        }
        Ok((self.m2[(p.design, p.context)] / (t - 1) as f64).max(EPS_VAR))
    }

    /// True when every cell has a defined posterior.
    pub fn all_defined(&self) -> bool {
        self.var.iter().all(|v| v.is_finite())
    }
}

/// Closed-form posterior of one cell given all its samples.
pub fn batch_update(prior: PriorCell, sigma2: f64, samples: &[f64]) -> Result<(f64, f64)> {
    if !(sigma2 > 0.0) {
        return Err(Error::NonPositiveVariance(sigma2));
    }
    let t = samples.len() as f64;
    let ybar = if samples.is_empty() {
        0.0
    } else {
        neumaier_sum(samples) / t
    };
    match prior {
        PriorCell::Uninformative => {
            if samples.is_empty() {
                return Err(Error::InsufficientSamples { needed: 1, have: 0 });
            }
            Ok((ybar, sigma2 / t))
        }
        PriorCell::Informative { mean0, var0 } => {
            if !(var0 > 0.0) {
                return Err(Error::NonPositiveVariance(var0));
            }
            let var = 1.0 / (1.0 / var0 + t / sigma2);
            Ok((var * (mean0 / var0 + t * ybar / sigma2), var))
        }
    }
}

fn neumaier_sum(xs: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let ns = s + x;
        c += if s.abs() >= x.abs() {
            (s - ns) + x
        } else {
            (x - ns) + s
        };
        s = ns;
    }
    s + c
}
