//! Sequential sampling policies behind one interface.

mod aoamc;
mod apcs;
mod bold;
mod ea;
mod lingape;
mod ocba;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::PairIndex;
use crate::posterior::PosteriorGrid;
use crate::problems::Sampler;
use crate::selection::sort_desc_by;

pub use aoamc::{aoamc_next, eaoam_next};
pub use apcs::apcs;
pub use bold::{bold_pair, boldmc_next};
pub use ea::ea_next;
pub use lingape::{c_t_delta, mlingape_next, LinGapEConfig, LinGapEScratch};
pub use ocba::{eocbam_next, ocbam_weights, EocbamConfig};

/// Floor on squared mean gaps wherever they land in a denominator or a minimisation.
pub const EPS_GAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyId {
    Aoamc,
    Ea,
    Eocbam,
    Eaoam,
    Boldmc,
    Mlingape,
}

impl PolicyId {
    pub const ALL: [PolicyId; 6] = [
        PolicyId::Aoamc,
        PolicyId::Ea,
        PolicyId::Eocbam,
        PolicyId::Eaoam,
        PolicyId::Boldmc,
        PolicyId::Mlingape,
    ];

    /// Position in [`PolicyId::ALL`].
    pub fn ordinal(&self) -> usize {
        *self as usize
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyId::Aoamc => "aoamc",
            PolicyId::Ea => "ea",
            PolicyId::Eocbam => "eocbam",
            PolicyId::Eaoam => "eaoam",
            PolicyId::Boldmc => "boldmc",
            PolicyId::Mlingape => "mlingape",
        }
    }
}

impl std::fmt::Display for PolicyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PolicyId::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown policy {s:?}")))
    }
}

/// A policy id plus its configuration block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase")]
pub enum Policy {
    Aoamc,
    Ea,
    Eocbam(#[serde(default)] EocbamConfig),
    Eaoam,
    Boldmc,
    Mlingape(#[serde(default)] LinGapEConfig),
}

impl Policy {
    pub fn id(&self) -> PolicyId {
        match self {
            Policy::Aoamc => PolicyId::Aoamc,
            Policy::Ea => PolicyId::Ea,
            Policy::Eocbam(_) => PolicyId::Eocbam,
            Policy::Eaoam => PolicyId::Eaoam,
            Policy::Boldmc => PolicyId::Boldmc,
            Policy::Mlingape(_) => PolicyId::Mlingape,
        }
    }

    pub fn from_id(id: PolicyId) -> Policy {
        match id {
            PolicyId::Aoamc => Policy::Aoamc,
            PolicyId::Ea => Policy::Ea,
            PolicyId::Eocbam => Policy::Eocbam(EocbamConfig::default()),
            PolicyId::Eaoam => Policy::Eaoam,
            PolicyId::Boldmc => Policy::Boldmc,
            PolicyId::Mlingape => Policy::Mlingape(LinGapEConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Policy::Mlingape(c) => c.validate(),
            Policy::Eocbam(c) => c.validate(),
            _ => Ok(()),
        }
    }
}

/// Cached per-context ranking and APCS, refreshed lazily for touched contexts.
#[derive(Debug, Clone)]
pub(crate) struct ContextCache {
    pub order: Vec<Vec<usize>>,
    pub apcs: Vec<f64>,
    pub dirty: Vec<bool>,
}

/// Everything a policy carries between steps.
#[derive(Debug, Clone)]
pub struct PolicyState {
    grid: PosteriorGrid,
    pub m: Vec<usize>,
    /// Sequential steps taken since the initial phase.
    pub step: u64,
    pub(crate) cache: ContextCache,
    pub(crate) mark: Vec<bool>,
    /// Context covariates, required by m-LinGapE.
    pub context_values: Option<Vec<f64>>,
    pub lingape: LinGapEScratch,
}

impl PolicyState {
    pub fn new(grid: PosteriorGrid, m: Vec<usize>) -> Result<Self> {
        let (k, q) = (grid.k(), grid.q());
        if m.len() != q {
            return Err(Error::DimensionMismatch(format!(
                "m has {} entries, q = {q}",
                m.len()
            )));
        }
        for (l, &ml) in m.iter().enumerate() {
            if ml == 0 || ml >= k {
                return Err(Error::InvalidM {
                    context: l,
                    m: ml,
                    k,
                });
            }
        }
        Ok(PolicyState {
            cache: ContextCache {
                order: vec![(0..k).collect(); q],
                apcs: vec![f64::NAN; q],
                dirty: vec![true; q],
            },
            mark: vec![false; k],
            grid,
            m,
            step: 0,
            context_values: None,
            lingape: LinGapEScratch::default(),
        })
    }

    pub fn with_context_values(mut self, x: Option<Vec<f64>>) -> Self {
        self.context_values = x;
        self
    }

    #[inline]
    pub fn grid(&self) -> &PosteriorGrid {
        &self.grid
    }

    /// Mutable access invalidates every cached context.
    pub fn grid_mut(&mut self) -> &mut PosteriorGrid {
        self.cache.dirty.iter_mut().for_each(|d| *d = true);
        &mut self.grid
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.grid.k()
    }
    #[inline]
    pub fn q(&self) -> usize {
        self.grid.q()
    }

    /// Feed one observation into the posterior.
    #[inline]
    pub fn observe(&mut self, p: PairIndex, value: f64) -> Result<()> {
        self.grid.update_one(p, value)?;
        self.cache.dirty[p.context] = true;
        Ok(())
    }

    pub(crate) fn require_defined(&self) -> Result<()> {
        for i in 0..self.k() {
            for l in 0..self.q() {
                if !self.grid.var[(i, l)].is_finite() {
                    return Err(Error::UndefinedPosterior(i, l));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn require_counts(&self, n: u64) -> Result<()> {
        for i in 0..self.k() {
            for l in 0..self.q() {
                let have = self.grid.counts.counts[(i, l)];
                if have < n {
                    return Err(Error::InsufficientSamples { needed: n, have });
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn refresh(&mut self, l: usize) {
        if !self.cache.dirty[l] {
            return;
        }
        let q = self.grid.q();
        let mean = self.grid.mean.as_slice();
        sort_desc_by(&mut self.cache.order[l], |i| mean[i * q + l]);
        self.cache.apcs[l] =
            apcs::apcs_ordered(&self.grid, l, &self.cache.order[l], self.m[l], None);
        self.cache.dirty[l] = false;
    }

    pub(crate) fn refresh_all(&mut self) {
        for l in 0..self.q() {
            self.refresh(l);
        }
    }

    /// Cached APCS of every context.
    pub fn apcs_all(&mut self) -> Result<Vec<f64>> {
        self.require_defined()?;
        self.refresh_all();
        Ok(self.cache.apcs.clone())
    }
}

/// Pick the next pair under `policy`.
pub fn next_pair(state: &mut PolicyState, policy: &Policy) -> Result<PairIndex> {
    match policy {
        Policy::Aoamc => aoamc_next(state),
        Policy::Ea => Ok(ea_next(state)),
        Policy::Eocbam(c) => eocbam_next(state, c),
        Policy::Eaoam => eaoam_next(state),
        Policy::Boldmc => boldmc_next(state),
        Policy::Mlingape(c) => mlingape_next(state, c),
    }
}

/// Choose a pair, simulate it once, and fold the sample into the posterior.
pub fn run_policy_step<S: Sampler + ?Sized>(
    state: &mut PolicyState,
    policy: &Policy,
    rng: &mut dyn RngCore,
    sampler: &mut S,
) -> Result<(PairIndex, f64)> {
    let p = next_pair(state, policy)?;
    let x = sampler.sample(p, rng)?;
    state.observe(p, x)?;
    state.step += 1;
    Ok((p, x))
}
