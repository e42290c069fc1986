use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::policies::Policy;
use crate::posterior::{PriorSpec, VarianceMode};
use crate::problems::{AdapterSpec, SynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Minimum over contexts of the per-context correct-selection frequency.
    #[default]
    WorstContextPcs,
    /// Frequency of replications correct in every context at once.
    AllContextsPcs,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::WorstContextPcs, Metric::AllContextsPcs];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::WorstContextPcs => "worst_context_pcs",
            Metric::AllContextsPcs => "all_contexts_pcs",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "worst_context_pcs" => Ok(Metric::WorstContextPcs),
            "all_contexts_pcs" => Ok(Metric::AllContextsPcs),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

/// Where each replication's problem comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Fixed { instance: Instance },
    File { path: PathBuf },
    Synth(SynthSpec),
    Honeypot,
    Remark5,
    Adapter(AdapterSpec),
}

impl Source {
    /// Dimensions (k, q, m) known before any replication runs.
    pub fn dims(&self) -> Result<(usize, usize, Vec<usize>)> {
        Ok(match self {
            Source::Fixed { instance } => (instance.k, instance.q, instance.m.clone()),
            Source::File { path } => {
                let inst = Instance::load(path)?;
                (inst.k, inst.q, inst.m)
            }
            Source::Synth(s) => (s.k, s.q, vec![s.m; s.q]),
            Source::Honeypot => (8, 6, vec![3; 6]),
            Source::Remark5 => (4, 2, vec![2, 2]),
            Source::Adapter(a) => (a.k, a.q, a.m.clone()),
        })
    }

    /// Resolve file references into a fixed instance.
    pub fn resolve(self, base: Option<&Path>) -> Result<Source> {
        Ok(match self {
            Source::File { path } => {
                let p = match base {
                    Some(b) if path.is_relative() => b.join(&path),
                    _ => path,
                };
                Source::Fixed {
                    instance: Instance::load(&p)?,
                }
            }
            Source::Adapter(mut a) => {
                if let (Some(b), Some(r)) = (base, &a.reference_means) {
                    if r.is_relative() {
                        a.reference_means = Some(b.join(r));
                    }
                }
                Source::Adapter(a)
            }
            other => other,
        })
    }
}

/// Context covariates drawn per replication when the instance has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextValueGen {
    pub mean: f64,
    pub std: f64,
}

impl Default for ContextValueGen {
    fn default() -> Self {
        ContextValueGen {
            mean: 5.0,
            std: 1.0,
        }
    }
}

fn default_n0() -> u64 {
    10
}
fn default_macros() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub policies: Vec<Policy>,
    pub source: Source,
    /// Total budget T, including the initial phase.
    pub budget: u64,
    #[serde(default = "default_n0")]
    pub n0: u64,
    /// Budgets at which selections are evaluated; defaults to `[budget]`.
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    #[serde(default = "default_macros")]
    pub macros: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default)]
    pub variance_mode: VarianceMode,
    #[serde(default = "uninformative")]
    pub prior: PriorSpec,
    #[serde(default)]
    pub context_values: ContextValueGen,
    /// Keep per-checkpoint counts in every replication result.
    #[serde(default)]
    pub track_ratios: bool,
}

fn uninformative() -> PriorSpec {
    PriorSpec::Uninformative
}

impl ExperimentConfig {
    pub fn new(policies: Vec<Policy>, source: Source, budget: u64) -> Self {
        ExperimentConfig {
            name: None,
            policies,
            source,
            budget,
            n0: default_n0(),
            checkpoints: vec![],
            macros: default_macros(),
            seed: 0,
            metric: Metric::default(),
            variance_mode: VarianceMode::default(),
            prior: PriorSpec::Uninformative,
            context_values: ContextValueGen::default(),
            track_ratios: false,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Load, resolving relative instance paths against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        cfg.source = cfg.source.resolve(path.parent())?;
        Ok(cfg)
    }

    /// Checkpoints sorted and deduplicated, defaulting to the full budget.
    pub fn checkpoints(&self) -> Vec<u64> {
        let mut c = if self.checkpoints.is_empty() {
            vec![self.budget]
        } else {
            self.checkpoints.clone()
        };
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::Config("no policies".into()));
        }
        for p in &self.policies {
            p.validate()?;
        }
        if self.macros == 0 {
            return Err(Error::Config("macros must be positive".into()));
        }
        if self.n0 == 0 {
            return Err(Error::Config("n0 must be positive".into()));
        }
        if self.variance_mode == VarianceMode::Plugin && self.n0 < 2 {
            return Err(Error::Config("plug-in variances need n0 >= 2".into()));
        }
        let (k, q, _) = self.source.dims()?;
        let init = self.n0 * (k * q) as u64;
        if self.budget < init {
            return Err(Error::Config(format!(
                "budget {} below initial phase n0*k*q = {init}",
                self.budget
            )));
        }
        for &c in &self.checkpoints() {
            if c < init || c > self.budget {
                return Err(Error::Config(format!(
                    "checkpoint {c} outside [{init}, {}]",
                    self.budget
                )));
            }
        }
        match &self.source {
            Source::Synth(s) => s.validate()?,
            Source::Adapter(a) => a.validate()?,
            Source::Fixed { instance } => instance.validate()?,
            _ => {}
        }
        if let PriorSpec::Informative { mean0, var0 } = &self.prior {
            if mean0.k() != k || mean0.q() != q || var0.k() != k || var0.q() != q {
                return Err(Error::Config("prior dims differ from the source".into()));
            }
        }
        if !(self.context_values.std >= 0.0) {
            return Err(Error::Config(
                "context value std must be non-negative".into(),
            ));
        }
        Ok(())
    }
}
