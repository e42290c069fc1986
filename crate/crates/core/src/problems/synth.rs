use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanGen {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StdGen {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub k: usize,
    pub q: usize,
    pub m: usize,
    pub mean_gen: MeanGen,
    pub std_gen: StdGen,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.q == 0 {
            return Err(Error::Config("synth needs k >= 2 and q >= 1".into()));
        }
        if self.m == 0 || self.m >= self.k {
            return Err(Error::InvalidM {
                context: 0,
                m: self.m,
                k: self.k,
            });
        }
        if !(self.mean_gen.sigma > 0.0) || !self.mean_gen.mu.is_finite() {
            return Err(Error::Config(format!(
                "mean generator sigma must be positive, got {}",
                self.mean_gen.sigma
            )));
        }
        match self.std_gen {
            StdGen::Constant { value } if !(value > 0.0 && value.is_finite()) => Err(
                Error::Config(format!("constant std must be positive, got {value}")),
            ),
            StdGen::Uniform { low, high } if !(low > 0.0 && high > low && high.is_finite()) => {
                Err(Error::Config(format!(
                    "uniform std range ({low}, {high}) must be positive and non-empty"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Fresh instance from the generating distributions; redrawn if a top-m boundary ties.
pub fn synth_instance(spec: &SynthSpec, rng: &mut dyn RngCore) -> Result<Instance> {
    spec.validate()?;
    let normal = Normal::new(spec.mean_gen.mu, spec.mean_gen.sigma)
        .map_err(|e| Error::Config(e.to_string()))?;
    loop {
        let means = Grid::from_fn(spec.k, spec.q, |_, _| normal.sample(rng));
        let stds = match spec.std_gen {
            StdGen::Constant { value } => Grid::filled(spec.k, spec.q, value),
            StdGen::Uniform { low, high } => {
                let u = Uniform::new(low, high).map_err(|e| Error::Config(e.to_string()))?;
                Grid::from_fn(spec.k, spec.q, |_, _| rng.sample(u))
            }
        };
        let inst = Instance {
            k: spec.k,
            q: spec.q,
            m: vec![spec.m; spec.q],
            means,
            stds,
            context_values: None,
            labels: None,
        };
        match inst.validate() {
            Ok(()) => return Ok(inst),
            Err(Error::NonUniqueTopM(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn exp1() -> SynthSpec {
        SynthSpec {
            k: 10,
            q: 5,
            m: 3,
            mean_gen: MeanGen {
                mu: 0.0,
                sigma: 6.0,
            },
            std_gen: StdGen::Constant { value: 6.0 },
        }
    }

    #[test]
    fn experiment1_dims() {
        let inst = synth_instance(&exp1(), &mut RngStream::new(1, 0).rng()).unwrap();
        assert_eq!((inst.k, inst.q), (10, 5));
        assert!(inst.stds.iter().all(|&s| s == 6.0));
    }

    #[test]
    fn zero_sigma_rejected() {
        let mut s = exp1();
        s.mean_gen.sigma = 0.0;
        assert!(synth_instance(&s, &mut RngStream::new(1, 0).rng()).is_err());
    }

    #[test]
    fn deterministic_and_stream_dependent() {
        let a = synth_instance(&exp1(), &mut RngStream::new(5, 1).rng()).unwrap();
        let b = synth_instance(&exp1(), &mut RngStream::new(5, 1).rng()).unwrap();
        let c = synth_instance(&exp1(), &mut RngStream::new(5, 2).rng()).unwrap();
        assert_eq!(a, b);
        assert!(a.means.iter().zip(c.means.iter()).any(|(x, y)| x != y));
    }

    #[test]
    fn uniform_stds_in_range() {
        let mut s = exp1();
        s.std_gen = StdGen::Uniform {
            low: 4.0,
            high: 6.0,
        };
        let inst = synth_instance(&s, &mut RngStream::new(2, 0).rng()).unwrap();
        assert!(inst.stds.iter().all(|&v| (4.0..6.0).contains(&v)));
    }
}
