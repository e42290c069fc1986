//! Problem sources: synthetic generators, the honeypot game, files, external simulators.

mod adapter;
mod honeypot;
mod synth;

use std::path::Path;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::instance::{Instance, PairIndex};

pub use adapter::{AdapterSampler, AdapterSpec};
pub use honeypot::{honeypot_instance, HoneypotParams, HONEYPOT_MEANS};
pub use synth::{synth_instance, MeanGen, StdGen, SynthSpec};

/// Anything that can produce one simulation output for a design-context pair.
pub trait Sampler {
    fn sample(&mut self, p: PairIndex, rng: &mut dyn RngCore) -> Result<f64>;
}

impl Sampler for Instance {
    #[inline]
    fn sample(&mut self, p: PairIndex, rng: &mut dyn RngCore) -> Result<f64> {
        Ok(sample(self, p, rng))
    }
}

/// One draw from N(mean, std^2) of the pair. A zero std returns the mean exactly.
#[inline]
pub fn sample(instance: &Instance, p: PairIndex, rng: &mut dyn RngCore) -> f64 {
    let (i, l) = (p.design, p.context);
    let z: f64 = StandardNormal.sample(rng);
    let s = instance.stds[(i, l)];
    if s == 0.0 {
        instance.means[(i, l)]
    } else {
        instance.means[(i, l)] + s * z
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    Instance::load(path)
}
