//! Top-m context-dependent ranking and selection.
//!
//! Sequential budget allocation policies (AOAmc and baselines), an optimal
//! sampling-ratio solver with KKT verification, and a Monte Carlo harness.

pub mod cli;
pub mod error;
pub mod grid;
pub mod harness;
pub mod instance;
pub mod policies;
pub mod posterior;
pub mod problems;
pub mod ratios;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
pub use grid::Grid;
pub use instance::{remark5_instance, Instance, PairIndex};
pub use policies::{Policy, PolicyId, PolicyState};
pub use posterior::{PosteriorGrid, PriorSpec, VarianceMode};
pub use rng::RngStream;
pub use selection::{select, AllocationCounts, SelectionResult};
