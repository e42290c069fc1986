use rand::RngCore;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance::{remark5_instance, Instance, PairIndex};
use crate::policies::{run_policy_step, Policy, PolicyState};
use crate::posterior::{PosteriorGrid, VarianceMode};
use crate::problems::{honeypot_instance, synth_instance, AdapterSampler, Sampler};
use crate::rng::RngStream;
use crate::selection::{select_with_masks, AllocationCounts, SelectionResult};

use super::config::{ExperimentConfig, Source};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    /// One selection per checkpoint, in checkpoint order.
    pub selections: Vec<SelectionResult>,
    pub final_counts: AllocationCounts,
    /// Counts at each checkpoint, when ratio tracking is on.
    pub trajectory: Option<Vec<AllocationCounts>>,
}

/// Everything a replication needs besides the policy.
pub struct Problem {
    /// Ground truth used to judge selections.
    pub truth: Instance,
    pub sampler: Box<dyn Sampler + Send>,
}

/// Build the problem of replication `rep`. Randomized sources draw from the
/// replication's instance stream, so every policy sees the same truth.
pub fn build_problem(cfg: &ExperimentConfig, rep: u64) -> Result<Problem> {
    let mut rng = RngStream::new(cfg.seed, rep).rng();
    let mut truth = match &cfg.source {
        Source::Fixed { instance } => instance.clone(),
        Source::File { path } => Instance::load(path)?,
        Source::Synth(spec) => synth_instance(spec, &mut rng)?,
        Source::Honeypot => honeypot_instance(),
        Source::Remark5 => remark5_instance(),
        Source::Adapter(spec) => spec
            .reference_instance()?
            .ok_or_else(|| Error::Config("adapter source needs reference_means".into()))?,
    };
    if truth.context_values.is_none() {
        let g = cfg.context_values;
        let normal = Normal::new(g.mean, g.std).map_err(|e| Error::Config(e.to_string()))?;
        let x: Vec<f64> = (0..truth.q).map(|_| normal.sample(&mut rng)).collect();
        truth = truth.with_context_values(x)?;
    }
    let sampler: Box<dyn Sampler + Send> = match &cfg.source {
        Source::Adapter(spec) => Box::new(AdapterSampler::spawn(spec)?),
        _ => Box::new(truth.clone()),
    };
    Ok(Problem { truth, sampler })
}

fn initial_grid(cfg: &ExperimentConfig, truth: &Instance) -> Result<PosteriorGrid> {
    let init_var = match (&cfg.source, cfg.variance_mode) {
        (_, VarianceMode::Known) => truth.variances(),
        (Source::Adapter(a), VarianceMode::Plugin) => {
            Grid::filled(truth.k, truth.q, a.initial_variance)
        }
        (_, VarianceMode::Plugin) => Grid::filled(truth.k, truth.q, 1.0),
    };
    PosteriorGrid::with_sampling_var(&cfg.prior, init_var, cfg.variance_mode, cfg.n0.max(2))
}

/// Run one policy on one problem: `n0` samples per pair, then sequential
/// allocation until the budget is spent. Selections are taken at checkpoints
/// without touching policy state.
pub fn run_replication(
    cfg: &ExperimentConfig,
    policy: &Policy,
    problem: &mut Problem,
    rng: &mut dyn RngCore,
) -> Result<ReplicationResult> {
    let truth = &problem.truth;
    let (k, q) = (truth.k, truth.q);
    let checkpoints = cfg.checkpoints();
    let masks = truth.true_top_masks();
    let grid = initial_grid(cfg, truth)?;
    let mut state =
        PolicyState::new(grid, truth.m.clone())?.with_context_values(truth.context_values.clone());

    for i in 0..k {
        for l in 0..q {
            let p = PairIndex::new(i, l);
            for _ in 0..cfg.n0 {
                let x = problem.sampler.sample(p, rng)?;
                state.observe(p, x)?;
            }
        }
    }

    let mut selections = Vec::with_capacity(checkpoints.len());
    let mut trajectory = cfg.track_ratios.then(Vec::new);
    let mut next_cp = 0;
    let mut record = |state: &PolicyState, next_cp: &mut usize| -> Result<()> {
        while *next_cp < checkpoints.len() && checkpoints[*next_cp] == state.grid().counts.total {
            selections.push(select_with_masks(state.grid(), &truth.m, &masks)?);
            if let Some(t) = trajectory.as_mut() {
                t.push(state.grid().counts.clone());
            }
            *next_cp += 1;
        }
        Ok(())
    };
    record(&state, &mut next_cp)?;
    while state.grid().counts.total < cfg.budget {
        run_policy_step(&mut state, policy, rng, problem.sampler.as_mut())?;
        record(&state, &mut next_cp)?;
    }
    debug_assert_eq!(selections.len(), checkpoints.len());
    Ok(ReplicationResult {
        selections,
        final_counts: state.grid().counts.clone(),
        trajectory,
    })
}

/// Single long run reporting the sup-norm distance of the empirical ratios
/// to `target` at each checkpoint.
pub fn ratio_convergence_run(
    instance: &Instance,
    policy: &Policy,
    budget: u64,
    n0: u64,
    checkpoints: &[u64],
    target: &Grid<f64>,
    rng: &mut dyn RngCore,
) -> Result<Vec<(u64, f64)>> {
    if !target.same_shape(&instance.means) {
        return Err(Error::DimensionMismatch("target ratios vs instance".into()));
    }
    let mut cfg = ExperimentConfig::new(
        vec![policy.clone()],
        Source::Fixed {
            instance: instance.clone(),
        },
        budget,
    );
    cfg.n0 = n0;
    cfg.variance_mode = VarianceMode::Known;
    cfg.checkpoints = checkpoints.to_vec();
    cfg.track_ratios = true;
    cfg.macros = 1;
    cfg.validate()?;
    let mut problem = Problem {
        truth: instance.clone(),
        sampler: Box::new(instance.clone()),
    };
    let res = run_replication(&cfg, policy, &mut problem, rng)?;
    res.trajectory
        .unwrap_or_default()
        .iter()
        .map(|c| {
            let r = crate::ratios::empirical_ratios(c)?;
            let d = r
                .iter()
                .zip(target.iter())
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            Ok((c.total, d))
        })
        .collect()
}
