//! Macro-replication experiments: run policies many times, tally correct
//! selections, and report PCS estimates with standard errors.

mod config;
mod metrics;
mod replication;
mod report;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::RngStream;

pub use config::{ContextValueGen, ExperimentConfig, Metric, Source};
pub use metrics::{estimate_metric, tally_results, Estimate, Tally};
pub use replication::{
    build_problem, ratio_convergence_run, run_replication, Problem, ReplicationResult,
};
pub use report::{write_atomic, ExperimentReport, PolicyReport, ReportRow};

/// Fraction of dropped replications above which a report is flagged.
pub const DROP_FLAG_FRACTION: f64 = 0.001;

/// Sampling stream of `policy_index` in replication `rep`. Keyed by the
/// policy id, so filtering the policy list leaves other streams unchanged.
pub fn sampling_stream(cfg: &ExperimentConfig, rep: u64, policy_index: usize) -> RngStream {
    let tag = cfg.policies[policy_index].id().ordinal() as u64 + 1;
    RngStream::new(cfg.seed, rep).derive(tag)
}

fn is_adapter_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Adapter(_) | Error::AdapterParse(_) | Error::AdapterTimeout(_)
    )
}

#[derive(Debug)]
struct Acc {
    tallies: Vec<Vec<Tally>>,
    final_counts: Vec<Grid<u64>>,
    drops: Vec<u64>,
    /// Lowest-numbered failure of each kind, so the outcome is schedule-free.
    fatal: Option<(u64, Error)>,
    adapter: Option<(u64, Error)>,
}

impl Acc {
    fn new(p: usize, c: usize, k: usize, q: usize, track: bool) -> Self {
        let mut t = Tally::new(k, q);
        if track {
            t.counts = Some(Grid::filled(k, q, 0));
        }
        Acc {
            tallies: vec![vec![t; c]; p],
            final_counts: vec![Grid::filled(k, q, 0); p],
            drops: vec![0; p],
            fatal: None,
            adapter: None,
        }
    }

    fn keep_min(slot: &mut Option<(u64, Error)>, rep: u64, e: Error) {
        if slot.as_ref().is_none_or(|(r, _)| rep < *r) {
            *slot = Some((rep, e));
        }
    }

    fn fail(&mut self, rep: u64, policy: Option<usize>, e: Error) {
        if is_adapter_error(&e) {
            match policy {
                Some(p) => self.drops[p] += 1,
                None => self.drops.iter_mut().for_each(|d| *d += 1),
            }
            Self::keep_min(&mut self.adapter, rep, e);
        } else {
            Self::keep_min(&mut self.fatal, rep, e);
        }
    }

    fn merge(mut self, o: Acc) -> Acc {
        for (a, b) in self.tallies.iter_mut().zip(&o.tallies) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (a, b) in self.final_counts.iter_mut().zip(&o.final_counts) {
            a.iter_mut().zip(b.iter()).for_each(|(u, v)| *u += v);
        }
        for (a, b) in self.drops.iter_mut().zip(&o.drops) {
            *a += b;
        }
        if let Some((r, e)) = o.fatal {
            Self::keep_min(&mut self.fatal, r, e);
        }
        if let Some((r, e)) = o.adapter {
            Self::keep_min(&mut self.adapter, r, e);
        }
        self
    }
}

fn run_one(cfg: &ExperimentConfig, rep: u64, mut acc: Acc) -> Acc {
    if acc.fatal.is_some() {
        return acc;
    }
    let mut problem = match build_problem(cfg, rep) {
        Ok(p) => p,
        Err(e) => {
            acc.fail(rep, None, e);
            return acc;
        }
    };
    for (pi, policy) in cfg.policies.iter().enumerate() {
        let mut rng = sampling_stream(cfg, rep, pi).rng();
        match run_replication(cfg, policy, &mut problem, &mut rng) {
            Ok(r) => {
                metrics::add_result(&mut acc.tallies[pi], &r);
                acc.final_counts[pi]
                    .iter_mut()
                    .zip(r.final_counts.counts.iter())
                    .for_each(|(u, v)| *u += v);
            }
            Err(e) if is_adapter_error(&e) => acc.fail(
                rep,
                Some(pi),
                Error::Adapter(format!("replication {rep}: {e}")),
            ),
            Err(e) => acc.fail(rep, Some(pi), e),
        }
    }
    acc
}

/// Run every policy for `cfg.macros` replications on a pool of `threads`
/// workers (`None` = available parallelism).
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentReport> {
    run_experiment_with_progress(cfg, threads, &|_, _| {})
}

/// As [`run_experiment`], calling `progress(done, total)` as replications finish.
pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
    progress: &(dyn Fn(u64, u64) + Sync),
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (k, q, _) = cfg.source.dims()?;
    let cps = cfg.checkpoints();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads.filter(|&t| t > 0) {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let done = AtomicU64::new(0);
    let np = cfg.policies.len();
    let acc = pool.install(|| {
        (0..cfg.macros)
            .into_par_iter()
            .fold(
                || Acc::new(np, cps.len(), k, q, cfg.track_ratios),
                |acc, rep| {
                    let acc = run_one(cfg, rep, acc);
                    progress(done.fetch_add(1, Ordering::Relaxed) + 1, cfg.macros);
                    acc
                },
            )
            .reduce(
                || Acc::new(np, cps.len(), k, q, cfg.track_ratios),
                Acc::merge,
            )
    });
    if let Some((_, e)) = acc.fatal {
        return Err(e);
    }
    if acc.tallies.iter().any(|t| t[0].n == 0) {
        return Err(acc
            .adapter
            .map(|(_, e)| e)
            .unwrap_or_else(|| Error::Config("no replication completed".into())));
    }
    if let Some((rep, e)) = &acc.adapter {
        log::warn!("dropped replications, first at {rep}: {e}");
    }
    Ok(ExperimentReport::build(
        cfg,
        &cps,
        acc.tallies,
        acc.final_counts,
        acc.drops,
        start.elapsed().as_secs_f64(),
        pool.current_num_threads(),
    ))
}
