use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

use super::config::Metric;
use super::replication::ReplicationResult;

/// Integer tallies for one policy at one checkpoint. Merging is exact, so the
/// result does not depend on how replications were grouped.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub n: u64,
    pub correct_per_context: Vec<u64>,
    pub all_correct: u64,
    /// How often each design was selected in each context.
    pub selected: Option<Grid<u64>>,
    /// Summed allocation counts, when ratio tracking is on.
    pub counts: Option<Grid<u64>>,
}

impl Tally {
    pub fn new(k: usize, q: usize) -> Self {
        Tally {
            n: 0,
            correct_per_context: vec![0; q],
            all_correct: 0,
            selected: Some(Grid::filled(k, q, 0)),
            counts: None,
        }
    }

    pub fn merge(&mut self, o: &Tally) {
        self.n += o.n;
        for (a, b) in self
            .correct_per_context
            .iter_mut()
            .zip(&o.correct_per_context)
        {
            *a += b;
        }
        self.all_correct += o.all_correct;
        add_grid(&mut self.selected, &o.selected);
        add_grid(&mut self.counts, &o.counts);
    }

    /// Per-context correct-selection frequency.
    pub fn per_context(&self) -> Vec<f64> {
        self.correct_per_context
            .iter()
            .map(|&c| c as f64 / self.n.max(1) as f64)
            .collect()
    }

    pub fn estimate(&self, metric: Metric) -> Result<Estimate> {
        if self.n == 0 {
            return Err(Error::Config("no replications to estimate from".into()));
        }
        let n = self.n as f64;
        let p = match metric {
            Metric::WorstContextPcs => {
                *self.correct_per_context.iter().min().unwrap_or(&0) as f64 / n
            }
            Metric::AllContextsPcs => self.all_correct as f64 / n,
        };
        Ok(Estimate {
            estimate: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            macros: self.n,
        })
    }
}

fn add_grid(a: &mut Option<Grid<u64>>, b: &Option<Grid<u64>>) {
    match (a.as_mut(), b) {
        (Some(x), Some(y)) => x.iter_mut().zip(y.iter()).for_each(|(u, v)| *u += v),
        (None, Some(y)) => *a = Some(y.clone()),
        _ => {}
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub macros: u64,
}

/// Per-checkpoint tallies for one policy.
pub fn tally_results(results: &[ReplicationResult]) -> Result<Vec<Tally>> {
    let first = results
        .first()
        .ok_or_else(|| Error::Config("empty results".into()))?;
    let (k, q) = (first.final_counts.counts.k(), first.final_counts.counts.q());
    let mut out = vec![Tally::new(k, q); first.selections.len()];
    for r in results {
        add_result(&mut out, r);
    }
    Ok(out)
}

pub(crate) fn add_result(tallies: &mut [Tally], r: &ReplicationResult) {
    for (c, (t, s)) in tallies.iter_mut().zip(&r.selections).enumerate() {
        t.n += 1;
        for (l, &ok) in s.correct_per_context.iter().enumerate() {
            t.correct_per_context[l] += ok as u64;
        }
        t.all_correct += s.all_correct() as u64;
        if let Some(sel) = t.selected.as_mut() {
            for (l, top) in s.selected.iter().enumerate() {
                for &i in top {
                    sel[(i, l)] += 1;
                }
            }
        }
        if let Some(tr) = &r.trajectory {
            add_grid(&mut t.counts, &Some(tr[c].counts.clone()));
        }
    }
}

/// Metric estimates per checkpoint over a set of replications.
pub fn estimate_metric(results: &[ReplicationResult], metric: Metric) -> Result<Vec<Estimate>> {
    tally_results(results)?
        .iter()
        .map(|t| t.estimate(metric))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{AllocationCounts, SelectionResult};

    fn rep(correct: &[bool]) -> ReplicationResult {
        ReplicationResult {
            selections: vec![SelectionResult {
                selected: vec![vec![0]; correct.len()],
                correct_per_context: correct.to_vec(),
            }],
            final_counts: AllocationCounts::zeros(2, correct.len()),
            trajectory: None,
        }
    }

    #[test]
    fn all_correct_is_one() {
        let rs = vec![rep(&[true, true]); 5];
        for m in Metric::ALL {
            let e = estimate_metric(&rs, m).unwrap();
            assert_eq!(e[0].estimate, 1.0);
            assert_eq!(e[0].stderr, 0.0);
        }
    }

    #[test]
    fn one_context_always_wrong() {
        let rs = vec![rep(&[true, false, true]); 4];
        let t = tally_results(&rs).unwrap();
        assert_eq!(t[0].per_context(), vec![1.0, 0.0, 1.0]);
        assert_eq!(
            t[0].estimate(Metric::WorstContextPcs).unwrap().estimate,
            0.0
        );
    }

    #[test]
    fn matches_recount_oracle() {
        use rand::{Rng, SeedableRng};
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let pats: Vec<Vec<bool>> = (0..200)
            .map(|_| (0..3).map(|_| g.random_bool(0.7)).collect())
            .collect();
        let rs: Vec<_> = pats.iter().map(|p| rep(p)).collect();
        let per: Vec<f64> = (0..3)
            .map(|l| pats.iter().filter(|p| p[l]).count() as f64 / 200.0)
            .collect();
        let worst = per.iter().cloned().fold(f64::INFINITY, f64::min);
        let all = pats.iter().filter(|p| p.iter().all(|&b| b)).count() as f64 / 200.0;
        assert_eq!(
            estimate_metric(&rs, Metric::WorstContextPcs).unwrap()[0].estimate,
            worst
        );
        let e = estimate_metric(&rs, Metric::AllContextsPcs).unwrap()[0];
        assert_eq!(e.estimate, all);
        assert!((e.stderr - (all * (1.0 - all) / 200.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_is_error() {
        assert!(estimate_metric(&[], Metric::AllContextsPcs).is_err());
    }
}
