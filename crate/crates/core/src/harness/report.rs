use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::Grid;

use super::config::{ExperimentConfig, Metric};
use super::metrics::Tally;
use super::DROP_FLAG_FRACTION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub policy: String,
    pub checkpoint: u64,
    pub metric: Metric,
    pub estimate: f64,
    pub stderr: f64,
    pub macros: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: String,
    /// `[checkpoint][context]` correct-selection frequencies.
    pub per_context_pcs: Vec<Vec<f64>>,
    /// Final counts averaged over replications, divided by the budget.
    pub mean_final_ratios: Grid<f64>,
    /// `[checkpoint]` frequency with which each pair was selected.
    pub selection_frequency: Vec<Grid<f64>>,
    /// `[checkpoint]` mean empirical ratios, when tracked.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_ratio_trajectory: Option<Vec<Grid<f64>>>,
    pub completed: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: Option<String>,
    pub metric: Metric,
    pub checkpoints: Vec<u64>,
    /// Both metrics for every (policy, checkpoint); the configured one first.
    pub rows: Vec<ReportRow>,
    pub policies: Vec<PolicyReport>,
    pub dropped: u64,
    /// Set when drops exceed the tolerated fraction of replications.
    pub drop_flag: bool,
    /// Some replications failed and the estimates use the survivors only.
    pub partial: bool,
    pub wall_time_s: f64,
    pub threads: usize,
    pub config: ExperimentConfig,
}

fn labels(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for p in &cfg.policies {
        let base = p.id().as_str();
        let n = out
            .iter()
            .filter(|s| s.split('#').next() == Some(base))
            .count();
        out.push(if n == 0 {
            base.to_string()
        } else {
            format!("{base}#{}", n + 1)
        });
    }
    out
}

impl ExperimentReport {
    pub(crate) fn build(
        cfg: &ExperimentConfig,
        checkpoints: &[u64],
        tallies: Vec<Vec<Tally>>,
        final_counts: Vec<Grid<u64>>,
        drops: Vec<u64>,
        wall_time_s: f64,
        threads: usize,
    ) -> Self {
        let names = labels(cfg);
        let metrics = match cfg.metric {
            Metric::WorstContextPcs => [Metric::WorstContextPcs, Metric::AllContextsPcs],
            Metric::AllContextsPcs => [Metric::AllContextsPcs, Metric::WorstContextPcs],
        };
        let mut rows = Vec::new();
        let mut policies = Vec::new();
        for (pi, ts) in tallies.iter().enumerate() {
            for (t, &cp) in ts.iter().zip(checkpoints) {
                for m in metrics {
                    let e = t.estimate(m).expect("non-empty tally");
                    rows.push(ReportRow {
                        policy: names[pi].clone(),
                        checkpoint: cp,
                        metric: m,
                        estimate: e.estimate,
                        stderr: e.stderr,
                        macros: e.macros,
                    });
                }
            }
            let n = ts[0].n as f64;
            let traj = if cfg.track_ratios {
                Some(
                    ts.iter()
                        .zip(checkpoints)
                        .filter_map(|(t, &cp)| {
                            t.counts
                                .as_ref()
                                .map(|c| c.map(|&x| x as f64 / (n * cp as f64)))
                        })
                        .collect(),
                )
            } else {
                None
            };
            policies.push(PolicyReport {
                policy: names[pi].clone(),
                per_context_pcs: ts.iter().map(Tally::per_context).collect(),
                mean_final_ratios: final_counts[pi].map(|&c| c as f64 / (n * cfg.budget as f64)),
                selection_frequency: ts
                    .iter()
                    .map(|t| {
                        t.selected
                            .as_ref()
                            .expect("selection tally")
                            .map(|&c| c as f64 / n)
                    })
                    .collect(),
                mean_ratio_trajectory: traj,
                completed: ts[0].n,
                dropped: drops[pi],
            });
        }
        let dropped: u64 = drops.iter().sum();
        let attempts = cfg.macros * cfg.policies.len() as u64;
        ExperimentReport {
            name: cfg.name.clone(),
            metric: cfg.metric,
            checkpoints: checkpoints.to_vec(),
            rows,
            policies,
            dropped,
            drop_flag: dropped as f64 > DROP_FLAG_FRACTION * attempts as f64,
            partial: dropped > 0,
            wall_time_s,
            threads,
            config: cfg.clone(),
        }
    }

    /// Rows for one metric.
    pub fn rows_for(&self, metric: Metric) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    pub fn find(&self, policy: &str, checkpoint: u64, metric: Metric) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.checkpoint == checkpoint && r.metric == metric)
    }

    /// Same report with timing and thread count cleared, for equality checks.
    pub fn without_timing(&self) -> Self {
        ExperimentReport {
            wall_time_s: 0.0,
            threads: 0,
            ..self.clone()
        }
    }

    pub fn curves_csv(&self) -> String {
        let mut s = String::from("policy,checkpoint,metric,estimate,stderr,macros\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.policy,
                r.checkpoint,
                r.metric.as_str(),
                r.estimate,
                r.stderr,
                r.macros
            );
        }
        s
    }

    pub fn ratios_csv(&self) -> String {
        let mut s = String::from("policy,design,context,mean_final_ratio\n");
        for p in &self.policies {
            let g = &p.mean_final_ratios;
            for i in 0..g.k() {
                for l in 0..g.q() {
                    let _ = writeln!(s, "{},{},{},{}", p.policy, i, l, g[(i, l)]);
                }
            }
        }
        s
    }

    /// Wide table: one row per checkpoint, estimate and stderr per policy.
    pub fn compare_csv(&self, metric: Metric) -> String {
        let mut s = String::from("checkpoint");
        for p in &self.policies {
            let _ = write!(s, ",{0},{0}_stderr", p.policy);
        }
        s.push('\n');
        for &cp in &self.checkpoints {
            let _ = write!(s, "{cp}");
            for p in &self.policies {
                let r = self
                    .find(&p.policy, cp, metric)
                    .expect("row per policy and checkpoint");
                let _ = write!(s, ",{},{}", r.estimate, r.stderr);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Write `curves.csv`, `ratios.csv` and `report.json` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("curves.csv"), self.curves_csv().as_bytes())?;
        write_atomic(&dir.join("ratios.csv"), self.ratios_csv().as_bytes())?;
        write_atomic(&dir.join("report.json"), self.to_json()?.as_bytes())?;
        Ok(())
    }
}

/// Write through a temp file in the same directory, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
