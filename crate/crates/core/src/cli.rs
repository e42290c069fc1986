//! Command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration or I/O error,
//! 3 no KKT-verified ratio solution, 4 simulator adapter failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::harness::{self, write_atomic, ExperimentConfig};
use crate::instance::{remark5_instance, Instance};
use crate::policies::PolicyId;
use crate::problems::{honeypot_instance, synth_instance, MeanGen, StdGen, SynthSpec};
use crate::ratios::{solve_balance_enumerate, BalanceOptions};
use crate::rng::RngStream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_KKT: i32 = 3;
pub const EXIT_ADAPTER: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ctxrank",
    version,
    about = "Top-m context-dependent ranking and selection"
)]
pub struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate balance-equation solutions and KKT-check them.
    SolveRatios {
        /// Instance JSON file.
        #[arg(long, alias = "instance")]
        config: PathBuf,
        /// Where to write the solutions JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest number of boundary pairs the enumeration accepts.
        #[arg(long, default_value_t = 16)]
        slot_cap: usize,
    },
    /// Run an experiment and write curves.csv, ratios.csv and report.json.
    Run(RunArgs),
    /// Run an experiment and also write one merged compare.csv.
    Compare(RunArgs),
    /// Write an instance JSON file.
    MakeInstance(MakeArgs),
    /// Check an experiment config or instance file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub macros: Option<u64>,
    /// Worker threads; falls back to CTXRANK_THREADS, then available parallelism.
    #[arg(long, env = "CTXRANK_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub variance_mode: Option<String>,
    /// Comma-separated policy ids to keep.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<String>>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Suppress progress on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct MakeArgs {
    /// remark5, honeypot or synth.
    #[arg(long, default_value = "synth")]
    pub kind: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub q: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 6.0)]
    pub sigma: f64,
    /// Constant noise std; ignored when a std range is given.
    #[arg(long, default_value_t = 6.0)]
    pub std: f64,
    #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"])]
    pub std_range: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Map an error to its documented exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Adapter(_) | Error::AdapterParse(_) | Error::AdapterTimeout(_) => EXIT_ADAPTER,
        Error::NoKktSolution => EXIT_NO_KKT,
        Error::NonFiniteSample(_)
        | Error::UndefinedPosterior(..)
        | Error::InsufficientSamples { .. }
        | Error::NonPositiveVariance(_)
        | Error::InvalidRatio(_)
        | Error::ZeroRate(_)
        | Error::NotBracketed(..) => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::SolveRatios {
            config,
            out,
            slot_cap,
        } => solve_ratios(config, out.as_deref(), *slot_cap, cli.json),
        Command::Run(a) => run_cmd(a, cli.json, false),
        Command::Compare(a) => run_cmd(a, cli.json, true),
        Command::MakeInstance(a) => make_instance(a),
        Command::Validate { config } => validate(config, cli.json),
    }
}

fn solve_ratios(path: &Path, out: Option<&Path>, slot_cap: usize, as_json: bool) -> Result<i32> {
    let inst = Instance::load(path)?;
    let opts = BalanceOptions {
        slot_cap,
        ..BalanceOptions::default()
    };
    let report = solve_balance_enumerate(&inst, &opts)?;
    if let Some(out) = out {
        write_atomic(out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    let opt = report.optimal();
    let mut stdout = std::io::stdout().lock();
    if as_json {
        let v = json!({
            "solutions": report.solutions.len(),
            "optimal_index": report.optimal_index,
            "non_unique": report.non_unique,
            "z_star": opt.map(|s| s.z),
            "r_star": opt.map(|s| s.r.rows()),
            "z": report.solutions.iter().map(|s| s.z).collect::<Vec<_>>(),
            "kkt_ok": report.solutions.iter().map(|s| s.kkt_ok).collect::<Vec<_>>(),
        });
        writeln!(stdout, "{v}")?;
    } else {
        writeln!(stdout, "solutions: {}", report.solutions.len())?;
        for (n, s) in report.solutions.iter().enumerate() {
            writeln!(stdout, "  #{} z = {:.6} kkt_ok = {}", n + 1, s.z, s.kkt_ok)?;
        }
        match opt {
            Some(s) => {
                writeln!(stdout, "z* = {:.5}", s.z)?;
                for i in 0..s.r.k() {
                    let row: Vec<String> = (0..s.r.q())
                        .map(|l| format!("{:.4}", s.r[(i, l)]))
                        .collect();
                    writeln!(stdout, "  design {i}: {}", row.join(" "))?;
                }
                if report.non_unique {
                    writeln!(stdout, "warning: more than one KKT-verified solution")?;
                }
            }
            None => writeln!(stdout, "no KKT-verified solution")?,
        }
    }
    Ok(if opt.is_some() { EXIT_OK } else { EXIT_NO_KKT })
}

fn apply_overrides(cfg: &mut ExperimentConfig, a: &RunArgs) -> Result<()> {
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = a.macros {
        cfg.macros = m;
    }
    if let Some(b) = a.budget {
        cfg.budget = b;
        cfg.checkpoints.retain(|&c| c <= b);
    }
    if let Some(m) = &a.metric {
        cfg.metric = m.parse()?;
    }
    if let Some(v) = &a.variance_mode {
        cfg.variance_mode = v.parse()?;
    }
    if let Some(keep) = &a.policies {
        let ids: Vec<PolicyId> = keep
            .iter()
            .map(|s| s.trim().parse())
            .collect::<Result<_>>()?;
        cfg.policies.retain(|p| ids.contains(&p.id()));
    }
    Ok(())
}

fn run_cmd(a: &RunArgs, as_json: bool, compare: bool) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    apply_overrides(&mut cfg, a)?;
    if compare && cfg.policies.len() < 2 {
        return Err(Error::Config("compare needs at least two policies".into()));
    }
    cfg.validate()?;
    let quiet = a.quiet;
    let step = (cfg.macros / 20).max(1);
    let progress = move |done: u64, total: u64| {
        if !quiet && (done.is_multiple_of(step) || done == total) {
            eprint!("\r{done}/{total} replications");
            if done == total {
                eprintln!();
            }
        }
    };
    let report = harness::run_experiment_with_progress(&cfg, a.threads, &progress)?;
    report.write_all(&a.out)?;
    if compare {
        write_atomic(
            &a.out.join("compare.csv"),
            report.compare_csv(cfg.metric).as_bytes(),
        )?;
    }
    let mut stdout = std::io::stdout().lock();
    if as_json {
        let rows: Vec<_> = report.rows_for(cfg.metric).collect();
        writeln!(
            stdout,
            "{}",
            json!({"out": a.out, "rows": rows, "dropped": report.dropped, "drop_flag": report.drop_flag, "wall_time_s": report.wall_time_s})
        )?;
    } else {
        writeln!(
            stdout,
            "{:<10} {:>10} {:>10} {:>10}",
            "policy",
            "checkpoint",
            cfg.metric.as_str(),
            "stderr"
        )?;
        for r in report.rows_for(cfg.metric) {
            writeln!(
                stdout,
                "{:<10} {:>10} {:>10.4} {:>10.4}",
                r.policy, r.checkpoint, r.estimate, r.stderr
            )?;
        }
        if report.drop_flag {
            writeln!(stdout, "warning: {} replications dropped", report.dropped)?;
        }
    }
    Ok(EXIT_OK)
}

fn make_instance(a: &MakeArgs) -> Result<i32> {
    let inst = match a.kind.as_str() {
        "remark5" => remark5_instance(),
        "honeypot" => honeypot_instance(),
        "synth" => {
            let std_gen = match a.std_range.as_deref() {
                Some([low, high]) => StdGen::Uniform {
                    low: *low,
                    high: *high,
                },
                _ => StdGen::Constant { value: a.std },
            };
            let spec = SynthSpec {
                k: a.k,
                q: a.q,
                m: a.m,
                mean_gen: MeanGen {
                    mu: a.mu,
                    sigma: a.sigma,
                },
                std_gen,
            };
            spec.validate()?;
            synth_instance(&spec, &mut RngStream::new(a.seed, 0).rng())?
        }
        other => return Err(Error::Config(format!("unknown instance kind {other:?}"))),
    };
    write_atomic(&a.out, serde_json::to_string_pretty(&inst)?.as_bytes())?;
    Ok(EXIT_OK)
}

fn validate(path: &Path, as_json: bool) -> Result<i32> {
    let text = std::fs::read_to_string(path)?;
    let kind = match ExperimentConfig::from_json(&text) {
        Ok(_) => {
            ExperimentConfig::load(path)?.validate()?;
            "experiment"
        }
        Err(cfg_err) => match Instance::from_json(&text) {
            Ok(inst) => {
                inst.validate()?;
                "instance"
            }
            Err(_) => return Err(cfg_err),
        },
    };
    if as_json {
        println!("{}", json!({"valid": true, "kind": kind}));
    } else {
        println!("ok: {kind}");
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::NoKktSolution), EXIT_NO_KKT);
        assert_eq!(exit_code(&Error::AdapterTimeout(5)), EXIT_ADAPTER);
        assert_eq!(
            exit_code(&Error::Io(std::io::Error::other("x"))),
            EXIT_CONFIG
        );
    }

    #[test]
    fn parse_filters_and_overrides() {
        let cli = Cli::try_parse_from([
            "ctxrank",
            "run",
            "--config",
            "c.json",
            "--policies",
            "aoamc,ea",
            "--macros",
            "7",
            "--threads",
            "2",
        ])
        .unwrap();
        let Command::Run(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.policies.unwrap(), vec!["aoamc", "ea"]);
        assert_eq!(a.macros, Some(7));
        assert_eq!(a.threads, Some(2));
    }
}
