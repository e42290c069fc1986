//! Child-process simulator speaking a line protocol:
//! request `design context seed\n`, response one decimal float per line.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::Sampler;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::instance::{Instance, PairIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    pub k: usize,
    pub q: usize,
    pub m: Vec<usize>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    /// Optional JSON `[[..]]` of true means, design-by-context, enabling PCS.
    #[serde(default)]
    pub reference_means: Option<PathBuf>,
    /// Sampling variance assumed before plug-in estimates exist.
    #[serde(default = "default_var")]
    pub initial_variance: f64,
}

fn default_timeout() -> u64 {
    10_000
}
fn default_var() -> f64 {
    1.0
}

impl AdapterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.program.is_empty() {
            return Err(Error::Config("adapter program is empty".into()));
        }
        if self.m.len() != self.q || self.k < 2 {
            return Err(Error::Config("adapter dims inconsistent".into()));
        }
        if self.m.iter().any(|&m| m == 0 || m >= self.k) {
            return Err(Error::Config("adapter m out of range".into()));
        }
        if !(self.initial_variance > 0.0) {
            return Err(Error::Config("initial_variance must be positive".into()));
        }
        Ok(())
    }

    /// Truth for PCS, when a reference means file is configured.
    pub fn reference_instance(&self) -> Result<Option<Instance>> {
        let Some(path) = &self.reference_means else {
            return Ok(None);
        };
        let means: Grid<f64> = serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Schema(e.to_string()))?;
        if means.k() != self.k || means.q() != self.q {
            return Err(Error::DimensionMismatch(format!(
                "reference means {}x{}, adapter {}x{}",
                means.k(),
                means.q(),
                self.k,
                self.q
            )));
        }
        let inst = Instance {
            k: self.k,
            q: self.q,
            m: self.m.clone(),
            stds: Grid::filled(self.k, self.q, self.initial_variance.sqrt()),
            means,
            context_values: None,
            labels: None,
        };
        inst.validate()?;
        Ok(Some(inst))
    }
}

pub struct AdapterSampler {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl AdapterSampler {
    pub fn spawn(spec: &AdapterSpec) -> Result<Self> {
        spec.validate()?;
        let mut child = Command::new(&spec.program)
            .args(&spec.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Adapter(format!("spawn {:?}: {e}", spec.program)))?;
        let stdout = child.stdout.take().expect("piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(AdapterSampler {
            child,
            stdin,
            lines: rx,
            timeout: Duration::from_millis(spec.timeout_ms),
        })
    }

    pub fn request(&mut self, p: PairIndex, seed: u64) -> Result<f64> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Adapter("stdin closed".into()))?;
        writeln!(stdin, "{} {} {}", p.design, p.context, seed)
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Adapter(format!("write: {e}")))?;
        let line = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(Error::Adapter(format!("read: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::AdapterTimeout(self.timeout.as_millis() as u64))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::Adapter("process exited".into()))
            }
        };
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| Error::AdapterParse(line.clone()))?;
        if !v.is_finite() {
            return Err(Error::AdapterParse(line));
        }
        Ok(v)
    }
}

impl Sampler for AdapterSampler {
    fn sample(&mut self, p: PairIndex, rng: &mut dyn RngCore) -> Result<f64> {
        let seed = rng.next_u64();
        self.request(p, seed)
    }
}

impl Drop for AdapterSampler {
    fn drop(&mut self) {
        drop(self.stdin.take());
        match self.child.wait_timeout(Duration::from_millis(500)) {
            Ok(Some(_)) => {}
            _ => {
                let _ = self.child.kill();
                let _ = self.child.wait();
            }
        }
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn sh(script: &str) -> AdapterSpec {
        AdapterSpec {
            program: "sh".into(),
            args: vec!["-c".into(), script.into()],
            k: 2,
            q: 1,
            m: vec![1],
            timeout_ms: 5_000,
            reference_means: None,
            initial_variance: 1.0,
        }
    }

    #[test]
    fn constant_stub() {
        let mut a = AdapterSampler::spawn(&sh("while read d c s; do echo 2.5; done")).unwrap();
        assert_eq!(a.request(PairIndex::new(1, 0), 7).unwrap(), 2.5);
        assert_eq!(a.request(PairIndex::new(0, 0), 8).unwrap(), 2.5);
    }

    #[test]
    fn malformed_output() {
        let mut a = AdapterSampler::spawn(&sh("while read d c s; do echo oops; done")).unwrap();
        assert!(
            matches!(a.request(PairIndex::new(0, 0), 1), Err(Error::AdapterParse(s)) if s == "oops")
        );
    }

    #[test]
    fn exited_process() {
        let mut a = AdapterSampler::spawn(&sh("exit 0")).unwrap();
        assert!(a.request(PairIndex::new(0, 0), 1).is_err());
    }

    #[test]
    fn timeout() {
        let mut spec = sh("sleep 5");
        spec.timeout_ms = 100;
        let mut a = AdapterSampler::spawn(&spec).unwrap();
        assert!(matches!(
            a.request(PairIndex::new(0, 0), 1),
            Err(Error::AdapterTimeout(100))
        ));
    }
}
