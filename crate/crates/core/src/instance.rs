//! Ground-truth problem instances.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::selection::top_m_indices;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairIndex {
    pub design: usize,
    pub context: usize,
}

impl PairIndex {
    pub fn new(design: usize, context: usize) -> Self {
        PairIndex { design, context }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub designs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contexts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub k: usize,
    pub q: usize,
    pub m: Vec<usize>,
    pub means: Grid<f64>,
    pub stds: Grid<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

impl Instance {
    /// Build and validate. `means` and `stds` are indexed `[design][context]`.
    pub fn new(m: Vec<usize>, means: Vec<Vec<f64>>, stds: Vec<Vec<f64>>) -> Result<Self> {
        let means = Grid::from_rows(means)
            .ok_or_else(|| Error::DimensionMismatch("ragged means".into()))?;
        let stds =
            Grid::from_rows(stds).ok_or_else(|| Error::DimensionMismatch("ragged stds".into()))?;
        let inst = Instance {
            k: means.k(),
            q: means.q(),
            m,
            means,
            stds,
            context_values: None,
            labels: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Same m in every context.
    pub fn uniform_m(m: usize, means: Vec<Vec<f64>>, stds: Vec<Vec<f64>>) -> Result<Self> {
        let q = means.first().map(|r| r.len()).unwrap_or(0);
        Self::new(vec![m; q], means, stds)
    }

    pub fn with_context_values(mut self, x: Vec<f64>) -> Result<Self> {
        if x.len() != self.q {
            return Err(Error::DimensionMismatch(format!(
                "context_values has {} entries, q = {}",
                x.len(),
                self.q
            )));
        }
        self.context_values = Some(x);
        Ok(self)
    }

    /// Checks every invariant. Zero stds pass with a warning (degenerate but samplable);
    /// negative or NaN stds are errors.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.q == 0 {
            return Err(Error::DimensionMismatch("k and q must be positive".into()));
        }
        if self.means.k() != self.k || self.means.q() != self.q {
            return Err(Error::DimensionMismatch(format!(
                "means is {}x{}, declared {}x{}",
                self.means.k(),
                self.means.q(),
                self.k,
                self.q
            )));
        }
        if self.stds.k() != self.k || self.stds.q() != self.q {
            return Err(Error::DimensionMismatch(format!(
                "stds is {}x{}, declared {}x{}",
                self.stds.k(),
                self.stds.q(),
                self.k,
                self.q
            )));
        }
        if self.m.len() != self.q {
            return Err(Error::DimensionMismatch(format!(
                "m has {} entries, q = {}",
                self.m.len(),
                self.q
            )));
        }
        if let Some(x) = &self.context_values {
            if x.len() != self.q {
                return Err(Error::DimensionMismatch(format!(
                    "context_values has {} entries, q = {}",
                    x.len(),
                    self.q
                )));
            }
        }
        for (l, &m) in self.m.iter().enumerate() {
            if m == 0 || m >= self.k {
                return Err(Error::InvalidM {
                    context: l,
                    m,
                    k: self.k,
                });
            }
        }
        for i in 0..self.k {
            for l in 0..self.q {
                let mu = self.means[(i, l)];
                if !mu.is_finite() {
                    return Err(Error::Schema(format!("non-finite mean at ({i}, {l})")));
                }
                let s = self.stds[(i, l)];
                if s.is_nan() || s < 0.0 || s.is_infinite() {
                    return Err(Error::NonPositiveStd {
                        design: i,
                        context: l,
                        value: s,
                    });
                }
                if s == 0.0 {
                    log::warn!(
                        "zero sampling std at design {i}, context {l}; samples are deterministic"
                    );
                }
            }
        }
        for l in 0..self.q {
            if !self.top_m_unique(l) {
                return Err(Error::NonUniqueTopM(l));
            }
        }
        Ok(())
    }

    fn top_m_unique(&self, l: usize) -> bool {
        let mut col = self.means.column(l);
        col.sort_by(|a, b| b.total_cmp(a));
        col[self.m[l] - 1] != col[self.m[l]]
    }

    pub fn true_top_m(&self, context: usize) -> Result<Vec<usize>> {
        if context >= self.q {
            return Err(Error::ContextOutOfRange(context, self.q));
        }
        let col = self.means.column(context);
        Ok(top_m_indices(&col, self.m[context]))
    }

    /// Membership mask of the true top-m set per context, `[context][design]`.
    pub fn true_top_masks(&self) -> Vec<Vec<bool>> {
        (0..self.q)
            .map(|l| {
                let mut mask = vec![false; self.k];
                for i in self.true_top_m(l).expect("in range") {
                    mask[i] = true;
                }
                mask
            })
            .collect()
    }

    pub fn variances(&self) -> Grid<f64> {
        self.stds.map(|s| s * s)
    }

    pub fn check_pair(&self, p: PairIndex) -> Result<()> {
        if p.design >= self.k {
            return Err(Error::DesignOutOfRange(p.design, self.k));
        }
        if p.context >= self.q {
            return Err(Error::ContextOutOfRange(p.context, self.q));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json(&s)
    }
}

/// Instance used throughout the ratio examples: 4 designs, 2 contexts, top-2.
pub fn remark5_instance() -> Instance {
    let means = [[6.7, 9.6], [5.9, 8.2], [3.5, 5.4], [1.9, 4.3]];
    let vars = [[3.6, 3.7], [1.1, 8.0], [4.4, 6.5], [4.7, 4.6]];
    Instance::uniform_m(
        2,
        means.iter().map(|r| r.to_vec()).collect(),
        vars.iter()
            .map(|r| r.iter().map(|v: &f64| v.sqrt()).collect())
            .collect(),
    )
    .expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col_instance(col: &[f64], m: usize) -> Instance {
        Instance::uniform_m(
            m,
            col.iter().map(|&v| vec![v]).collect(),
            col.iter().map(|_| vec![1.0]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn top_m_remark5_context() {
        let inst = col_instance(&[6.7, 5.9, 3.5, 1.9], 2);
        assert_eq!(inst.true_top_m(0).unwrap(), vec![0, 1]);
    }

    #[test]
    fn top_m_strict_ordering() {
        let inst = col_instance(&[0.0, 1e-9, -1.0], 1);
        assert_eq!(inst.true_top_m(0).unwrap(), vec![1]);
    }

    #[test]
    fn top_m_out_of_range() {
        let inst = col_instance(&[0.0, 1.0], 1);
        assert!(matches!(
            inst.true_top_m(1),
            Err(Error::ContextOutOfRange(1, 1))
        ));
    }

    #[test]
    fn rejects_duplicate_boundary() {
        let r = Instance::uniform_m(1, vec![vec![1.0], vec![1.0], vec![0.0]], vec![vec![1.0]; 3]);
        assert!(matches!(r, Err(Error::NonUniqueTopM(0))));
    }

    #[test]
    fn rejects_bad_m_and_std() {
        assert!(matches!(
            Instance::uniform_m(2, vec![vec![1.0], vec![0.0]], vec![vec![1.0]; 2]),
            Err(Error::InvalidM { .. })
        ));
        assert!(matches!(
            Instance::uniform_m(1, vec![vec![1.0], vec![0.0]], vec![vec![1.0], vec![-1.0]]),
            Err(Error::NonPositiveStd { .. })
        ));
        assert!(
            Instance::uniform_m(1, vec![vec![1.0], vec![0.0]], vec![vec![1.0], vec![0.0]]).is_ok()
        );
    }

    #[test]
    fn json_dimension_error() {
        let s = r#"{"k":4,"q":2,"m":[1,1],"means":[[1,2],[3,4],[5,6]],"stds":[[1,1],[1,1],[1,1]]}"#;
        assert!(matches!(
            Instance::from_json(s),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn json_roundtrip() {
        let inst = remark5_instance();
        let s = serde_json::to_string(&inst).unwrap();
        assert_eq!(Instance::from_json(&s).unwrap(), inst);
    }
}
