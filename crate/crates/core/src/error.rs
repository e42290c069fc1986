use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("context index {0} out of range (q = {1})")]
    ContextOutOfRange(usize, usize),
    #[error("design index {0} out of range (k = {1})")]
    DesignOutOfRange(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-positive sampling std {value} at design {design}, context {context}")]
    NonPositiveStd {
        design: usize,
        context: usize,
        value: f64,
    },
    #[error("top-m set of context {0} is not unique")]
    NonUniqueTopM(usize),
    #[error("invalid m = {m} for context {context} (k = {k})")]
    InvalidM { context: usize, m: usize, k: usize },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("non-finite sample value {0}")]
    NonFiniteSample(f64),
    #[error("posterior of design {0}, context {1} is undefined")]
    UndefinedPosterior(usize, usize),
    #[error("need at least {needed} samples, have {have}")]
    InsufficientSamples { needed: u64, have: u64 },
    #[error("non-positive variance {0}")]
    NonPositiveVariance(f64),
    #[error("invalid ratio vector: {0}")]
    InvalidRatio(String),
    #[error("zero rate in context {0}")]
    ZeroRate(usize),
    #[error("no KKT-verified solution found")]
    NoKktSolution,
    #[error("enumeration too large: {slots} active-pair slots exceed cap {cap}")]
    EnumerationCap { slots: usize, cap: usize },
    #[error("root not bracketed on [{0}, {1}]")]
    NotBracketed(f64, f64),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("adapter error: {0}")]
    Adapter(String),
    #[error("adapter output parse error: {0:?}")]
    AdapterParse(String),
    #[error("adapter timed out after {0} ms")]
    AdapterTimeout(u64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
