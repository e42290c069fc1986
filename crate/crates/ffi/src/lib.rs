//! C ABI over `ctxrank`.
//!
//! Every function returns a [`CtxStatus`]. On failure the message is kept per
//! thread and can be read with [`ctxrank_last_error_message`]. Strings handed
//! out by this library must be released with [`ctxrank_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ctxrank::harness::{run_experiment, ExperimentConfig};
use ctxrank::ratios::{solve_balance_enumerate, BalanceOptions};
use ctxrank::selection::top_m_indices;
use ctxrank::{
    Error, Grid, Instance, PairIndex, Policy, PolicyId, PolicyState, PosteriorGrid, PriorSpec,
    VarianceMode,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Index, dimension or value out of range.
    InvalidArgument = 3,
    Config = 4,
    /// Posterior not ready, non-finite data or a numerical failure.
    Numeric = 5,
    NoKktSolution = 6,
    Adapter = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque sequential session: one policy driving one posterior.
pub struct CtxSession {
    state: PolicyState,
    policy: Policy,
    pending: Option<PairIndex>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CtxStatus {
    match e {
        Error::ContextOutOfRange(..)
        | Error::DesignOutOfRange(..)
        | Error::DimensionMismatch(_)
        | Error::NonPositiveStd { .. }
        | Error::NonUniqueTopM(_)
        | Error::InvalidM { .. }
        | Error::NonPositiveVariance(_)
        | Error::InvalidRatio(_) => CtxStatus::InvalidArgument,
        Error::Schema(_) | Error::Config(_) | Error::Json(_) | Error::EnumerationCap { .. } => {
            CtxStatus::Config
        }
        Error::NoKktSolution => CtxStatus::NoKktSolution,
        Error::Adapter(_) | Error::AdapterParse(_) | Error::AdapterTimeout(_) => CtxStatus::Adapter,
        Error::Io(_) => CtxStatus::Io,
        _ => CtxStatus::Numeric,
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (CtxStatus, String)>) -> CtxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtxStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside ctxrank".into());
            CtxStatus::Panic
        }
    }
}

trait Lift<T> {
    fn lift(self) -> Result<T, (CtxStatus, String)>;
}

impl<T> Lift<T> for ctxrank::Result<T> {
    fn lift(self) -> Result<T, (CtxStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (CtxStatus, String) {
    (CtxStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CtxStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (CtxStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), (CtxStatus, String)> {
    let c = CString::new(s).map_err(|e| (CtxStatus::Numeric, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ctxrank_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ctxrank_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Open a session with `k` designs and `q` contexts.
///
/// `m` holds `q` entries. `policy` is one of `aoamc`, `ea`, `eocbam`, `eaoam`,
/// `boldmc`, `mlingape`. `sampling_var` is a row-major `k*q` array or null for
/// all ones; with `known_variance` set it is used as is, otherwise it is only
/// the starting value until a cell holds `plugin_min` samples.
/// `context_values` (length `q`) may be null except for `mlingape`.
///
/// # Safety
/// Array arguments must point to at least the stated number of elements and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_session_new(
    k: usize,
    q: usize,
    m: *const usize,
    policy: *const c_char,
    sampling_var: *const f64,
    known_variance: bool,
    plugin_min: u64,
    context_values: *const f64,
    out: *mut *mut CtxSession,
) -> CtxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if m.is_null() {
            return Err(null("m"));
        }
        if k == 0 || q == 0 {
            return Err((
                CtxStatus::InvalidArgument,
                "k and q must be positive".into(),
            ));
        }
        let id: PolicyId = read_str(policy, "policy")?.parse().lift()?;
        let m = std::slice::from_raw_parts(m, q).to_vec();
        let var = if sampling_var.is_null() {
            Grid::filled(k, q, 1.0)
        } else {
            let v = std::slice::from_raw_parts(sampling_var, k * q);
            Grid::from_fn(k, q, |i, l| v[i * q + l])
        };
        if let Some(&v) = var.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err((CtxStatus::InvalidArgument, format!("sampling variance {v}")));
        }
        let mode = if known_variance {
            VarianceMode::Known
        } else {
            VarianceMode::Plugin
        };
        let grid =
            PosteriorGrid::with_sampling_var(&PriorSpec::Uninformative, var, mode, plugin_min)
                .lift()?;
        let x = (!context_values.is_null())
            .then(|| std::slice::from_raw_parts(context_values, q).to_vec());
        let state = PolicyState::new(grid, m).lift()?.with_context_values(x);
        let policy = Policy::from_id(id);
        policy.validate().lift()?;
        *out = Box::into_raw(Box::new(CtxSession {
            state,
            policy,
            pending: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`ctxrank_session_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_session_free(s: *mut CtxSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Feed one observation of design `design` in context `context`.
///
/// # Safety
/// `s` must be a live session.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_session_observe(
    s: *mut CtxSession,
    design: usize,
    context: usize,
    value: f64,
) -> CtxStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("session"))?;
        let p = PairIndex::new(design, context);
        s.state.observe(p, value).lift()?;
        // an observation of the suggested pair completes a sequential step
        if s.pending == Some(p) {
            s.pending = None;
            s.state.step += 1;
        }
        Ok(())
    })
}

/// Ask the policy for the next pair to simulate. Every cell needs enough
/// samples for its posterior to be defined first.
///
/// # Safety
/// `s` must be a live session; `design` and `context` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_session_next(
    s: *mut CtxSession,
    design: *mut usize,
    context: *mut usize,
) -> CtxStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("session"))?;
        if design.is_null() || context.is_null() {
            return Err(null("output"));
        }
        let p = ctxrank::policies::next_pair(&mut s.state, &s.policy).lift()?;
        s.pending = Some(p);
        *design = p.design;
        *context = p.context;
        Ok(())
    })
}

/// Current top-m designs of `context` by posterior mean, best first.
/// `out` must hold `m[context]` entries.
///
/// # Safety
/// `s` must be a live session and `out` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_session_select(
    s: *const CtxSession,
    context: usize,
    out: *mut usize,
    len: usize,
) -> CtxStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("session"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = s.state.grid();
        if context >= grid.q() {
            return Err((
                CtxStatus::InvalidArgument,
                format!("context {context} out of range"),
            ));
        }
        let m = s.state.m[context];
        if len < m {
            return Err((
                CtxStatus::InvalidArgument,
                format!("buffer holds {len}, need {m}"),
            ));
        }
        let col: Vec<f64> = (0..grid.k()).map(|i| grid.mean[(i, context)]).collect();
        if let Some(i) = col.iter().position(|v| v.is_nan()) {
            return Err((
                CtxStatus::Numeric,
                Error::UndefinedPosterior(i, context).to_string(),
            ));
        }
        for (n, d) in top_m_indices(&col, m).into_iter().enumerate() {
            *out.add(n) = d;
        }
        Ok(())
    })
}

/// Number of observations recorded for one pair.
///
/// # Safety
/// `s` must be a live session and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_session_count(
    s: *const CtxSession,
    design: usize,
    context: usize,
    out: *mut u64,
) -> CtxStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("session"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = PairIndex::new(design, context);
        s.state.grid().check_pair(p).lift()?;
        *out = s.state.grid().count(p);
        Ok(())
    })
}

/// Solve for the optimal sampling ratios of an instance given as JSON.
/// `*out_json` receives the full solution report on success and also on
/// `NO_KKT_SOLUTION`, where it lists the rejected candidates.
///
/// # Safety
/// `instance_json` must be a NUL-terminated string and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_solve_ratios(
    instance_json: *const c_char,
    out_json: *mut *mut c_char,
) -> CtxStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let inst = Instance::from_json(read_str(instance_json, "instance_json")?).lift()?;
        let report = solve_balance_enumerate(&inst, &BalanceOptions::default()).lift()?;
        let s = serde_json::to_string(&report).map_err(|e| (CtxStatus::Numeric, e.to_string()))?;
        write_string(out_json, s)?;
        if report.optimal_index.is_none() {
            return Err((CtxStatus::NoKktSolution, Error::NoKktSolution.to_string()));
        }
        Ok(())
    })
}

/// Run a Monte Carlo experiment described by a JSON config. `threads` of 0
/// uses the default pool size. Relative file paths resolve against the
/// working directory.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn ctxrank_run_experiment(
    config_json: *const c_char,
    threads: usize,
    out_json: *mut *mut c_char,
) -> CtxStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let mut cfg = ExperimentConfig::from_json(read_str(config_json, "config_json")?).lift()?;
        cfg.source = cfg.source.resolve(None).lift()?;
        let report = run_experiment(&cfg, (threads > 0).then_some(threads)).lift()?;
        write_string(out_json, report.to_json().lift()?)
    })
}
