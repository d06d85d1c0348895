//! C ABI over `dftmc`.
//!
//! Trees and models are opaque handles owned by the caller and released with
//! the matching `*_free` function. Every function returns a [`DftmcStatus`];
//! on failure a description is available from [`dftmc_last_error`] until the
//! next call on the same thread. Strings are UTF-8 and NUL-terminated;
//! strings returned by the library are released with [`dftmc_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dftmc::approx::{approx_mttf, approx_unreliability, ApproxError, ApproxOptions};
use dftmc::dft::{Dft, Valuation};
use dftmc::io::galileo;
use dftmc::measures::{Analyzer, Measure, MeasureError, MeasureParams};
use dftmc::rewrite::rewrite;
use dftmc::scenario::{parse_scenario, synthesize};
use dftmc::statespace::{build_ctmc, BuildOptions, Ctmc, StateSpaceError};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DftmcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Tree text or scenario document could not be parsed or synthesized.
    Parse = 3,
    /// The tree violates a well-formedness rule.
    InvalidTree = 4,
    /// Unknown measure or parameter, or a parameter value out of range.
    InvalidArgument = 5,
    /// The state space exceeds the configured limit.
    StateLimit = 6,
    /// The measure is undefined for this model (e.g. infinite MTTF).
    Undefined = 7,
    /// A numerical method failed.
    Numerical = 8,
    /// The approximation hit its state cap; the bounds are still sound.
    Imprecise = 9,
    /// Internal error; the library caught a panic.
    Internal = 10,
}

/// A parsed fault tree.
pub struct DftmcTree {
    dft: Dft,
}

/// The labelled CTMC of a tree.
pub struct DftmcModel {
    ctmc: Ctmc,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(DftmcStatus, String);

impl Failure {
    fn new(status: DftmcStatus, e: impl ToString) -> Self {
        Failure(status, e.to_string())
    }
}

impl From<StateSpaceError> for Failure {
    fn from(e: StateSpaceError) -> Self {
        let s = match e {
            StateSpaceError::StateSpaceLimitExceeded { .. } => DftmcStatus::StateLimit,
            StateSpaceError::Invalid(_) | StateSpaceError::Semantics(_) => DftmcStatus::InvalidTree,
            StateSpaceError::Rate(_) => DftmcStatus::InvalidArgument,
        };
        Failure::new(s, e)
    }
}

impl From<MeasureError> for Failure {
    fn from(e: MeasureError) -> Self {
        let s = match &e {
            MeasureError::Undefined { .. } | MeasureError::NoDegradedStates => DftmcStatus::Undefined,
            MeasureError::Engine(_) => DftmcStatus::Numerical,
            MeasureError::StateSpace(s) => return s.clone().into(),
            _ => DftmcStatus::InvalidArgument,
        };
        Failure::new(s, e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|l| *l.borrow_mut() = Some(c));
}

/// Runs `f`, recording failures and turning panics into `Internal`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DftmcStatus {
    LAST_ERROR.with(|l| *l.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DftmcStatus::Ok,
        Ok(Err(Failure(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "internal error".into());
            set_error(msg);
            DftmcStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(DftmcStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(DftmcStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(DftmcStatus::NullArgument, format!("{what} is null")))
}

fn out_ptr<T>(out: *mut T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(DftmcStatus::NullArgument, format!("{what} is null")));
    }
    Ok(())
}

fn new_tree(out: *mut *mut DftmcTree, dft: Dft) {
    unsafe { *out = Box::into_raw(Box::new(DftmcTree { dft })) };
}

unsafe fn valuation(
    dft: &Dft,
    names: *const *const c_char,
    values: *const f64,
    n: usize,
) -> Result<Valuation, Failure> {
    let mut v = Valuation::new();
    if n == 0 {
        return Ok(v);
    }
    if names.is_null() || values.is_null() {
        return Err(Failure::new(DftmcStatus::NullArgument, "parameter arrays are null"));
    }
    for i in 0..n {
        let name = text(*names.add(i), "parameter name")?;
        if !dft.parameters().contains_key(name) {
            return Err(MeasureError::MissingParameter(name.to_string()).into());
        }
        v.insert(name.to_string(), *values.add(i));
    }
    Ok(v)
}

/// Message describing the last failure on this thread, or null. Owned by
/// the library; valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn dftmc_last_error() -> *const c_char {
    LAST_ERROR.with(|l| l.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn dftmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a tree in the Galileo text format.
#[no_mangle]
pub unsafe extern "C" fn dftmc_tree_parse(
    source: *const c_char,
    out: *mut *mut DftmcTree,
) -> DftmcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let src = text(source, "source")?;
        let dft = galileo::parse(src).map_err(|e| Failure::new(DftmcStatus::Parse, e))?;
        new_tree(out, dft);
        Ok(())
    })
}

/// Synthesizes the complete tree of a TOML scenario document.
#[no_mangle]
pub unsafe extern "C" fn dftmc_scenario_synthesize(
    document: *const c_char,
    out: *mut *mut DftmcTree,
) -> DftmcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let doc = text(document, "document")?;
        let s = parse_scenario(doc).map_err(|e| Failure::new(DftmcStatus::Parse, e))?;
        let dft = synthesize(&s).map_err(|e| Failure::new(DftmcStatus::Parse, e))?;
        new_tree(out, dft);
        Ok(())
    })
}

/// Writes a simplified, measure-preserving copy of `tree` to `out`.
#[no_mangle]
pub unsafe extern "C" fn dftmc_tree_rewrite(
    tree: *const DftmcTree,
    out: *mut *mut DftmcTree,
) -> DftmcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let t = get(tree, "tree")?;
        new_tree(out, rewrite(&t.dft));
        Ok(())
    })
}

/// Galileo text of `tree`; release with [`dftmc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn dftmc_tree_serialize(
    tree: *const DftmcTree,
    out: *mut *mut c_char,
) -> DftmcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let t = get(tree, "tree")?;
        let s = CString::new(galileo::serialize(&t.dft))
            .map_err(|e| Failure::new(DftmcStatus::Internal, e))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Number of elements (basic events, gates, dependencies); 0 for null.
#[no_mangle]
pub unsafe extern "C" fn dftmc_tree_element_count(tree: *const DftmcTree) -> usize {
    tree.as_ref().map_or(0, |t| t.dft.len())
}

#[no_mangle]
pub unsafe extern "C" fn dftmc_tree_free(tree: *mut DftmcTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

#[no_mangle]
pub unsafe extern "C" fn dftmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the CTMC of `tree` with `n_params` parameter overrides
/// (`param_names[i] = param_values[i]`). `max_states` of 0 means the
/// default limit.
#[no_mangle]
pub unsafe extern "C" fn dftmc_model_build(
    tree: *const DftmcTree,
    param_names: *const *const c_char,
    param_values: *const f64,
    n_params: usize,
    max_states: usize,
    out: *mut *mut DftmcModel,
) -> DftmcStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let t = get(tree, "tree")?;
        let v = valuation(&t.dft, param_names, param_values, n_params)?;
        let mut opts = BuildOptions::default();
        if max_states > 0 {
            opts.max_states = max_states;
        }
        let ctmc = build_ctmc(&t.dft, &v, &opts)?;
        *out = Box::into_raw(Box::new(DftmcModel { ctmc }));
        Ok(())
    })
}

/// Number of CTMC states; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn dftmc_model_state_count(model: *const DftmcModel) -> usize {
    model.as_ref().map_or(0, |m| m.ctmc.len())
}

/// Number of CTMC transitions; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn dftmc_model_transition_count(model: *const DftmcModel) -> usize {
    model.as_ref().map_or(0, |m| m.ctmc.chain.transitions())
}

/// Evaluates a measure by name (`unreliability`, `mttf`, `ffa`, ...) from
/// the initial state. `t` is the horizon of time-bounded measures,
/// `lifetime` the AFH lifetime and `drivecycle` the FLOD/SILFO cycle.
#[no_mangle]
pub unsafe extern "C" fn dftmc_model_measure(
    model: *const DftmcModel,
    measure: *const c_char,
    t: f64,
    lifetime: f64,
    drivecycle: f64,
    value: *mut f64,
) -> DftmcStatus {
    guard(|| {
        out_ptr(value, "value")?;
        let m = get(model, "model")?;
        let name = text(measure, "measure")?;
        let which: Measure = name.parse()?;
        let p = MeasureParams { t, lifetime, drivecycle };
        let r = Analyzer::new(&m.ctmc).compute(which, m.ctmc.initial, &p)?;
        *value = r.value;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dftmc_model_free(model: *mut DftmcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Bounds `unreliability` (at horizon `t`) or `mttf` by partial
/// exploration until `upper - lower <= rel_err * lower`. `max_states` of 0
/// means the default cap. On `DFTMC_STATUS_IMPRECISE` the bounds are written
/// and still sound.
#[no_mangle]
pub unsafe extern "C" fn dftmc_approximate(
    tree: *const DftmcTree,
    measure: *const c_char,
    t: f64,
    rel_err: f64,
    max_states: usize,
    lower: *mut f64,
    upper: *mut f64,
) -> DftmcStatus {
    guard(|| {
        out_ptr(lower, "lower")?;
        out_ptr(upper, "upper")?;
        let tr = get(tree, "tree")?;
        let name = text(measure, "measure")?;
        let mut opts = ApproxOptions {
            rel_err,
            ..ApproxOptions::default()
        };
        if max_states > 0 {
            opts.max_states = max_states;
        }
        let v = Valuation::new();
        let result = match name.parse::<Measure>()? {
            Measure::Unreliability => approx_unreliability(&tr.dft, &v, t, &opts),
            Measure::Mttf => approx_mttf(&tr.dft, &v, &opts),
            other => {
                return Err(Failure::new(
                    DftmcStatus::InvalidArgument,
                    format!("{other} cannot be approximated; use unreliability or mttf"),
                ))
            }
        };
        let (outcome, imprecise) = match result {
            Ok(o) => (o, false),
            Err(ApproxError::CapReachedWithoutPrecision(o)) => (*o, true),
            Err(e @ ApproxError::Engine(_)) => return Err(Failure::new(DftmcStatus::Numerical, e)),
            Err(e @ ApproxError::Invalid(_)) => return Err(Failure::new(DftmcStatus::InvalidTree, e)),
            Err(e) => return Err(Failure::new(DftmcStatus::InvalidArgument, e)),
        };
        *lower = outcome.interval.lower;
        *upper = outcome.interval.upper;
        if imprecise {
            return Err(Failure::new(
                DftmcStatus::Imprecise,
                "state cap reached before the requested precision",
            ));
        }
        Ok(())
    })
}
