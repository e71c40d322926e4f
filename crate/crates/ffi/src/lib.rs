//! C interface to weylflow.
//!
//! Every function returns a `WfStatus`. On failure the message is kept per
//! thread and can be copied out with `wf_last_error_message`. Objects are
//! opaque handles released with their matching `_free` function; passing
//! NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use weylflow::continuum::{local_index, predicted_flow, QuadraticWeylField, Root};
use weylflow::flow::{spectral_flow_crossings, spectral_flow_exp_winding};
use weylflow::halfline::{
    basic_loop_family, bound_state, discretize, DiracParams, GridRule, HalfLineGrid,
};
use weylflow::loops::{LoopShape, LoopSpec};
use weylflow::numerics::{eigh_window, HermitianMatrix, C64};
use weylflow::runner::{run_config, Config, RunOptions, VerificationReport};
use weylflow::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// Eigensolver, winding or refinement failure.
    Numerical = 3,
    /// Spectral window or level outside the gap.
    NotFredholm = 4,
    Config = 5,
    Io = 6,
    /// Output buffer too small; the required size was reported.
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// Spectral flow algorithm selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfAlgorithm {
    Crossings = 0,
    ExpWinding = 1,
}

/// Discretized half-line operator.
pub struct WfHalfLine {
    params: DiracParams,
    matrix: HermitianMatrix,
}

/// Quadratic continuum field with two roots.
pub struct WfContinuumField {
    field: QuadraticWeylField,
}

/// Verification report of a config run.
pub struct WfReport {
    report: VerificationReport,
    lines: Vec<String>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> WfStatus {
    match e {
        Error::InvalidInput(_)
        | Error::NotHermitian { .. }
        | Error::ModelRejected(_)
        | Error::Gapless(_) => WfStatus::InvalidInput,
        Error::WindowViolated { .. } | Error::NonFredholm { .. } => WfStatus::NotFredholm,
        Error::Config(_) | Error::Json(_) => WfStatus::Config,
        Error::Io(_) => WfStatus::Io,
        _ => WfStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (WfStatus, String)>) -> WfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WfStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            WfStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (WfStatus, String)>;
}

impl<T> OrStatus<T> for weylflow::Result<T> {
    fn or_status(self) -> Result<T, (WfStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (WfStatus, String) {
    (WfStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (WfStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg(p: *const c_char, what: &str) -> Result<String, (WfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| (WfStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

/// Copies `s` with a terminating NUL. `needed` receives the full size.
unsafe fn copy_out(
    s: &str,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> Result<(), (WfStatus, String)> {
    let n = s.len() + 1;
    if let Some(r) = needed.as_mut() {
        *r = n;
    }
    if buf.is_null() || cap < n {
        return Err((WfStatus::BufferTooSmall, format!("buffer needs {n} bytes")));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf`. `needed`, if
/// not NULL, receives the size including the terminator.
///
/// # Safety
/// `buf` must point to `cap` writable bytes or be NULL.
#[no_mangle]
pub unsafe extern "C" fn wf_last_error_message(
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> WfStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_out(&msg, buf, cap, needed) {
        Ok(()) => WfStatus::Ok,
        Err((s, _)) => s,
    }
}

/// Closed-form bound state of the half-line operator. `has_state` is set to
/// 0 when there is none, in which case `energy` and `decay` are untouched.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_bound_state(
    m: f64,
    theta: f64,
    gamma: f64,
    has_state: *mut i32,
    energy: *mut f64,
    decay: *mut f64,
) -> WfStatus {
    guard(|| {
        let has = out_ref(has_state, "has_state")?;
        let e = out_ref(energy, "energy")?;
        let d = out_ref(decay, "decay")?;
        let p = DiracParams::new(m, theta, gamma).or_status()?;
        match bound_state(&p).or_status()? {
            Some(b) => {
                *has = 1;
                *e = b.energy;
                *d = b.decay;
            }
            None => *has = 0,
        }
        Ok(())
    })
}

/// Discretizes the half-line operator on `n_sites` sites of width `spacing`.
///
/// # Safety
/// `out` must be valid; on success it owns a handle for `wf_halfline_free`.
#[no_mangle]
pub unsafe extern "C" fn wf_halfline_create(
    m: f64,
    theta: f64,
    gamma: f64,
    n_sites: usize,
    spacing: f64,
    out: *mut *mut WfHalfLine,
) -> WfStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let params = DiracParams::new(m, theta, gamma).or_status()?;
        let grid = HalfLineGrid::new(n_sites, spacing).or_status()?;
        let matrix = discretize(&params, &grid, None, None).or_status()?;
        *slot = Box::into_raw(Box::new(WfHalfLine { params, matrix }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from `wf_halfline_create` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wf_halfline_free(h: *mut WfHalfLine) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Matrix dimension, twice the number of sites.
///
/// # Safety
/// `h` must be a live handle, `dim` valid.
#[no_mangle]
pub unsafe extern "C" fn wf_halfline_dim(h: *const WfHalfLine, dim: *mut usize) -> WfStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        *out_ref(dim, "dim")? = h.matrix.dim();
        Ok(())
    })
}

/// Relative angle `theta - gamma` reduced to `(-pi, pi]`.
///
/// # Safety
/// `h` must be a live handle, `phi` valid.
#[no_mangle]
pub unsafe extern "C" fn wf_halfline_phi(h: *const WfHalfLine, phi: *mut f64) -> WfStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        *out_ref(phi, "phi")? = h.params.phi();
        Ok(())
    })
}

/// Eigenvalues in `(lo, hi)`, ascending. `count` receives the number found;
/// if it exceeds `cap` nothing is written and `BufferTooSmall` is returned.
///
/// # Safety
/// `values` must point to `cap` doubles or be NULL with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn wf_halfline_eigenvalues(
    h: *const WfHalfLine,
    lo: f64,
    hi: f64,
    values: *mut f64,
    cap: usize,
    count: *mut usize,
) -> WfStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        let count = out_ref(count, "count")?;
        let sys = eigh_window(&h.matrix, lo, hi).or_status()?;
        *count = sys.len();
        if sys.len() > cap || (values.is_null() && !sys.is_empty()) {
            return Err((
                WfStatus::BufferTooSmall,
                format!("{} eigenvalues found", sys.len()),
            ));
        }
        if !sys.is_empty() {
            std::slice::from_raw_parts_mut(values, sys.len()).copy_from_slice(&sys.values);
        }
        Ok(())
    })
}

/// Spectral flow around `theta` in `[0, 2 pi)` at fixed mass and boundary
/// angle, sampled at `samples` points on a fixed grid. `algorithm` is a
/// `WfAlgorithm` value.
///
/// # Safety
/// `flow` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wf_basic_loop_flow(
    m: f64,
    gamma: f64,
    n_sites: usize,
    spacing: f64,
    samples: usize,
    window_fraction: f64,
    algorithm: i32,
    flow: *mut i64,
) -> WfStatus {
    guard(|| {
        let flow = out_ref(flow, "flow")?;
        if !(algorithm == WfAlgorithm::Crossings as i32
            || algorithm == WfAlgorithm::ExpWinding as i32)
        {
            return Err((
                WfStatus::InvalidInput,
                format!("unknown algorithm {algorithm}"),
            ));
        }
        if !(window_fraction > 0.0 && window_fraction < 1.0) {
            return Err((
                WfStatus::InvalidInput,
                "window_fraction must lie in (0, 1)".into(),
            ));
        }
        let fam = basic_loop_family(
            m,
            gamma,
            GridRule::Fixed { n_sites, spacing },
            window_fraction,
        );
        let path = fam
            .closed_path(0.0, std::f64::consts::TAU, samples, 4 * samples)
            .or_status()?;
        let r = match algorithm {
            a if a == WfAlgorithm::Crossings as i32 => spectral_flow_crossings(&path),
            a if a == WfAlgorithm::ExpWinding as i32 => spectral_flow_exp_winding(&path),
            _ => unreachable!(),
        }
        .or_status()?;
        *flow = r.flow;
        Ok(())
    })
}

/// Quadratic field with roots `w_plus` and `w_minus`.
///
/// # Safety
/// `out` must be valid; on success it owns a handle for
/// `wf_continuum_field_free`.
#[no_mangle]
pub unsafe extern "C" fn wf_continuum_field_create(
    w_plus_x: f64,
    w_plus_y: f64,
    w_minus_x: f64,
    w_minus_y: f64,
    out: *mut *mut WfContinuumField,
) -> WfStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let field =
            QuadraticWeylField::new(C64::new(w_plus_x, w_plus_y), C64::new(w_minus_x, w_minus_y))
                .or_status()?;
        *slot = Box::into_raw(Box::new(WfContinuumField { field }));
        Ok(())
    })
}

/// # Safety
/// `f` must come from `wf_continuum_field_create` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wf_continuum_field_free(f: *mut WfContinuumField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Value of `g` at `(x, y)`.
///
/// # Safety
/// `f` must be a live handle, outputs valid.
#[no_mangle]
pub unsafe extern "C" fn wf_continuum_field_eval(
    f: *const WfContinuumField,
    x: f64,
    y: f64,
    re: *mut f64,
    im: *mut f64,
) -> WfStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("handle"))?;
        let g = f.field.g(C64::new(x, y));
        *out_ref(re, "re")? = g.re;
        *out_ref(im, "im")? = g.im;
        Ok(())
    })
}

/// Local indices of `w_plus` and `w_minus`.
///
/// # Safety
/// `f` must be a live handle, outputs valid.
#[no_mangle]
pub unsafe extern "C" fn wf_continuum_local_indices(
    f: *const WfContinuumField,
    plus: *mut i64,
    minus: *mut i64,
) -> WfStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("handle"))?;
        *out_ref(plus, "plus")? = local_index(&f.field, Root::Plus).or_status()?;
        *out_ref(minus, "minus")? = local_index(&f.field, Root::Minus).or_status()?;
        Ok(())
    })
}

/// Flow predicted for an anticlockwise circle: minus the winding of `g`.
///
/// # Safety
/// `f` must be a live handle, `flow` valid.
#[no_mangle]
pub unsafe extern "C" fn wf_continuum_circle_flow(
    f: *const WfContinuumField,
    center_x: f64,
    center_y: f64,
    radius: f64,
    samples: usize,
    flow: *mut i64,
) -> WfStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("handle"))?;
        let flow = out_ref(flow, "flow")?;
        let spec = LoopSpec::new(
            "circle",
            LoopShape::Circle {
                center: [center_x, center_y],
                radius,
            },
            samples,
        );
        spec.validate(None).or_status()?;
        *flow = predicted_flow(&f.field, &spec).or_status()?;
        Ok(())
    })
}

/// Runs a scenario config. `out_dir` may be NULL to use the configured
/// location; `jobs` 0 uses the default pool.
///
/// # Safety
/// `config_path` must be a NUL-terminated string, `out` valid. On success
/// `out` owns a handle for `wf_report_free`.
#[no_mangle]
pub unsafe extern "C" fn wf_run_config(
    config_path: *const c_char,
    out_dir: *const c_char,
    jobs: usize,
    out: *mut *mut WfReport,
) -> WfStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let path = str_arg(config_path, "config_path")?;
        let dir = if out_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(out_dir, "out_dir")?))
        };
        let config = Config::load(path.as_ref()).or_status()?;
        let opts = RunOptions {
            out: dir,
            jobs: (jobs > 0).then_some(jobs),
            filter: None,
        };
        let report = run_config(&config, &opts).or_status()?;
        let lines = report.checks.iter().map(|c| c.line()).collect();
        *slot = Box::into_raw(Box::new(WfReport { report, lines }));
        Ok(())
    })
}

/// # Safety
/// `r` must come from `wf_run_config` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wf_report_free(r: *mut WfReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Check counts of a report.
///
/// # Safety
/// `r` must be a live handle, outputs valid.
#[no_mangle]
pub unsafe extern "C" fn wf_report_counts(
    r: *const WfReport,
    passed: *mut usize,
    failed: *mut usize,
) -> WfStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("handle"))?;
        *out_ref(passed, "passed")? = r.report.passed;
        *out_ref(failed, "failed")? = r.report.failed;
        Ok(())
    })
}

/// One-line summary of check `index`, as printed by the command line tool.
///
/// # Safety
/// `r` must be a live handle; `buf` must point to `cap` bytes or be NULL.
#[no_mangle]
pub unsafe extern "C" fn wf_report_check_line(
    r: *const WfReport,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> WfStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("handle"))?;
        let line = r.lines.get(index).ok_or_else(|| {
            (
                WfStatus::InvalidInput,
                format!("check {index} out of range ({})", r.lines.len()),
            )
        })?;
        copy_out(line, buf, cap, needed)
    })
}
