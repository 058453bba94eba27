//! C interface to the solver kit.
//!
//! Every call returns an [`MpdgStatus`]; on failure the message is kept per
//! thread and read with [`mpdg_last_error`]. Solvers are opaque handles
//! released with [`mpdg_solver_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mpdg::config::CaseConfig;
use mpdg::harness::run_case;
use mpdg::integrators::{mp_stage_solve, StageWeights};
use mpdg::pds::RateMatrix;
use mpdg::solver::Solver;
use mpdg::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpdgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Inadmissible = 3,
    Singular = 4,
    NonFinite = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Diagnostics of one step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MpdgStepInfo {
    pub step: u64,
    pub time: f64,
    pub dt: f64,
    pub alpha: f64,
    pub min_density: f64,
    pub min_pressure: f64,
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub fraction_defect: f64,
    pub restarted: bool,
}

/// A flow solver with its current state.
pub struct MpdgSolver {
    inner: Solver,
    t_final: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(err: &Error) -> MpdgStatus {
    match err {
        Error::Admissibility { .. } => MpdgStatus::Inadmissible,
        Error::Singular { .. } => MpdgStatus::Singular,
        Error::NonFinite(_) => MpdgStatus::NonFinite,
        Error::Io(_) => MpdgStatus::Io,
        _ => MpdgStatus::InvalidArgument,
    }
}

fn fail(status: MpdgStatus, msg: impl Into<String>) -> MpdgStatus {
    set_error(msg);
    status
}

/// Runs `body`, mapping errors and panics onto status codes.
fn guard(body: impl FnOnce() -> Result<(), MpdgStatus>) -> MpdgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MpdgStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(MpdgStatus::Panic, "panic inside the library"),
    }
}

fn lift<T>(r: mpdg::Result<T>) -> Result<T, MpdgStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, MpdgStatus> {
    if p.is_null() {
        return Err(fail(MpdgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(MpdgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), MpdgStatus> {
    if p.is_null() {
        Err(fail(MpdgStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mpdg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mpdg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Solves one Patankar stage with destruction weights equal to the
/// transposed production weights. `production` is row-major `m × m`;
/// `x` receives `m` values.
///
/// # Safety
/// Every pointer must be valid for the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn mpdg_stage_solve(
    m: usize,
    explicit: *const f64,
    production: *const f64,
    denominators: *const f64,
    dt: f64,
    x: *mut f64,
) -> MpdgStatus {
    guard(|| {
        for (p, name) in [(explicit, "explicit"), (production, "production"), (denominators, "denominators")] {
            non_null(p, name)?;
        }
        non_null(x, "x")?;
        if m == 0 {
            return Err(fail(MpdgStatus::InvalidArgument, "m must be positive"));
        }
        let rows: Vec<Vec<f64>> = slice::from_raw_parts(production, m * m).chunks(m).map(<[f64]>::to_vec).collect();
        let w = StageWeights::conservative(
            slice::from_raw_parts(explicit, m).to_vec(),
            RateMatrix::from_rows(&rows),
            slice::from_raw_parts(denominators, m).to_vec(),
        );
        let sol = lift(mp_stage_solve(&w, dt))?;
        slice::from_raw_parts_mut(x, m).copy_from_slice(&sol);
        Ok(())
    })
}

fn parse_config(json: &str) -> Result<CaseConfig, MpdgStatus> {
    lift(CaseConfig::from_json(json, None))
}

/// Creates a solver for a flow case from a JSON configuration with a
/// `case` key. Returns null on failure.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string; `status` may be null.
#[no_mangle]
pub unsafe extern "C" fn mpdg_solver_new(config_json: *const c_char, status: *mut MpdgStatus) -> *mut MpdgSolver {
    let mut handle = ptr::null_mut();
    let code = guard(|| {
        let cfg = parse_config(text(config_json, "config_json")?)?;
        let setup = match cfg.flow_setup() {
            Some(s) => lift(s)?,
            None => return Err(fail(MpdgStatus::InvalidArgument, format!("`{}` is not a flow case", cfg.id()))),
        };
        let t_final = setup.t_final;
        let inner = lift(Solver::new(setup.problem, setup.scheme, setup.initial))?;
        handle = Box::into_raw(Box::new(MpdgSolver { inner, t_final }));
        Ok(())
    });
    if !status.is_null() {
        *status = code;
    }
    handle
}

/// Releases a solver; null is ignored.
///
/// # Safety
/// `solver` must come from [`mpdg_solver_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mpdg_solver_free(solver: *mut MpdgSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Takes one step without passing `t_end`; `info` may be null.
///
/// # Safety
/// `solver` must be a live handle; `info` null or writable.
#[no_mangle]
pub unsafe extern "C" fn mpdg_solver_step(solver: *mut MpdgSolver, t_end: f64, info: *mut MpdgStepInfo) -> MpdgStatus {
    guard(|| {
        non_null(solver, "solver")?;
        let rec = lift((*solver).inner.advance(t_end))?;
        if !info.is_null() {
            *info = MpdgStepInfo {
                step: rec.step as u64,
                time: rec.time,
                dt: rec.dt,
                alpha: rec.alpha,
                min_density: rec.bounds.min_density,
                min_pressure: rec.bounds.min_pressure,
                min_fraction: rec.bounds.min_fraction,
                max_fraction: rec.bounds.max_fraction,
                fraction_defect: rec.fraction_defect,
                restarted: rec.restarted,
            };
        }
        Ok(())
    })
}

/// Marches to `t_end`; a negative `t_end` means the configured final time.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpdg_solver_run(solver: *mut MpdgSolver, t_end: f64) -> MpdgStatus {
    guard(|| {
        non_null(solver, "solver")?;
        let s = &mut *solver;
        let target = if t_end < 0.0 { s.t_final } else { t_end };
        lift(s.inner.run(target, |_, _| Ok(())))
    })
}

/// Current time, or NaN for a null handle.
///
/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpdg_solver_time(solver: *const MpdgSolver) -> f64 {
    solver.as_ref().map_or(f64::NAN, |s| s.inner.time())
}

/// Steps taken so far, 0 for a null handle.
///
/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpdg_solver_steps(solver: *const MpdgSolver) -> u64 {
    solver.as_ref().map_or(0, |s| s.inner.steps() as u64)
}

/// Field shape: cells, nodes per cell, variables per node. Values are
/// stored as `[(cell * nodes + node) * vars + var]`.
///
/// # Safety
/// `solver` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpdg_solver_shape(
    solver: *const MpdgSolver,
    cells: *mut usize,
    nodes: *mut usize,
    vars: *mut usize,
) -> MpdgStatus {
    guard(|| {
        non_null(solver, "solver")?;
        for (p, name) in [(cells, "cells"), (nodes, "nodes"), (vars, "vars")] {
            non_null(p, name)?;
        }
        let f = (*solver).inner.field();
        (*cells, *nodes, *vars) = (f.cells, f.nodes, f.vars);
        Ok(())
    })
}

/// Copies the nodal values into `out`, which holds `len` doubles.
///
/// # Safety
/// `solver` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mpdg_solver_copy_field(solver: *const MpdgSolver, out: *mut f64, len: usize) -> MpdgStatus {
    guard(|| {
        non_null(solver, "solver")?;
        non_null(out, "out")?;
        let data = &(*solver).inner.field().data;
        if len < data.len() {
            return Err(fail(MpdgStatus::BufferTooSmall, format!("field has {} values, buffer {len}", data.len())));
        }
        slice::from_raw_parts_mut(out, data.len()).copy_from_slice(data);
        Ok(())
    })
}

/// Runs any case from a JSON configuration and writes its artifacts into
/// `out_dir` (snapshots, log, config, checkpoint).
///
/// # Safety
/// Both strings must be valid and NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn mpdg_run_case(config_json: *const c_char, out_dir: *const c_char) -> MpdgStatus {
    guard(|| {
        let cfg = parse_config(text(config_json, "config_json")?)?;
        let dir = text(out_dir, "out_dir")?;
        lift(run_case(&cfg, std::path::Path::new(dir))).map(|_| ())
    })
}
