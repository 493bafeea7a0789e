//! C ABI for the open-majorana simulator.
//!
//! Objects are opaque handles created and freed by this library. Every
//! fallible call returns a [`MajStatus`]; on failure the message is available
//! from [`maj_last_error_message`] on the same thread. Panics never cross the
//! boundary: they are caught and reported as [`MajStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use open_majorana::config::{parse_axis, Command, RunConfig};
use open_majorana::csv::{write_map, write_trajectory};
use open_majorana::experiments::{efficiency, sweep, EfficiencyMap, RunOptions, SweepSpec};
use open_majorana::integrator::propagate;
use open_majorana::{DensityMatrix, Error, Level, ModelParams, SolverConfig, Trajectory};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MajStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Bad key, out-of-range value or malformed text.
    InvalidArgument = 2,
    /// The integration failed (step collapse, divergence, invalid state).
    Numerical = 3,
    /// Reading or writing a file failed.
    Io = 4,
    /// An internal panic was caught.
    Panic = 5,
}

/// Model and solver settings.
pub struct MajParams {
    model: ModelParams,
    solver: SolverConfig,
}

/// A propagated trajectory.
pub struct MajTrajectory {
    config: RunConfig,
    inner: Trajectory,
}

/// A two-axis (or one-axis) efficiency map.
pub struct MajMap {
    config: RunConfig,
    inner: EfficiencyMap,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MajStatus {
    match e.exit_code() {
        2 => MajStatus::InvalidArgument,
        4 => MajStatus::Io,
        _ => MajStatus::Numerical,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, records any failure, and converts it to a status.
fn guard<F>(f: F) -> MajStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MajStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(&format!("null pointer passed as `{name}`"));
            MajStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            MajStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or valid for reads as `T` for the duration of the call.
unsafe fn get_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: forwarded from the caller.
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

/// # Safety
/// `p` must be null or valid for writes as `T` for the duration of the call.
unsafe fn get_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: forwarded from the caller.
    unsafe { p.as_mut() }.ok_or(Failure::Null(name))
}

/// # Safety
/// `s` must be null or a NUL-terminated string valid for the duration of the call.
unsafe fn get_str<'a>(s: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and NUL-terminated per the caller's contract.
    let c = unsafe { CStr::from_ptr(s) };
    c.to_str().map_err(|_| Failure::Lib(Error::Usage(format!("`{name}` is not valid UTF-8"))))
}

fn level(m: i32, key: &str) -> Result<Level, Failure> {
    Level::try_from(m).map_err(|_| Failure::Lib(Error::InvalidParameter {
        key: key.into(),
        reason: format!("expected -1, 0 or 1, got {m}"),
    }))
}

fn run_config(p: &MajParams, command: Command, initial: Level, target: Level, samples: usize) -> RunConfig {
    RunConfig {
        command,
        model: p.model,
        solver: p.solver,
        initial,
        target,
        samples,
        sweep: None,
        optkappa: None,
        output_path: PathBuf::new(),
        workers: 1,
        plot_script: false,
        progress: false,
    }
}

/// New settings with the library defaults: `κ = 0.25`, `κt₀ = 25`, `λ = 0`,
/// `φ = ϕ = 0`, `k_BT = 0.001`, default solver tolerances. Free with
/// [`maj_params_free`].
#[no_mangle]
pub extern "C" fn maj_params_new() -> *mut MajParams {
    Box::into_raw(Box::new(MajParams { model: ModelParams::default(), solver: SolverConfig::default() }))
}

/// # Safety
/// `p` must be null or a pointer from [`maj_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn maj_params_free(p: *mut MajParams) {
    if !p.is_null() {
        // SAFETY: the pointer came from Box::into_raw in maj_params_new.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Sets one value by key. Model keys: `kappa` (keeps `κt₀` fixed), `kt0`,
/// `t0`, `lambda`, `phi`, `varphi`, `kbt`. Solver keys: `rtol`, `atol`,
/// `dt_max`, `dt_init` (0 restores the automatic value). The settings are
/// unchanged when the new value is rejected.
///
/// # Safety
/// `p` must be a live handle; `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn maj_params_set(p: *mut MajParams, key: *const c_char, value: f64) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let p = unsafe { get_mut(p, "params") }?;
        // SAFETY: as above.
        let key = unsafe { get_str(key, "key") }?;
        let mut model = p.model;
        let mut solver = p.solver;
        let auto = |v: f64| if v == 0.0 { None } else { Some(v) };
        match key {
            "kappa" => model = model.with_kappa_fixed_kt0(value),
            "kt0" => model.t0 = value / model.kappa,
            "t0" => model.t0 = value,
            "lambda" => model.lambda = value,
            "phi" => model.phi = value,
            "varphi" => model.varphi = value,
            "kbt" => model.kbt = value,
            "rtol" => solver.rtol = value,
            "atol" => solver.atol = value,
            "dt_max" => solver.dt_max = auto(value),
            "dt_init" => solver.dt_init = auto(value),
            _ => return Err(Error::InvalidParameter { key: key.into(), reason: "unknown key".into() }.into()),
        }
        if key == "kt0" && !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter { key: key.into(), reason: "must be positive".into() }.into());
        }
        if key == "kappa" && !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter { key: key.into(), reason: "must be positive".into() }.into());
        }
        model.validate()?;
        solver.validate()?;
        p.model = model;
        p.solver = solver;
        Ok(())
    })
}

/// Reads one value by key; accepts the keys of [`maj_params_set`]. Automatic
/// step settings read as 0.
///
/// # Safety
/// `p` must be a live handle, `key` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn maj_params_get(p: *const MajParams, key: *const c_char, out: *mut f64) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let p = unsafe { get_ref(p, "params") }?;
        // SAFETY: as above.
        let key = unsafe { get_str(key, "key") }?;
        // SAFETY: as above.
        let out = unsafe { get_mut(out, "out") }?;
        *out = match key {
            "kappa" => p.model.kappa,
            "kt0" => p.model.kt0(),
            "t0" => p.model.t0,
            "lambda" => p.model.lambda,
            "phi" => p.model.phi,
            "varphi" => p.model.varphi,
            "kbt" => p.model.kbt,
            "rtol" => p.solver.rtol,
            "atol" => p.solver.atol,
            "dt_max" => p.solver.dt_max.unwrap_or(0.0),
            "dt_init" => p.solver.dt_init.unwrap_or(0.0),
            _ => return Err(Error::InvalidParameter { key: key.into(), reason: "unknown key".into() }.into()),
        };
        Ok(())
    })
}

/// Final population of bare state `target` after starting in bare state
/// `initial` (each -1, 0 or 1).
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn maj_efficiency(p: *const MajParams, initial: i32, target: i32, out: *mut f64) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let p = unsafe { get_ref(p, "params") }?;
        // SAFETY: as above.
        let out = unsafe { get_mut(out, "out") }?;
        let e = efficiency(&p.model, level(initial, "initial")?, level(target, "target")?, &p.solver)?;
        *out = e;
        Ok(())
    })
}

/// Propagates from bare state `initial` over `[-t₀, t₀]`, recording
/// `samples ≥ 2` evenly spaced snapshots. On success `*out` receives a handle
/// to free with [`maj_trajectory_free`].
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn maj_propagate(
    p: *const MajParams,
    initial: i32,
    samples: usize,
    out: *mut *mut MajTrajectory,
) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let p = unsafe { get_ref(p, "params") }?;
        // SAFETY: as above.
        let out = unsafe { get_mut(out, "out") }?;
        *out = std::ptr::null_mut();
        let initial = level(initial, "initial")?;
        let target = if initial == Level::Up { Level::Down } else { Level::Up };
        let inner = propagate(&DensityMatrix::pure(initial), &p.model, &p.solver, samples)?;
        let config = run_config(p, Command::Single, initial, target, samples);
        *out = Box::into_raw(Box::new(MajTrajectory { config, inner }));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `tr` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maj_trajectory_len(tr: *const MajTrajectory) -> usize {
    // SAFETY: forwarded from the caller's contract.
    unsafe { tr.as_ref() }.map_or(0, |t| t.inner.times.len())
}

/// Time and bare-state populations `(m = -1, 0, 1)` of sample `index`.
///
/// # Safety
/// `tr` must be a live handle, `t` writable, `pops` writable for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn maj_trajectory_sample(
    tr: *const MajTrajectory,
    index: usize,
    t: *mut f64,
    pops: *mut f64,
) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let tr = unsafe { get_ref(tr, "trajectory") }?;
        // SAFETY: as above.
        let t = unsafe { get_mut(t, "t") }?;
        if pops.is_null() {
            return Err(Failure::Null("pops"));
        }
        let n = tr.inner.times.len();
        if index >= n {
            return Err(Error::InvalidParameter { key: "index".into(), reason: format!("{index} out of range 0..{n}") }.into());
        }
        *t = tr.inner.times[index];
        // SAFETY: the caller provides room for three doubles.
        let dst = unsafe { std::slice::from_raw_parts_mut(pops, 3) };
        dst.copy_from_slice(&tr.inner.populations[index]);
        Ok(())
    })
}

/// Final density matrix, row-major, split into real and imaginary parts.
///
/// # Safety
/// `tr` must be a live handle; `re` and `im` writable for 9 doubles each.
#[no_mangle]
pub unsafe extern "C" fn maj_trajectory_final_rho(tr: *const MajTrajectory, re: *mut f64, im: *mut f64) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let tr = unsafe { get_ref(tr, "trajectory") }?;
        if re.is_null() {
            return Err(Failure::Null("re"));
        }
        if im.is_null() {
            return Err(Failure::Null("im"));
        }
        // SAFETY: the caller provides room for nine doubles in each buffer.
        let (re, im) = unsafe { (std::slice::from_raw_parts_mut(re, 9), std::slice::from_raw_parts_mut(im, 9)) };
        let rho = tr.inner.rho_final.mat();
        for i in 0..3 {
            for j in 0..3 {
                re[3 * i + j] = rho[(i, j)].re;
                im[3 * i + j] = rho[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Writes the trajectory as CSV, atomically.
///
/// # Safety
/// `tr` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn maj_trajectory_write_csv(tr: *const MajTrajectory, path: *const c_char) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let tr = unsafe { get_ref(tr, "trajectory") }?;
        // SAFETY: as above.
        let path = PathBuf::from(unsafe { get_str(path, "path") }?);
        write_trajectory(&tr.config, &tr.inner, &path)?;
        Ok(())
    })
}

/// # Safety
/// `tr` must be null or a handle from [`maj_propagate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn maj_trajectory_free(tr: *mut MajTrajectory) {
    if !tr.is_null() {
        // SAFETY: the pointer came from Box::into_raw in maj_propagate.
        drop(unsafe { Box::from_raw(tr) });
    }
}

/// Efficiency map over `axis1 × axis2`. Axes use the command-line format,
/// `param:min:max:count` or `param:v1,v2,...`; `axis2` may be null for a
/// single axis. `workers` threads are used (at least 1); the values do not
/// depend on it. Failed cells hold NaN. Free the result with [`maj_map_free`].
///
/// # Safety
/// `p` must be a live handle, `axis1` a NUL-terminated string, `axis2` null
/// or a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn maj_sweep2d(
    p: *const MajParams,
    axis1: *const c_char,
    axis2: *const c_char,
    initial: i32,
    target: i32,
    workers: usize,
    out: *mut *mut MajMap,
) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let p = unsafe { get_ref(p, "params") }?;
        // SAFETY: as above.
        let out = unsafe { get_mut(out, "out") }?;
        *out = std::ptr::null_mut();
        // SAFETY: as above.
        let axis1 = parse_axis("axis1", unsafe { get_str(axis1, "axis1") }?)?;
        let axis2 = if axis2.is_null() {
            None
        } else {
            // SAFETY: non-null, so NUL-terminated per the contract.
            Some(parse_axis("axis2", unsafe { get_str(axis2, "axis2") }?)?)
        };
        let (initial, target) = (level(initial, "initial")?, level(target, "target")?);
        let spec = SweepSpec { axis1, axis2, fixed: p.model, initial, target };
        let inner = sweep(&spec, &p.solver, &RunOptions { workers, progress: false })?;
        let mut config = run_config(p, Command::Sweep2d, initial, target, 2);
        config.sweep = Some(spec);
        *out = Box::into_raw(Box::new(MajMap { config, inner }));
        Ok(())
    })
}

/// Grid shape; `n2` is 1 for a one-axis map.
///
/// # Safety
/// `m` must be a live handle; `n1` and `n2` writable.
#[no_mangle]
pub unsafe extern "C" fn maj_map_shape(m: *const MajMap, n1: *mut usize, n2: *mut usize) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let m = unsafe { get_ref(m, "map") }?;
        // SAFETY: as above.
        let n1 = unsafe { get_mut(n1, "n1") }?;
        // SAFETY: as above.
        let n2 = unsafe { get_mut(n2, "n2") }?;
        (*n1, *n2) = m.inner.shape();
        Ok(())
    })
}

/// Efficiency of cell `(i, j)`; NaN marks a failed cell.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn maj_map_value(m: *const MajMap, i: usize, j: usize, out: *mut f64) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let m = unsafe { get_ref(m, "map") }?;
        // SAFETY: as above.
        let out = unsafe { get_mut(out, "out") }?;
        let (n1, n2) = m.inner.shape();
        if i >= n1 || j >= n2 {
            return Err(Error::InvalidParameter {
                key: "index".into(),
                reason: format!("({i}, {j}) outside the {n1}×{n2} grid"),
            }
            .into());
        }
        *out = m.inner.get(i, j);
        Ok(())
    })
}

/// Number of failed cells.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn maj_map_failures(m: *const MajMap) -> usize {
    // SAFETY: forwarded from the caller's contract.
    unsafe { m.as_ref() }.map_or(0, |m| m.inner.failures.len())
}

/// Writes the map as CSV, atomically.
///
/// # Safety
/// `m` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn maj_map_write_csv(m: *const MajMap, path: *const c_char) -> MajStatus {
    guard(|| {
        // SAFETY: forwarded from the caller's contract.
        let m = unsafe { get_ref(m, "map") }?;
        // SAFETY: as above.
        let path = PathBuf::from(unsafe { get_str(path, "path") }?);
        write_map(&m.config, &m.inner, &path)?;
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from [`maj_sweep2d`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn maj_map_free(m: *mut MajMap) {
    if !m.is_null() {
        // SAFETY: the pointer came from Box::into_raw in maj_sweep2d.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn maj_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn maj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
