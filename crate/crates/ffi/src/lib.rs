//! C ABI over the `freshsim` library.
//!
//! Conventions:
//!
//! * every fallible function returns a [`FreshsimStatus`] and writes its
//!   result through an out-pointer, which is left untouched on failure;
//! * the message of the most recent failure on the calling thread is
//!   available from [`freshsim_last_error_message`];
//! * simulations are opaque handles created by [`freshsim_simulation_run`]
//!   and released with [`freshsim_simulation_free`];
//! * cost families and objectives are passed as the `FRESHSIM_KIND_*` and
//!   `FRESHSIM_OBJECTIVE_*` integer constants.
//!
//! Panics never cross the boundary; they surface as
//! `FRESHSIM_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use freshsim::analytic::{self, QueueParams};
use freshsim::costmodel::{CostKind, CostModel, UpdateRecord};
use freshsim::sim::{self, SimConfig, SimSummary};
use freshsim::specfun::QuadratureSpec;
use freshsim::sweep::{self, Objective};
use freshsim::Error;

pub const FRESHSIM_KIND_LINEAR: i32 = 0;
pub const FRESHSIM_KIND_EXPONENTIAL: i32 = 1;
pub const FRESHSIM_KIND_LOGARITHMIC: i32 = 2;

pub const FRESHSIM_OBJECTIVE_MIN_COUD: i32 = 0;
pub const FRESHSIM_OBJECTIVE_MAX_VOIU: i32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreshsimStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    UnstableQueue = 3,
    Domain = 4,
    Overflow = 5,
    NoConvergence = 6,
    InsufficientData = 7,
    OutOfRange = 8,
    Internal = 9,
}

/// Analytic averages at one operating point. `avg_coud` is `+inf` when the
/// exponential average does not exist; `valid` is then 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FreshsimAnalytic {
    pub avg_coud: f64,
    pub avg_voiu_rate: f64,
    pub mean_voiu: f64,
    pub valid: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FreshsimSummary {
    pub replications: u64,
    pub n_updates: u64,
    pub n_measured: u64,
    pub elapsed: f64,
    pub avg_coud: f64,
    pub avg_voiu_rate: f64,
    pub mean_voiu: f64,
    pub ci_halfwidth_coud: f64,
    pub ci_halfwidth_voiu: f64,
    pub effective_rate: f64,
    pub whole_run_coud: f64,
    pub whole_run_voiu_rate: f64,
    pub mean_interarrival: f64,
    pub mean_system_time: f64,
}

impl From<&SimSummary> for FreshsimSummary {
    fn from(s: &SimSummary) -> Self {
        Self {
            replications: s.replications as u64,
            n_updates: s.n_updates,
            n_measured: s.n_measured,
            elapsed: s.elapsed,
            avg_coud: s.avg_coud,
            avg_voiu_rate: s.avg_voiu_rate,
            mean_voiu: s.mean_voiu,
            ci_halfwidth_coud: s.ci_halfwidth_coud,
            ci_halfwidth_voiu: s.ci_halfwidth_voiu,
            effective_rate: s.effective_rate,
            whole_run_coud: s.whole_run_coud,
            whole_run_voiu_rate: s.whole_run_voiu_rate,
            mean_interarrival: s.mean_interarrival,
            mean_system_time: s.mean_system_time,
        }
    }
}

/// One delivered update.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FreshsimRecord {
    pub i: u64,
    pub t_gen: f64,
    pub t_recv: f64,
    pub interarrival: f64,
    pub system_time: f64,
    pub voiu: f64,
    pub area: f64,
}

impl From<&UpdateRecord> for FreshsimRecord {
    fn from(r: &UpdateRecord) -> Self {
        Self {
            i: r.i,
            t_gen: r.t_gen,
            t_recv: r.t_recv,
            interarrival: r.interarrival,
            system_time: r.system_time,
            voiu: r.voiu,
            area: r.area,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FreshsimOptimum {
    pub rho_star: f64,
    pub value_at_star: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub iterations: u64,
}

/// Opaque simulation result.
pub struct FreshsimSimulation {
    summary: SimSummary,
    records: Vec<UpdateRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Kind(i32),
    Index(usize, usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(f: Failure) -> FreshsimStatus {
    let (status, msg) = match f {
        Failure::Null(name) => (FreshsimStatus::NullPointer, format!("{name} is NULL")),
        Failure::Kind(k) => (
            FreshsimStatus::InvalidArgument,
            format!("unknown enum value {k}"),
        ),
        Failure::Index(i, n) => (
            FreshsimStatus::OutOfRange,
            format!("index {i} out of range for {n} records"),
        ),
        Failure::Lib(e) => {
            let status = match e {
                Error::UnstableQueue { .. } => FreshsimStatus::UnstableQueue,
                Error::Domain(_) => FreshsimStatus::Domain,
                Error::Overflow(_) => FreshsimStatus::Overflow,
                Error::NoConvergence { .. } => FreshsimStatus::NoConvergence,
                Error::InsufficientData { .. } => FreshsimStatus::InsufficientData,
                Error::Io(_) | Error::Csv(_) | Error::Json(_) => FreshsimStatus::Internal,
                _ => FreshsimStatus::InvalidArgument,
            };
            (status, e.to_string())
        }
    };
    set_last_error(msg);
    status
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FreshsimStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FreshsimStatus::Ok,
        Ok(Err(f)) => status_of(f),
        Err(_) => {
            set_last_error("internal panic".to_string());
            FreshsimStatus::Internal
        }
    }
}

fn kind_of(kind: i32) -> Result<CostKind, Failure> {
    match kind {
        FRESHSIM_KIND_LINEAR => Ok(CostKind::Linear),
        FRESHSIM_KIND_EXPONENTIAL => Ok(CostKind::Exponential),
        FRESHSIM_KIND_LOGARITHMIC => Ok(CostKind::Logarithmic),
        other => Err(Failure::Kind(other)),
    }
}

fn model_of(kind: i32, alpha: f64) -> Result<CostModel, Failure> {
    Ok(CostModel::new(kind_of(kind)?, alpha)?)
}

unsafe fn write_out<T>(out: *mut T, name: &'static str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn freshsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn freshsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Cost `f(elapsed)`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn freshsim_cost(
    kind: i32,
    alpha: f64,
    elapsed: f64,
    out: *mut f64,
) -> FreshsimStatus {
    guard(|| {
        let m = model_of(kind, alpha)?;
        if elapsed.is_nan() || elapsed < 0.0 {
            return Err(Error::Domain(format!("elapsed time must be >= 0, got {elapsed}")).into());
        }
        write_out(out, "out", m.cost(elapsed))
    })
}

/// Value of information of an update with interarrival `y` and system time `t`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn freshsim_voiu(
    kind: i32,
    alpha: f64,
    y: f64,
    t: f64,
    out: *mut f64,
) -> FreshsimStatus {
    guard(|| {
        let v = model_of(kind, alpha)?.voiu(y, t)?;
        write_out(out, "out", v)
    })
}

/// Area under the cost curve between consecutive receptions.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn freshsim_area(
    kind: i32,
    alpha: f64,
    y: f64,
    t: f64,
    out: *mut f64,
) -> FreshsimStatus {
    guard(|| {
        let q = model_of(kind, alpha)?.area(y, t)?;
        write_out(out, "out", q)
    })
}

/// Analytic averages for arrival rate `lambda` and service rate `mu`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn freshsim_analytic(
    kind: i32,
    alpha: f64,
    lambda: f64,
    mu: f64,
    out: *mut FreshsimAnalytic,
) -> FreshsimStatus {
    guard(|| {
        let m = model_of(kind, alpha)?;
        let q = QueueParams::new(lambda, mu)?;
        let r = analytic::evaluate(&q, &m, &QuadratureSpec::default())?;
        write_out(
            out,
            "out",
            FreshsimAnalytic {
                avg_coud: r.avg_coud,
                avg_voiu_rate: r.avg_voiu_rate,
                mean_voiu: r.mean_voiu,
                valid: r.valid as i32,
            },
        )
    })
}

/// Golden-section search over utilization on the default bracket.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn freshsim_optimize(
    objective: i32,
    kind: i32,
    alpha: f64,
    mu: f64,
    tol: f64,
    out: *mut FreshsimOptimum,
) -> FreshsimStatus {
    guard(|| {
        let objective = match objective {
            FRESHSIM_OBJECTIVE_MIN_COUD => Objective::MinCoud,
            FRESHSIM_OBJECTIVE_MAX_VOIU => Objective::MaxVoiu,
            other => return Err(Failure::Kind(other)),
        };
        let m = model_of(kind, alpha)?;
        let r = sweep::optimize(objective, &m, mu, tol)?;
        write_out(
            out,
            "out",
            FreshsimOptimum {
                rho_star: r.rho_star,
                value_at_star: r.value_at_star,
                bracket_lo: r.bracket.0,
                bracket_hi: r.bracket.1,
                iterations: r.iterations as u64,
            },
        )
    })
}

#[allow(clippy::too_many_arguments)]
fn sim_config(
    kind: i32,
    alpha: f64,
    lambda: f64,
    mu: f64,
    updates: u64,
    seed: u64,
    warmup_fraction: f64,
    initial_cost: f64,
) -> Result<SimConfig, Failure> {
    let config = SimConfig {
        warmup_fraction,
        initial_cost,
        ..SimConfig::with_updates(
            QueueParams::new(lambda, mu)?,
            model_of(kind, alpha)?,
            updates,
            seed,
        )
    };
    config.validate()?;
    Ok(config)
}

/// Runs one replication delivering `updates` updates and stores the handle in
/// `*out`. Release it with [`freshsim_simulation_free`].
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn freshsim_simulation_run(
    kind: i32,
    alpha: f64,
    lambda: f64,
    mu: f64,
    updates: u64,
    seed: u64,
    warmup_fraction: f64,
    initial_cost: f64,
    out: *mut *mut FreshsimSimulation,
) -> FreshsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let config = sim_config(
            kind,
            alpha,
            lambda,
            mu,
            updates,
            seed,
            warmup_fraction,
            initial_cost,
        )?;
        let (summary, records) = sim::run(&config)?;
        write_out(
            out,
            "out",
            Box::into_raw(Box::new(FreshsimSimulation { summary, records })),
        )
    })
}

/// Pooled summary of `replications >= 2` independent runs.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn freshsim_replications(
    kind: i32,
    alpha: f64,
    lambda: f64,
    mu: f64,
    updates: u64,
    seed: u64,
    replications: u64,
    out: *mut FreshsimSummary,
) -> FreshsimStatus {
    guard(|| {
        let config = sim_config(
            kind,
            alpha,
            lambda,
            mu,
            updates,
            seed,
            SimConfig::DEFAULT_WARMUP,
            0.0,
        )?;
        let s = sim::run_replications(&config, replications as usize)?;
        write_out(out, "out", FreshsimSummary::from(&s))
    })
}

/// # Safety
/// `sim` must be NULL or a live handle; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn freshsim_simulation_summary(
    sim: *const FreshsimSimulation,
    out: *mut FreshsimSummary,
) -> FreshsimStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or(Failure::Null("sim"))?;
        write_out(out, "out", FreshsimSummary::from(&sim.summary))
    })
}

/// Number of records held by `sim`; 0 for NULL.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn freshsim_simulation_record_count(sim: *const FreshsimSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.records.len())
}

/// # Safety
/// `sim` must be NULL or a live handle; `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn freshsim_simulation_record(
    sim: *const FreshsimSimulation,
    index: usize,
    out: *mut FreshsimRecord,
) -> FreshsimStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or(Failure::Null("sim"))?;
        let r = sim
            .records
            .get(index)
            .ok_or(Failure::Index(index, sim.records.len()))?;
        write_out(out, "out", FreshsimRecord::from(r))
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` must be NULL or a handle from [`freshsim_simulation_run`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn freshsim_simulation_free(sim: *mut FreshsimSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
