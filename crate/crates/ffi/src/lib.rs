//! C ABI for the dagsched simulator, heuristics and trained policies.
//!
//! Every fallible function returns a [`DagschedStatus`] and writes results
//! through out-pointers. On failure the message is kept per thread and can be
//! read with [`dagsched_last_error`]. Handles are opaque and must be released
//! with their matching `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use dagsched::heuristics::{Heuristic, HeuristicKind};
use dagsched::policy::PolicyScheduler;
use dagsched::simenv::{run_episode, Action, ClusterState, EnvConfig, Scheduler, StageRef};
use dagsched::training::Checkpoint;
use dagsched::workload::{parse_trace, WorkloadSpec};
use dagsched::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DagschedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Parse = 4,
    Validation = 5,
    IllegalAction = 6,
    Shape = 7,
    Usage = 8,
    Refused = 9,
    NonFinite = 10,
    Io = 11,
    Panic = 12,
}

impl From<&Error> for DagschedStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => DagschedStatus::InvalidArgument,
            Error::Validation { .. } => DagschedStatus::Validation,
            Error::Parse { .. } => DagschedStatus::Parse,
            Error::InvalidConfig(_) => DagschedStatus::InvalidConfig,
            Error::IllegalAction(_) => DagschedStatus::IllegalAction,
            Error::Shape(_) => DagschedStatus::Shape,
            Error::Usage(_) => DagschedStatus::Usage,
            Error::Refused(_) => DagschedStatus::Refused,
            Error::NonFinite(_) => DagschedStatus::NonFinite,
            Error::Io { .. } => DagschedStatus::Io,
        }
    }
}

/// A simulated cluster with its workload. Opaque to C.
pub struct DagschedEnv {
    initial: ClusterState,
    state: ClusterState,
}

/// A trained policy loaded from a checkpoint. Opaque to C.
pub struct DagschedPolicy {
    params: Arc<dagsched::policy::PolicyParams>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn guard(f: impl FnOnce() -> Res<()>) -> DagschedStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DagschedStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            DagschedStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            DagschedStatus::from(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            DagschedStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Res<&'a T> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Res<&'a mut T> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &'static str) -> Res<()> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument(format!("{what} is not valid UTF-8")).into())
}

fn env_config(num_executors: usize, multi_resource: bool) -> Res<EnvConfig> {
    let cfg = if multi_resource {
        EnvConfig::four_class(num_executors)
    } else {
        EnvConfig::single(num_executors)
    };
    cfg.validate()?;
    Ok(cfg)
}

fn boxed_env(workload: &dagsched::workload::Workload, cfg: EnvConfig, seed: u64) -> Res<*mut DagschedEnv> {
    let state = ClusterState::reset(workload, cfg, seed)?;
    Ok(Box::into_raw(Box::new(DagschedEnv {
        initial: state.clone(),
        state,
    })))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dagsched_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dagsched_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an environment over a batch of `num_jobs` synthetic TPC-H-like
/// jobs drawn with `seed`. `multi_resource` selects the four memory classes.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_new_tpch(
    num_jobs: usize,
    num_executors: usize,
    multi_resource: bool,
    seed: u64,
    out: *mut *mut DagschedEnv,
) -> DagschedStatus {
    guard(|| {
        let spec = WorkloadSpec {
            num_jobs,
            ..WorkloadSpec::default()
        };
        let w = spec.sample(seed)?;
        let env = boxed_env(&w, env_config(num_executors, multi_resource)?, seed)?;
        write(out, env, "out")
    })
}

/// Creates an environment from a JSON trace document.
///
/// # Safety
/// `trace_json` must be a NUL-terminated string; `out` as for
/// [`dagsched_env_new_tpch`].
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_from_trace(
    trace_json: *const c_char,
    num_executors: usize,
    multi_resource: bool,
    seed: u64,
    out: *mut *mut DagschedEnv,
) -> DagschedStatus {
    guard(|| {
        let w = parse_trace(str_arg(trace_json, "trace_json")?)?;
        let env = boxed_env(&w, env_config(num_executors, multi_resource)?, seed)?;
        write(out, env, "out")
    })
}

/// Releases an environment. Null is ignored.
///
/// # Safety
/// `env` must come from a constructor of this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_free(env: *mut DagschedEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Restores the state the environment was created with.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_reset(env: *mut DagschedEnv) -> DagschedStatus {
    guard(|| {
        let e = deref_mut(env, "env")?;
        e.state = e.initial.clone();
        Ok(())
    })
}

/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_clock(env: *const DagschedEnv, out: *mut f64) -> DagschedStatus {
    guard(|| write(out, deref(env, "env")?.state.clock(), "out"))
}

/// True once every job has completed.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_is_done(env: *const DagschedEnv, out: *mut bool) -> DagschedStatus {
    guard(|| write(out, deref(env, "env")?.state.is_done(), "out"))
}

/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_num_executors(env: *const DagschedEnv, out: *mut usize) -> DagschedStatus {
    guard(|| write(out, deref(env, "env")?.state.num_executors(), "out"))
}

/// Number of stages a decision may currently pick.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_frontier_len(env: *const DagschedEnv, out: *mut usize) -> DagschedStatus {
    guard(|| write(out, deref(env, "env")?.state.schedulable_frontier().len(), "out"))
}

/// The `index`-th schedulable stage as (job index, stage index).
///
/// # Safety
/// `env` must be a live handle; `job` and `stage` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_frontier_get(
    env: *const DagschedEnv,
    index: usize,
    job: *mut usize,
    stage: *mut usize,
) -> DagschedStatus {
    guard(|| {
        let f = deref(env, "env")?.state.schedulable_frontier();
        let s = f.get(index).ok_or_else(|| {
            Error::InvalidArgument(format!("frontier index {index} out of range ({} stages)", f.len()))
        })?;
        write(job, s.job, "job")?;
        write(stage, s.stage, "stage")
    })
}

/// Applies one decision and advances to the next decision point. `class` is
/// the executor class in multi-resource mode and negative otherwise. The
/// reward accrued until the next decision goes to `reward`, which may be null.
///
/// # Safety
/// `env` must be a live handle; `reward` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_step(
    env: *mut DagschedEnv,
    job: usize,
    stage: usize,
    limit: usize,
    class: i64,
    reward: *mut f64,
) -> DagschedStatus {
    guard(|| {
        let e = deref_mut(env, "env")?;
        let mut a = Action::new(StageRef::new(job, stage), limit);
        if class >= 0 {
            a = a.with_class(class as usize);
        }
        let out = e.state.step(&a)?;
        if !reward.is_null() {
            reward.write(out.reward);
        }
        Ok(())
    })
}

/// Average job completion time over the jobs completed so far.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_average_jct(env: *const DagschedEnv, out: *mut f64) -> DagschedStatus {
    guard(|| {
        let stats = deref(env, "env")?
            .state
            .episode_jct_stats()
            .ok_or_else(|| Error::Usage("no job has completed yet".into()))?;
        write(out, stats.average_jct, "out")
    })
}

fn run_to_end(e: &mut DagschedEnv, sched: &mut dyn Scheduler) -> Res<f64> {
    let sum = run_episode(&mut e.state, sched)?;
    let stats = sum.stats.ok_or_else(|| Error::Usage("episode ended without completed jobs".into()))?;
    Ok(stats.average_jct)
}

/// Runs the named heuristic from the current state to the end of the episode
/// and reports the average job completion time.
///
/// # Safety
/// `env` must be a live handle, `name` NUL-terminated and `avg_jct` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_env_run_heuristic(
    env: *mut DagschedEnv,
    name: *const c_char,
    avg_jct: *mut f64,
) -> DagschedStatus {
    guard(|| {
        let kind: HeuristicKind = str_arg(name, "name")?.parse()?;
        let e = deref_mut(env, "env")?;
        let v = run_to_end(e, &mut Heuristic::new(kind))?;
        write(avg_jct, v, "avg_jct")
    })
}

/// Loads the policy stored in a training checkpoint file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_policy_load(path: *const c_char, out: *mut *mut DagschedPolicy) -> DagschedStatus {
    guard(|| {
        let p = Path::new(str_arg(path, "path")?);
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let params = Checkpoint::from_json(&text)?.policy()?;
        write(
            out,
            Box::into_raw(Box::new(DagschedPolicy {
                params: Arc::new(params),
            })),
            "out",
        )
    })
}

/// Releases a policy. Null is ignored.
///
/// # Safety
/// `policy` must come from [`dagsched_policy_load`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn dagsched_policy_free(policy: *mut DagschedPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// The policy's greedy decision for the current state. `class` receives -1
/// outside multi-resource mode.
///
/// # Safety
/// Handles must be live; all out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_policy_decide(
    policy: *const DagschedPolicy,
    env: *const DagschedEnv,
    job: *mut usize,
    stage: *mut usize,
    limit: *mut usize,
    class: *mut i64,
) -> DagschedStatus {
    guard(|| {
        let p = deref(policy, "policy")?;
        let e = deref(env, "env")?;
        let a = PolicyScheduler::greedy(p.params.clone())
            .decide(&e.state)?
            .ok_or_else(|| Error::Usage("no schedulable stage".into()))?;
        write(job, a.stage.job, "job")?;
        write(stage, a.stage.stage, "stage")?;
        write(limit, a.limit, "limit")?;
        write(class, a.class.map_or(-1, |c| c as i64), "class")
    })
}

/// Runs the policy greedily to the end of the episode.
///
/// # Safety
/// Handles must be live; `avg_jct` writable.
#[no_mangle]
pub unsafe extern "C" fn dagsched_policy_run(
    policy: *const DagschedPolicy,
    env: *mut DagschedEnv,
    avg_jct: *mut f64,
) -> DagschedStatus {
    guard(|| {
        let p = deref(policy, "policy")?;
        let e = deref_mut(env, "env")?;
        let v = run_to_end(e, &mut PolicyScheduler::greedy(p.params.clone()))?;
        write(avg_jct, v, "avg_jct")
    })
}
