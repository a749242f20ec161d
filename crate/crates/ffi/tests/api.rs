use std::ffi::{CStr, CString};
use std::ptr;

use dagsched::simenv::{ClusterState, EnvConfig};
use dagsched::training::{Checkpoint, Trainer, TrainConfig};
use dagsched::workload::{trace_to_string, WorkloadSpec};
use dagsched_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dagsched_last_error()) }.to_string_lossy().into_owned()
}

fn new_env(jobs: usize, execs: usize, multi: bool, seed: u64) -> *mut DagschedEnv {
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { dagsched_env_new_tpch(jobs, execs, multi, seed, &mut env) }, DagschedStatus::Ok);
    assert!(!env.is_null());
    env
}

#[test]
fn heuristic_run_matches_core() {
    let env = new_env(5, 10, false, 3);
    let mut v = 0.0;
    let name = CString::new("fair").unwrap();
    assert_eq!(unsafe { dagsched_env_run_heuristic(env, name.as_ptr(), &mut v) }, DagschedStatus::Ok);

    let w = WorkloadSpec { num_jobs: 5, ..WorkloadSpec::default() }.sample(3).unwrap();
    let mut s = ClusterState::reset(&w, EnvConfig::single(10), 3).unwrap();
    let mut h = dagsched::heuristics::Heuristic::new(dagsched::heuristics::HeuristicKind::Fair);
    let expect = dagsched::simenv::run_episode(&mut s, &mut h).unwrap().stats.unwrap().average_jct;
    assert_eq!(v, expect);

    // Reset replays the same episode.
    let mut again = 0.0;
    unsafe {
        assert_eq!(dagsched_env_reset(env), DagschedStatus::Ok);
        assert_eq!(dagsched_env_run_heuristic(env, name.as_ptr(), &mut again), DagschedStatus::Ok);
        dagsched_env_free(env);
    }
    assert_eq!(v, again);
}

#[test]
fn manual_stepping_sums_rewards_to_total_jct() {
    let env = new_env(3, 4, false, 11);
    let mut total = 0.0;
    let mut done = false;
    unsafe {
        let mut n = 0;
        dagsched_env_num_executors(env, &mut n);
        loop {
            assert_eq!(dagsched_env_is_done(env, &mut done), DagschedStatus::Ok);
            if done {
                break;
            }
            let mut len = 0;
            dagsched_env_frontier_len(env, &mut len);
            assert!(len > 0);
            let (mut j, mut s, mut r) = (0, 0, 0.0);
            assert_eq!(dagsched_env_frontier_get(env, len - 1, &mut j, &mut s), DagschedStatus::Ok);
            assert_eq!(dagsched_env_step(env, j, s, n, -1, &mut r), DagschedStatus::Ok);
            total += r;
        }
        let mut avg = 0.0;
        assert_eq!(dagsched_env_average_jct(env, &mut avg), DagschedStatus::Ok);
        assert!((-total - 3.0 * avg).abs() <= 1e-9 * total.abs());
        dagsched_env_free(env);
    }
}

#[test]
fn errors_are_reported_with_codes_and_messages() {
    let env = new_env(2, 4, false, 0);
    unsafe {
        let mut v = 0.0;
        assert_eq!(dagsched_env_average_jct(env, &mut v), DagschedStatus::Usage);
        assert!(last_error().contains("completed"));

        let bad = CString::new("nope").unwrap();
        assert_eq!(dagsched_env_run_heuristic(env, bad.as_ptr(), &mut v), DagschedStatus::InvalidArgument);
        assert!(last_error().contains("fifo"), "lists valid names: {}", last_error());

        assert_eq!(dagsched_env_step(env, 50, 0, 1, -1, ptr::null_mut()), DagschedStatus::IllegalAction);
        assert!(last_error().contains("does not exist"));
        let (mut j, mut s) = (0, 0);
        assert_eq!(dagsched_env_frontier_get(env, 1000, &mut j, &mut s), DagschedStatus::InvalidArgument);

        assert_eq!(dagsched_env_clock(ptr::null(), &mut v), DagschedStatus::NullPointer);
        assert_eq!(dagsched_env_clock(env, ptr::null_mut()), DagschedStatus::NullPointer);
        assert_eq!(dagsched_env_new_tpch(2, 0, false, 0, &mut ptr::null_mut()), DagschedStatus::InvalidConfig);

        let garbage = CString::new("{not json").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(dagsched_env_from_trace(garbage.as_ptr(), 4, false, 0, &mut out), DagschedStatus::Parse);
        assert!(out.is_null());

        let missing = CString::new("/nonexistent/ckpt.json").unwrap();
        let mut pol = ptr::null_mut();
        assert_eq!(dagsched_policy_load(missing.as_ptr(), &mut pol), DagschedStatus::Io);

        dagsched_env_free(env);
        dagsched_env_free(ptr::null_mut());
        dagsched_policy_free(ptr::null_mut());
    }
}

#[test]
fn trace_round_trip() {
    let w = WorkloadSpec { num_jobs: 2, ..WorkloadSpec::default() }.sample(5).unwrap();
    let text = CString::new(trace_to_string(&w.jobs)).unwrap();
    let mut env = ptr::null_mut();
    unsafe {
        assert_eq!(dagsched_env_from_trace(text.as_ptr(), 6, true, 1, &mut env), DagschedStatus::Ok);
        let mut v = 0.0;
        let name = CString::new("tetris").unwrap();
        assert_eq!(dagsched_env_run_heuristic(env, name.as_ptr(), &mut v), DagschedStatus::Ok);
        assert!(v > 0.0);
        dagsched_env_free(env);
    }
}

#[test]
fn policy_from_checkpoint_drives_episode() {
    let cfg = TrainConfig { iterations: 1, num_workers: 2, eval_interval: 0, ..TrainConfig::default() };
    let spec = WorkloadSpec { num_jobs: 2, ..WorkloadSpec::default() };
    let mut t = Trainer::new(cfg, EnvConfig::single(4), spec).unwrap();
    t.run(|_| Ok(())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    std::fs::write(&path, t.checkpoint().to_json()).unwrap();
    assert!(Checkpoint::from_json(&std::fs::read_to_string(&path).unwrap()).is_ok());

    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut pol = ptr::null_mut();
    unsafe {
        assert_eq!(dagsched_policy_load(cpath.as_ptr(), &mut pol), DagschedStatus::Ok);
        let env = new_env(3, 4, false, 2);
        let (mut j, mut s, mut l, mut c) = (0, 0, 0, 0);
        assert_eq!(dagsched_policy_decide(pol, env, &mut j, &mut s, &mut l, &mut c), DagschedStatus::Ok);
        assert_eq!(c, -1);
        assert!((1..=4).contains(&l));
        let mut avg = 0.0;
        assert_eq!(dagsched_policy_run(pol, env, &mut avg), DagschedStatus::Ok);
        assert!(avg > 0.0);
        let mut done = false;
        dagsched_env_is_done(env, &mut done);
        assert!(done);
        assert_eq!(dagsched_policy_decide(pol, env, &mut j, &mut s, &mut l, &mut c), DagschedStatus::Usage);
        dagsched_env_free(env);
        dagsched_policy_free(pol);
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(dagsched_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
