//! Discrete-event simulation of an executor cluster running job DAGs.
//!
//! An episode alternates between decisions and simulated time. At a
//! decision point the scheduler issues an [`Action`]; the simulator binds
//! free executors to the chosen stage (up to the job's new parallelism
//! limit and the stage's waiting tasks) and, if free executors and runnable
//! stages remain, asks again at the same clock. Otherwise it advances
//! through task completions, executor moves and job arrivals until the next
//! decision point.
//!
//! The reward after each action is the negated job-seconds accrued since the
//! previous one (or elapsed seconds under the makespan objective), so an
//! episode's total reward is minus the summed time-in-system of its jobs.

mod config;
mod driver;
mod records;
mod state;

pub use config::{EnvConfig, ExecutorClass, Objective, DEFAULT_MOVE_DELAY};
pub use driver::{run_episode, EpisodeSummary, Scheduler};
pub use records::{
    audit_jsonl, gantt_bars, gantt_json, memory_fragmentation, AuditRecord, CompletedJob, GanttBar,
    GanttDoc, JctStats, TaskRecord, GANTT_SCHEMA_VERSION,
};
pub use state::{
    Action, ClusterState, ExecutorState, ExecutorStatus, JobRuntime, StageRef, StageRuntime,
    StepOutcome,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::workload::{DurationModel, JobDag, StageSpec, Workload};

    fn stage(tasks: usize, dur: f64) -> StageSpec {
        StageSpec::new(tasks, DurationModel::new(dur, dur))
    }

    fn job(id: &str, stages: Vec<StageSpec>, edges: Vec<(usize, usize)>) -> JobDag {
        JobDag::new(id, stages, edges, 0.0).unwrap()
    }

    fn cfg(n: usize) -> EnvConfig {
        EnvConfig::single(n)
    }

    #[test]
    fn reset_batch_of_twenty() {
        let jobs = crate::workload::gen_tpch_like(0, 20, &crate::workload::TPCH_SIZES).unwrap();
        let s = ClusterState::reset(&Workload::batch(jobs), cfg(50), 1).unwrap();
        assert_eq!(s.clock(), 0.0);
        assert_eq!(s.num_free_executors(), 50);
        assert_eq!(s.num_jobs_in_system(), 20);
        assert!(s.needs_action());
    }

    #[test]
    fn reset_errors_and_empty() {
        let w = Workload::batch(vec![job("a", vec![stage(1, 1.0)], vec![])]);
        assert!(matches!(ClusterState::reset(&w, cfg(0), 0), Err(Error::InvalidConfig(_))));
        let s = ClusterState::reset(&Workload::batch(vec![]), cfg(3), 0).unwrap();
        assert!(s.is_done());
        assert!(s.episode_jct_stats().is_none());
    }

    #[test]
    fn single_task_episode() {
        let w = Workload::batch(vec![job("a", vec![stage(1, 5.0)], vec![])]);
        let mut s = ClusterState::reset(&w, cfg(1), 0).unwrap();
        let out = s.step(&Action::new(StageRef::new(0, 0), 1)).unwrap();
        assert!(out.done);
        assert_eq!(out.reward, -5.0);
        let st = s.episode_jct_stats().unwrap();
        assert_eq!((st.average_jct, st.makespan), (5.0, 5.0));
    }

    #[test]
    fn two_sequential_jobs_job_seconds() {
        let w = Workload::batch(vec![
            job("a", vec![stage(1, 5.0)], vec![]),
            job("b", vec![stage(1, 5.0)], vec![]),
        ]);
        let mut s = ClusterState::reset(&w, cfg(1), 0).unwrap();
        let mut total = 0.0;
        total += s.step(&Action::new(StageRef::new(0, 0), 1)).unwrap().reward;
        assert_eq!(s.clock(), 5.0);
        total += s.step(&Action::new(StageRef::new(1, 0), 1)).unwrap().reward;
        assert!(s.is_done());
        assert_eq!(total, -15.0);
        let st = s.episode_jct_stats().unwrap();
        assert_eq!(st.jcts(), vec![5.0, 10.0]);
        assert_eq!(st.average_jct, 7.5);
    }

    #[test]
    fn moving_executor_pays_delay() {
        // Job a keeps runnable work (stage 1) after stage 0 finishes, so the
        // executor stays bound to it; sending it to job b costs the move.
        let w = Workload::batch(vec![
            job("a", vec![stage(1, 1.0), stage(1, 10.0)], vec![]),
            job("b", vec![stage(1, 2.0)], vec![]),
        ]);
        let config = cfg(1).with_move_delay(3.0);
        let mut config = config;
        config.audit = true;
        let mut s = ClusterState::reset(&w, config, 0).unwrap();
        s.step(&Action::new(StageRef::new(0, 0), 1)).unwrap();
        assert_eq!(s.clock(), 1.0);
        assert_eq!(s.executors()[0].bound_job, Some(0));
        s.step(&Action::new(StageRef::new(1, 0), 1)).unwrap();
        let start = s
            .audit_log()
            .iter()
            .find(|r| r.kind == "task_start" && r.job_id.as_deref() == Some("b"))
            .unwrap();
        assert_eq!(start.clock, 4.0);
    }

    #[test]
    fn frontier_examples() {
        let w = Workload::batch(vec![job("c", vec![stage(2, 1.0), stage(1, 1.0)], vec![(0, 1)])]);
        let mut s = ClusterState::reset(&w, cfg(2), 0).unwrap();
        assert_eq!(s.runnable_frontier(), vec![StageRef::new(0, 0)]);
        s.step(&Action::new(StageRef::new(0, 0), 2)).unwrap();
        assert_eq!(s.clock(), 1.0);
        assert_eq!(s.runnable_frontier(), vec![StageRef::new(0, 1)]);
    }

    #[test]
    fn illegal_actions_are_rejected() {
        let w = Workload::batch(vec![job("c", vec![stage(4, 1.0), stage(1, 1.0)], vec![(0, 1)])]);
        let mut s = ClusterState::reset(&w, cfg(4), 0).unwrap();
        assert!(matches!(s.step(&Action::new(StageRef::new(0, 1), 1)), Err(Error::IllegalAction(_))));
        s.step(&Action::new(StageRef::new(0, 0), 1)).unwrap();
        // One executor allocated; a limit of 1 adds nothing.
        assert!(matches!(s.step(&Action::new(StageRef::new(0, 0), 1)), Err(Error::IllegalAction(_))));
        assert!(matches!(s.step(&Action::new(StageRef::new(3, 0), 2)), Err(Error::IllegalAction(_))));
        assert!(s.step(&Action::new(StageRef::new(0, 0), 2)).is_ok());
    }

    #[test]
    fn limit_beyond_waiting_tasks_leaves_executors_free() {
        let w = Workload::batch(vec![
            job("a", vec![stage(2, 1.0)], vec![]),
            job("b", vec![stage(3, 1.0)], vec![]),
        ]);
        let mut s = ClusterState::reset(&w, cfg(5), 0).unwrap();
        let out = s.step(&Action::new(StageRef::new(0, 0), 5)).unwrap();
        assert!(!out.done);
        assert_eq!(s.clock(), 0.0);
        assert_eq!(s.num_free_executors(), 3);
        assert_eq!(s.runnable_frontier(), vec![StageRef::new(1, 0)]);
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn waves_and_noise_off_in_simplified_mode() {
        let w = Workload::batch(vec![job(
            "a",
            vec![StageSpec::new(4, DurationModel::new(3.0, 1.0).with_noise(0.5))],
            vec![],
        )]);
        let mut s = ClusterState::reset(&w, cfg(2).simplified(), 0).unwrap();
        s.step(&Action::new(StageRef::new(0, 0), 2)).unwrap();
        assert_eq!(s.episode_jct_stats().unwrap().makespan, 2.0);

        // With waves: first wave (2 tasks) at 3s, second wave at 1s.
        let mut c = cfg(2);
        c.noise = false;
        let mut s = ClusterState::reset(&w, c, 0).unwrap();
        s.step(&Action::new(StageRef::new(0, 0), 2)).unwrap();
        assert_eq!(s.episode_jct_stats().unwrap().makespan, 4.0);
    }

    #[test]
    fn makespan_objective_returns_minus_makespan() {
        let w = Workload::batch(vec![
            job("a", vec![stage(1, 5.0)], vec![]),
            job("b", vec![stage(1, 5.0)], vec![]),
        ]);
        let mut s = ClusterState::reset(&w, cfg(1).with_objective(Objective::Makespan), 0).unwrap();
        let mut total = s.step(&Action::new(StageRef::new(0, 0), 1)).unwrap().reward;
        total += s.step(&Action::new(StageRef::new(1, 0), 1)).unwrap().reward;
        assert_eq!(total, -10.0);
    }

    #[test]
    fn horizon_truncates() {
        let mut a = job("a", vec![stage(1, 5.0)], vec![]);
        a.arrival_time = 30.0;
        let w = Workload {
            jobs: vec![a],
            arrival: crate::workload::ArrivalProcess::batch(1),
        };
        let s = ClusterState::reset_with_horizon(&w, cfg(1), 0, Some(10.0)).unwrap();
        assert!(s.is_done() && s.is_truncated());
        assert_eq!(s.clock(), 10.0);
    }

    #[test]
    fn multi_resource_rejects_unfit_class() {
        let w = Workload::batch(vec![job("m", vec![stage(1, 1.0).with_resources(1.0, 0.6)], vec![])]);
        let mut s = ClusterState::reset(&w, EnvConfig::four_class(4), 0).unwrap();
        let st = StageRef::new(0, 0);
        assert_eq!(s.eligible_classes(st), vec![2, 3]);
        assert!(s.step(&Action::new(st, 1)).is_err());
        assert!(s.step(&Action::new(st, 1).with_class(0)).is_err());
        assert!(s.step(&Action::new(st, 1).with_class(2)).unwrap().done);
        let rec = &s.task_records()[0];
        assert!(rec.mem_capacity >= rec.mem_request);
    }

    #[test]
    fn gantt_json_is_versioned() {
        let w = Workload::batch(vec![job("a", vec![stage(2, 1.0)], vec![])]);
        let mut s = ClusterState::reset(&w, cfg(2), 0).unwrap();
        s.step(&Action::new(StageRef::new(0, 0), 2)).unwrap();
        let doc: GanttDoc = serde_json::from_str(&gantt_json(s.task_records())).unwrap();
        assert_eq!(doc.schema_version, GANTT_SCHEMA_VERSION);
        assert_eq!(doc.bars.len(), 2);
    }
}
