use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::config::{EnvConfig, Objective};
use super::records::{AuditRecord, CompletedJob, JctStats, TaskRecord};
use crate::error::{Error, Result};
use crate::heuristics::critical_path_all;
use crate::rng::{seeded, SimRng};
use crate::workload::{sample_task_duration, JobDag, Wave, Workload};

/// A stage of a job in the simulator: `job` indexes [`ClusterState::jobs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StageRef {
    pub job: usize,
    pub stage: usize,
}

impl StageRef {
    pub fn new(job: usize, stage: usize) -> Self {
        StageRef { job, stage }
    }
}

/// One scheduling decision: run `stage`, raising its job's parallelism
/// limit to `limit`, using executors of `class` in multi-resource mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub stage: StageRef,
    pub limit: usize,
    pub class: Option<usize>,
}

impl Action {
    pub fn new(stage: StageRef, limit: usize) -> Self {
        Action {
            stage,
            limit,
            class: None,
        }
    }

    pub fn with_class(mut self, class: usize) -> Self {
        self.class = Some(class);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExecutorStatus {
    Idle,
    Busy { stage: StageRef, started: f64, until: f64 },
    Moving { stage: StageRef, until: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutorState {
    pub class_id: usize,
    pub cpu_capacity: f64,
    pub mem_capacity: f64,
    pub bound_job: Option<usize>,
    pub status: ExecutorStatus,
}

impl ExecutorState {
    pub fn is_free(&self) -> bool {
        matches!(self.status, ExecutorStatus::Idle)
    }

    pub fn busy_until(&self) -> Option<f64> {
        match self.status {
            ExecutorStatus::Busy { until, .. } => Some(until),
            _ => None,
        }
    }

    pub fn moving_until(&self) -> Option<f64> {
        match self.status {
            ExecutorStatus::Moving { until, .. } => Some(until),
            _ => None,
        }
    }

    /// Stage this executor is running or moving to.
    pub fn stage(&self) -> Option<StageRef> {
        match self.status {
            ExecutorStatus::Idle => None,
            ExecutorStatus::Busy { stage, .. } | ExecutorStatus::Moving { stage, .. } => Some(stage),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRuntime {
    /// Tasks not yet dispatched to an executor.
    pub remaining: usize,
    /// Dispatched and not finished (includes tasks waiting on a moving executor).
    pub running: usize,
    pub finished: usize,
    pub first_wave_done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobRuntime {
    pub dag: JobDag,
    pub children: Vec<Vec<usize>>,
    pub parents: Vec<Vec<usize>>,
    /// Static critical path of each stage in task-seconds.
    pub critical_path: Vec<f64>,
    pub stages: Vec<StageRuntime>,
    /// Executors running or moving to this job's tasks.
    pub executors_allocated: usize,
    pub parallelism_limit: usize,
    pub arrived: bool,
    pub completion_time: Option<f64>,
}

impl JobRuntime {
    fn new(dag: JobDag) -> Self {
        let stages = dag
            .stages
            .iter()
            .map(|s| StageRuntime {
                remaining: s.num_tasks,
                running: 0,
                finished: 0,
                first_wave_done: false,
            })
            .collect();
        JobRuntime {
            children: dag.children(),
            parents: dag.parents(),
            critical_path: critical_path_all(&dag),
            dag,
            stages,
            executors_allocated: 0,
            parallelism_limit: 0,
            arrived: false,
            completion_time: None,
        }
    }

    pub fn in_system(&self) -> bool {
        self.arrived && self.completion_time.is_none()
    }

    pub fn stage_complete(&self, v: usize) -> bool {
        self.stages[v].finished == self.dag.stages[v].num_tasks
    }

    pub fn stage_runnable(&self, v: usize) -> bool {
        self.in_system()
            && self.stages[v].remaining > 0
            && self.parents[v].iter().all(|&p| self.stage_complete(p))
    }

    /// Expected work not yet dispatched, in task-seconds.
    pub fn remaining_work(&self) -> f64 {
        self.dag
            .stages
            .iter()
            .zip(&self.stages)
            .map(|(s, r)| r.remaining as f64 * s.duration.later_wave_mean)
            .sum()
    }

    /// Expected work not yet finished (dispatched-but-running tasks count fully).
    pub fn unfinished_work(&self) -> f64 {
        self.dag
            .stages
            .iter()
            .zip(&self.stages)
            .map(|(s, r)| (r.remaining + r.running) as f64 * s.duration.later_wave_mean)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    JobArrival { job: usize },
    MoveDone { executor: usize },
    TaskDone { executor: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
}

/// Full simulator state. Stepping mutates it in place; clone it to branch.
#[derive(Debug, Clone)]
pub struct ClusterState {
    config: EnvConfig,
    clock: f64,
    executors: Vec<ExecutorState>,
    jobs: Vec<JobRuntime>,
    events: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
    completed: Vec<CompletedJob>,
    rng: SimRng,
    horizon: Option<f64>,
    truncated: bool,
    done: bool,
    /// Penalty accrued since the last reported reward.
    unreported_penalty: f64,
    total_penalty: f64,
    actions_taken: usize,
    tasks: Vec<TaskRecord>,
    audit: Vec<AuditRecord>,
}

impl ClusterState {
    pub fn reset(workload: &Workload, config: EnvConfig, seed: u64) -> Result<Self> {
        Self::reset_with_horizon(workload, config, seed, None)
    }

    /// Like [`reset`](Self::reset), but the simulation stops (truncated) at
    /// `horizon` seconds.
    pub fn reset_with_horizon(
        workload: &Workload,
        config: EnvConfig,
        seed: u64,
        horizon: Option<f64>,
    ) -> Result<Self> {
        config.validate()?;
        workload.validate()?;
        if config.multi_resource {
            for j in &workload.jobs {
                for (v, s) in j.stages.iter().enumerate() {
                    let fits = config
                        .classes
                        .iter()
                        .any(|c| c.count > 0 && c.mem >= s.mem_request && c.cpu >= s.cpu_request);
                    if !fits {
                        return Err(Error::InvalidConfig(format!(
                            "job {} stage {v} (cpu {}, mem {}) fits no executor class",
                            j.id, s.cpu_request, s.mem_request
                        )));
                    }
                }
            }
        }
        let mut executors = Vec::with_capacity(config.num_executors());
        for (class_id, c) in config.classes.iter().enumerate() {
            for _ in 0..c.count {
                executors.push(ExecutorState {
                    class_id,
                    cpu_capacity: c.cpu,
                    mem_capacity: c.mem,
                    bound_job: None,
                    status: ExecutorStatus::Idle,
                });
            }
        }
        let mut dags = workload.jobs.clone();
        dags.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
        let mut state = ClusterState {
            config,
            clock: 0.0,
            executors,
            jobs: dags.into_iter().map(JobRuntime::new).collect(),
            events: BinaryHeap::new(),
            next_seq: 0,
            completed: Vec::new(),
            rng: seeded(seed),
            horizon,
            truncated: false,
            done: false,
            unreported_penalty: 0.0,
            total_penalty: 0.0,
            actions_taken: 0,
            tasks: Vec::new(),
            audit: Vec::new(),
        };
        for j in 0..state.jobs.len() {
            let t = state.jobs[j].dag.arrival_time;
            state.push_event(t, EventKind::JobArrival { job: j });
        }
        state.advance()?;
        Ok(state)
    }

    // ----- accessors -------------------------------------------------------

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn jobs(&self) -> &[JobRuntime] {
        &self.jobs
    }

    pub fn job(&self, j: usize) -> &JobRuntime {
        &self.jobs[j]
    }

    pub fn job_id(&self, j: usize) -> &str {
        &self.jobs[j].dag.id
    }

    pub fn executors(&self) -> &[ExecutorState] {
        &self.executors
    }

    pub fn num_executors(&self) -> usize {
        self.executors.len()
    }

    pub fn completed_jobs(&self) -> &[CompletedJob] {
        &self.completed
    }

    pub fn task_records(&self) -> &[TaskRecord] {
        &self.tasks
    }

    pub fn audit_log(&self) -> &[AuditRecord] {
        &self.audit
    }

    pub fn actions_taken(&self) -> usize {
        self.actions_taken
    }

    /// Sum of all penalties accrued so far (positive; rewards are its negation).
    pub fn total_penalty(&self) -> f64 {
        self.total_penalty
    }

    /// Jobs that have arrived and not completed, in arrival order.
    pub fn jobs_in_system(&self) -> Vec<usize> {
        (0..self.jobs.len()).filter(|&j| self.jobs[j].in_system()).collect()
    }

    pub fn num_jobs_in_system(&self) -> usize {
        self.jobs.iter().filter(|j| j.in_system()).count()
    }

    pub fn free_executors(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.executors.len()).filter(|&e| self.executors[e].is_free())
    }

    pub fn num_free_executors(&self) -> usize {
        self.free_executors().count()
    }

    pub fn free_in_class(&self, class: usize) -> usize {
        self.executors
            .iter()
            .filter(|e| e.is_free() && e.class_id == class)
            .count()
    }

    /// Number of free executors currently bound to job `j`.
    pub fn free_bound_to(&self, j: usize) -> usize {
        self.executors
            .iter()
            .filter(|e| e.is_free() && e.bound_job == Some(j))
            .count()
    }

    /// Executors running or moving to tasks of `stage`.
    pub fn executors_on_stage(&self, stage: StageRef) -> usize {
        self.jobs[stage.job].stages[stage.stage].running
    }

    /// Stages whose parents are all complete and which have at least one
    /// waiting task.
    pub fn runnable_frontier(&self) -> Vec<StageRef> {
        let mut out = Vec::new();
        for (j, job) in self.jobs.iter().enumerate() {
            if !job.in_system() {
                continue;
            }
            for v in 0..job.stages.len() {
                if job.stage_runnable(v) {
                    out.push(StageRef::new(j, v));
                }
            }
        }
        out
    }

    fn fits(&self, stage: StageRef, executor: &ExecutorState) -> bool {
        if !self.config.multi_resource {
            return true;
        }
        let s = &self.jobs[stage.job].dag.stages[stage.stage];
        executor.mem_capacity >= s.mem_request && executor.cpu_capacity >= s.cpu_request
    }

    /// Whether a free executor of `class` can run tasks of `stage`.
    pub fn class_fits(&self, stage: StageRef, class: usize) -> bool {
        self.executors
            .iter()
            .any(|e| e.is_free() && e.class_id == class && self.fits(stage, e))
    }

    /// Classes with at least one free executor able to run `stage`.
    pub fn eligible_classes(&self, stage: StageRef) -> Vec<usize> {
        (0..self.config.classes.len())
            .filter(|&c| self.class_fits(stage, c))
            .collect()
    }

    /// Runnable stages that some free executor can serve: the set actions
    /// may target.
    pub fn schedulable_frontier(&self) -> Vec<StageRef> {
        if self.num_free_executors() == 0 {
            return Vec::new();
        }
        self.runnable_frontier()
            .into_iter()
            .filter(|&s| self.executors.iter().any(|e| e.is_free() && self.fits(s, e)))
            .collect()
    }

    pub fn needs_action(&self) -> bool {
        !self.done && !self.schedulable_frontier().is_empty()
    }

    pub fn episode_jct_stats(&self) -> Option<JctStats> {
        JctStats::from_completed(&self.completed)
    }

    // ----- stepping --------------------------------------------------------

    /// Checks an action against the current state without applying it.
    pub fn validate_action(&self, action: &Action) -> Result<()> {
        let illegal = |m: String| Err(Error::IllegalAction(m));
        if self.done {
            return illegal("episode is done".into());
        }
        let StageRef { job, stage } = action.stage;
        if job >= self.jobs.len() || stage >= self.jobs[job].stages.len() {
            return illegal(format!("stage ({job},{stage}) does not exist"));
        }
        if !self.jobs[job].stage_runnable(stage) {
            return illegal(format!("stage ({job},{stage}) is not runnable"));
        }
        let alloc = self.jobs[job].executors_allocated;
        if action.limit <= alloc {
            return illegal(format!(
                "limit {} must exceed the {alloc} executors allocated to job {job}",
                action.limit
            ));
        }
        match (self.config.multi_resource, action.class) {
            (true, None) => return illegal("multi-resource actions need an executor class".into()),
            (true, Some(c)) if !self.class_fits(action.stage, c) => {
                return illegal(format!("no free executor of class {c} fits stage ({job},{stage})"))
            }
            (false, Some(c)) if c != 0 => return illegal(format!("unknown executor class {c}")),
            _ => {}
        }
        if !self.executors.iter().any(|e| e.is_free() && self.fits(action.stage, e)) {
            return illegal("no free executor".into());
        }
        Ok(())
    }

    /// Applies `action`, then simulates until another decision is needed or
    /// the episode ends. The reward is the negated penalty accrued since the
    /// previous reported reward.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        self.validate_action(action)?;
        let StageRef { job, stage } = action.stage;
        self.actions_taken += 1;
        self.log(
            "action",
            Some(job),
            Some(stage),
            None,
            format!("limit={} class={:?}", action.limit, action.class),
        );
        self.jobs[job].parallelism_limit = action.limit;

        let want = (action.limit - self.jobs[job].executors_allocated)
            .min(self.jobs[job].stages[stage].remaining);
        for e in self.pick_executors(action, want) {
            self.dispatch(e, action.stage);
        }

        self.advance()?;
        let reward = -std::mem::take(&mut self.unreported_penalty);
        Ok(StepOutcome {
            reward,
            done: self.done,
        })
    }

    /// Free executors eligible for `action`: bound to the job first, then
    /// unbound, then bound elsewhere; lowest index first within each group.
    fn pick_executors(&self, action: &Action, want: usize) -> Vec<usize> {
        let job = action.stage.job;
        let mut cands: Vec<(u8, usize)> = self
            .executors
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                e.is_free()
                    && self.fits(action.stage, e)
                    && (!self.config.multi_resource || Some(e.class_id) == action.class)
            })
            .map(|(i, e)| {
                let rank = match e.bound_job {
                    Some(b) if b == job => 0,
                    None => 1,
                    Some(_) => 2,
                };
                (rank, i)
            })
            .collect();
        cands.sort_unstable();
        cands.into_iter().take(want).map(|(_, i)| i).collect()
    }

    fn dispatch(&mut self, e: usize, stage: StageRef) {
        let job = stage.job;
        let st = &mut self.jobs[job].stages[stage.stage];
        st.remaining -= 1;
        st.running += 1;
        self.jobs[job].executors_allocated += 1;
        let switching = matches!(self.executors[e].bound_job, Some(b) if b != job);
        self.executors[e].bound_job = Some(job);
        if switching && self.config.move_delay > 0.0 {
            let until = self.clock + self.config.move_delay;
            self.executors[e].status = ExecutorStatus::Moving { stage, until };
            self.push_event(until, EventKind::MoveDone { executor: e });
            self.log("move_start", Some(job), Some(stage.stage), Some(e), format!("until={until}"));
        } else {
            self.start_task(e, stage);
        }
    }

    fn start_task(&mut self, e: usize, stage: StageRef) {
        let job = &mut self.jobs[stage.job];
        let spec = &job.dag.stages[stage.stage];
        let rt = &job.stages[stage.stage];
        let wave = if self.config.waves && !rt.first_wave_done {
            Wave::First
        } else {
            Wave::Later
        };
        let parallelism = if self.config.inflation { rt.running } else { 1 };
        let duration = if self.config.noise {
            sample_task_duration(spec, wave, parallelism, &mut self.rng)
        } else {
            crate::workload::mean_task_duration(spec, wave, parallelism)
        };
        let until = self.clock + duration;
        self.executors[e].status = ExecutorStatus::Busy {
            stage,
            started: self.clock,
            until,
        };
        self.push_event(until, EventKind::TaskDone { executor: e });
        self.log(
            "task_start",
            Some(stage.job),
            Some(stage.stage),
            Some(e),
            format!("duration={duration} wave={wave:?}"),
        );
    }

    fn push_event(&mut self, time: f64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(Reverse(Event { time, seq, kind }));
    }

    fn accrue_to(&mut self, t: f64) {
        let dt = t - self.clock;
        debug_assert!(dt >= 0.0, "clock moved backwards");
        if dt > 0.0 {
            let penalty = match self.config.objective {
                Objective::AvgJct => dt * self.num_jobs_in_system() as f64,
                Objective::Makespan => dt,
            };
            self.unreported_penalty += penalty;
            self.total_penalty += penalty;
        }
        self.clock = t;
    }

    fn all_finished(&self) -> bool {
        self.jobs.iter().all(|j| j.completion_time.is_some())
    }

    /// Idle executors whose job has nothing runnable go back to the pool.
    fn release_idle(&mut self) {
        for e in 0..self.executors.len() {
            if let (ExecutorStatus::Idle, Some(j)) = (self.executors[e].status, self.executors[e].bound_job) {
                let job = &self.jobs[j];
                let has_work = job.in_system() && (0..job.stages.len()).any(|v| job.stage_runnable(v));
                if !has_work {
                    self.executors[e].bound_job = None;
                }
            }
        }
    }

    /// Processes events until a decision is needed, the episode finishes, or
    /// the horizon is reached.
    fn advance(&mut self) -> Result<()> {
        loop {
            self.release_idle();
            if self.all_finished() {
                self.done = true;
                return Ok(());
            }
            if !self.schedulable_frontier().is_empty() {
                return Ok(());
            }
            let Some(Reverse(next)) = self.events.peek().copied() else {
                return Err(Error::Usage(format!(
                    "simulation stalled at t={} with unfinished jobs",
                    self.clock
                )));
            };
            if let Some(h) = self.horizon {
                if next.time > h {
                    self.accrue_to(h.max(self.clock));
                    self.truncated = true;
                    self.done = true;
                    return Ok(());
                }
            }
            self.accrue_to(next.time);
            while let Some(Reverse(ev)) = self.events.peek().copied() {
                if ev.time != next.time {
                    break;
                }
                self.events.pop();
                self.process(ev);
            }
        }
    }

    fn process(&mut self, ev: Event) {
        match ev.kind {
            EventKind::JobArrival { job } => {
                self.jobs[job].arrived = true;
                self.log("job_arrival", Some(job), None, None, String::new());
            }
            EventKind::MoveDone { executor } => {
                let ExecutorStatus::Moving { stage, .. } = self.executors[executor].status else {
                    unreachable!("move completion for an executor that is not moving");
                };
                self.start_task(executor, stage);
            }
            EventKind::TaskDone { executor } => self.finish_task(executor),
        }
    }

    fn finish_task(&mut self, e: usize) {
        let ExecutorStatus::Busy { stage, started, until } = self.executors[e].status else {
            unreachable!("task completion for an idle executor");
        };
        let StageRef { job: j, stage: v } = stage;
        if self.config.record_tasks {
            let spec = &self.jobs[j].dag.stages[v];
            self.tasks.push(TaskRecord {
                executor: e,
                job: j,
                job_id: self.jobs[j].dag.id.clone(),
                stage: v,
                start: started,
                end: until,
                mem_capacity: self.executors[e].mem_capacity,
                mem_request: spec.mem_request,
                cpu_capacity: self.executors[e].cpu_capacity,
                cpu_request: spec.cpu_request,
            });
        }
        self.log("task_finish", Some(j), Some(v), Some(e), String::new());
        {
            let st = &mut self.jobs[j].stages[v];
            st.running -= 1;
            st.finished += 1;
            st.first_wave_done = true;
        }
        self.jobs[j].executors_allocated -= 1;
        self.executors[e].status = ExecutorStatus::Idle;

        if self.jobs[j].stage_complete(v) {
            self.log("stage_complete", Some(j), Some(v), None, String::new());
            if (0..self.jobs[j].stages.len()).all(|u| self.jobs[j].stage_complete(u)) {
                self.complete_job(j);
                return;
            }
        }
        // Keep draining the same stage without a new decision.
        if self.jobs[j].stages[v].remaining > 0 {
            self.dispatch(e, stage);
        }
    }

    fn complete_job(&mut self, j: usize) {
        let t = self.clock;
        self.jobs[j].completion_time = Some(t);
        self.completed.push(CompletedJob {
            job: j,
            job_id: self.jobs[j].dag.id.clone(),
            arrival_time: self.jobs[j].dag.arrival_time,
            completion_time: t,
        });
        for ex in &mut self.executors {
            if ex.bound_job == Some(j) && ex.is_free() {
                ex.bound_job = None;
            }
        }
        self.log("job_complete", Some(j), None, None, format!("jct={}", t - self.jobs[j].dag.arrival_time));
    }

    fn log(&mut self, kind: &'static str, job: Option<usize>, stage: Option<usize>, executor: Option<usize>, detail: String) {
        if self.config.audit {
            self.audit.push(AuditRecord {
                clock: self.clock,
                kind: kind.to_string(),
                job_id: job.map(|j| self.jobs[j].dag.id.clone()),
                stage,
                executor,
                detail,
            });
        }
    }

    /// Structural invariants; returns the first violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let (mut busy, mut moving, mut free) = (0, 0, 0);
        let mut per_job = vec![0usize; self.jobs.len()];
        let mut per_stage = std::collections::HashMap::new();
        for (i, e) in self.executors.iter().enumerate() {
            match e.status {
                ExecutorStatus::Idle => free += 1,
                ExecutorStatus::Busy { stage, .. } | ExecutorStatus::Moving { stage, .. } => {
                    if matches!(e.status, ExecutorStatus::Busy { .. }) {
                        busy += 1;
                    } else {
                        moving += 1;
                    }
                    if e.bound_job != Some(stage.job) {
                        return Err(format!("executor {i} works for job {} but is bound elsewhere", stage.job));
                    }
                    if !self.fits(stage, e) {
                        return Err(format!("executor {i} too small for its task"));
                    }
                    per_job[stage.job] += 1;
                    *per_stage.entry(stage).or_insert(0usize) += 1;
                }
            }
        }
        if busy + moving + free != self.executors.len() {
            return Err("executor conservation violated".into());
        }
        for (j, job) in self.jobs.iter().enumerate() {
            if job.executors_allocated != per_job[j] {
                return Err(format!("job {j} allocation count drifted"));
            }
            for (v, st) in job.stages.iter().enumerate() {
                if st.remaining + st.running + st.finished != job.dag.stages[v].num_tasks {
                    return Err(format!("job {j} stage {v} task accounting broken"));
                }
                if st.running != per_stage.get(&StageRef::new(j, v)).copied().unwrap_or(0) {
                    return Err(format!("job {j} stage {v} running count drifted"));
                }
                if st.running + st.finished > 0 && !job.parents[v].iter().all(|&p| job.stage_complete(p)) {
                    return Err(format!("job {j} stage {v} started before its parents completed"));
                }
            }
        }
        Ok(())
    }
}
