use serde::{Deserialize, Serialize};

pub const GANTT_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletedJob {
    pub job: usize,
    pub job_id: String,
    pub arrival_time: f64,
    pub completion_time: f64,
}

impl CompletedJob {
    pub fn jct(&self) -> f64 {
        self.completion_time - self.arrival_time
    }
}

/// JCT summary of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JctStats {
    pub average_jct: f64,
    pub makespan: f64,
    pub per_job: Vec<CompletedJob>,
}

impl JctStats {
    /// `None` when no job completed.
    pub fn from_completed(done: &[CompletedJob]) -> Option<Self> {
        if done.is_empty() {
            return None;
        }
        let average_jct = done.iter().map(CompletedJob::jct).sum::<f64>() / done.len() as f64;
        let makespan = done.iter().map(|c| c.completion_time).fold(f64::MIN, f64::max);
        Some(JctStats {
            average_jct,
            makespan,
            per_job: done.to_vec(),
        })
    }

    pub fn jcts(&self) -> Vec<f64> {
        self.per_job.iter().map(CompletedJob::jct).collect()
    }
}

/// One executed task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub executor: usize,
    pub job: usize,
    pub job_id: String,
    pub stage: usize,
    pub start: f64,
    pub end: f64,
    pub mem_capacity: f64,
    pub mem_request: f64,
    pub cpu_capacity: f64,
    pub cpu_request: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanttBar {
    pub executor: usize,
    pub job_id: String,
    pub stage: usize,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GanttDoc {
    pub schema_version: u64,
    pub bars: Vec<GanttBar>,
}

pub fn gantt_bars(tasks: &[TaskRecord]) -> Vec<GanttBar> {
    let mut bars: Vec<GanttBar> = tasks
        .iter()
        .map(|t| GanttBar {
            executor: t.executor,
            job_id: t.job_id.clone(),
            stage: t.stage,
            start: t.start,
            end: t.end,
        })
        .collect();
    bars.sort_by(|a, b| a.executor.cmp(&b.executor).then(a.start.total_cmp(&b.start)));
    bars
}

pub fn gantt_json(tasks: &[TaskRecord]) -> String {
    serde_json::to_string_pretty(&GanttDoc {
        schema_version: GANTT_SCHEMA_VERSION,
        bars: gantt_bars(tasks),
    })
    .expect("gantt serialises")
}

/// Fraction of busy executor memory not requested by the task it runs,
/// weighted by task duration.
pub fn memory_fragmentation(tasks: &[TaskRecord]) -> f64 {
    let (waste, cap) = tasks.iter().fold((0.0, 0.0), |(w, c), t| {
        let d = t.end - t.start;
        (w + (t.mem_capacity - t.mem_request) * d, c + t.mem_capacity * d)
    });
    if cap == 0.0 {
        0.0
    } else {
        waste / cap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub clock: f64,
    pub kind: String,
    pub job_id: Option<String>,
    pub stage: Option<usize>,
    pub executor: Option<usize>,
    pub detail: String,
}

pub fn audit_jsonl(records: &[AuditRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("audit record serialises"));
        out.push('\n');
    }
    out
}
