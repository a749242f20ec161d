//! JSON trace files.
//!
//! ```json
//! {"schema_version": 1,
//!  "jobs": [{"id": "a", "arrival_time": 0.0,
//!            "stages": [{"num_tasks": 4, "first_wave_mean": 2.0,
//!                        "later_wave_mean": 1.5, "cpu": 1.0, "mem": 0.5}],
//!            "edges": []}]}
//! ```
//!
//! Stages may also carry `noise_cv` and an `inflation` list of
//! `[parallelism, factor]` pairs; both default to "off".

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dag::{ArrivalKind, ArrivalProcess, DurationModel, JobDag, StageSpec, Workload};
use crate::error::{Error, Result};

pub const TRACE_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceStage {
    num_tasks: usize,
    first_wave_mean: f64,
    later_wave_mean: f64,
    cpu: f64,
    mem: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    noise_cv: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    inflation: Vec<(usize, f64)>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceJob {
    id: String,
    arrival_time: f64,
    stages: Vec<TraceStage>,
    #[serde(default)]
    edges: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize)]
struct TraceFile<'a> {
    schema_version: u64,
    jobs: &'a [TraceJob],
}

fn parse_err(record: impl Into<String>, message: impl ToString) -> Error {
    Error::Parse {
        record: record.into(),
        message: message.to_string(),
    }
}

/// Parses a trace document. Jobs come back sorted by arrival time (stable).
pub fn parse_trace(text: &str) -> Result<Workload> {
    let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_err("document", e))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| parse_err("document", "top level must be an object"))?;
    match obj.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(TRACE_SCHEMA_VERSION) => {}
        Some(v) => return Err(parse_err("schema_version", format!("unsupported version {v}"))),
        None => return Err(parse_err("schema_version", "missing or not an integer")),
    }
    let raw_jobs = obj
        .get("jobs")
        .and_then(serde_json::Value::as_array)
        .ok_or_else(|| parse_err("jobs", "missing or not an array"))?;

    let mut jobs = Vec::with_capacity(raw_jobs.len());
    for (i, raw) in raw_jobs.iter().enumerate() {
        let tj: TraceJob =
            serde_json::from_value(raw.clone()).map_err(|e| parse_err(format!("jobs[{i}]"), e))?;
        let stages = tj
            .stages
            .into_iter()
            .map(|s| {
                let model = DurationModel {
                    first_wave_mean: s.first_wave_mean,
                    later_wave_mean: s.later_wave_mean,
                    noise_cv: s.noise_cv,
                    inflation: s.inflation,
                };
                StageSpec::new(s.num_tasks, model).with_resources(s.cpu, s.mem)
            })
            .collect();
        jobs.push(JobDag::new(tj.id, stages, tj.edges, tj.arrival_time)?);
    }
    jobs.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
    let kind = if jobs.iter().all(|j| j.arrival_time == 0.0) {
        ArrivalKind::Batch
    } else {
        ArrivalKind::Trace
    };
    let arrival = ArrivalProcess {
        kind,
        num_jobs: jobs.len(),
    };
    Ok(Workload { jobs, arrival })
}

pub fn load_trace(path: &Path) -> Result<Workload> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text)
}

pub fn trace_to_string(jobs: &[JobDag]) -> String {
    let tj: Vec<TraceJob> = jobs
        .iter()
        .map(|j| TraceJob {
            id: j.id.clone(),
            arrival_time: j.arrival_time,
            stages: j
                .stages
                .iter()
                .map(|s| TraceStage {
                    num_tasks: s.num_tasks,
                    first_wave_mean: s.duration.first_wave_mean,
                    later_wave_mean: s.duration.later_wave_mean,
                    cpu: s.cpu_request,
                    mem: s.mem_request,
                    noise_cv: s.duration.noise_cv,
                    inflation: s.duration.inflation.clone(),
                })
                .collect(),
            edges: j.edges.clone(),
        })
        .collect();
    serde_json::to_string_pretty(&TraceFile {
        schema_version: TRACE_SCHEMA_VERSION,
        jobs: &tj,
    })
    .expect("trace serialises")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = include_str!("../../../../docs/sample_trace.json");

    #[test]
    fn sample_trace_loads() {
        let w = parse_trace(SAMPLE).unwrap();
        let arrivals: Vec<f64> = w.jobs.iter().map(|j| j.arrival_time).collect();
        assert_eq!(arrivals, vec![0.0, 30.0]);
        assert_eq!(w.arrival.kind, ArrivalKind::Trace);
        assert_eq!(w.arrival.num_jobs, 2);
    }

    #[test]
    fn jobs_are_sorted_by_arrival() {
        let text = r#"{"schema_version":1,"jobs":[
          {"id":"late","arrival_time":9.0,"stages":[{"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1}],"edges":[]},
          {"id":"early","arrival_time":1.0,"stages":[{"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1}],"edges":[]}]}"#;
        let w = parse_trace(text).unwrap();
        assert_eq!(w.jobs[0].id, "early");
    }

    #[test]
    fn self_edge_is_a_validation_error() {
        let text = r#"{"schema_version":1,"jobs":[{"id":"bad","arrival_time":0,
          "stages":[{"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1},
                    {"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1},
                    {"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1},
                    {"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1}],
          "edges":[[3,3]]}]}"#;
        let e = parse_trace(text).unwrap_err();
        assert!(matches!(&e, Error::Validation { job_id, .. } if job_id == "bad"));
        assert!(e.to_string().contains("self-edge"), "{e}");
    }

    #[test]
    fn cycle_names_the_job() {
        let text = r#"{"schema_version":1,"jobs":[{"id":"loop","arrival_time":0,
          "stages":[{"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1},
                    {"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1}],
          "edges":[[0,1],[1,0]]}]}"#;
        let e = parse_trace(text).unwrap_err();
        assert!(e.to_string().contains("loop"), "{e}");
    }

    #[test]
    fn malformed_record_is_named() {
        let text = r#"{"schema_version":1,"jobs":[
          {"id":"ok","arrival_time":0,"stages":[{"num_tasks":1,"first_wave_mean":1,"later_wave_mean":1,"cpu":1,"mem":1}]},
          {"id":"broken","arrival_time":0,"stages":[{"num_tasks":"many"}]}]}"#;
        let e = parse_trace(text).unwrap_err();
        assert!(matches!(&e, Error::Parse { record, .. } if record == "jobs[1]"), "{e}");
        assert!(matches!(parse_trace("{not json"), Err(Error::Parse { .. })));
        assert!(matches!(parse_trace(r#"{"jobs":[]}"#), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_trace_is_batch() {
        let w = parse_trace(r#"{"schema_version":1,"jobs":[]}"#).unwrap();
        assert!(w.jobs.is_empty());
        assert_eq!(w.arrival, ArrivalProcess::batch(0));
    }

    #[test]
    fn round_trips_through_text() {
        let jobs = crate::workload::gen_tpch_like(4, 5, &[2.0, 10.0]).unwrap();
        let w = parse_trace(&trace_to_string(&jobs)).unwrap();
        assert_eq!(w.jobs, jobs);
    }
}
