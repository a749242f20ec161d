//! Experiment runner behind the `dagsched` binary.
//!
//! Every subcommand reads an optional key-value config file (see
//! [`config`]) plus `--set key=value` overrides and writes its outputs under
//! `output_dir`. Exit status: 0 on success, 2 for configuration errors, 3
//! for runtime failures.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gnn::critical_path_probe;
use crate::heuristics::{exhaustive_search, Heuristic, HeuristicConfig, HeuristicKind};
use crate::policy::{PolicyParams, PolicyScheduler};
use crate::rng::derive_seed;
use crate::simenv::{gantt_json, run_episode, ClusterState, CompletedJob, JctStats, Scheduler};
use crate::training::{curve_csv, Checkpoint, Trainer};
use crate::util::{mean, percentile, write_atomic};
use crate::workload::{load_trace, JobDag, Workload};

pub use config::{ExperimentConfig, RawConfig, SchedulerChoice, WorkloadSource};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Version of the JSON documents written by the CLI.
pub const OUTPUT_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "dagsched", version, about = "Scheduling lab for DAG-structured jobs on a simulated cluster")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Key-value config file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set train.iterations=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy; writes checkpoints and the learning curve.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from `<output_dir>/checkpoint.json`.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate schedulers over seeds; per-job CSVs, summary and Gantt JSON.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated schedulers; overrides `compare.schedulers`.
        #[arg(long, value_delimiter = ',')]
        schedulers: Option<Vec<String>>,
    },
    /// Critical-path expressiveness probe for both embedding variants.
    ProbeCp {
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustive search over job orders in the simplified environment.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Run the configured scheduler once and write its Gantt chart.
    ExportGantt {
        #[command(flatten)]
        common: Common,
        /// Output file; defaults to `<output_dir>/gantt.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidArgument(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut raw = match &common.config {
        // An unreadable config file is a configuration error, not a runtime one.
        Some(p) => RawConfig::load(p).map_err(|e| Error::InvalidConfig(e.to_string()))?,
        None => RawConfig::default(),
    };
    for s in &common.overrides {
        raw.set(s)?;
    }
    ExperimentConfig::from_raw(&raw)
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train { common, resume } => cmd_train(&load_config(&common)?, resume),
        Command::Compare { common, schedulers } => {
            let mut cfg = load_config(&common)?;
            if let Some(s) = schedulers {
                cfg.compare.schedulers = s.into_iter().filter(|n| !n.is_empty()).collect();
            }
            cmd_compare(&cfg)
        }
        Command::ProbeCp { common } => cmd_probe_cp(&load_config(&common)?),
        Command::Oracle { common } => cmd_oracle(&load_config(&common)?),
        Command::ExportGantt { common, out } => cmd_export_gantt(&load_config(&common)?, out.as_deref()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

// ----- train ---------------------------------------------------------------

/// Trains per `cfg.train`, writing `checkpoint.json` (latest),
/// `checkpoints/iter-NNNNNN.json` every `checkpoint_interval` iterations and
/// `curve.csv` after every iteration.
pub fn cmd_train(cfg: &ExperimentConfig, resume: bool) -> Result<()> {
    let WorkloadSource::Synthetic(spec) = &cfg.workload else {
        return Err(Error::InvalidConfig(
            "train needs a synthetic workload; unset workload.trace".into(),
        ));
    };
    let dir = &cfg.output_dir;
    let latest = dir.join("checkpoint.json");
    let mut trainer = if resume {
        let text = std::fs::read_to_string(&latest).map_err(|e| Error::io(&latest, e))?;
        Trainer::resume(cfg.train.clone(), cfg.env.clone(), spec.clone(), Checkpoint::from_json(&text)?)?
    } else {
        Trainer::new(cfg.train.clone(), cfg.env.clone(), spec.clone())?
    };
    let save = |t: &Trainer| -> Result<()> {
        let ckpt = t.checkpoint().to_json();
        let it = t.iteration();
        let every = t.cfg.checkpoint_interval;
        if (every > 0 && it.is_multiple_of(every)) || t.is_finished() {
            write_text(&dir.join(format!("checkpoints/iter-{it:06}.json")), &ckpt)?;
        }
        write_text(&latest, &ckpt)?;
        write_text(&dir.join("curve.csv"), &curve_csv(t.curve()))
    };
    if trainer.is_finished() {
        save(&trainer)?;
    }
    trainer.run(|t| {
        let row = t.curve().last().expect("row per iteration");
        if let Some(e) = row.eval_avg_jct {
            println!(
                "iteration {} mean_return {:.3} eval_avg_jct {:.3}",
                row.iteration, row.mean_return, e
            );
        }
        save(t)
    })?;
    println!("trained {} iterations; outputs in {}", trainer.iteration(), dir.display());
    Ok(())
}

// ----- compare -------------------------------------------------------------

/// A scheduler under comparison with its output label.
#[derive(Clone)]
pub enum Contender {
    Heuristic { label: String, heuristic: Heuristic },
    Policy { label: String, params: Arc<PolicyParams> },
}

impl Contender {
    pub fn label(&self) -> &str {
        match self {
            Contender::Heuristic { label, .. } | Contender::Policy { label, .. } => label,
        }
    }

    pub fn scheduler(&self) -> Box<dyn Scheduler + Send> {
        match self {
            Contender::Heuristic { heuristic, .. } => Box::new(heuristic.clone()),
            Contender::Policy { params, .. } => Box::new(PolicyScheduler::greedy(params.clone())),
        }
    }
}

fn load_policy(path: &Path) -> Result<Arc<PolicyParams>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(Arc::new(Checkpoint::from_json(&text)?.policy()?))
}

fn heuristic(kind: HeuristicKind, config: &HeuristicConfig) -> Contender {
    let h = Heuristic::with_config(kind, config.clone());
    Contender::Heuristic {
        label: h.name(),
        heuristic: h,
    }
}

/// Resolves `compare.schedulers` (heuristic names or `checkpoint`) and the
/// configured sweeps into contenders.
pub fn contenders(cfg: &ExperimentConfig) -> Result<Vec<Contender>> {
    let mut out = Vec::new();
    for name in &cfg.compare.schedulers {
        if name == "checkpoint" {
            let SchedulerChoice::Checkpoint(p) = &cfg.scheduler else {
                return Err(Error::InvalidConfig(
                    "scheduler 'checkpoint' needs scheduler.checkpoint to be set".into(),
                ));
            };
            out.push(Contender::Policy {
                label: "policy".into(),
                params: load_policy(p)?,
            });
        } else {
            let kind: HeuristicKind = name.parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "unknown scheduler '{name}'; valid: {}, checkpoint",
                    HeuristicKind::valid_names()
                ))
            })?;
            out.push(heuristic(kind, &cfg.heuristic));
        }
    }
    for &a in &cfg.compare.alpha_sweep {
        let hc = HeuristicConfig {
            fairness_exponent: a,
            ..cfg.heuristic.clone()
        };
        out.push(heuristic(HeuristicKind::WeightedFair, &hc));
    }
    for &d in &cfg.compare.graphene_duration_grid {
        for &m in &cfg.compare.graphene_mem_grid {
            let hc = HeuristicConfig {
                graphene_duration_threshold: d,
                graphene_mem_threshold: m,
                ..cfg.heuristic.clone()
            };
            out.push(Contender::Heuristic {
                label: format!("graphene_star(d={d},m={m})"),
                heuristic: Heuristic::with_config(HeuristicKind::GrapheneStar, hc),
            });
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig("compare needs at least one scheduler".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = out.iter().find(|c| !seen.insert(c.label().to_string())) {
        return Err(Error::InvalidConfig(format!("scheduler '{}' listed twice", dup.label())));
    }
    Ok(out)
}

/// The workload of evaluation seed `k`: synthetic workloads are redrawn per
/// seed, a trace is fixed and only the simulator seed changes.
pub fn workload_for_seed(cfg: &ExperimentConfig, k: usize) -> Result<(Workload, u64)> {
    let seed = derive_seed(cfg.seed, k as u64);
    let w = match &cfg.workload {
        WorkloadSource::Synthetic(spec) => spec.sample(seed)?,
        WorkloadSource::Trace(p) => load_trace(p)?,
    };
    Ok((w, seed))
}

/// Label usable as a path component.
pub fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.=".contains(c) { c } else { '_' })
        .collect()
}

pub const JOBS_CSV_HEADER: &str = "job_id,arrival_time,completion_time,jct";
pub const SUMMARY_CSV_HEADER: &str = "scheduler,seeds,mean_avg_jct,p50_avg_jct,p95_avg_jct";

pub fn jobs_csv(done: &[CompletedJob]) -> String {
    let mut s = String::from(JOBS_CSV_HEADER);
    s.push('\n');
    for c in done {
        writeln!(s, "{},{},{},{}", c.job_id, c.arrival_time, c.completion_time, c.jct()).expect("string write");
    }
    s
}

struct RunResult {
    stats: JctStats,
    jobs_csv: String,
    gantt: String,
}

fn run_one(cfg: &ExperimentConfig, c: &Contender, k: usize) -> Result<RunResult> {
    let (w, seed) = workload_for_seed(cfg, k)?;
    let mut env = cfg.env.clone();
    env.record_tasks = true;
    let mut state = ClusterState::reset(&w, env, seed)?;
    let sum = run_episode(&mut state, c.scheduler().as_mut())?;
    let stats = sum
        .stats
        .ok_or_else(|| Error::Usage(format!("{}: seed {k} completed no jobs", c.label())))?;
    Ok(RunResult {
        stats,
        jobs_csv: jobs_csv(state.completed_jobs()),
        gantt: gantt_json(state.task_records()),
    })
}

/// Writes `jobs/<sched>/seed-KKK.csv`, `gantt/<sched>/seed-KKK.json` and
/// `summary.csv` with mean, p50 and p95 of the per-seed average JCT.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<()> {
    let cs = contenders(cfg)?;
    let seeds = cfg.compare.seeds;
    let pairs: Vec<(usize, usize)> = (0..cs.len()).flat_map(|i| (0..seeds).map(move |k| (i, k))).collect();
    let results: Vec<RunResult> = pairs
        .par_iter()
        .map(|&(i, k)| run_one(cfg, &cs[i], k))
        .collect::<Result<_>>()?;
    let dir = &cfg.output_dir;
    let mut summary = String::from(SUMMARY_CSV_HEADER);
    summary.push('\n');
    for (i, c) in cs.iter().enumerate() {
        let fl = file_label(c.label());
        let mut avgs = Vec::with_capacity(seeds);
        for k in 0..seeds {
            let r = &results[i * seeds + k];
            write_text(&dir.join(format!("jobs/{fl}/seed-{k:03}.csv")), &r.jobs_csv)?;
            write_text(&dir.join(format!("gantt/{fl}/seed-{k:03}.json")), &r.gantt)?;
            avgs.push(r.stats.average_jct);
        }
        let m = mean(&avgs).expect("seeds >= 1");
        let p50 = percentile(&avgs, 0.5).expect("seeds >= 1");
        let p95 = percentile(&avgs, 0.95).expect("seeds >= 1");
        writeln!(summary, "{},{seeds},{m},{p50},{p95}", c.label()).expect("string write");
        println!("{:<32} mean {m:.3}  p50 {p50:.3}  p95 {p95:.3}", c.label());
    }
    write_text(&dir.join("summary.csv"), &summary)
}

// ----- probe ---------------------------------------------------------------

pub const PROBE_CSV_HEADER: &str = "iteration,two_level_accuracy,single_level_accuracy";

/// Writes `probe_cp.csv` (accuracy against iteration for both variants).
pub fn cmd_probe_cp(cfg: &ExperimentConfig) -> Result<()> {
    let report = critical_path_probe(&cfg.probe)?;
    let mut csv = String::from(PROBE_CSV_HEADER);
    csv.push('\n');
    for p in &report.curve {
        writeln!(csv, "{},{},{}", p.iteration, p.two_level, p.single_level).expect("string write");
    }
    write_text(&cfg.output_dir.join("probe_cp.csv"), &csv)?;
    println!(
        "two-level accuracy {:.3}, single-level accuracy {:.3}",
        report.two_level_accuracy, report.single_level_accuracy
    );
    Ok(())
}

// ----- oracle --------------------------------------------------------------

pub const ORACLE_CSV_HEADER: &str = "scheduler,instances,mean_avg_jct";
pub const ORACLE_INSTANCES_HEADER: &str = "seed,scheduler,avg_jct,best_order";

fn oracle_jobs(cfg: &ExperimentConfig, k: usize) -> Result<Vec<JobDag>> {
    Ok(match &cfg.workload {
        WorkloadSource::Synthetic(spec) => {
            let s = crate::workload::WorkloadSpec {
                num_jobs: cfg.oracle.num_jobs,
                mean_interarrival: None,
                ..spec.clone()
            };
            s.sample(derive_seed(cfg.seed, k as u64))?.jobs
        }
        WorkloadSource::Trace(p) => load_trace(p)?.jobs,
    })
}

/// Compares the exhaustive-search oracle with SJF-CP, weighted fair and an
/// optional checkpoint policy in the simplified environment. Writes
/// `oracle.csv` (means) and `oracle_instances.csv` (per seed).
pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.oracle.num_jobs > cfg.oracle.cap {
        return Err(Error::Refused(format!(
            "oracle.num_jobs {} exceeds the exhaustive-search cap {}",
            cfg.oracle.num_jobs, cfg.oracle.cap
        )));
    }
    let env = cfg.env.clone().simplified();
    let mut cs = vec![
        heuristic(HeuristicKind::SjfCp, &cfg.heuristic),
        heuristic(HeuristicKind::WeightedFair, &cfg.heuristic),
    ];
    if let SchedulerChoice::Checkpoint(p) = &cfg.scheduler {
        cs.push(Contender::Policy {
            label: "policy".into(),
            params: load_policy(p)?,
        });
    }
    let rows: Vec<Vec<(String, f64, String)>> = (0..cfg.oracle.seeds)
        .into_par_iter()
        .map(|k| {
            let jobs = oracle_jobs(cfg, k)?;
            let best = exhaustive_search(&jobs, &env, cfg.oracle.cap)?;
            let order = best.best_order.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ");
            let mut out = vec![("exhaustive".to_string(), best.average_jct, order)];
            for c in &cs {
                let mut s = ClusterState::reset(&Workload::batch(jobs.clone()), env.clone(), 0)?;
                let avg = run_episode(&mut s, c.scheduler().as_mut())?
                    .stats
                    .map_or(0.0, |st| st.average_jct);
                out.push((c.label().to_string(), avg, String::new()));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut inst = String::from(ORACLE_INSTANCES_HEADER);
    inst.push('\n');
    for (k, r) in rows.iter().enumerate() {
        for (name, v, order) in r {
            writeln!(inst, "{k},{name},{v},{order}").expect("string write");
        }
    }
    let mut table = String::from(ORACLE_CSV_HEADER);
    table.push('\n');
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    for col in 0..width {
        let vals: Vec<f64> = rows.iter().map(|r| r[col].1).collect();
        let m = mean(&vals).unwrap_or(0.0);
        let name = &rows[0][col].0;
        writeln!(table, "{name},{n},{m}").expect("string write");
        println!("{name:<24} {m:.4}");
    }
    write_text(&cfg.output_dir.join("oracle_instances.csv"), &inst)?;
    write_text(&cfg.output_dir.join("oracle.csv"), &table)
}

// ----- gantt ---------------------------------------------------------------

#[derive(Serialize)]
struct RunInfo<'a> {
    schema_version: u64,
    scheduler: &'a str,
    seed: u64,
    average_jct: f64,
}

/// Runs the configured scheduler on seed 0 of the workload and writes the
/// Gantt chart plus a small run summary next to it.
pub fn cmd_export_gantt(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let c = match &cfg.scheduler {
        SchedulerChoice::Heuristic(k) => heuristic(*k, &cfg.heuristic),
        SchedulerChoice::Checkpoint(p) => Contender::Policy {
            label: "policy".into(),
            params: load_policy(p)?,
        },
    };
    let r = run_one(cfg, &c, 0)?;
    let path = out.map_or_else(|| cfg.output_dir.join("gantt.json"), Path::to_path_buf);
    write_text(&path, &r.gantt)?;
    let info = RunInfo {
        schema_version: OUTPUT_SCHEMA_VERSION,
        scheduler: c.label(),
        seed: derive_seed(cfg.seed, 0),
        average_jct: r.stats.average_jct,
    };
    let info_json = serde_json::to_string_pretty(&info).expect("plain struct serialises");
    write_text(&path.with_extension("run.json"), &info_json)?;
    println!("{}: average JCT {:.3}; wrote {}", c.label(), r.stats.average_jct, path.display());
    Ok(())
}
