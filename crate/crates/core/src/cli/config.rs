//! Flat `key = value` experiment configuration with dotted section keys.
//!
//! Lines starting with `#` and blank lines are ignored. Later assignments
//! (including `--set key=value` overrides) replace earlier ones. Every key
//! must be consumed by the command; unknown keys are reported with their
//! origin so typos do not silently fall back to defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gnn::ProbeConfig;
use crate::heuristics::{HeuristicConfig, HeuristicKind, DEFAULT_ORACLE_CAP};
use crate::simenv::{EnvConfig, Objective};
use crate::training::{Curriculum, TrainConfig};
use crate::workload::{WorkloadSpec, TPCH_SIZES};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: String,
}

/// Raw assignments with their origin (`file:line` or `--set`).
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
    used: RefCell<BTreeSet<String>>,
}

impl RawConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut cfg = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.assign(line, format!("{source}:{}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        self.assign(assignment, format!("--set {assignment}"))
    }

    fn assign(&mut self, line: &str, origin: String) -> Result<()> {
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::InvalidConfig(format!("{origin}: expected 'key = value'")));
        };
        let key = k.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::InvalidConfig(format!("{origin}: bad key '{key}'")));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: v.trim().to_string(),
                origin,
            },
        );
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(e)
    }

    fn err(e: &Entry, key: &str, msg: impl Display) -> Error {
        Error::InvalidConfig(format!("{}: {key}: {msg}", e.origin))
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse()
                .map_err(|m| Self::err(e, key, format!("cannot parse '{}': {m}", e.value))),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str, default: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(e) if e.value == "none" || e.value.is_empty() => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|m| Self::err(e, key, format!("cannot parse '{}': {m}", e.value))),
        }
    }

    /// Comma-separated list; an empty value is the empty list.
    pub fn get_list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(e) if e.value.is_empty() => Ok(Vec::new()),
            Some(e) => e
                .value
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|m| Self::err(e, key, format!("cannot parse list item '{}': {m}", s.trim())))
                })
                .collect(),
        }
    }

    /// Keys never read by the command, with their origins.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries
            .iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, e)| format!("{} ({})", k, e.origin))
            .collect()
    }

    pub fn ensure_all_used(&self) -> Result<()> {
        let unused = self.unused();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("unknown keys: {}", unused.join(", "))))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadSource {
    Synthetic(WorkloadSpec),
    Trace(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchedulerChoice {
    Heuristic(HeuristicKind),
    Checkpoint(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub seeds: usize,
    /// Heuristic names, or `checkpoint` for `scheduler.checkpoint`.
    pub schedulers: Vec<String>,
    /// Extra weighted-fair runs, one per exponent.
    pub alpha_sweep: Vec<f64>,
    /// Extra Graphene* runs over the product of the two threshold grids.
    pub graphene_duration_grid: Vec<f64>,
    pub graphene_mem_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub seeds: usize,
    pub num_jobs: usize,
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub env: EnvConfig,
    pub workload: WorkloadSource,
    pub scheduler: SchedulerChoice,
    pub heuristic: HeuristicConfig,
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub compare: CompareConfig,
    pub oracle: OracleConfig,
}

fn parse_objective(s: &str) -> Result<Objective> {
    match s {
        "avg_jct" => Ok(Objective::AvgJct),
        "makespan" => Ok(Objective::Makespan),
        _ => Err(Error::InvalidConfig(format!("env.objective: '{s}' is not one of avg_jct, makespan"))),
    }
}

fn parse_curriculum(s: &str) -> Result<Curriculum> {
    match s {
        "growth" => Ok(Curriculum::Growth),
        "termination" => Ok(Curriculum::TerminationProb),
        _ => Err(Error::InvalidConfig(format!(
            "train.curriculum: '{s}' is not one of growth, termination"
        ))),
    }
}

impl ExperimentConfig {
    /// Builds the typed configuration; every key in `raw` must be known.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let seed = raw.get("seed", 0u64)?;
        let output_dir = raw.get("output_dir", PathBuf::from("out"))?;

        let executors = raw.get("env.executors", 50usize)?;
        let mut env = if raw.get("env.multi_resource", false)? {
            EnvConfig::four_class(executors)
        } else {
            EnvConfig::single(executors)
        };
        if raw.get("env.simplified", false)? {
            env = env.simplified();
        }
        env.move_delay = raw.get("env.move_delay", env.move_delay)?;
        env.objective = parse_objective(&raw.get("env.objective", "avg_jct".to_string())?)?;
        env.validate()?;

        let d = WorkloadSpec::default();
        let spec = WorkloadSpec {
            num_jobs: raw.get("workload.num_jobs", 20)?,
            sizes: raw.get_list("workload.sizes", TPCH_SIZES.to_vec())?,
            templates: raw.get_list("workload.templates", d.templates)?,
            mean_interarrival: raw.get_opt("workload.mean_interarrival", Some(45.0))?,
            noise_cv: raw.get("workload.noise_cv", d.noise_cv)?,
        };
        let workload = match raw.get_opt::<PathBuf>("workload.trace", None)? {
            Some(p) => WorkloadSource::Trace(p),
            None => {
                spec.validate()?;
                WorkloadSource::Synthetic(spec)
            }
        };

        let name = raw.get_opt::<String>("scheduler.name", None)?;
        let ckpt = raw.get_opt::<PathBuf>("scheduler.checkpoint", None)?;
        let scheduler = match (name, ckpt) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "set exactly one of scheduler.name and scheduler.checkpoint".into(),
                ))
            }
            (None, Some(p)) => SchedulerChoice::Checkpoint(p),
            (Some(n), None) => SchedulerChoice::Heuristic(n.parse()?),
            (None, None) => SchedulerChoice::Heuristic(HeuristicKind::Fair),
        };

        let h = HeuristicConfig::default();
        let resources: Vec<String> = raw.get_list("heuristic.tetris_resources", vec!["cpu".into(), "mem".into()])?;
        if let Some(bad) = resources.iter().find(|r| *r != "cpu" && *r != "mem") {
            return Err(Error::InvalidConfig(format!(
                "heuristic.tetris_resources: '{bad}' is not one of cpu, mem"
            )));
        }
        let heuristic = HeuristicConfig {
            fairness_exponent: raw.get("heuristic.fairness_exponent", h.fairness_exponent)?,
            graphene_duration_threshold: raw.get("heuristic.graphene_duration_threshold", h.graphene_duration_threshold)?,
            graphene_mem_threshold: raw.get("heuristic.graphene_mem_threshold", h.graphene_mem_threshold)?,
            tetris_resources: [resources.iter().any(|r| r == "cpu"), resources.iter().any(|r| r == "mem")],
        };

        let t = TrainConfig::default();
        let train = TrainConfig {
            learning_rate: raw.get("train.learning_rate", t.learning_rate)?,
            learning_rate_end: raw.get_opt("train.learning_rate_end", t.learning_rate_end)?,
            num_workers: raw.get("train.num_workers", t.num_workers)?,
            iterations: raw.get("train.iterations", t.iterations)?,
            curriculum: parse_curriculum(&raw.get("train.curriculum", "growth".to_string())?)?,
            tau_mean: raw.get("train.tau_mean", t.tau_mean)?,
            tau_growth: raw.get("train.tau_growth", t.tau_growth)?,
            termination_prob_start: raw.get("train.termination_prob_start", t.termination_prob_start)?,
            termination_prob_end: raw.get("train.termination_prob_end", t.termination_prob_end)?,
            differential_reward: raw.get("train.differential_reward", t.differential_reward)?,
            reward_window: raw.get("train.reward_window", t.reward_window)?,
            reward_scale: raw.get("train.reward_scale", t.reward_scale)?,
            entropy_weight_start: raw.get("train.entropy_weight_start", t.entropy_weight_start)?,
            entropy_weight_end: raw.get("train.entropy_weight_end", t.entropy_weight_end)?,
            clip_norm: raw.get("train.clip_norm", t.clip_norm)?,
            eval_interval: raw.get("train.eval_interval", t.eval_interval)?,
            eval_sequences: raw.get("train.eval_sequences", t.eval_sequences)?,
            checkpoint_interval: raw.get("train.checkpoint_interval", t.checkpoint_interval)?,
            record_wall_time: raw.get("train.record_wall_time", t.record_wall_time)?,
            seed,
        };
        train.validate()?;

        let p = ProbeConfig::default();
        let probe = ProbeConfig {
            seed,
            n_graphs: raw.get("probe.n_graphs", p.n_graphs)?,
            iterations: raw.get("probe.iterations", p.iterations)?,
            batch_size: raw.get("probe.batch_size", p.batch_size)?,
            lr: raw.get("probe.lr", p.lr)?,
            min_nodes: raw.get("probe.min_nodes", p.min_nodes)?,
            max_nodes: raw.get("probe.max_nodes", p.max_nodes)?,
            edge_prob: raw.get("probe.edge_prob", p.edge_prob)?,
            max_work: raw.get("probe.max_work", p.max_work)?,
            eval_every: raw.get("probe.eval_every", p.eval_every)?,
        };
        probe.validate()?;

        let compare = CompareConfig {
            seeds: raw.get("compare.seeds", 20)?,
            schedulers: raw.get_list(
                "compare.schedulers",
                ["fifo", "sjf_cp", "fair"].map(String::from).to_vec(),
            )?,
            alpha_sweep: raw.get_list("compare.alpha_sweep", Vec::new())?,
            graphene_duration_grid: raw.get_list("compare.graphene_duration_grid", Vec::new())?,
            graphene_mem_grid: raw.get_list("compare.graphene_mem_grid", Vec::new())?,
        };
        if compare.seeds == 0 {
            return Err(Error::InvalidConfig("compare.seeds must be >= 1".into()));
        }
        let oracle = OracleConfig {
            seeds: raw.get("oracle.seeds", 30)?,
            num_jobs: raw.get("oracle.num_jobs", 5)?,
            cap: raw.get("oracle.cap", DEFAULT_ORACLE_CAP)?,
        };
        raw.ensure_all_used()?;
        Ok(ExperimentConfig {
            seed,
            output_dir,
            env,
            workload,
            scheduler,
            heuristic,
            train,
            probe,
            compare,
            oracle,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut raw = RawConfig::parse("# comment\n\nenv.executors = 10\nworkload.sizes = 2, 5\n", "a.cfg").unwrap();
        raw.set("env.executors=12").unwrap();
        raw.set("workload.mean_interarrival=none").unwrap();
        let c = ExperimentConfig::from_raw(&raw).unwrap();
        assert_eq!(c.env.num_executors(), 12);
        match c.workload {
            WorkloadSource::Synthetic(s) => {
                assert_eq!(s.sizes, vec![2.0, 5.0]);
                assert_eq!(s.mean_interarrival, None);
            }
            _ => panic!(),
        }
        assert_eq!(c.scheduler, SchedulerChoice::Heuristic(HeuristicKind::Fair));
        assert_eq!(c.train.iterations, TrainConfig::default().iterations);
    }

    #[test]
    fn diagnostics_name_line_and_key() {
        let raw = RawConfig::parse("seed = 1\ntrain.iterations = ten\n", "x.cfg").unwrap();
        let e = ExperimentConfig::from_raw(&raw).unwrap_err().to_string();
        assert!(e.contains("x.cfg:2") && e.contains("train.iterations"), "{e}");

        let e = RawConfig::parse("seed 1\n", "x.cfg").unwrap_err().to_string();
        assert!(e.contains("x.cfg:1"), "{e}");

        let raw = RawConfig::parse("env.executor = 3\n", "y.cfg").unwrap();
        let e = ExperimentConfig::from_raw(&raw).unwrap_err().to_string();
        assert!(e.contains("env.executor (y.cfg:1)"), "{e}");
    }

    #[test]
    fn scheduler_must_be_unique_and_known() {
        let mut raw = RawConfig::default();
        raw.set("scheduler.name=fifo").unwrap();
        raw.set("scheduler.checkpoint=a.json").unwrap();
        assert!(matches!(ExperimentConfig::from_raw(&raw), Err(Error::InvalidConfig(_))));
        let mut raw = RawConfig::default();
        raw.set("scheduler.name=lifo").unwrap();
        let e = ExperimentConfig::from_raw(&raw).unwrap_err().to_string();
        assert!(e.contains("graphene_star"), "{e}");
    }

    #[test]
    fn infinite_and_optional_values() {
        let mut raw = RawConfig::default();
        raw.set("train.tau_mean=inf").unwrap();
        raw.set("train.learning_rate_end=1e-4").unwrap();
        let c = ExperimentConfig::from_raw(&raw).unwrap();
        assert!(c.train.tau_mean.is_infinite());
        assert_eq!(c.train.learning_rate_end, Some(1e-4));
    }
}
