use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-stage task-duration model.
///
/// Tasks launched before any task of the stage has finished belong to the
/// first wave and use `first_wave_mean`; the rest use `later_wave_mean`. The
/// optional inflation table maps a parallelism level to a multiplicative
/// slowdown, looked up at the nearest key at or below the current level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationModel {
    pub first_wave_mean: f64,
    pub later_wave_mean: f64,
    #[serde(default)]
    pub noise_cv: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inflation: Vec<(usize, f64)>,
}

impl DurationModel {
    pub fn new(first_wave_mean: f64, later_wave_mean: f64) -> Self {
        DurationModel {
            first_wave_mean,
            later_wave_mean,
            noise_cv: 0.0,
            inflation: Vec::new(),
        }
    }

    pub fn with_noise(mut self, cv: f64) -> Self {
        self.noise_cv = cv;
        self
    }

    pub fn with_inflation(mut self, table: Vec<(usize, f64)>) -> Self {
        self.inflation = table;
        self
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.later_wave_mean.is_finite() && self.later_wave_mean > 0.0) {
            return Err(format!("later_wave_mean must be positive, got {}", self.later_wave_mean));
        }
        if !(self.first_wave_mean.is_finite() && self.first_wave_mean >= self.later_wave_mean) {
            return Err(format!(
                "first_wave_mean {} must be >= later_wave_mean {}",
                self.first_wave_mean, self.later_wave_mean
            ));
        }
        if !(self.noise_cv.is_finite() && self.noise_cv >= 0.0) {
            return Err(format!("noise_cv must be >= 0, got {}", self.noise_cv));
        }
        let mut prev: Option<(usize, f64)> = None;
        for &(level, factor) in &self.inflation {
            if level == 0 {
                return Err("inflation keys must be >= 1".into());
            }
            if !(factor.is_finite() && factor >= 1.0) {
                return Err(format!("inflation factor {factor} at {level} is below 1"));
            }
            if let Some((pl, pf)) = prev {
                if level <= pl {
                    return Err("inflation keys must be strictly increasing".into());
                }
                if factor < pf {
                    return Err("inflation factors must be non-decreasing".into());
                }
            }
            prev = Some((level, factor));
        }
        Ok(())
    }

    /// Slowdown factor at `parallelism` (1.0 below the smallest key).
    pub fn inflation_at(&self, parallelism: usize) -> f64 {
        self.inflation
            .iter()
            .take_while(|(level, _)| *level <= parallelism)
            .last()
            .map_or(1.0, |&(_, f)| f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub num_tasks: usize,
    pub duration: DurationModel,
    pub cpu_request: f64,
    pub mem_request: f64,
}

impl StageSpec {
    pub fn new(num_tasks: usize, duration: DurationModel) -> Self {
        StageSpec {
            num_tasks,
            duration,
            cpu_request: 1.0,
            mem_request: 1.0,
        }
    }

    pub fn with_resources(mut self, cpu: f64, mem: f64) -> Self {
        self.cpu_request = cpu;
        self.mem_request = mem;
        self
    }

    /// Expected work in task-seconds, `num_tasks * later_wave_mean`.
    pub fn work(&self) -> f64 {
        self.num_tasks as f64 * self.duration.later_wave_mean
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.num_tasks == 0 {
            return Err("num_tasks must be >= 1".into());
        }
        if !(self.mem_request > 0.0 && self.mem_request <= 1.0) {
            return Err(format!("mem_request {} outside (0, 1]", self.mem_request));
        }
        if !(self.cpu_request.is_finite() && self.cpu_request >= 0.0) {
            return Err(format!("cpu_request {} must be >= 0", self.cpu_request));
        }
        self.duration.validate()
    }
}

/// A job: a DAG of stages plus its arrival time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobDag {
    pub id: String,
    pub stages: Vec<StageSpec>,
    pub edges: Vec<(usize, usize)>,
    pub arrival_time: f64,
}

impl JobDag {
    /// Builds and validates a DAG.
    pub fn new(
        id: impl Into<String>,
        stages: Vec<StageSpec>,
        edges: Vec<(usize, usize)>,
        arrival_time: f64,
    ) -> Result<Self> {
        let dag = JobDag {
            id: id.into(),
            stages,
            edges,
            arrival_time,
        };
        dag.validate()?;
        Ok(dag)
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::Validation {
            job_id: self.id.clone(),
            reason,
        };
        if self.stages.is_empty() {
            return Err(fail("job has no stages".into()));
        }
        if !(self.arrival_time.is_finite() && self.arrival_time >= 0.0) {
            return Err(fail(format!("arrival_time {} must be >= 0", self.arrival_time)));
        }
        for (i, s) in self.stages.iter().enumerate() {
            s.validate().map_err(|r| fail(format!("stage {i}: {r}")))?;
        }
        let n = self.stages.len();
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                return Err(fail(format!("edge ({a},{b}) references a missing stage")));
            }
            if a == b {
                return Err(fail(format!("self-edge ({a},{b})")));
            }
            if !seen.insert((a, b)) {
                return Err(fail(format!("duplicate edge ({a},{b})")));
            }
        }
        if self.topo_order().is_none() {
            return Err(fail("cycle in stage graph".into()));
        }
        Ok(())
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.stages.len()];
        for &(a, b) in &self.edges {
            out[a].push(b);
        }
        for c in &mut out {
            c.sort_unstable();
        }
        out
    }

    pub fn parents(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.stages.len()];
        for &(a, b) in &self.edges {
            out[b].push(a);
        }
        for p in &mut out {
            p.sort_unstable();
        }
        out
    }

    /// Topological order (parents before children), smallest index first
    /// among ready nodes; `None` if the graph has a cycle.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.stages.len();
        let mut indeg = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            if a >= n || b >= n {
                return None;
            }
            indeg[b] += 1;
            children[a].push(b);
        }
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Total expected work of the job in task-seconds.
    pub fn total_work(&self) -> f64 {
        self.stages.iter().map(StageSpec::work).sum()
    }

    pub fn total_tasks(&self) -> usize {
        self.stages.iter().map(|s| s.num_tasks).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalKind {
    Batch,
    Poisson { mean_interarrival: f64 },
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProcess {
    pub kind: ArrivalKind,
    pub num_jobs: usize,
}

impl ArrivalProcess {
    pub fn batch(num_jobs: usize) -> Self {
        ArrivalProcess {
            kind: ArrivalKind::Batch,
            num_jobs,
        }
    }

    pub fn poisson(mean_interarrival: f64, num_jobs: usize) -> Result<Self> {
        if !(mean_interarrival.is_finite() && mean_interarrival > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mean_interarrival must be > 0, got {mean_interarrival}"
            )));
        }
        Ok(ArrivalProcess {
            kind: ArrivalKind::Poisson { mean_interarrival },
            num_jobs,
        })
    }
}

/// Jobs plus the arrival process that produced their arrival times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub jobs: Vec<JobDag>,
    pub arrival: ArrivalProcess,
}

impl Workload {
    pub fn batch(jobs: Vec<JobDag>) -> Self {
        let n = jobs.len();
        let jobs = jobs
            .into_iter()
            .map(|mut j| {
                j.arrival_time = 0.0;
                j
            })
            .collect();
        Workload {
            jobs,
            arrival: ArrivalProcess::batch(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.jobs.iter().try_for_each(JobDag::validate)
    }
}
