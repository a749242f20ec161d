//! Synthetic workload generators.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::dag::{ArrivalKind, ArrivalProcess, DurationModel, JobDag, StageSpec, Workload};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Input sizes (GB-like scale units) of the TPC-H-like generator.
pub const TPCH_SIZES: [f64; 6] = [2.0, 5.0, 10.0, 20.0, 50.0, 100.0];

/// Random DAG with `n_nodes` stages; each lower→higher index pair becomes an
/// edge with probability `edge_prob`.
pub fn gen_random_dag(seed: u64, n_nodes: usize, edge_prob: f64) -> Result<JobDag> {
    if n_nodes == 0 {
        return Err(Error::InvalidArgument("n_nodes must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidArgument(format!("edge_prob {edge_prob} outside [0, 1]")));
    }
    let mut rng = seeded(seed);
    let stages = (0..n_nodes)
        .map(|_| {
            let later = rng.random_range(0.5..5.0);
            let first = later * rng.random_range(1.0..1.5);
            let tasks = rng.random_range(1..=20);
            let mem = rng.random_range(0.05..=1.0);
            StageSpec::new(tasks, DurationModel::new(first, later)).with_resources(1.0, mem)
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..n_nodes {
        for b in a + 1..n_nodes {
            // `random_bool(1.0)` is always true, `random_bool(0.0)` never.
            if rng.random_bool(edge_prob) {
                edges.push((a, b));
            }
        }
    }
    JobDag::new(format!("rand-{seed}"), stages, edges, 0.0)
}

/// One stage of a query template: tasks per unit of input size, mean
/// later-wave task seconds, first-wave slowdown and memory request.
#[derive(Debug, Clone, Copy)]
struct TemplateStage {
    tasks_per_unit: f64,
    seconds: f64,
    first_wave: f64,
    mem: f64,
}

const fn st(tasks_per_unit: f64, seconds: f64, first_wave: f64, mem: f64) -> TemplateStage {
    TemplateStage {
        tasks_per_unit,
        seconds,
        first_wave,
        mem,
    }
}

struct Template {
    stages: &'static [TemplateStage],
    edges: &'static [(usize, usize)],
}

/// Hand-authored analytic-query shapes. Scans are wide and short, joins and
/// aggregations narrower and slower, final sorts tiny.
static TEMPLATES: [Template; 22] = [
    // q1: scan -> aggregate -> sort
    Template {
        stages: &[st(1.0, 1.6, 1.8, 0.25), st(0.2, 1.0, 1.4, 0.5), st(0.01, 0.5, 1.2, 0.25)],
        edges: &[(0, 1), (1, 2)],
    },
    // q2: two branches converging in a join (small left, heavy right)
    Template {
        stages: &[
            st(0.05, 1.0, 1.5, 0.25),
            st(0.05, 1.0, 1.5, 0.25),
            st(0.4, 2.5, 1.6, 0.5),
            st(0.3, 2.0, 1.6, 0.75),
            st(0.02, 1.0, 1.3, 0.5),
        ],
        edges: &[(0, 1), (2, 3), (1, 4), (3, 4)],
    },
    // q3: three scans, two-step join, aggregate, sort
    Template {
        stages: &[
            st(0.6, 1.2, 1.7, 0.25),
            st(0.3, 1.0, 1.7, 0.25),
            st(0.2, 0.8, 1.7, 0.25),
            st(0.2, 2.0, 1.5, 0.75),
            st(0.1, 2.2, 1.5, 0.75),
            st(0.05, 1.0, 1.3, 0.5),
            st(0.01, 0.4, 1.2, 0.25),
        ],
        edges: &[(0, 3), (1, 3), (3, 4), (2, 4), (4, 5), (5, 6)],
    },
    // q4: semi-join
    Template {
        stages: &[
            st(0.4, 1.0, 1.6, 0.25),
            st(0.8, 1.1, 1.6, 0.25),
            st(0.1, 1.5, 1.4, 0.5),
            st(0.01, 0.5, 1.2, 0.25),
        ],
        edges: &[(0, 2), (1, 2), (2, 3)],
    },
    // q5: six-way join tree
    Template {
        stages: &[
            st(0.1, 0.6, 1.8, 0.25),
            st(0.1, 0.6, 1.8, 0.25),
            st(0.6, 1.3, 1.8, 0.25),
            st(1.0, 1.5, 1.8, 0.25),
            st(0.2, 0.9, 1.8, 0.25),
            st(0.05, 0.5, 1.8, 0.25),
            st(0.1, 1.5, 1.5, 0.5),
            st(0.3, 2.0, 1.5, 0.75),
            st(0.3, 2.5, 1.5, 1.0),
            st(0.2, 2.0, 1.5, 0.75),
            st(0.1, 1.5, 1.4, 0.5),
            st(0.02, 0.8, 1.3, 0.25),
        ],
        edges: &[
            (0, 6),
            (1, 6),
            (6, 7),
            (2, 7),
            (7, 8),
            (3, 8),
            (8, 9),
            (4, 9),
            (9, 10),
            (5, 10),
            (10, 11),
        ],
    },
    // q6: single scan with filter-aggregate
    Template {
        stages: &[st(1.2, 1.0, 1.5, 0.25), st(0.05, 0.6, 1.3, 0.25), st(0.01, 0.3, 1.1, 0.25)],
        edges: &[(0, 1), (1, 2)],
    },
    // q7: two independent join pipelines then union
    Template {
        stages: &[
            st(0.3, 1.0, 1.6, 0.25),
            st(0.5, 1.2, 1.6, 0.25),
            st(0.2, 1.8, 1.5, 0.5),
            st(0.3, 1.0, 1.6, 0.25),
            st(0.5, 1.2, 1.6, 0.25),
            st(0.2, 1.8, 1.5, 0.5),
            st(0.1, 1.5, 1.4, 0.75),
            st(0.02, 0.5, 1.2, 0.25),
        ],
        edges: &[(0, 2), (1, 2), (3, 5), (4, 5), (2, 6), (5, 6), (6, 7)],
    },
    // q8: deep join chain with side inputs
    Template {
        stages: &[
            st(0.8, 1.4, 1.7, 0.25),
            st(0.1, 0.5, 1.7, 0.25),
            st(0.4, 1.6, 1.5, 0.5),
            st(0.2, 0.7, 1.7, 0.25),
            st(0.3, 1.9, 1.5, 0.75),
            st(0.1, 0.6, 1.7, 0.25),
            st(0.2, 2.1, 1.5, 0.75),
            st(0.05, 1.2, 1.4, 0.5),
            st(0.01, 0.5, 1.2, 0.25),
        ],
        edges: &[(0, 2), (1, 2), (2, 4), (3, 4), (4, 6), (5, 6), (6, 7), (7, 8)],
    },
    // q9: the heaviest shape, wide fact-table scans into a join cascade
    Template {
        stages: &[
            st(2.0, 2.0, 1.9, 0.5),
            st(1.0, 1.8, 1.9, 0.5),
            st(0.5, 1.0, 1.9, 0.25),
            st(0.8, 3.0, 1.6, 1.0),
            st(0.6, 3.2, 1.6, 1.0),
            st(0.3, 2.0, 1.5, 0.75),
            st(0.1, 1.5, 1.4, 0.5),
            st(0.02, 0.6, 1.2, 0.25),
        ],
        edges: &[(0, 3), (1, 3), (3, 4), (2, 4), (4, 5), (5, 6), (6, 7)],
    },
    // q10: fan-in of four scans
    Template {
        stages: &[
            st(0.3, 1.0, 1.6, 0.25),
            st(0.3, 1.0, 1.6, 0.25),
            st(0.3, 1.0, 1.6, 0.25),
            st(0.3, 1.0, 1.6, 0.25),
            st(0.2, 2.0, 1.5, 0.75),
            st(0.02, 0.6, 1.2, 0.25),
        ],
        edges: &[(0, 4), (1, 4), (2, 4), (3, 4), (4, 5)],
    },
    // q11: small dimension query
    Template {
        stages: &[st(0.05, 0.6, 1.4, 0.25), st(0.05, 0.6, 1.4, 0.25), st(0.02, 0.8, 1.2, 0.5)],
        edges: &[(0, 2), (1, 2)],
    },
    // q12: fan-out then fan-in (diamond)
    Template {
        stages: &[
            st(0.6, 1.1, 1.6, 0.25),
            st(0.2, 1.4, 1.5, 0.5),
            st(0.2, 1.4, 1.5, 0.5),
            st(0.05, 1.0, 1.3, 0.5),
        ],
        edges: &[(0, 1), (0, 2), (1, 3), (2, 3)],
    },
    // q13: outer join + two aggregations
    Template {
        stages: &[
            st(0.2, 1.0, 1.6, 0.25),
            st(0.6, 1.3, 1.6, 0.25),
            st(0.3, 2.2, 1.5, 1.0),
            st(0.1, 1.2, 1.4, 0.5),
            st(0.02, 0.5, 1.2, 0.25),
        ],
        edges: &[(0, 2), (1, 2), (2, 3), (3, 4)],
    },
    // q14: tiny join
    Template {
        stages: &[st(0.1, 0.5, 1.5, 0.25), st(0.05, 0.5, 1.5, 0.25), st(0.01, 0.4, 1.2, 0.25)],
        edges: &[(0, 2), (1, 2)],
    },
    // q15: view materialised twice (fan-out from one scan)
    Template {
        stages: &[
            st(0.7, 1.2, 1.7, 0.25),
            st(0.1, 1.0, 1.5, 0.5),
            st(0.1, 1.0, 1.5, 0.5),
            st(0.05, 0.8, 1.4, 0.25),
            st(0.05, 1.2, 1.3, 0.5),
            st(0.01, 0.4, 1.2, 0.25),
        ],
        edges: &[(0, 1), (0, 2), (1, 4), (2, 4), (3, 4), (4, 5)],
    },
    // q16: anti-join with a side filter
    Template {
        stages: &[
            st(0.3, 0.9, 1.5, 0.25),
            st(0.1, 0.6, 1.5, 0.25),
            st(0.05, 0.5, 1.4, 0.25),
            st(0.1, 1.5, 1.4, 0.5),
            st(0.02, 0.6, 1.2, 0.25),
        ],
        edges: &[(1, 2), (0, 3), (2, 3), (3, 4)],
    },
    // q17: correlated subquery, two passes over one table
    Template {
        stages: &[
            st(1.2, 1.4, 1.8, 0.5),
            st(0.05, 0.5, 1.5, 0.25),
            st(0.3, 2.0, 1.5, 0.75),
            st(1.2, 1.4, 1.8, 0.5),
            st(0.3, 2.4, 1.5, 1.0),
            st(0.01, 0.4, 1.2, 0.25),
        ],
        edges: &[(0, 2), (1, 2), (2, 4), (3, 4), (4, 5)],
    },
    // q18: large group-by with semi-join
    Template {
        stages: &[
            st(1.5, 1.5, 1.8, 0.5),
            st(0.4, 2.6, 1.6, 1.0),
            st(0.4, 1.0, 1.7, 0.25),
            st(0.3, 2.8, 1.6, 1.0),
            st(0.05, 1.0, 1.4, 0.5),
            st(0.01, 0.4, 1.2, 0.25),
        ],
        edges: &[(0, 1), (1, 3), (2, 3), (3, 4), (4, 5)],
    },
    // q19: disjunctive join, short
    Template {
        stages: &[st(0.4, 0.9, 1.5, 0.25), st(0.1, 0.6, 1.5, 0.25), st(0.05, 1.1, 1.3, 0.5)],
        edges: &[(0, 2), (1, 2)],
    },
    // q20: nested subqueries, long and narrow
    Template {
        stages: &[
            st(0.1, 0.6, 1.5, 0.25),
            st(0.4, 1.1, 1.6, 0.25),
            st(0.2, 1.7, 1.5, 0.5),
            st(0.1, 0.6, 1.5, 0.25),
            st(0.1, 1.5, 1.4, 0.5),
            st(0.05, 0.6, 1.4, 0.25),
            st(0.05, 1.2, 1.3, 0.5),
            st(0.02, 1.0, 1.3, 0.5),
            st(0.01, 0.4, 1.2, 0.25),
        ],
        edges: &[(1, 2), (0, 4), (2, 4), (3, 4), (4, 6), (5, 6), (6, 7), (7, 8)],
    },
    // q21: the largest DAG: several self-joins of the fact table
    Template {
        stages: &[
            st(0.8, 1.6, 1.8, 0.5),
            st(0.8, 1.6, 1.8, 0.5),
            st(0.8, 1.6, 1.8, 0.5),
            st(0.1, 0.5, 1.6, 0.25),
            st(0.05, 0.4, 1.6, 0.25),
            st(0.3, 2.2, 1.5, 0.75),
            st(0.3, 2.2, 1.5, 0.75),
            st(0.2, 2.0, 1.5, 0.75),
            st(0.2, 1.8, 1.5, 0.75),
            st(0.1, 1.6, 1.4, 0.5),
            st(0.1, 1.4, 1.4, 0.5),
            st(0.05, 1.2, 1.4, 0.5),
            st(0.05, 1.0, 1.3, 0.5),
            st(0.04, 1.0, 1.3, 0.25),
            st(0.03, 0.9, 1.3, 0.25),
            st(0.02, 0.8, 1.3, 0.25),
            st(0.02, 0.7, 1.2, 0.25),
            st(0.02, 0.6, 1.2, 0.25),
            st(0.01, 0.5, 1.2, 0.25),
            st(0.01, 0.4, 1.1, 0.25),
        ],
        edges: &[
            (0, 5),
            (3, 5),
            (1, 6),
            (4, 6),
            (5, 7),
            (6, 7),
            (2, 8),
            (7, 8),
            (8, 9),
            (8, 10),
            (9, 11),
            (10, 11),
            (11, 12),
            (12, 13),
            (12, 14),
            (13, 15),
            (14, 15),
            (15, 16),
            (16, 17),
            (17, 18),
            (18, 19),
        ],
    },
    // q22: small anti-join with aggregate
    Template {
        stages: &[
            st(0.1, 0.7, 1.4, 0.25),
            st(0.02, 0.5, 1.3, 0.25),
            st(0.1, 0.8, 1.4, 0.25),
            st(0.02, 0.6, 1.2, 0.25),
        ],
        edges: &[(0, 1), (1, 3), (2, 3)],
    },
];

pub fn num_templates() -> usize {
    TEMPLATES.len()
}

/// Knobs applied to every stage built from a template.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateOptions {
    pub noise_cv: f64,
    pub inflation: Vec<(usize, f64)>,
}

impl Default for TemplateOptions {
    fn default() -> Self {
        TemplateOptions {
            noise_cv: 0.1,
            inflation: default_inflation(),
        }
    }
}

/// Slowdown of individual tasks when many of a stage's tasks run at once.
pub fn default_inflation() -> Vec<(usize, f64)> {
    vec![(1, 1.0), (4, 1.1), (8, 1.25), (16, 1.5), (32, 2.0)]
}

/// Instantiates query template `template` (0-based) at input size `size`.
pub fn tpch_job(template: usize, size: f64, opts: &TemplateOptions, id: String) -> Result<JobDag> {
    let t = TEMPLATES.get(template).ok_or_else(|| {
        Error::InvalidArgument(format!("template {template} out of range 0..{}", TEMPLATES.len()))
    })?;
    if !(size.is_finite() && size > 0.0) {
        return Err(Error::InvalidArgument(format!("size {size} must be positive")));
    }
    let stages = t
        .stages
        .iter()
        .map(|s| {
            let tasks = ((s.tasks_per_unit * size).round() as usize).max(1);
            let model = DurationModel::new(s.seconds * s.first_wave, s.seconds)
                .with_noise(opts.noise_cv)
                .with_inflation(opts.inflation.clone());
            StageSpec::new(tasks, model).with_resources(1.0, s.mem)
        })
        .collect();
    JobDag::new(id, stages, t.edges.to_vec(), 0.0)
}

/// Samples `n_jobs` TPC-H-like jobs: template and size each drawn uniformly.
pub fn gen_tpch_like(seed: u64, n_jobs: usize, sizes: &[f64]) -> Result<Vec<JobDag>> {
    gen_tpch_like_with(seed, n_jobs, sizes, &TemplateOptions::default())
}

pub fn gen_tpch_like_with(
    seed: u64,
    n_jobs: usize,
    sizes: &[f64],
    opts: &TemplateOptions,
) -> Result<Vec<JobDag>> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("sizes must be non-empty".into()));
    }
    if n_jobs == 0 {
        return Err(Error::InvalidArgument("n_jobs must be >= 1".into()));
    }
    let mut rng = seeded(seed);
    (0..n_jobs)
        .map(|k| {
            let t = rng.random_range(0..TEMPLATES.len());
            let size = sizes[rng.random_range(0..sizes.len())];
            tpch_job(t, size, opts, format!("q{}-s{}-{}", t + 1, size, k))
        })
        .collect()
}

/// Stamps Poisson arrival times onto `jobs` (first job at time 0).
pub fn with_poisson_arrivals(
    mut jobs: Vec<JobDag>,
    mean_interarrival: f64,
    seed: u64,
) -> Result<Workload> {
    let arrival = ArrivalProcess::poisson(mean_interarrival, jobs.len())?;
    let exp = Exp::new(1.0 / mean_interarrival).expect("positive rate");
    let mut rng = seeded(seed);
    let mut t = 0.0;
    for (i, j) in jobs.iter_mut().enumerate() {
        if i > 0 {
            t += exp.sample(&mut rng);
        }
        j.arrival_time = t;
    }
    Ok(Workload { jobs, arrival })
}

/// Work share held by the heaviest `fraction` of jobs.
pub fn top_work_share(jobs: &[JobDag], fraction: f64) -> f64 {
    let mut works: Vec<f64> = jobs.iter().map(JobDag::total_work).collect();
    works.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = works.iter().sum();
    let k = (fraction * works.len() as f64).round() as usize;
    works[..k.min(works.len())].iter().sum::<f64>() / total
}

impl ArrivalKind {
    pub fn is_batch(&self) -> bool {
        matches!(self, ArrivalKind::Batch)
    }
}
