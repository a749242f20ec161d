use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::simenv::{Action, ClusterState, StageRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Exponent of the tuned weighted-fair share `T_i^a / sum T_j^a`.
    pub fairness_exponent: f64,
    /// A stage is troublesome if its mean task duration exceeds this
    /// multiple of the mean over all active stages...
    pub graphene_duration_threshold: f64,
    /// ...or (multi-resource mode) its memory request exceeds this.
    pub graphene_mem_threshold: f64,
    /// Resource dimensions used by Tetris' alignment score: `[cpu, mem]`.
    pub tetris_resources: [bool; 2],
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            fairness_exponent: -1.0,
            graphene_duration_threshold: 1.5,
            graphene_mem_threshold: 0.7,
            tetris_resources: [true, true],
        }
    }
}

/// Schedulable stages grouped by job, in job and stage index order.
fn schedulable_by_job(state: &ClusterState) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in state.schedulable_frontier() {
        out.entry(s.job).or_default().push(s.stage);
    }
    out
}

/// Smallest-memory free class that fits `stage` (multi-resource mode only).
pub fn best_fit_class(state: &ClusterState, stage: StageRef) -> Option<usize> {
    if !state.config().multi_resource {
        return None;
    }
    let classes = &state.config().classes;
    state.eligible_classes(stage).into_iter().min_by(|&a, &b| {
        classes[a]
            .mem
            .total_cmp(&classes[b].mem)
            .then(classes[a].cpu.total_cmp(&classes[b].cpu))
            .then(a.cmp(&b))
    })
}

/// Fitting class with the most free executors; ignores how well it fits.
pub fn most_free_class(state: &ClusterState, stage: StageRef) -> Option<usize> {
    if !state.config().multi_resource {
        return None;
    }
    state
        .eligible_classes(stage)
        .into_iter()
        .max_by(|&a, &b| state.free_in_class(a).cmp(&state.free_in_class(b)).then(b.cmp(&a)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClassRule {
    MostFree,
    BestFit,
}

fn action(state: &ClusterState, stage: StageRef, limit: usize, rule: ClassRule) -> Action {
    let class = match rule {
        ClassRule::MostFree => most_free_class(state, stage),
        ClassRule::BestFit => best_fit_class(state, stage),
    };
    Action { stage, limit, class }
}

/// Splits `total` executors in proportion to `weights` with the
/// largest-remainder method (ties to the lower index).
pub fn largest_remainder_shares(weights: &[f64], total: usize) -> Vec<usize> {
    if weights.is_empty() {
        return Vec::new();
    }
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = if sum > 0.0 && sum.is_finite() {
        weights.iter().map(|w| total as f64 * w / sum).collect()
    } else {
        vec![total as f64 / weights.len() as f64; weights.len()]
    };
    let mut shares: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = shares.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        shares[i] += 1;
    }
    shares
}

/// Executor share of each job in the system for per-job `weights`.
fn shares_by_job(state: &ClusterState, weight: impl Fn(usize) -> f64) -> BTreeMap<usize, usize> {
    let jobs = state.jobs_in_system();
    let w: Vec<f64> = jobs.iter().map(|&j| weight(j)).collect();
    let shares = largest_remainder_shares(&w, state.num_executors());
    jobs.into_iter().zip(shares).collect()
}

/// First-in-first-out: the earliest-arrived job with runnable work takes
/// as many executors as it can use.
pub fn fifo(state: &ClusterState) -> Option<Action> {
    let by_job = schedulable_by_job(state);
    let (&job, stages) = by_job.iter().next()?;
    Some(action(state, StageRef::new(job, stages[0]), state.num_executors(), ClassRule::MostFree))
}

/// Shortest (remaining) job first; inside the job, the stage with the
/// longest critical path.
pub fn sjf_cp(state: &ClusterState) -> Option<Action> {
    let by_job = schedulable_by_job(state);
    let (&job, stages) = by_job.iter().min_by(|(&a, _), (&b, _)| {
        state
            .job(a)
            .unfinished_work()
            .total_cmp(&state.job(b).unfinished_work())
            .then(a.cmp(&b))
    })?;
    let stage = max_critical_path(state, job, stages);
    Some(action(state, StageRef::new(job, stage), state.num_executors(), ClassRule::MostFree))
}

fn max_critical_path(state: &ClusterState, job: usize, stages: &[usize]) -> usize {
    let cp = &state.job(job).critical_path;
    *stages
        .iter()
        .max_by(|&&a, &&b| cp[a].total_cmp(&cp[b]).then(b.cmp(&a)))
        .expect("non-empty stage list")
}

/// Equal share of the executors per job; round-robin across the job's
/// runnable stages.
pub fn fair(state: &ClusterState) -> Option<Action> {
    let shares = shares_by_job(state, |_| 1.0);
    share_based(state, &shares, &schedulable_by_job(state), ClassRule::MostFree)
}

/// Shares proportional to `T^exponent`, `T` the job's unfinished work.
pub fn weighted_fair(state: &ClusterState, exponent: f64) -> Option<Action> {
    let shares = shares_by_job(state, |j| state.job(j).unfinished_work().powf(exponent));
    share_based(state, &shares, &schedulable_by_job(state), ClassRule::MostFree)
}

/// Weighted fair with shares proportional to total work.
pub fn naive_weighted_fair(state: &ClusterState) -> Option<Action> {
    weighted_fair(state, 1.0)
}

/// Picks the job furthest below its share and gives it one more executor on
/// its least-served runnable stage. When every job is at its share, the
/// least-over-served job soaks up the free executors so none idle.
fn share_based(
    state: &ClusterState,
    shares: &BTreeMap<usize, usize>,
    candidates: &BTreeMap<usize, Vec<usize>>,
    rule: ClassRule,
) -> Option<Action> {
    let (&job, stages) = candidates.iter().min_by(|(&a, _), (&b, _)| {
        let da = state.job(a).executors_allocated as i64 - shares[&a] as i64;
        let db = state.job(b).executors_allocated as i64 - shares[&b] as i64;
        da.cmp(&db).then(a.cmp(&b))
    })?;
    let alloc = state.job(job).executors_allocated;
    let limit = if alloc < shares[&job] {
        alloc + 1
    } else {
        alloc + state.num_free_executors()
    };
    let stage = least_served(state, job, stages);
    Some(action(state, StageRef::new(job, stage), limit, rule))
}

fn least_served(state: &ClusterState, job: usize, stages: &[usize]) -> usize {
    *stages
        .iter()
        .min_by_key(|&&v| (state.executors_on_stage(StageRef::new(job, v)), v))
        .expect("non-empty stage list")
}

/// Dot product of a request vector and an availability vector.
pub fn alignment_score(request: [f64; 2], available: [f64; 2]) -> f64 {
    request[0] * available[0] + request[1] * available[1]
}

/// Tetris packing: the (stage, executor class) pair with the largest
/// alignment score wins and gets as many executors as it has waiting tasks.
///
/// Both vectors are normalised by the capacity of one executor of the class,
/// so a free executor's availability is `(1, 1)` and a tight fit scores
/// higher than a loose one.
pub fn tetris(state: &ClusterState, cfg: &HeuristicConfig) -> Option<Action> {
    let frontier = state.schedulable_frontier();
    let classes = &state.config().classes;
    let mut best: Option<((f64, f64), StageRef, usize)> = None;
    for &s in &frontier {
        let spec = &state.job(s.job).dag.stages[s.stage];
        let eligible = if state.config().multi_resource {
            state.eligible_classes(s)
        } else {
            vec![0]
        };
        for c in eligible {
            let cap = classes[c];
            let mask = |i: usize, x: f64| if cfg.tetris_resources[i] { x } else { 0.0 };
            let request = [mask(0, spec.cpu_request / cap.cpu), mask(1, spec.mem_request / cap.mem)];
            let score = alignment_score(request, [1.0, 1.0]);
            let key = (score, spec.mem_request);
            if best.is_none_or(|(b, _, _)| key > b) {
                best = Some((key, s, c));
            }
        }
    }
    let (_, stage, class) = best?;
    let job = state.job(stage.job);
    let limit = (job.executors_allocated + job.stages[stage.stage].remaining).min(state.num_executors());
    let limit = limit.max(job.executors_allocated + 1);
    Some(Action {
        stage,
        limit,
        class: state.config().multi_resource.then_some(class),
    })
}

/// Stages deemed troublesome: long tasks or large memory requests.
pub fn troublesome_stages(state: &ClusterState, cfg: &HeuristicConfig) -> Vec<StageRef> {
    let jobs = state.jobs_in_system();
    let durations: Vec<f64> = jobs
        .iter()
        .flat_map(|&j| state.job(j).dag.stages.iter().map(|s| s.duration.later_wave_mean))
        .collect();
    if durations.is_empty() {
        return Vec::new();
    }
    let mean = durations.iter().sum::<f64>() / durations.len() as f64;
    let multi = state.config().multi_resource;
    let mut out = Vec::new();
    for j in jobs {
        for (v, s) in state.job(j).dag.stages.iter().enumerate() {
            if s.duration.later_wave_mean > cfg.graphene_duration_threshold * mean
                || (multi && s.mem_request > cfg.graphene_mem_threshold)
            {
                out.push(StageRef::new(j, v));
            }
        }
    }
    out
}

fn descendants(children: &[Vec<usize>], v: usize) -> Vec<bool> {
    let mut seen = vec![false; children.len()];
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        for &c in &children[x] {
            if !seen[c] {
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    seen
}

/// Graphene*: troublesome stages of a job are held back until all of them
/// that could run alongside are runnable together; parallelism follows the
/// tuned weighted-fair shares and executors come from the best-fitting class.
pub fn graphene_star(state: &ClusterState, cfg: &HeuristicConfig) -> Option<Action> {
    let frontier = state.schedulable_frontier();
    if frontier.is_empty() {
        return None;
    }
    let trouble = troublesome_stages(state, cfg);
    let is_trouble = |s: StageRef| trouble.contains(&s);

    let suppressed = |s: StageRef| {
        if !is_trouble(s) {
            return false;
        }
        let job = state.job(s.job);
        let desc = descendants(&job.children, s.stage);
        // A not-yet-runnable troublesome sibling that is not downstream of `s`.
        trouble.iter().any(|&t| {
            t.job == s.job
                && t.stage != s.stage
                && !desc[t.stage]
                && job.stages[t.stage].remaining > 0
                && !job.stage_runnable(t.stage)
        })
    };

    let mut candidates: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &s in frontier.iter().filter(|&&s| !suppressed(s)) {
        candidates.entry(s.job).or_default().push(s.stage);
    }
    if candidates.is_empty() {
        for &s in &frontier {
            candidates.entry(s.job).or_default().push(s.stage);
        }
    }
    // Troublesome stages go first inside a job.
    for (job, stages) in candidates.iter_mut() {
        let t: Vec<usize> = stages
            .iter()
            .copied()
            .filter(|&v| is_trouble(StageRef::new(*job, v)))
            .collect();
        if !t.is_empty() {
            *stages = t;
        }
    }
    let exponent = cfg.fairness_exponent;
    let shares = shares_by_job(state, |j| state.job(j).unfinished_work().powf(exponent));
    share_based(state, &shares, &candidates, ClassRule::BestFit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_remainder_basics() {
        assert_eq!(largest_remainder_shares(&[1.0, 1.0, 1.0], 10), vec![4, 3, 3]);
        assert_eq!(largest_remainder_shares(&[1.0, 3.0], 8), vec![2, 6]);
        assert_eq!(largest_remainder_shares(&[], 8), Vec::<usize>::new());
        let s = largest_remainder_shares(&[0.2, 0.5, 0.3, 0.7], 7);
        assert_eq!(s.iter().sum::<usize>(), 7);
    }

    #[test]
    fn inverse_work_shares() {
        // T = 10 and 90 with exponent -1: weights 1/10 and 1/90, ratio 9.
        let w = [10f64.powf(-1.0), 90f64.powf(-1.0)];
        assert!((w[0] / w[1] - 9.0).abs() < 1e-12);
        assert_eq!(largest_remainder_shares(&w, 10), vec![9, 1]);
        assert_eq!(largest_remainder_shares(&w, 100), vec![90, 10]);
    }

    #[test]
    fn alignment_examples() {
        assert_eq!(alignment_score([1.0, 0.25], [4.0, 1.0]), 4.25);
        assert_eq!(alignment_score([1.0, 1.0], [4.0, 1.0]), 5.0);
    }
}
