use rayon::prelude::*;

use super::policies::best_fit_class;
use crate::error::{Error, Result};
use crate::simenv::{Action, ClusterState, EnvConfig, StageRef};
use crate::workload::{JobDag, Workload};

pub const DEFAULT_ORACLE_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Job indices from highest to lowest priority.
    pub best_order: Vec<usize>,
    pub average_jct: f64,
    pub orders_evaluated: usize,
}

/// Strict priority order over jobs: the first job in `order` with a
/// schedulable stage gets its longest-critical-path stage and every executor.
fn order_action(state: &ClusterState, rank: &[usize]) -> Option<Action> {
    let frontier = state.schedulable_frontier();
    let best = frontier.iter().min_by(|a, b| {
        rank[a.job].cmp(&rank[b.job]).then_with(|| {
            let cp = &state.job(a.job).critical_path;
            cp[b.stage].total_cmp(&cp[a.stage]).then(a.stage.cmp(&b.stage))
        })
    })?;
    let stage = StageRef::new(best.job, best.stage);
    Some(Action {
        stage,
        limit: state.num_executors(),
        class: best_fit_class(state, stage),
    })
}

/// Simulates `jobs` under the strict priority `order` and returns the
/// average JCT.
pub fn run_order(jobs: &[JobDag], config: &EnvConfig, order: &[usize]) -> Result<f64> {
    let mut rank = vec![usize::MAX; jobs.len()];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r;
    }
    let mut state = ClusterState::reset(&Workload::batch(jobs.to_vec()), config.clone(), 0)?;
    while !state.is_done() {
        let a = order_action(&state, &rank).ok_or_else(|| Error::Usage("no schedulable stage".into()))?;
        state.step(&a)?;
    }
    Ok(state.episode_jct_stats().map_or(0.0, |s| s.average_jct))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Tries every job ordering in the simplified environment and returns the
/// one with the lowest average JCT (ties: lexicographically smallest order).
pub fn exhaustive_search(jobs: &[JobDag], config: &EnvConfig, cap: usize) -> Result<OracleResult> {
    if jobs.len() > cap {
        return Err(Error::Refused(format!(
            "{} jobs exceed the exhaustive-search cap of {cap}",
            jobs.len()
        )));
    }
    let config = config.clone().simplified();
    config.validate()?;
    let orders = permutations(jobs.len());
    let scored: Vec<(f64, Vec<usize>)> = orders
        .into_par_iter()
        .map(|o| run_order(jobs, &config, &o).map(|jct| (jct, o)))
        .collect::<Result<_>>()?;
    let orders_evaluated = scored.len();
    let (average_jct, best_order) = scored
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("at least the empty ordering");
    Ok(OracleResult {
        best_order,
        average_jct,
        orders_evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{DurationModel, StageSpec};

    fn single(id: &str, tasks: usize, dur: f64) -> JobDag {
        JobDag::new(id, vec![StageSpec::new(tasks, DurationModel::new(dur, dur))], vec![], 0.0).unwrap()
    }

    #[test]
    fn three_single_stage_jobs() {
        let jobs = vec![single("c", 1, 3.0), single("a", 1, 1.0), single("b", 1, 2.0)];
        let r = exhaustive_search(&jobs, &EnvConfig::single(1), DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(r.orders_evaluated, 6);
        assert_eq!(r.best_order, vec![1, 2, 0]);
        assert!((r.average_jct - 10.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn one_job_is_its_runtime() {
        let r = exhaustive_search(&[single("a", 4, 2.0)], &EnvConfig::single(2), 8).unwrap();
        assert_eq!(r.best_order, vec![0]);
        assert_eq!(r.average_jct, 4.0);
    }

    #[test]
    fn parallel_short_vs_serial_matches_brute_force() {
        let jobs = vec![single("serial", 1, 6.0), single("wide", 4, 1.0)];
        let cfg = EnvConfig::single(4).simplified();
        let r = exhaustive_search(&jobs, &cfg, 8).unwrap();
        let a = run_order(&jobs, &cfg, &[0, 1]).unwrap();
        let b = run_order(&jobs, &cfg, &[1, 0]).unwrap();
        assert_eq!(r.average_jct, a.min(b));
        // serial first: it takes one executor, wide uses the other three.
        assert_eq!(a, (6.0 + 2.0) / 2.0);
    }

    #[test]
    fn over_cap_is_refused() {
        let jobs: Vec<JobDag> = (0..4).map(|i| single(&format!("j{i}"), 1, 1.0)).collect();
        assert!(matches!(exhaustive_search(&jobs, &EnvConfig::single(1), 3), Err(Error::Refused(_))));
    }

    #[test]
    fn ties_break_lexicographically() {
        let jobs = vec![single("a", 1, 1.0), single("b", 1, 1.0)];
        let r = exhaustive_search(&jobs, &EnvConfig::single(1), 8).unwrap();
        assert_eq!(r.best_order, vec![0, 1]);
    }
}
