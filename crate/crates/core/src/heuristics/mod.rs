//! Baseline schedulers, the critical-path primitive and an exhaustive-search
//! oracle over job orderings.
//!
//! Every heuristic is a pure function of a [`ClusterState`] returning the
//! next [`Action`], or `None` when nothing is schedulable.

mod critical_path;
mod exhaustive;
mod policies;

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;

pub use critical_path::{critical_path, critical_path_all};
pub use exhaustive::{exhaustive_search, run_order, OracleResult, DEFAULT_ORACLE_CAP};
pub use policies::{
    alignment_score, best_fit_class, fair, fifo, graphene_star, largest_remainder_shares, most_free_class,
    naive_weighted_fair, sjf_cp, tetris, troublesome_stages, weighted_fair, HeuristicConfig,
};

use crate::error::{Error, Result};
use crate::rng::{seeded, SimRng};
use crate::simenv::{Action, ClusterState, Scheduler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    Fifo,
    SjfCp,
    Fair,
    WeightedFair,
    NaiveWeightedFair,
    Tetris,
    GrapheneStar,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 7] = [
        HeuristicKind::Fifo,
        HeuristicKind::SjfCp,
        HeuristicKind::Fair,
        HeuristicKind::WeightedFair,
        HeuristicKind::NaiveWeightedFair,
        HeuristicKind::Tetris,
        HeuristicKind::GrapheneStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Fifo => "fifo",
            HeuristicKind::SjfCp => "sjf_cp",
            HeuristicKind::Fair => "fair",
            HeuristicKind::WeightedFair => "weighted_fair",
            HeuristicKind::NaiveWeightedFair => "naive_weighted_fair",
            HeuristicKind::Tetris => "tetris",
            HeuristicKind::GrapheneStar => "graphene_star",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(|k| k.name()).join(", ")
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheduler '{s}'; valid: {}", Self::valid_names())))
    }
}

/// A heuristic with its configuration, usable as a [`Scheduler`].
#[derive(Debug, Clone, PartialEq)]
pub struct Heuristic {
    pub kind: HeuristicKind,
    pub config: HeuristicConfig,
}

impl Heuristic {
    pub fn new(kind: HeuristicKind) -> Self {
        Heuristic {
            kind,
            config: HeuristicConfig::default(),
        }
    }

    pub fn with_config(kind: HeuristicKind, config: HeuristicConfig) -> Self {
        Heuristic { kind, config }
    }

    pub fn action(&self, state: &ClusterState) -> Option<Action> {
        match self.kind {
            HeuristicKind::Fifo => fifo(state),
            HeuristicKind::SjfCp => sjf_cp(state),
            HeuristicKind::Fair => fair(state),
            HeuristicKind::WeightedFair => weighted_fair(state, self.config.fairness_exponent),
            HeuristicKind::NaiveWeightedFair => naive_weighted_fair(state),
            HeuristicKind::Tetris => tetris(state, &self.config),
            HeuristicKind::GrapheneStar => graphene_star(state, &self.config),
        }
    }
}

impl Scheduler for Heuristic {
    fn name(&self) -> String {
        match self.kind {
            HeuristicKind::WeightedFair => format!("weighted_fair(a={})", self.config.fairness_exponent),
            k => k.name().to_string(),
        }
    }

    fn decide(&mut self, state: &ClusterState) -> Result<Option<Action>> {
        Ok(self.action(state))
    }
}

/// Uniformly random legal actions: stage, then limit, then class.
#[derive(Debug, Clone)]
pub struct RandomScheduler {
    rng: SimRng,
}

impl RandomScheduler {
    pub fn new(seed: u64) -> Self {
        RandomScheduler { rng: seeded(seed) }
    }
}

impl Scheduler for RandomScheduler {
    fn name(&self) -> String {
        "random".into()
    }

    fn decide(&mut self, state: &ClusterState) -> Result<Option<Action>> {
        let frontier = state.schedulable_frontier();
        let Some(&stage) = frontier.choose(&mut self.rng) else {
            return Ok(None);
        };
        let alloc = state.job(stage.job).executors_allocated;
        let limit = self.rng.random_range(alloc + 1..=state.num_executors());
        let class = if state.config().multi_resource {
            state.eligible_classes(stage).choose(&mut self.rng).copied()
        } else {
            None
        };
        Ok(Some(Action { stage, limit, class }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simenv::{run_episode, EnvConfig, StageRef};
    use crate::workload::{gen_tpch_like, DurationModel, JobDag, StageSpec, Workload};

    fn st(tasks: usize, dur: f64) -> StageSpec {
        StageSpec::new(tasks, DurationModel::new(dur, dur))
    }

    #[test]
    fn names_round_trip() {
        for k in HeuristicKind::ALL {
            assert_eq!(k.name().parse::<HeuristicKind>().unwrap(), k);
        }
        let err = "lifo".parse::<HeuristicKind>().unwrap_err().to_string();
        assert!(err.contains("fifo") && err.contains("graphene_star"));
    }

    #[test]
    fn single_job_every_heuristic_picks_it() {
        let w = Workload::batch(vec![JobDag::new("a", vec![st(3, 1.0), st(2, 1.0)], vec![], 0.0).unwrap()]);
        let s = ClusterState::reset(&w, EnvConfig::single(4), 0).unwrap();
        for k in HeuristicKind::ALL {
            let a = Heuristic::new(k).action(&s).unwrap();
            assert_eq!(a.stage.job, 0);
            assert!(s.validate_action(&a).is_ok());
        }
    }

    #[test]
    fn exponent_zero_matches_fair_along_episode() {
        let jobs = gen_tpch_like(5, 6, &[2.0, 5.0, 10.0]).unwrap();
        let w = Workload::batch(jobs);
        let mut s = ClusterState::reset(&w, EnvConfig::single(10), 3).unwrap();
        while !s.is_done() {
            let a = fair(&s).unwrap();
            assert_eq!(weighted_fair(&s, 0.0), Some(a));
            s.step(&a).unwrap();
        }
    }

    #[test]
    fn exponent_one_matches_naive() {
        let jobs = gen_tpch_like(6, 5, &[2.0, 5.0, 10.0]).unwrap();
        let mut s = ClusterState::reset(&Workload::batch(jobs), EnvConfig::single(8), 3).unwrap();
        while !s.is_done() {
            let a = weighted_fair(&s, 1.0).unwrap();
            assert_eq!(naive_weighted_fair(&s), Some(a));
            s.step(&a).unwrap();
        }
    }

    #[test]
    fn fifo_and_fair_are_work_conserving_when_simplified() {
        let jobs = gen_tpch_like(2, 8, &[2.0, 5.0, 10.0]).unwrap();
        let w = Workload::batch(jobs);
        for k in [HeuristicKind::Fifo, HeuristicKind::Fair] {
            let mut s = ClusterState::reset(&w, EnvConfig::single(12).simplified(), 0).unwrap();
            let mut h = Heuristic::new(k);
            while !s.is_done() {
                let a = h.decide(&s).unwrap().unwrap();
                s.step(&a).unwrap();
                // Back in the simulation loop: any decision point left idle
                // executors only if nothing runnable fits them.
                if !s.is_done() {
                    assert!(s.num_free_executors() == 0 || !s.schedulable_frontier().is_empty());
                }
            }
        }
    }

    #[test]
    fn graphene_defers_troublesome_until_sibling_runnable() {
        // 0 (troublesome, long) and 2 (troublesome, gated by 1) are siblings;
        // 1, 3 and 4 are short ordinary stages.
        let stages = vec![st(2, 20.0), st(2, 1.0), st(2, 20.0), st(1, 1.0), st(1, 1.0)];
        let d = JobDag::new("g", stages, vec![(1, 2), (3, 4)], 0.0).unwrap();
        let s = ClusterState::reset(&Workload::batch(vec![d]), EnvConfig::single(4), 0).unwrap();
        let cfg = HeuristicConfig::default();
        let t = troublesome_stages(&s, &cfg);
        assert_eq!(t, vec![StageRef::new(0, 0), StageRef::new(0, 2)]);
        assert_eq!(graphene_star(&s, &cfg).unwrap().stage, StageRef::new(0, 1));
    }

    #[test]
    fn graphene_without_troublesome_equals_weighted_fair() {
        let cfg = HeuristicConfig {
            graphene_duration_threshold: 1e9,
            graphene_mem_threshold: 2.0,
            ..HeuristicConfig::default()
        };
        let jobs = gen_tpch_like(9, 6, &[2.0, 5.0]).unwrap();
        let mut s = ClusterState::reset(&Workload::batch(jobs), EnvConfig::four_class(12), 1).unwrap();
        while !s.is_done() {
            let a = graphene_star(&s, &cfg).unwrap();
            let w = weighted_fair(&s, cfg.fairness_exponent).unwrap();
            assert_eq!((w.stage, w.limit), (a.stage, a.limit));
            assert_eq!(a.class, best_fit_class(&s, a.stage));
            s.step(&a).unwrap();
        }
    }

    #[test]
    fn every_heuristic_finishes_four_class_episode() {
        let jobs = gen_tpch_like(4, 6, &[2.0, 5.0]).unwrap();
        let w = Workload::batch(jobs);
        for k in HeuristicKind::ALL {
            let mut s = ClusterState::reset(&w, EnvConfig::four_class(8), 2).unwrap();
            let sum = run_episode(&mut s, &mut Heuristic::new(k)).unwrap();
            assert_eq!(sum.stats.unwrap().per_job.len(), 6, "{k}");
        }
        let mut s = ClusterState::reset(&w, EnvConfig::four_class(8), 2).unwrap();
        run_episode(&mut s, &mut RandomScheduler::new(1)).unwrap();
        assert!(s.is_done());
    }
}
