use super::records::JctStats;
use super::state::{Action, ClusterState};
use crate::error::{Error, Result};

/// Anything that maps a state needing a decision to an action.
pub trait Scheduler {
    fn name(&self) -> String;

    /// `None` means the scheduler has nothing to do (no schedulable stage).
    fn decide(&mut self, state: &ClusterState) -> Result<Option<Action>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub rewards: Vec<f64>,
    pub stats: Option<JctStats>,
    pub end_clock: f64,
}

impl EpisodeSummary {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Drives `state` with `scheduler` until the episode ends.
pub fn run_episode<S: Scheduler + ?Sized>(state: &mut ClusterState, scheduler: &mut S) -> Result<EpisodeSummary> {
    let mut rewards = Vec::new();
    while !state.is_done() {
        let action = scheduler
            .decide(state)?
            .ok_or_else(|| Error::Usage(format!("{} returned no action while one was needed", scheduler.name())))?;
        rewards.push(state.step(&action)?.reward);
    }
    Ok(EpisodeSummary {
        rewards,
        stats: state.episode_jct_stats(),
        end_clock: state.clock(),
    })
}
