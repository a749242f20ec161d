use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{sample_decision, Decision, Observation, PolicyParams};
use crate::rng::seeded;
use crate::simenv::{ClusterState, EnvConfig, JctStats};
use crate::workload::Workload;

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Observation,
    pub decision: Decision,
    /// Reward accrued from this decision until the next one.
    pub reward: f64,
    /// Clock at the decision.
    pub time: f64,
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub episode_seed: u64,
    pub sequence_id: u64,
    /// Stopped by the episode-length horizon rather than by finishing.
    pub truncated: bool,
    pub stats: Option<JctStats>,
}

impl Trajectory {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Runs one episode, sampling actions from the policy, until the workload
/// finishes or the clock passes `tau`.
pub fn rollout(
    params: &PolicyParams,
    workload: &Workload,
    env: &EnvConfig,
    tau: f64,
    episode_seed: u64,
    sample_seed: u64,
    sequence_id: u64,
) -> Result<Trajectory> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("episode length must be > 0, got {tau}")));
    }
    let horizon = tau.is_finite().then_some(tau);
    let mut state = ClusterState::reset_with_horizon(workload, env.clone(), episode_seed, horizon)?;
    let mut rng = seeded(sample_seed);
    let mut steps = Vec::new();
    while !state.is_done() {
        let obs = Observation::from_state(&state);
        let (decision, log_prob) = sample_decision(params, &obs, Some(&mut rng))?
            .ok_or_else(|| Error::Usage(format!("no schedulable stage at t={}", state.clock())))?;
        let time = state.clock();
        let out = state.step(&obs.to_action(&decision)).map_err(|e| {
            Error::Usage(format!("episode {episode_seed} aborted at t={time} after {} steps: {e}", steps.len()))
        })?;
        steps.push(Step {
            obs,
            decision,
            reward: out.reward,
            time,
            log_prob,
        });
    }
    Ok(Trajectory {
        steps,
        episode_seed,
        sequence_id,
        truncated: state.is_truncated(),
        stats: state.episode_jct_stats(),
    })
}

/// Reward-to-go `R_k = sum_{k' >= k} r_k'`.
pub fn returns(rewards: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for k in (0..rewards.len()).rev() {
        acc += rewards[k];
        out[k] = acc;
    }
    out
}

/// `b_k` = mean over the episodes of their return from step `k`; episodes
/// that ended before step `k` contribute 0.
pub fn input_dependent_baseline(trajs: &[Trajectory]) -> Result<Vec<f64>> {
    let Some(first) = trajs.first() else {
        return Err(Error::Usage("baseline needs at least one trajectory".into()));
    };
    if trajs.iter().any(|t| t.sequence_id != first.sequence_id) {
        return Err(Error::Usage("baseline over trajectories of different arrival sequences".into()));
    }
    let all: Vec<Vec<f64>> = trajs.iter().map(|t| returns(&t.rewards())).collect();
    Ok(mean_zero_extended(&all))
}

fn mean_zero_extended(rets: &[Vec<f64>]) -> Vec<f64> {
    let len = rets.iter().map(Vec::len).max().unwrap_or(0);
    let n = rets.len() as f64;
    (0..len)
        .map(|k| rets.iter().map(|r| r.get(k).copied().unwrap_or(0.0)).sum::<f64>() / n)
        .collect()
}

/// Pooled baseline indexed by wall-clock time: for a step at time `t`, the
/// mean over all episodes of their return from their first step at or after
/// `t` (0 if none).
pub fn time_based_baseline(trajs: &[Trajectory]) -> Vec<Vec<f64>> {
    let rets: Vec<Vec<f64>> = trajs.iter().map(|t| returns(&t.rewards())).collect();
    let times: Vec<Vec<f64>> = trajs.iter().map(|t| t.steps.iter().map(|s| s.time).collect()).collect();
    let n = trajs.len() as f64;
    let at = |t: f64| -> f64 {
        rets.iter()
            .zip(&times)
            .map(|(r, ts)| {
                let i = ts.partition_point(|&x| x < t);
                r.get(i).copied().unwrap_or(0.0)
            })
            .sum::<f64>()
            / n
    };
    times.iter().map(|ts| ts.iter().map(|&t| at(t)).collect()).collect()
}

/// `R_k - b_k` per trajectory, with one baseline vector per trajectory.
pub fn advantages(trajs: &[Trajectory], baselines: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if baselines.len() != trajs.len() {
        return Err(Error::Usage("one baseline vector per trajectory expected".into()));
    }
    trajs
        .iter()
        .zip(baselines)
        .map(|(t, b)| {
            if b.len() < t.steps.len() {
                return Err(Error::Usage("baseline shorter than trajectory".into()));
            }
            Ok(returns(&t.rewards()).iter().zip(b).map(|(r, b)| r - b).collect())
        })
        .collect()
}

pub fn mean_squared_advantage(adv: &[Vec<f64>]) -> f64 {
    let n: usize = adv.iter().map(Vec::len).sum();
    adv.iter().flatten().map(|a| a * a).sum::<f64>() / n.max(1) as f64
}

/// Exponential episode length with mean `tau_mean`.
pub fn sample_episode_length<R: Rng + ?Sized>(tau_mean: f64, rng: &mut R) -> f64 {
    assert!(tau_mean > 0.0, "tau_mean must be positive");
    if tau_mean.is_infinite() {
        return f64::INFINITY;
    }
    Exp::new(1.0 / tau_mean).expect("positive rate").sample(rng)
}

/// Moving average of the last `window` raw rewards; subtracted from rewards
/// when training for the average-reward objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardNormalizer {
    pub window: usize,
    buf: VecDeque<f64>,
    sum: f64,
    pushes: u64,
}

impl RewardNormalizer {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidConfig("reward_window must be >= 1".into()));
        }
        Ok(RewardNormalizer {
            window,
            buf: VecDeque::with_capacity(window),
            sum: 0.0,
            pushes: 0,
        })
    }

    pub fn push(&mut self, r: f64) {
        if self.buf.len() == self.window {
            self.sum -= self.buf.pop_front().expect("full buffer");
        }
        self.buf.push_back(r);
        self.sum += r;
        self.pushes += 1;
        // Re-sum once per window so cancellation error cannot build up.
        if self.pushes.is_multiple_of(self.window as u64) {
            self.sum = self.buf.iter().sum();
        }
    }

    pub fn mean(&self) -> f64 {
        if self.buf.is_empty() {
            0.0
        } else {
            self.sum / self.buf.len() as f64
        }
    }

    /// Subtracts the current average from every reward of every trajectory,
    /// then records the raw rewards.
    pub fn apply(&mut self, trajs: &mut [Trajectory]) {
        let r_hat = self.mean();
        let raw: Vec<f64> = trajs.iter().flat_map(|t| t.rewards()).collect();
        for t in trajs.iter_mut() {
            for s in &mut t.steps {
                s.reward -= r_hat;
            }
        }
        for r in raw {
            self.push(r);
        }
    }
}
