//! REINFORCE with input-dependent baselines.
//!
//! Each iteration draws one arrival sequence and an episode length, runs
//! `num_workers` sampled rollouts of that same sequence, uses their mean
//! reward-to-go at each step as the baseline, and takes one Adam step on
//! the advantage-weighted log-probabilities plus an entropy bonus.

mod rollout;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use rollout::{
    advantages, input_dependent_baseline, mean_squared_advantage, returns, rollout, sample_episode_length,
    time_based_baseline, RewardNormalizer, Step, Trajectory,
};

use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, Adam, ParamTensors, TensorArchive};
use crate::policy::{accumulate_grad, PolicyParams, PolicyScheduler};
use crate::rng::{derive_seed, seeded};
use crate::simenv::{run_episode, ClusterState, EnvConfig};
use crate::workload::WorkloadSpec;

pub const CHECKPOINT_SCHEMA_VERSION: u64 = 1;
pub const CURVE_HEADER: &str = "iteration,mean_return,eval_avg_jct,tau_mean,wall_seconds";

const TRAIN_LABEL: u64 = 0x7472_6169_6e00_0000;
const EVAL_LABEL: u64 = 0x6576_616c_0000_0000;

/// How the mean episode length evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curriculum {
    /// `tau_mean + tau_growth * iteration`.
    #[default]
    Growth,
    /// `1 / p`, with the per-second termination probability `p` decaying
    /// linearly from `termination_prob_start` to `termination_prob_end`.
    TerminationProb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// If set, the learning rate decays linearly to this by the last
    /// iteration; otherwise it stays constant.
    pub learning_rate_end: Option<f64>,
    pub num_workers: usize,
    pub iterations: usize,
    pub curriculum: Curriculum,
    pub tau_mean: f64,
    pub tau_growth: f64,
    pub termination_prob_start: f64,
    pub termination_prob_end: f64,
    /// Subtract a moving average of rewards (average-reward objective).
    pub differential_reward: bool,
    pub reward_window: usize,
    /// Rewards are multiplied by this before computing advantages.
    pub reward_scale: f64,
    pub entropy_weight_start: f64,
    pub entropy_weight_end: f64,
    pub clip_norm: f64,
    pub eval_interval: usize,
    pub eval_sequences: usize,
    pub checkpoint_interval: usize,
    /// Fill the wall-clock column of the learning curve; off keeps outputs
    /// byte-reproducible.
    pub record_wall_time: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            learning_rate_end: None,
            num_workers: 8,
            iterations: 100,
            curriculum: Curriculum::Growth,
            tau_mean: 2000.0,
            tau_growth: 5.0,
            termination_prob_start: 5e-7,
            termination_prob_end: 5e-8,
            differential_reward: false,
            reward_window: 10_000,
            reward_scale: 1e-3,
            entropy_weight_start: 1e-2,
            entropy_weight_end: 1e-4,
            clip_norm: 10.0,
            eval_interval: 50,
            eval_sequences: 20,
            checkpoint_interval: 50,
            record_wall_time: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("train.learning_rate must be > 0");
        }
        if let Some(end) = self.learning_rate_end {
            if !(end > 0.0 && end.is_finite()) {
                return bad("train.learning_rate_end must be > 0");
            }
        }
        if self.num_workers == 0 {
            return bad("train.num_workers must be >= 1");
        }
        if !(self.tau_mean > 0.0) {
            return bad("train.tau_mean must be > 0");
        }
        if !(self.tau_growth >= 0.0) {
            return bad("train.tau_growth must be >= 0");
        }
        if !(self.termination_prob_end > 0.0 && self.termination_prob_start >= self.termination_prob_end) {
            return bad("train.termination_prob_start >= termination_prob_end > 0 required");
        }
        if self.reward_window == 0 {
            return bad("train.reward_window must be >= 1");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("train.reward_scale must be > 0");
        }
        if !(self.entropy_weight_start >= 0.0 && self.entropy_weight_end >= 0.0) {
            return bad("train.entropy weights must be >= 0");
        }
        if !(self.clip_norm > 0.0) {
            return bad("train.clip_norm must be > 0");
        }
        if self.eval_sequences == 0 {
            return bad("train.eval_sequences must be >= 1");
        }
        Ok(())
    }

    fn progress(&self, iteration: usize) -> f64 {
        if self.iterations <= 1 {
            0.0
        } else {
            (iteration as f64 / (self.iterations - 1) as f64).min(1.0)
        }
    }

    pub fn tau_mean_at(&self, iteration: usize) -> f64 {
        match self.curriculum {
            Curriculum::Growth => self.tau_mean + self.tau_growth * iteration as f64,
            Curriculum::TerminationProb => {
                let p = self.termination_prob_start
                    + (self.termination_prob_end - self.termination_prob_start) * self.progress(iteration);
                1.0 / p
            }
        }
    }

    pub fn learning_rate_at(&self, iteration: usize) -> f64 {
        match self.learning_rate_end {
            None => self.learning_rate,
            Some(end) => self.learning_rate + (end - self.learning_rate) * self.progress(iteration),
        }
    }

    pub fn entropy_weight_at(&self, iteration: usize) -> f64 {
        self.entropy_weight_start + (self.entropy_weight_end - self.entropy_weight_start) * self.progress(iteration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    pub grad_norm: f64,
    pub mean_entropy: f64,
    pub num_steps: usize,
}

/// Gradient of the surrogate `(1/N) sum_i sum_k [A_ik log pi + beta H]`,
/// reduced over trajectories in index order.
pub fn surrogate_gradient(
    params: &PolicyParams,
    trajs: &[Trajectory],
    adv: &[Vec<f64>],
    entropy_weight: f64,
) -> Result<(Vec<f64>, UpdateDiagnostics)> {
    if adv.len() != trajs.len() {
        return Err(Error::Usage("advantages do not match trajectories".into()));
    }
    let parts: Vec<(Vec<f64>, f64, usize)> = trajs
        .par_iter()
        .zip(adv)
        .map(|(t, a)| {
            let mut g = params.zeros_like();
            let mut ent = 0.0;
            for (s, &ak) in t.steps.iter().zip(a) {
                ent += accumulate_grad(params, &s.obs, &s.decision, ak, entropy_weight, &mut g)?.1;
            }
            Ok((g.flatten(), ent, t.steps.len()))
        })
        .collect::<Result<_>>()?;
    let n = trajs.len().max(1) as f64;
    let mut total = vec![0.0; params.num_params()];
    let mut ent = 0.0;
    let mut steps = 0;
    for (g, e, k) in &parts {
        for (t, x) in total.iter_mut().zip(g) {
            *t += x;
        }
        ent += e;
        steps += k;
    }
    total.iter_mut().for_each(|x| *x /= n);
    let grad_norm = total.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((
        total,
        UpdateDiagnostics {
            grad_norm,
            mean_entropy: ent / steps.max(1) as f64,
            num_steps: steps,
        },
    ))
}

/// One gradient-ascent step; on a non-finite gradient the parameters and
/// optimiser are left untouched.
pub fn reinforce_update(
    params: &mut PolicyParams,
    adam: &mut Adam,
    trajs: &[Trajectory],
    adv: &[Vec<f64>],
    entropy_weight: f64,
    clip_norm: f64,
) -> Result<UpdateDiagnostics> {
    let (mut g, diag) = surrogate_gradient(params, trajs, adv, entropy_weight)?;
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("policy gradient over {} steps", diag.num_steps)));
    }
    clip_global_norm(&mut g, clip_norm);
    // Adam descends; negate for ascent.
    g.iter_mut().for_each(|x| *x = -*x);
    let mut flat = params.flatten();
    adam.step(&mut flat, &g);
    params.assign_flat(&flat)?;
    Ok(diag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub iteration: usize,
    pub mean_return: f64,
    pub eval_avg_jct: Option<f64>,
    #[serde(with = "crate::util::serde_f64_ext")]
    pub tau_mean: f64,
    pub wall_seconds: f64,
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in rows {
        let eval = r.eval_avg_jct.map(|x| x.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration, r.mean_return, eval, r.tau_mean, r.wall_seconds
        ));
    }
    s
}

/// Everything needed to resume training exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u64,
    /// Next iteration to run.
    pub iteration: usize,
    pub num_classes: usize,
    pub params: TensorArchive,
    pub optimizer: Adam,
    pub normalizer: RewardNormalizer,
    pub curve: Vec<CurveRow>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Parse {
            record: "checkpoint".into(),
            message: e.to_string(),
        })?;
        if c.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Parse {
                record: "checkpoint".into(),
                message: format!("schema version {} (expected {CHECKPOINT_SCHEMA_VERSION})", c.schema_version),
            });
        }
        Ok(c)
    }

    pub fn policy(&self) -> Result<PolicyParams> {
        let mut p = PolicyParams::zeros(self.num_classes);
        p.load_archive(&self.params)?;
        Ok(p)
    }
}

/// Mean average-JCT of the greedy policy over the held-out sequences.
pub fn evaluate(params: &PolicyParams, workload: &WorkloadSpec, env: &EnvConfig, cfg: &TrainConfig) -> Result<f64> {
    let params = Arc::new(params.clone());
    let jcts: Vec<f64> = (0..cfg.eval_sequences)
        .into_par_iter()
        .map(|i| {
            let seed = eval_seed(cfg, i);
            let w = workload.sample(seed)?;
            let mut s = ClusterState::reset(&w, env.clone(), seed)?;
            let sum = run_episode(&mut s, &mut PolicyScheduler::greedy(params.clone()))?;
            Ok(sum.stats.map_or(0.0, |s| s.average_jct))
        })
        .collect::<Result<_>>()?;
    Ok(jcts.iter().sum::<f64>() / jcts.len() as f64)
}

/// Seeds of the `i`-th held-out evaluation sequence.
pub fn eval_seed(cfg: &TrainConfig, i: usize) -> u64 {
    derive_seed(cfg.seed, EVAL_LABEL + i as u64)
}

pub struct Trainer {
    pub cfg: TrainConfig,
    pub env: EnvConfig,
    pub workload: WorkloadSpec,
    pub params: PolicyParams,
    adam: Adam,
    normalizer: RewardNormalizer,
    iteration: usize,
    curve: Vec<CurveRow>,
    started: Instant,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, env: EnvConfig, workload: WorkloadSpec) -> Result<Self> {
        cfg.validate()?;
        env.validate()?;
        workload.validate()?;
        let params = PolicyParams::init(env.num_classes(), derive_seed(cfg.seed, 0));
        let adam = Adam::new(params.num_params(), cfg.learning_rate);
        let normalizer = RewardNormalizer::new(cfg.reward_window)?;
        Ok(Trainer {
            env: Self::rollout_env(env),
            cfg,
            workload,
            params,
            adam,
            normalizer,
            iteration: 0,
            curve: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn resume(cfg: TrainConfig, env: EnvConfig, workload: WorkloadSpec, ckpt: Checkpoint) -> Result<Self> {
        let mut t = Trainer::new(cfg, env, workload)?;
        if ckpt.num_classes != t.params.num_classes {
            return Err(Error::Shape(format!(
                "checkpoint has {} executor classes, config has {}",
                ckpt.num_classes, t.params.num_classes
            )));
        }
        t.params.load_archive(&ckpt.params)?;
        if ckpt.optimizer.m.len() != t.params.num_params() {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }
        t.adam = ckpt.optimizer;
        t.normalizer = ckpt.normalizer;
        t.iteration = ckpt.iteration;
        t.curve = ckpt.curve;
        Ok(t)
    }

    fn rollout_env(mut env: EnvConfig) -> EnvConfig {
        env.record_tasks = false;
        env.audit = false;
        env
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn curve(&self) -> &[CurveRow] {
        &self.curve
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.cfg.iterations
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            iteration: self.iteration,
            num_classes: self.params.num_classes,
            params: self.params.to_archive(),
            optimizer: self.adam.clone(),
            normalizer: self.normalizer.clone(),
            curve: self.curve.clone(),
        }
    }

    /// Runs the `num_workers` same-sequence rollouts of iteration `it`.
    pub fn rollouts(&self, it: usize) -> Result<Vec<Trajectory>> {
        let seed = derive_seed(self.cfg.seed, TRAIN_LABEL + it as u64);
        let workload = self.workload.sample(seed)?;
        let tau = sample_episode_length(self.cfg.tau_mean_at(it), &mut seeded(derive_seed(seed, 1)));
        let params = &self.params;
        (0..self.cfg.num_workers)
            .into_par_iter()
            .map(|w| rollout(params, &workload, &self.env, tau, seed, derive_seed(seed, 100 + w as u64), seed))
            .collect()
    }

    /// One training iteration.
    pub fn step(&mut self) -> Result<CurveRow> {
        let it = self.iteration;
        let mut trajs = self.rollouts(it)?;
        let mean_return = trajs.iter().map(Trajectory::total_reward).sum::<f64>() / trajs.len() as f64;
        if self.cfg.differential_reward {
            self.normalizer.apply(&mut trajs);
        }
        let scale = self.cfg.reward_scale;
        for t in &mut trajs {
            for s in &mut t.steps {
                s.reward *= scale;
            }
        }
        let b = input_dependent_baseline(&trajs)?;
        let adv = advantages(&trajs, &vec![b; trajs.len()])?;
        self.adam.lr = self.cfg.learning_rate_at(it);
        reinforce_update(
            &mut self.params,
            &mut self.adam,
            &trajs,
            &adv,
            self.cfg.entropy_weight_at(it),
            self.cfg.clip_norm,
        )?;
        self.iteration += 1;
        let due = self.cfg.eval_interval > 0 && self.iteration.is_multiple_of(self.cfg.eval_interval);
        let eval_avg_jct = if due || self.iteration == self.cfg.iterations {
            Some(evaluate(&self.params, &self.workload, &self.env, &self.cfg)?)
        } else {
            None
        };
        let row = CurveRow {
            iteration: it,
            mean_return,
            eval_avg_jct,
            tau_mean: self.cfg.tau_mean_at(it),
            wall_seconds: if self.cfg.record_wall_time {
                self.started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        self.curve.push(row.clone());
        Ok(row)
    }

    /// Trains to `cfg.iterations`, calling `on_iteration` after each step.
    pub fn run(&mut self, mut on_iteration: impl FnMut(&Trainer) -> Result<()>) -> Result<()> {
        while !self.is_finished() {
            self.step()?;
            on_iteration(self)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: PolicyParams,
    pub curve: Vec<CurveRow>,
}

pub fn train(workload: &WorkloadSpec, env: &EnvConfig, cfg: &TrainConfig) -> Result<TrainOutput> {
    let mut t = Trainer::new(cfg.clone(), env.clone(), workload.clone())?;
    t.run(|_| Ok(()))?;
    Ok(TrainOutput {
        params: t.params,
        curve: t.curve,
    })
}
