//! Score heads over the embeddings and the masked action distributions.
//!
//! A decision is made in up to three stages: a runnable stage from the
//! schedulable frontier (`q(e_v, y_j, z)`), a parallelism limit for its job
//! among `alloc+1 ..= N` (`w(y_j, z, l/N)`), and in multi-resource mode an
//! executor class among those with a fitting free executor
//! (`c(y_j, z, onehot(class))`). Each is a softmax over the legal set only.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::gnn::{self, mlp_sizes, Aggregation, Forward, GnnParams, GraphInput, Upstream, EMBED_DIM};
use crate::nn::{Mlp, MlpCache, ParamTensors};
use crate::rng::{seeded, SimRng};
use crate::simenv::{Action, ClusterState, Scheduler, StageRef};

pub const NODE_INPUT: usize = 3 * EMBED_DIM;
pub const LIMIT_INPUT: usize = 2 * EMBED_DIM + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub gnn: GnnParams,
    pub q: Mlp,
    pub w: Mlp,
    pub class_head: Mlp,
    pub num_classes: usize,
}

impl PolicyParams {
    pub fn init(num_classes: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let gnn = GnnParams::init(&mut rng);
        PolicyParams {
            gnn,
            q: Mlp::init(&mlp_sizes(NODE_INPUT, 1), &mut rng),
            w: Mlp::init(&mlp_sizes(LIMIT_INPUT, 1), &mut rng),
            class_head: Mlp::init(&mlp_sizes(2 * EMBED_DIM + num_classes, 1), &mut rng),
            num_classes,
        }
    }

    pub fn zeros(num_classes: usize) -> Self {
        PolicyParams {
            gnn: GnnParams::zeros(),
            q: Mlp::zeros(&mlp_sizes(NODE_INPUT, 1)),
            w: Mlp::zeros(&mlp_sizes(LIMIT_INPUT, 1)),
            class_head: Mlp::zeros(&mlp_sizes(2 * EMBED_DIM + num_classes, 1)),
            num_classes,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.num_classes)
    }
}

impl ParamTensors for PolicyParams {
    fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out: Vec<_> = self
            .gnn
            .named_tensors()
            .into_iter()
            .map(|(n, s, d)| (format!("gnn.{n}"), s, d))
            .collect();
        for (p, m) in [("q", &self.q), ("w", &self.w), ("class", &self.class_head)] {
            for (n, s, d) in m.tensors() {
                out.push((format!("{p}.{n}"), s, d));
            }
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = self.gnn.tensors_mut();
        out.extend(self.q.tensors_mut());
        out.extend(self.w.tensors_mut());
        out.extend(self.class_head.tensors_mut());
        out
    }
}

/// Everything the policy reads from a state, detached from the simulator so
/// trajectories can be replayed for gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Simulator job index of each observed job.
    pub jobs: Vec<usize>,
    pub graphs: Vec<GraphInput>,
    pub alloc: Vec<usize>,
    /// `(position in jobs, stage)` of each schedulable stage.
    pub frontier: Vec<(usize, usize)>,
    /// Eligible classes per frontier entry; empty unless multi-resource.
    pub classes: Vec<Vec<usize>>,
    pub num_executors: usize,
    pub num_classes: usize,
    pub multi_resource: bool,
}

impl Observation {
    pub fn from_state(state: &ClusterState) -> Self {
        let jobs = state.jobs_in_system();
        let mut pos = vec![usize::MAX; state.jobs().len()];
        for (p, &j) in jobs.iter().enumerate() {
            pos[j] = p;
        }
        let multi = state.config().multi_resource;
        let frontier_refs = state.schedulable_frontier();
        Observation {
            graphs: jobs.iter().map(|&j| gnn::job_graph(state, j)).collect(),
            alloc: jobs.iter().map(|&j| state.job(j).executors_allocated).collect(),
            frontier: frontier_refs.iter().map(|s| (pos[s.job], s.stage)).collect(),
            classes: if multi {
                frontier_refs.iter().map(|&s| state.eligible_classes(s)).collect()
            } else {
                Vec::new()
            },
            jobs,
            num_executors: state.num_executors(),
            num_classes: state.config().num_classes(),
            multi_resource: multi,
        }
    }

    pub fn legal_limits(&self, job_pos: usize) -> std::ops::RangeInclusive<usize> {
        self.alloc[job_pos] + 1..=self.num_executors
    }

    pub fn to_action(&self, d: &Decision) -> Action {
        let (jp, v) = self.frontier[d.node];
        Action {
            stage: StageRef::new(self.jobs[jp], v),
            limit: d.limit,
            class: d.class,
        }
    }

    /// Inverse of [`Observation::to_action`]; illegal actions are a usage error.
    pub fn decision_for(&self, a: &Action) -> Result<Decision> {
        let node = self
            .frontier
            .iter()
            .position(|&(jp, v)| self.jobs[jp] == a.stage.job && v == a.stage.stage)
            .ok_or_else(|| Error::Usage(format!("stage {:?} is not schedulable", a.stage)))?;
        let jp = self.frontier[node].0;
        if !self.legal_limits(jp).contains(&a.limit) {
            return Err(Error::Usage(format!("limit {} is not legal", a.limit)));
        }
        let class = if self.multi_resource {
            match a.class {
                Some(c) if self.classes[node].contains(&c) => Some(c),
                c => return Err(Error::Usage(format!("class {c:?} is not eligible"))),
            }
        } else {
            None
        };
        Ok(Decision {
            node,
            limit: a.limit,
            class,
        })
    }
}

/// A decision in observation coordinates: frontier index, absolute limit
/// and absolute class id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub node: usize,
    pub limit: usize,
    pub class: Option<usize>,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ex: Vec<f64> = logits.iter().map(|&x| (x - m).exp()).collect();
    let s: f64 = ex.iter().sum();
    ex.into_iter().map(|x| x / s).collect()
}

fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
    logits[k] - lse
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// Gradient of `weight * log p_k + beta * H(p)` with respect to the logits.
fn dlogits(probs: &[f64], k: usize, weight: f64, beta: f64) -> Vec<f64> {
    let h = entropy(probs);
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let ind = if i == k { 1.0 } else { 0.0 };
            let dh = if p > 0.0 { -p * (p.ln() + h) } else { 0.0 };
            weight * (ind - p) + beta * dh
        })
        .collect()
}

struct Head {
    logits: Vec<f64>,
    probs: Vec<f64>,
    caches: Vec<MlpCache>,
}

fn score(mlp: &Mlp, inputs: impl Iterator<Item = Vec<f64>>) -> Head {
    let (logits, caches): (Vec<f64>, Vec<MlpCache>) = inputs
        .map(|x| {
            let (o, c) = mlp.forward_cached(&x);
            (o[0], c)
        })
        .unzip();
    let probs = softmax(&logits);
    Head { logits, probs, caches }
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn one_hot(i: usize, n: usize) -> Vec<f64> {
    (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
}

/// How each head picks its index.
enum Pick<'a> {
    Greedy,
    Sample(&'a mut SimRng),
    Fixed(Decision),
}

struct Pass {
    fwd: Forward,
    node: Head,
    limit: Head,
    class: Option<Head>,
    decision: Decision,
    /// Chosen index within each head.
    idx: [usize; 3],
}

fn argmax(xs: &[f64]) -> usize {
    // First maximiser, so ties go to the lowest index.
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn choose(head: &Head, pick: &mut Pick<'_>, fixed: usize) -> usize {
    match pick {
        Pick::Greedy => argmax(&head.logits),
        Pick::Sample(rng) => WeightedIndex::new(&head.probs)
            .map(|d| d.sample(*rng))
            .unwrap_or_else(|_| argmax(&head.logits)),
        Pick::Fixed(_) => fixed,
    }
}

fn check_shapes(params: &PolicyParams, obs: &Observation) -> Result<()> {
    if obs.multi_resource && params.num_classes != obs.num_classes {
        return Err(Error::Shape(format!(
            "class head built for {} classes, cluster has {}",
            params.num_classes, obs.num_classes
        )));
    }
    Ok(())
}

fn run_pass(params: &PolicyParams, obs: &Observation, mut pick: Pick<'_>) -> Result<Option<Pass>> {
    check_shapes(params, obs)?;
    if obs.frontier.is_empty() {
        return Ok(None);
    }
    let fixed = match &pick {
        Pick::Fixed(d) => Some(*d),
        _ => None,
    };
    let fwd = gnn::forward(&params.gnn, &obs.graphs, Aggregation::TwoLevel);
    let z = fwd.z.clone();
    let node = score(
        &params.q,
        obs.frontier
            .iter()
            .map(|&(jp, v)| concat(&[fwd.embedding(jp, v), &fwd.y[jp], &z])),
    );
    let ni = choose(&node, &mut pick, fixed.map_or(0, |d| d.node));
    let jp = obs.frontier[ni].0;
    let n = obs.num_executors as f64;
    let limits = obs.legal_limits(jp);
    let lo = *limits.start();
    let limit = score(&params.w, limits.map(|l| concat(&[&fwd.y[jp], &z, &[l as f64 / n]])));
    let li = choose(&limit, &mut pick, fixed.map_or(0, |d| d.limit.saturating_sub(lo)));
    let (class, ci, class_id) = if obs.multi_resource {
        let eligible = &obs.classes[ni];
        let head = score(
            &params.class_head,
            eligible.iter().map(|&c| concat(&[&fwd.y[jp], &z, &one_hot(c, obs.num_classes)])),
        );
        let fixed_ci = fixed
            .and_then(|d| d.class)
            .and_then(|c| eligible.iter().position(|&e| e == c))
            .unwrap_or(0);
        let ci = choose(&head, &mut pick, fixed_ci);
        (Some(head), ci, Some(eligible[ci]))
    } else {
        (None, 0, None)
    };
    Ok(Some(Pass {
        decision: Decision {
            node: ni,
            limit: lo + li,
            class: class_id,
        },
        fwd,
        node,
        limit,
        class,
        idx: [ni, li, ci],
    }))
}

impl Pass {
    fn log_prob(&self) -> f64 {
        let mut lp = log_softmax_at(&self.node.logits, self.idx[0]) + log_softmax_at(&self.limit.logits, self.idx[1]);
        if let Some(c) = &self.class {
            lp += log_softmax_at(&c.logits, self.idx[2]);
        }
        lp
    }

    fn entropy(&self) -> f64 {
        entropy(&self.node.probs) + entropy(&self.limit.probs) + self.class.as_ref().map_or(0.0, |c| entropy(&c.probs))
    }
}

/// Per-node probabilities over the frontier, `None` when it is empty.
pub fn node_distribution(params: &PolicyParams, obs: &Observation) -> Result<Option<Vec<f64>>> {
    Ok(run_pass(params, obs, Pick::Greedy)?.map(|p| p.node.probs))
}

/// Probabilities over `alloc+1 ..= N` for the job at `job_pos`.
pub fn limit_distribution(params: &PolicyParams, obs: &Observation, job_pos: usize) -> Result<Vec<f64>> {
    if job_pos >= obs.jobs.len() {
        return Err(Error::Usage(format!("no observed job at position {job_pos}")));
    }
    if obs.alloc[job_pos] >= obs.num_executors {
        return Err(Error::Usage("no legal limit: job already holds every executor".into()));
    }
    let fwd = gnn::forward(&params.gnn, &obs.graphs, Aggregation::TwoLevel);
    let n = obs.num_executors as f64;
    let head = score(
        &params.w,
        obs.legal_limits(job_pos)
            .map(|l| concat(&[&fwd.y[job_pos], &fwd.z, &[l as f64 / n]])),
    );
    Ok(head.probs)
}

/// Node, limit and (if applicable) class scores, exposed for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub node_logits: Vec<f64>,
    pub node_probs: Vec<f64>,
    pub limit_probs: Vec<f64>,
    pub class_probs: Option<Vec<f64>>,
}

/// Distributions along the greedy path.
pub fn greedy_scores(params: &PolicyParams, obs: &Observation) -> Result<Option<Scores>> {
    Ok(run_pass(params, obs, Pick::Greedy)?.map(|p| Scores {
        node_logits: p.node.logits,
        node_probs: p.node.probs,
        limit_probs: p.limit.probs,
        class_probs: p.class.map(|c| c.probs),
    }))
}

/// Samples (or takes the argmax of) every head; returns the decision and
/// its log-probability.
pub fn sample_decision(
    params: &PolicyParams,
    obs: &Observation,
    rng: Option<&mut SimRng>,
) -> Result<Option<(Decision, f64)>> {
    let pick = match rng {
        Some(r) => Pick::Sample(r),
        None => Pick::Greedy,
    };
    Ok(run_pass(params, obs, pick)?.map(|p| (p.decision, p.log_prob())))
}

/// Log-probability and entropy of a fixed decision.
pub fn log_prob(params: &PolicyParams, obs: &Observation, d: &Decision) -> Result<(f64, f64)> {
    validate_decision(obs, d)?;
    let p = run_pass(params, obs, Pick::Fixed(*d))?.expect("validated decision implies a frontier");
    Ok((p.log_prob(), p.entropy()))
}

fn validate_decision(obs: &Observation, d: &Decision) -> Result<()> {
    if d.node >= obs.frontier.len() {
        return Err(Error::Usage(format!("frontier index {} out of range", d.node)));
    }
    if !obs.legal_limits(obs.frontier[d.node].0).contains(&d.limit) {
        return Err(Error::Usage(format!("limit {} is not legal", d.limit)));
    }
    match (obs.multi_resource, d.class) {
        (true, Some(c)) if obs.classes[d.node].contains(&c) => Ok(()),
        (false, None) => Ok(()),
        (_, c) => Err(Error::Usage(format!("class {c:?} is not legal here"))),
    }
}

/// Accumulates `weight * grad log pi(d) + beta * grad H` into `grad` and
/// returns `(log pi(d), H)`.
pub fn accumulate_grad(
    params: &PolicyParams,
    obs: &Observation,
    d: &Decision,
    weight: f64,
    beta: f64,
    grad: &mut PolicyParams,
) -> Result<(f64, f64)> {
    validate_decision(obs, d)?;
    let pass = run_pass(params, obs, Pick::Fixed(*d))?.expect("validated decision implies a frontier");
    let result = (pass.log_prob(), pass.entropy());
    if weight == 0.0 && beta == 0.0 {
        return Ok(result);
    }
    let mut up = Upstream::zeros(&obs.graphs);
    let e = EMBED_DIM;

    let dn = dlogits(&pass.node.probs, pass.idx[0], weight, beta);
    for (i, (&(jp, v), c)) in obs.frontier.iter().zip(&pass.node.caches).enumerate() {
        if dn[i] == 0.0 {
            continue;
        }
        let dx = params.q.backward(c, &[dn[i]], &mut grad.q);
        add(&mut up.de[jp][v], &dx[..e]);
        add(&mut up.dy[jp], &dx[e..2 * e]);
        add(&mut up.dz, &dx[2 * e..]);
    }
    let jp = obs.frontier[pass.idx[0]].0;
    let dl = dlogits(&pass.limit.probs, pass.idx[1], weight, beta);
    for (c, &g) in pass.limit.caches.iter().zip(&dl) {
        if g == 0.0 {
            continue;
        }
        let dx = params.w.backward(c, &[g], &mut grad.w);
        add(&mut up.dy[jp], &dx[..e]);
        add(&mut up.dz, &dx[e..2 * e]);
    }
    if let Some(head) = &pass.class {
        let dc = dlogits(&head.probs, pass.idx[2], weight, beta);
        for (c, &g) in head.caches.iter().zip(&dc) {
            if g == 0.0 {
                continue;
            }
            let dx = params.class_head.backward(c, &[g], &mut grad.class_head);
            add(&mut up.dy[jp], &dx[..e]);
            add(&mut up.dz, &dx[e..2 * e]);
        }
    }
    gnn::backward(&params.gnn, &obs.graphs, &pass.fwd, up, &mut grad.gnn)?;
    Ok(result)
}

fn add(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Gradient of `log pi(action | state)`.
pub fn action_log_prob_grad(state: &ClusterState, action: &Action, params: &PolicyParams) -> Result<PolicyParams> {
    let obs = Observation::from_state(state);
    let d = obs.decision_for(action)?;
    let mut g = params.zeros_like();
    accumulate_grad(params, &obs, &d, 1.0, 0.0, &mut g)?;
    Ok(g)
}

/// The learned policy as a [`Scheduler`]: greedy unless given a sampling rng.
#[derive(Debug, Clone)]
pub struct PolicyScheduler {
    params: Arc<PolicyParams>,
    rng: Option<SimRng>,
}

impl PolicyScheduler {
    pub fn greedy(params: Arc<PolicyParams>) -> Self {
        PolicyScheduler { params, rng: None }
    }

    pub fn sampling(params: Arc<PolicyParams>, seed: u64) -> Self {
        PolicyScheduler {
            params,
            rng: Some(seeded(seed)),
        }
    }
}

impl Scheduler for PolicyScheduler {
    fn name(&self) -> String {
        if self.rng.is_some() { "policy(sample)" } else { "policy" }.into()
    }

    fn decide(&mut self, state: &ClusterState) -> Result<Option<Action>> {
        let obs = Observation::from_state(state);
        Ok(sample_decision(&self.params, &obs, self.rng.as_mut())?.map(|(d, _)| obs.to_action(&d)))
    }
}

#[cfg(test)]
mod tests;
