//! Expressiveness check: can the embedding regress each node's critical path?
//!
//! Both variants read the prediction linearly off the node embedding. With
//! the single transform, a linear readout of `sum f(e_u) + x_v` is additive
//! over children and so cannot represent the max inside the critical path.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{node_backward, node_pass, Aggregation, GraphInput, EMBED_DIM};
use crate::error::{Error, Result};
use crate::heuristics::critical_path_all;
use crate::nn::{clip_global_norm, Adam, Mlp, ParamTensors};
use crate::rng::{derive_seed, seeded};
use crate::workload::{DurationModel, JobDag, StageSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub seed: u64,
    /// Unseen graphs used for the accuracy estimate.
    pub n_graphs: usize,
    /// Gradient steps per variant.
    pub iterations: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub edge_prob: f64,
    /// Node work is an integer in `1..=max_work`.
    pub max_work: u32,
    /// Accuracy is recorded every this many iterations (0: only at the end).
    pub eval_every: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            seed: 0,
            n_graphs: 200,
            iterations: 12_000,
            batch_size: 16,
            lr: 3e-3,
            min_nodes: 8,
            max_nodes: 16,
            edge_prob: 0.3,
            max_work: 10,
            eval_every: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeCurvePoint {
    pub iteration: usize,
    pub two_level: f64,
    pub single_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub two_level_accuracy: f64,
    pub single_level_accuracy: f64,
    pub curve: Vec<ProbeCurvePoint>,
}

struct Sample {
    graph: GraphInput,
    /// Critical path divided by `max_work`.
    target: Vec<f64>,
}

fn sample_graph(cfg: &ProbeConfig, seed: u64) -> Sample {
    let mut rng = seeded(seed);
    let n = rng.random_range(cfg.min_nodes..=cfg.max_nodes.max(cfg.min_nodes));
    let stages = (0..n)
        .map(|_| {
            let w = rng.random_range(1..=cfg.max_work.max(1)) as f64;
            StageSpec::new(1, DurationModel::new(w, w))
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(cfg.edge_prob) {
                edges.push((a, b));
            }
        }
    }
    let dag = JobDag::new(format!("probe-{seed}"), stages, edges, 0.0).expect("forward edges form a DAG");
    let scale = cfg.max_work.max(1) as f64;
    let cp = critical_path_all(&dag);
    let features = dag.stages.iter().map(|s| vec![s.work() / scale]).collect();
    Sample {
        graph: GraphInput::new(dag.children(), features).expect("valid graph"),
        target: cp.iter().map(|c| c / scale).collect(),
    }
}

#[derive(Debug, Clone)]
struct Model {
    f: Mlp,
    g: Mlp,
    readout: Mlp,
}

impl ParamTensors for Model {
    fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (p, m) in [("f", &self.f), ("g", &self.g), ("readout", &self.readout)] {
            for (n, s, d) in m.tensors() {
                out.push((format!("{p}.{n}"), s, d));
            }
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = self.f.tensors_mut();
        out.extend(self.g.tensors_mut());
        out.extend(self.readout.tensors_mut());
        out
    }
}

impl Model {
    fn init(seed: u64) -> Self {
        let mut rng = seeded(seed);
        let s = super::mlp_sizes(EMBED_DIM, EMBED_DIM);
        Model {
            f: Mlp::init(&s, &mut rng),
            g: Mlp::init(&s, &mut rng),
            readout: Mlp::init(&[EMBED_DIM, 1], &mut rng),
        }
    }

    fn zeros_like(&self) -> Self {
        Model {
            f: self.f.zeros_like(),
            g: self.g.zeros_like(),
            readout: self.readout.zeros_like(),
        }
    }

    fn predict(&self, agg: Aggregation, graph: &GraphInput) -> Vec<f64> {
        node_pass(&self.f, &self.g, agg, graph)
            .e
            .iter()
            .map(|e| self.readout.forward(e)[0])
            .collect()
    }

    /// Mean squared error gradient over one graph; returns the loss.
    fn accumulate(&self, agg: Aggregation, s: &Sample, grad: &mut Model) -> f64 {
        let fwd = node_pass(&self.f, &self.g, agg, &s.graph);
        let n = s.target.len() as f64;
        let mut loss = 0.0;
        let mut de = Vec::with_capacity(s.target.len());
        for (e, t) in fwd.e.iter().zip(&s.target) {
            let (p, c) = self.readout.forward_cached(e);
            let err = p[0] - t;
            loss += err * err / n;
            de.push(self.readout.backward(&c, &[2.0 * err / n], &mut grad.readout));
        }
        node_backward(&self.f, &self.g, agg, &s.graph, &fwd, de, &mut grad.f, &mut grad.g);
        loss
    }
}

/// Fraction of graphs whose predicted argmax node has the maximal true
/// critical path (ties in the truth count as correct).
fn accuracy(model: &Model, agg: Aggregation, test: &[Sample]) -> f64 {
    let hits = test
        .iter()
        .filter(|s| {
            let pred = model.predict(agg, &s.graph);
            let arg = (0..pred.len()).max_by(|&a, &b| pred[a].total_cmp(&pred[b])).unwrap_or(0);
            let best = s.target.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            s.target[arg] >= best - 1e-9
        })
        .count();
    hits as f64 / test.len().max(1) as f64
}

fn train(cfg: &ProbeConfig, agg: Aggregation, test: &[Sample]) -> (f64, Vec<(usize, f64)>) {
    let mut model = Model::init(derive_seed(cfg.seed, 1));
    let mut flat = model.flatten();
    let mut adam = Adam::new(flat.len(), cfg.lr);
    let mut curve = Vec::new();
    for it in 0..cfg.iterations {
        let mut grad = model.zeros_like();
        for b in 0..cfg.batch_size {
            let s = sample_graph(cfg, derive_seed(cfg.seed, 1_000_000 + (it * cfg.batch_size + b) as u64));
            model.accumulate(agg, &s, &mut grad);
        }
        let mut g = grad.flatten();
        let inv = 1.0 / cfg.batch_size.max(1) as f64;
        g.iter_mut().for_each(|x| *x *= inv);
        clip_global_norm(&mut g, 10.0);
        // Linear decay to a tenth of the initial rate.
        adam.lr = cfg.lr * (1.0 - 0.9 * it as f64 / cfg.iterations as f64);
        adam.step(&mut flat, &g);
        model.assign_flat(&flat).expect("same layout");
        if cfg.eval_every > 0 && (it + 1) % cfg.eval_every == 0 && it + 1 < cfg.iterations {
            curve.push((it + 1, accuracy(&model, agg, test)));
        }
    }
    let acc = accuracy(&model, agg, test);
    curve.push((cfg.iterations, acc));
    (acc, curve)
}

/// Trains the two-transform and single-transform embeddings under the same
/// budget and reports argmax accuracy on unseen graphs.
impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("probe.{m}")));
        if self.n_graphs == 0 {
            return bad("n_graphs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be > 0");
        }
        if self.min_nodes == 0 || self.min_nodes > self.max_nodes {
            return bad("1 <= min_nodes <= max_nodes required");
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return bad("edge_prob must be in [0, 1]");
        }
        if self.max_work == 0 {
            return bad("max_work must be >= 1");
        }
        Ok(())
    }
}

pub fn critical_path_probe(cfg: &ProbeConfig) -> Result<ProbeReport> {
    cfg.validate()?;
    let test: Vec<Sample> = (0..cfg.n_graphs)
        .map(|i| sample_graph(cfg, derive_seed(cfg.seed, i as u64)))
        .collect();
    let runs: Vec<(f64, Vec<(usize, f64)>)> = [Aggregation::TwoLevel, Aggregation::SingleLevel]
        .into_par_iter()
        .map(|agg| train(cfg, agg, &test))
        .collect();
    let curve = runs[0]
        .1
        .iter()
        .zip(&runs[1].1)
        .map(|(a, b)| ProbeCurvePoint {
            iteration: a.0,
            two_level: a.1,
            single_level: b.1,
        })
        .collect();
    Ok(ProbeReport {
        two_level_accuracy: runs[0].0,
        single_level_accuracy: runs[1].0,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_match_path_enumeration() {
        let cfg = ProbeConfig::default();
        for seed in 0..20 {
            let s = sample_graph(&cfg, seed);
            let ch = &s.graph.children;
            fn longest(ch: &[Vec<usize>], w: &[f64], v: usize) -> f64 {
                w[v] + ch[v].iter().map(|&u| longest(ch, w, u)).fold(0.0, f64::max)
            }
            let w: Vec<f64> = s.graph.features.iter().map(|x| x[0]).collect();
            for v in 0..w.len() {
                assert!((s.target[v] - longest(ch, &w, v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ties_count_as_correct() {
        let g = GraphInput::new(vec![vec![]; 4], vec![vec![0.3]; 4]).unwrap();
        let s = Sample {
            graph: g,
            target: vec![0.3; 4],
        };
        let m = Model::init(0);
        assert_eq!(accuracy(&m, Aggregation::TwoLevel, &[s]), 1.0);
    }

    #[test]
    fn training_reduces_loss() {
        let cfg = ProbeConfig {
            iterations: 60,
            n_graphs: 10,
            ..ProbeConfig::default()
        };
        let fixed: Vec<Sample> = (0..16).map(|i| sample_graph(&cfg, 500 + i)).collect();
        let loss = |m: &Model| {
            let mut g = m.zeros_like();
            fixed.iter().map(|s| m.accumulate(Aggregation::TwoLevel, s, &mut g)).sum::<f64>()
        };
        let mut model = Model::init(3);
        let before = loss(&model);
        let mut flat = model.flatten();
        let mut adam = Adam::new(flat.len(), cfg.lr);
        for _ in 0..cfg.iterations {
            let mut grad = model.zeros_like();
            for s in &fixed {
                model.accumulate(Aggregation::TwoLevel, s, &mut grad);
            }
            adam.step(&mut flat, &grad.flatten());
            model.assign_flat(&flat).unwrap();
        }
        assert!(loss(&model) < 0.5 * before);
    }
}
