//! Message-passing embeddings over job DAGs.
//!
//! Per node, `e_v = g(sum_{u in children(v)} f(e_u)) + x_v`, computed from
//! the leaves upwards; leaves have no aggregation term, so `e_leaf = x_leaf`.
//! Each job gets a summary `y = g_job(sum_v f_job(e_v))` and the cluster a
//! global summary `z = g_glob(sum_i f_glob(y_i))`. Raw features are
//! zero-padded to the embedding width before the addition.

mod probe;

use rand::Rng;

pub use probe::{critical_path_probe, ProbeConfig, ProbeCurvePoint, ProbeReport};

use crate::error::{Error, Result};
use crate::nn::{Mlp, MlpCache, ParamTensors};
use crate::simenv::{ClusterState, StageRef};

pub const NUM_FEATURES: usize = 5;
pub const EMBED_DIM: usize = 16;
pub const HIDDEN: [usize; 2] = [32, 16];

/// Divisors applied to the raw node features (tasks remaining, mean task
/// duration, executors on the stage, free executors, locality flag).
pub const FEATURE_SCALE: [f64; NUM_FEATURES] = [50.0, 10.0, 20.0, 20.0, 1.0];

pub fn mlp_sizes(input: usize, output: usize) -> [usize; 4] {
    [input, HIDDEN[0], HIDDEN[1], output]
}

/// Node-level aggregation: the two-transform form above, or the ablated
/// single-transform form `e_v = sum f(e_u) + x_v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    TwoLevel,
    SingleLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnParams {
    pub node_f: Mlp,
    pub node_g: Mlp,
    pub job_f: Mlp,
    pub job_g: Mlp,
    pub glob_f: Mlp,
    pub glob_g: Mlp,
}

impl GnnParams {
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let s = mlp_sizes(EMBED_DIM, EMBED_DIM);
        GnnParams {
            node_f: Mlp::init(&s, rng),
            node_g: Mlp::init(&s, rng),
            job_f: Mlp::init(&s, rng),
            job_g: Mlp::init(&s, rng),
            glob_f: Mlp::init(&s, rng),
            glob_g: Mlp::init(&s, rng),
        }
    }

    pub fn zeros() -> Self {
        let s = mlp_sizes(EMBED_DIM, EMBED_DIM);
        GnnParams {
            node_f: Mlp::zeros(&s),
            node_g: Mlp::zeros(&s),
            job_f: Mlp::zeros(&s),
            job_g: Mlp::zeros(&s),
            glob_f: Mlp::zeros(&s),
            glob_g: Mlp::zeros(&s),
        }
    }

    fn parts(&self) -> [(&'static str, &Mlp); 6] {
        [
            ("node_f", &self.node_f),
            ("node_g", &self.node_g),
            ("job_f", &self.job_f),
            ("job_g", &self.job_g),
            ("glob_f", &self.glob_f),
            ("glob_g", &self.glob_g),
        ]
    }
}

impl ParamTensors for GnnParams {
    fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (prefix, m) in self.parts() {
            for (n, s, d) in m.tensors() {
                out.push((format!("{prefix}.{n}"), s, d));
            }
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for m in [
            &mut self.node_f,
            &mut self.node_g,
            &mut self.job_f,
            &mut self.job_g,
            &mut self.glob_f,
            &mut self.glob_g,
        ] {
            out.extend(m.tensors_mut());
        }
        out
    }
}

/// One DAG: child lists and per-node raw features (at most [`EMBED_DIM`]
/// entries each).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub children: Vec<Vec<usize>>,
    pub features: Vec<Vec<f64>>,
    /// Parents before children.
    order: Vec<usize>,
    has_parent: Vec<bool>,
}

impl GraphInput {
    pub fn new(children: Vec<Vec<usize>>, features: Vec<Vec<f64>>) -> Result<Self> {
        let n = children.len();
        if features.len() != n {
            return Err(Error::Shape(format!("{} feature rows for {n} nodes", features.len())));
        }
        if let Some(row) = features.iter().find(|r| r.len() > EMBED_DIM) {
            return Err(Error::Shape(format!("feature row of width {} exceeds {EMBED_DIM}", row.len())));
        }
        let mut indeg = vec![0usize; n];
        for c in children.iter().flatten() {
            if *c >= n {
                return Err(Error::Shape(format!("child index {c} out of range")));
            }
            indeg[*c] += 1;
        }
        let has_parent: Vec<bool> = indeg.iter().map(|&d| d > 0).collect();
        let mut stack: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in children[v].iter().rev() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Shape("graph has a cycle".into()));
        }
        Ok(GraphInput {
            children,
            features,
            order,
            has_parent,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.children.len()
    }

    fn padded(&self, v: usize) -> Vec<f64> {
        let mut x = self.features[v].clone();
        x.resize(EMBED_DIM, 0.0);
        x
    }
}

/// Cached node-level pass over one graph.
#[derive(Debug, Clone)]
pub struct NodeForward {
    pub e: Vec<Vec<f64>>,
    f_cache: Vec<Option<MlpCache>>,
    f_out: Vec<Vec<f64>>,
    g_cache: Vec<Option<MlpCache>>,
}

/// Node-level embeddings of one graph under transforms `f`, `g`.
pub fn node_pass(f: &Mlp, g: &Mlp, agg: Aggregation, graph: &GraphInput) -> NodeForward {
    let n = graph.num_nodes();
    let mut out = NodeForward {
        e: vec![Vec::new(); n],
        f_cache: vec![None; n],
        f_out: vec![Vec::new(); n],
        g_cache: vec![None; n],
    };
    for &v in graph.order.iter().rev() {
        let mut e = graph.padded(v);
        if !graph.children[v].is_empty() {
            let mut sum = vec![0.0; EMBED_DIM];
            for &u in &graph.children[v] {
                for (s, x) in sum.iter_mut().zip(&out.f_out[u]) {
                    *s += x;
                }
            }
            let msg = match agg {
                Aggregation::TwoLevel => {
                    let (m, c) = g.forward_cached(&sum);
                    out.g_cache[v] = Some(c);
                    m
                }
                Aggregation::SingleLevel => sum,
            };
            for (a, m) in e.iter_mut().zip(&msg) {
                *a += m;
            }
        }
        if graph.has_parent[v] {
            let (fo, c) = f.forward_cached(&e);
            out.f_out[v] = fo;
            out.f_cache[v] = Some(c);
        }
        out.e[v] = e;
    }
    out
}

/// Backpropagates `de` (gradient w.r.t. every node embedding) through a
/// node-level pass, accumulating into `gf` and `gg`.
pub fn node_backward(
    f: &Mlp,
    g: &Mlp,
    agg: Aggregation,
    graph: &GraphInput,
    fwd: &NodeForward,
    mut de: Vec<Vec<f64>>,
    gf: &mut Mlp,
    gg: &mut Mlp,
) {
    let n = graph.num_nodes();
    let mut dmsg: Vec<Vec<f64>> = vec![vec![0.0; EMBED_DIM]; n];
    for &v in &graph.order {
        if let Some(c) = &fwd.f_cache[v] {
            if dmsg[v].iter().any(|&x| x != 0.0) {
                let d = f.backward(c, &dmsg[v], gf);
                for (a, b) in de[v].iter_mut().zip(&d) {
                    *a += b;
                }
            }
        }
        if graph.children[v].is_empty() || de[v].iter().all(|&x| x == 0.0) {
            continue;
        }
        let dsum = match agg {
            Aggregation::TwoLevel => g.backward(fwd.g_cache[v].as_ref().expect("g cache"), &de[v], gg),
            Aggregation::SingleLevel => de[v].clone(),
        };
        for &u in &graph.children[v] {
            for (a, b) in dmsg[u].iter_mut().zip(&dsum) {
                *a += b;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct SummaryCache {
    f: Vec<MlpCache>,
    g: MlpCache,
}

/// Full forward pass over the jobs of one state.
#[derive(Debug, Clone)]
pub struct Forward {
    pub agg: Aggregation,
    pub nodes: Vec<NodeForward>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    job_cache: Vec<SummaryCache>,
    glob_cache: SummaryCache,
}

impl Forward {
    pub fn embedding(&self, job: usize, node: usize) -> &[f64] {
        &self.nodes[job].e[node]
    }
}

fn summarise(f: &Mlp, g: &Mlp, items: &[&[f64]]) -> (Vec<f64>, SummaryCache) {
    let mut sum = vec![0.0; EMBED_DIM];
    let mut caches = Vec::with_capacity(items.len());
    for x in items {
        let (o, c) = f.forward_cached(x);
        for (s, v) in sum.iter_mut().zip(&o) {
            *s += v;
        }
        caches.push(c);
    }
    let (out, gc) = g.forward_cached(&sum);
    (out, SummaryCache { f: caches, g: gc })
}

pub fn forward(params: &GnnParams, graphs: &[GraphInput], agg: Aggregation) -> Forward {
    let nodes: Vec<NodeForward> = graphs
        .iter()
        .map(|gr| node_pass(&params.node_f, &params.node_g, agg, gr))
        .collect();
    let mut y = Vec::with_capacity(graphs.len());
    let mut job_cache = Vec::with_capacity(graphs.len());
    for nf in &nodes {
        let items: Vec<&[f64]> = nf.e.iter().map(Vec::as_slice).collect();
        let (yi, c) = summarise(&params.job_f, &params.job_g, &items);
        y.push(yi);
        job_cache.push(c);
    }
    let items: Vec<&[f64]> = y.iter().map(Vec::as_slice).collect();
    let (z, glob_cache) = summarise(&params.glob_f, &params.glob_g, &items);
    Forward {
        agg,
        nodes,
        y,
        z,
        job_cache,
        glob_cache,
    }
}

/// Per-node embeddings only.
pub fn node_embeddings(params: &GnnParams, graphs: &[GraphInput]) -> Vec<Vec<Vec<f64>>> {
    graphs
        .iter()
        .map(|gr| node_pass(&params.node_f, &params.node_g, Aggregation::TwoLevel, gr).e)
        .collect()
}

/// Per-job summaries and the global summary.
pub fn summaries(params: &GnnParams, graphs: &[GraphInput]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let f = forward(params, graphs, Aggregation::TwoLevel);
    (f.y, f.z)
}

/// Upstream gradients for [`backward`]. Empty vectors mean zero.
#[derive(Debug, Clone, Default)]
pub struct Upstream {
    pub de: Vec<Vec<Vec<f64>>>,
    pub dy: Vec<Vec<f64>>,
    pub dz: Vec<f64>,
}

impl Upstream {
    pub fn zeros(graphs: &[GraphInput]) -> Self {
        Upstream {
            de: graphs.iter().map(|g| vec![vec![0.0; EMBED_DIM]; g.num_nodes()]).collect(),
            dy: vec![vec![0.0; EMBED_DIM]; graphs.len()],
            dz: vec![0.0; EMBED_DIM],
        }
    }
}

/// Reverse-mode gradients of every transform, accumulated into `grads`.
pub fn backward(
    params: &GnnParams,
    graphs: &[GraphInput],
    fwd: &Forward,
    upstream: Upstream,
    grads: &mut GnnParams,
) -> Result<()> {
    if fwd.nodes.len() != graphs.len()
        || upstream.de.len() != graphs.len()
        || upstream.dy.len() != graphs.len()
        || upstream.dz.len() != EMBED_DIM
    {
        return Err(Error::Usage("backward needs the forward cache of these graphs".into()));
    }
    for (g, nf) in graphs.iter().zip(&fwd.nodes) {
        if nf.e.len() != g.num_nodes() {
            return Err(Error::Usage("forward cache does not match graph sizes".into()));
        }
    }
    let Upstream { mut de, mut dy, dz } = upstream;

    if dz.iter().any(|&x| x != 0.0) {
        let dsum = params.glob_g.backward(&fwd.glob_cache.g, &dz, &mut grads.glob_g);
        for (i, c) in fwd.glob_cache.f.iter().enumerate() {
            let d = params.glob_f.backward(c, &dsum, &mut grads.glob_f);
            for (a, b) in dy[i].iter_mut().zip(&d) {
                *a += b;
            }
        }
    }
    for (i, jc) in fwd.job_cache.iter().enumerate() {
        if dy[i].iter().all(|&x| x == 0.0) {
            continue;
        }
        let dsum = params.job_g.backward(&jc.g, &dy[i], &mut grads.job_g);
        for (v, c) in jc.f.iter().enumerate() {
            let d = params.job_f.backward(c, &dsum, &mut grads.job_f);
            for (a, b) in de[i][v].iter_mut().zip(&d) {
                *a += b;
            }
        }
    }
    for (i, g) in graphs.iter().enumerate() {
        let dei = std::mem::take(&mut de[i]);
        node_backward(
            &params.node_f,
            &params.node_g,
            fwd.agg,
            g,
            &fwd.nodes[i],
            dei,
            &mut grads.node_f,
            &mut grads.node_g,
        );
    }
    Ok(())
}

/// Raw features of one stage, scaled by [`FEATURE_SCALE`].
pub fn stage_features(state: &ClusterState, stage: StageRef) -> Vec<f64> {
    let job = state.job(stage.job);
    let raw = [
        job.stages[stage.stage].remaining as f64,
        job.dag.stages[stage.stage].duration.later_wave_mean,
        state.executors_on_stage(stage) as f64,
        state.num_free_executors() as f64,
        if state.free_bound_to(stage.job) > 0 { 1.0 } else { 0.0 },
    ];
    raw.iter().zip(FEATURE_SCALE).map(|(x, s)| x / s).collect()
}

/// Graph input of job `j` in `state`.
pub fn job_graph(state: &ClusterState, j: usize) -> GraphInput {
    let job = state.job(j);
    let features = (0..job.stages.len())
        .map(|v| stage_features(state, StageRef::new(j, v)))
        .collect();
    GraphInput::new(job.children.clone(), features).expect("job DAG is a valid graph")
}
