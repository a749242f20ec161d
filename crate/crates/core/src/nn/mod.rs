//! Small dense networks with hand-written backward passes, an Adam
//! optimiser over flattened parameters, and a JSON tensor archive.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Negative-side slope of the hidden activation.
pub const LEAKY_SLOPE: f64 = 0.2;

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Fully connected layer; `w` is row-major `output x input`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            input,
            output,
            w: vec![0.0; input * output],
            b: vec![0.0; output],
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (input.max(1) as f64).sqrt();
        let mut d = Dense::zeros(input, output);
        for x in d.w.iter_mut().chain(d.b.iter_mut()) {
            *x = rng.random_range(-bound..=bound);
        }
        d
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.output {
            let row = &self.w[o * self.input..(o + 1) * self.input];
            out.push(self.b[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>());
        }
    }
}

/// Activations saved by a forward pass for the matching backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MlpCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

/// Perceptron with leaky-rectifier hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `sizes` lists every layer width, input first.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        Mlp {
            layers: sizes.windows(2).map(|p| Dense::init(p[0], p[1], rng)).collect(),
        }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Mlp {
            layers: sizes.windows(2).map(|p| Dense::zeros(p[0], p[1])).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Mlp {
            layers: self.layers.iter().map(|l| Dense::zeros(l.input, l.output)).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").output
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, MlpCache) {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut cache = MlpCache::default();
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut pre = Vec::with_capacity(layer.output);
            layer.apply(&cur, &mut pre);
            let next = if i == last {
                pre.clone()
            } else {
                pre.iter().map(|&v| leaky(v)).collect()
            };
            cache.inputs.push(std::mem::replace(&mut cur, next));
            cache.pre.push(pre);
        }
        (cur, cache)
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the input.
    pub fn backward(&self, cache: &MlpCache, dout: &[f64], grad: &mut Mlp) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut delta = dout.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let g = &mut grad.layers[i];
            if i != last {
                for (d, &p) in delta.iter_mut().zip(&cache.pre[i]) {
                    *d *= leaky_grad(p);
                }
            }
            let x = &cache.inputs[i];
            let mut dx = vec![0.0; layer.input];
            for o in 0..layer.output {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                g.b[o] += d;
                let row = o * layer.input;
                for k in 0..layer.input {
                    g.w[row + k] += d * x[k];
                    dx[k] += d * layer.w[row + k];
                }
            }
            delta = dx;
        }
        delta
    }

    /// `(name suffix, shape, data)` for every tensor, weights before biases.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("{i}.w"), vec![l.output, l.input], l.w.as_slice()));
            out.push((format!("{i}.b"), vec![l.output], l.b.as_slice()));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        out
    }
}

/// A named collection of tensors that can be flattened for optimisation.
pub trait ParamTensors {
    fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])>;
    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>>;

    fn num_params(&self) -> usize {
        self.named_tensors().iter().map(|t| t.2.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for (_, _, d) in self.named_tensors() {
            out.extend_from_slice(d);
        }
        out
    }

    fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "flat vector has {} entries, parameters need {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    fn to_archive(&self) -> TensorArchive {
        TensorArchive {
            schema_version: ARCHIVE_SCHEMA_VERSION,
            tensors: self
                .named_tensors()
                .into_iter()
                .map(|(name, shape, data)| NamedTensor {
                    name,
                    shape,
                    data: data.to_vec(),
                })
                .collect(),
        }
    }

    /// Copies tensors from `archive`, which must match names and shapes.
    fn load_archive(&mut self, archive: &TensorArchive) -> Result<()> {
        if archive.schema_version != ARCHIVE_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported archive schema_version {}",
                archive.schema_version
            )));
        }
        let expected: Vec<(String, Vec<usize>)> = self
            .named_tensors()
            .into_iter()
            .map(|(n, s, _)| (n, s))
            .collect();
        if expected.len() != archive.tensors.len() {
            return Err(Error::Shape(format!(
                "archive has {} tensors, model has {}",
                archive.tensors.len(),
                expected.len()
            )));
        }
        for ((name, shape), t) in expected.iter().zip(&archive.tensors) {
            if *name != t.name || *shape != t.shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Shape(format!("tensor '{}' does not match model tensor '{name}' {shape:?}", t.name)));
            }
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("tensor '{}'", t.name)));
            }
        }
        for (dst, t) in self.tensors_mut().into_iter().zip(&archive.tensors) {
            dst.copy_from_slice(&t.data);
        }
        Ok(())
    }
}

pub const ARCHIVE_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorArchive {
    pub schema_version: u64,
    pub tensors: Vec<NamedTensor>,
}

impl TensorArchive {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor archive serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            record: "tensor archive".into(),
            message: e.to_string(),
        })
    }
}

/// Adam over a flat parameter vector (gradient ascent or descent is the
/// caller's sign convention; `step` subtracts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Scales `grad` in place so its L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    impl ParamTensors for Mlp {
        fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
            self.tensors()
        }
        fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
            Mlp::tensors_mut(self)
        }
    }

    fn loss(m: &Mlp, x: &[f64]) -> f64 {
        m.forward(x).iter().enumerate().map(|(i, y)| (i as f64 + 1.0) * y * y.abs()).sum()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let m = Mlp::zeros(&[4, 32, 16, 3]);
        assert_eq!(m.forward(&[1.0, -2.0, 3.0, 0.5]), vec![0.0; 3]);
        assert_eq!(m.num_params(), 4 * 32 + 32 + 32 * 16 + 16 + 16 * 3 + 3);
    }

    #[test]
    fn init_respects_bound() {
        let m = Mlp::init(&[9, 32, 16, 1], &mut seeded(0));
        for x in &m.layers[0].w {
            assert!(x.abs() <= 1.0 / 3.0);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = seeded(4);
        let m = Mlp::init(&[5, 32, 16, 3], &mut rng);
        let x: Vec<f64> = (0..5).map(|i| (i as f64 * 0.7).sin()).collect();
        let (y, cache) = m.forward_cached(&x);
        let dout: Vec<f64> = y.iter().enumerate().map(|(i, y)| 2.0 * (i as f64 + 1.0) * y.abs()).collect();
        let mut g = m.zeros_like();
        let dx = m.backward(&cache, &dout, &mut g);

        let h = 1e-6;
        let flat = m.flatten();
        let gflat = g.flatten();
        for i in (0..flat.len()).step_by(37) {
            let mut p = m.clone();
            let mut f = flat.clone();
            f[i] += h;
            p.assign_flat(&f).unwrap();
            let up = loss(&p, &x);
            f[i] -= 2.0 * h;
            p.assign_flat(&f).unwrap();
            let down = loss(&p, &x);
            let fd = (up - down) / (2.0 * h);
            assert!((fd - gflat[i]).abs() <= 1e-6 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", gflat[i]);
        }
        for k in 0..5 {
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let fd = (loss(&m, &xp) - loss(&m, &xm)) / (2.0 * h);
            assert!((fd - dx[k]).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn archive_round_trip_is_bit_exact() {
        let m = Mlp::init(&[3, 32, 16, 2], &mut seeded(11));
        let text = m.to_archive().to_json();
        let mut back = Mlp::zeros(&[3, 32, 16, 2]);
        back.load_archive(&TensorArchive::from_json(&text).unwrap()).unwrap();
        let a: Vec<u64> = m.flatten().iter().map(|x| x.to_bits()).collect();
        let b: Vec<u64> = back.flatten().iter().map(|x| x.to_bits()).collect();
        assert_eq!(a, b);
        let mut wrong = Mlp::zeros(&[3, 32, 16, 3]);
        assert!(matches!(wrong.load_archive(&m.to_archive()), Err(Error::Shape(_))));
    }

    #[test]
    fn adam_descends_quadratic() {
        let mut p = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.1);
        for _ in 0..500 {
            let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
            opt.step(&mut p, &g);
        }
        assert!(p.iter().all(|x| x.abs() < 1e-2));
    }

    #[test]
    fn clipping_caps_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
        let mut g = vec![0.3, 0.4];
        clip_global_norm(&mut g, 1.0);
        assert_eq!(g, vec![0.3, 0.4]);
    }
}
