//! Parameter storage, layers, GCN forward pass, and the Adam optimizer.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::DeterministicRng;
use crate::tensor::tape::{Gradients, Tape, Var};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub usize);

/// Named list of trainable matrices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    /// Glorot-uniform initialized `rows x cols` matrix.
    pub fn add_glorot(&mut self, name: impl Into<String>, rows: usize, cols: usize, rng: &mut DeterministicRng) -> ParamId {
        let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
        let data = (0..rows * cols).map(|_| (2.0 * rng.uniform() - 1.0) * limit).collect();
        self.add(name, Matrix::from_vec(rows, cols, data).expect("sized buffer"))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    /// Records every parameter on `tape`; the returned vars are indexed by `ParamId`.
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.values.iter().map(|m| tape.param(m.clone())).collect()
    }

    /// Records every parameter as a constant (inference).
    pub fn bind_frozen(&self, tape: &mut Tape) -> Vec<Var> {
        self.values.iter().map(|m| tape.constant(m.clone())).collect()
    }

    /// Gradient for each parameter (zeros where none flowed).
    pub fn collect_grads(&self, vars: &[Var], grads: &mut Gradients) -> Vec<Matrix> {
        vars.iter()
            .zip(&self.values)
            .map(|(&v, m)| grads.take(v).unwrap_or_else(|| Matrix::zeros(m.rows(), m.cols())))
            .collect()
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &[Matrix]) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::Shape("Adam: gradient count".into()));
        }
        if self.m.is_empty() {
            self.m = params.values.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (k, p) in params.values.iter_mut().enumerate() {
            let g = &grads[k];
            if !g.all_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite gradient for parameter `{}`",
                    params.names[k]
                )));
            }
            let m = self.m[k].as_mut_slice();
            let v = self.v[k].as_mut_slice();
            for (i, w) in p.as_mut_slice().iter_mut().enumerate() {
                let gi = g.as_slice()[i] + self.weight_decay * *w;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                *w -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Dense symmetric 0/1 adjacency.
pub fn dense_adjacency(g: &Graph) -> Matrix {
    let n = g.n();
    let mut a = Matrix::zeros(n, n);
    for (u, v) in g.edges() {
        a.set(u, v, 1.0);
        a.set(v, u, 1.0);
    }
    a
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}`.
pub fn normalized_adjacency(g: &Graph) -> Matrix {
    let n = g.n();
    let inv: Vec<f64> = (0..n).map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt()).collect();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a.set(i, i, inv[i] * inv[i]);
        for &j in g.neighbors(i) {
            a.set(i, j, inv[i] * inv[j]);
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcnConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub activation: Activation,
    pub dropout: f64,
}

impl Default for GcnConfig {
    fn default() -> Self {
        GcnConfig {
            layers: 2,
            hidden_dim: 64,
            activation: Activation::Relu,
            dropout: 0.0,
        }
    }
}

/// Stack of graph convolutions `H ← act(Â H W)`; the last layer is linear.
#[derive(Debug, Clone)]
pub struct Gcn {
    pub config: GcnConfig,
    pub weights: Vec<ParamId>,
}

/// Layer outputs of a GCN forward pass.
#[derive(Debug, Clone, Copy)]
pub struct GcnOutput {
    /// Input to the final layer (the last hidden representation).
    pub embedding: Var,
    pub output: Var,
}

impl Gcn {
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        config: GcnConfig,
        rng: &mut DeterministicRng,
    ) -> Result<Self> {
        if config.layers == 0 {
            return Err(Error::Config("GCN needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        let mut dims = vec![in_dim];
        dims.extend(std::iter::repeat(config.hidden_dim).take(config.layers - 1));
        dims.push(out_dim);
        let weights = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| store.add_glorot(format!("{prefix}.w{l}"), w[0], w[1], rng))
            .collect();
        Ok(Gcn { config, weights })
    }

    /// `a_hat` is the normalized adjacency, `x` the input features. Dropout
    /// is applied to each layer input when `rng` is given.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &[Var],
        a_hat: Var,
        x: Var,
        mut rng: Option<&mut DeterministicRng>,
    ) -> Result<GcnOutput> {
        let mut h = x;
        let mut embedding = x;
        for (l, w) in self.weights.iter().enumerate() {
            if let Some(r) = rng.as_deref_mut() {
                h = dropout(tape, h, self.config.dropout, r)?;
            }
            embedding = h;
            let hw = tape.matmul(h, params[w.0])?;
            h = tape.matmul(a_hat, hw)?;
            if l + 1 < self.weights.len() {
                h = match self.config.activation {
                    Activation::Relu => tape.relu(h),
                };
            }
        }
        Ok(GcnOutput {
            embedding,
            output: h,
        })
    }
}

/// Inverted dropout with a mask drawn from `rng`.
pub fn dropout(tape: &mut Tape, x: Var, rate: f64, rng: &mut DeterministicRng) -> Result<Var> {
    if rate <= 0.0 {
        return Ok(x);
    }
    let (r, c) = tape.shape(x);
    let keep = 1.0 - rate;
    let mask = (0..r * c)
        .map(|_| if rng.uniform() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    tape.mul_const(x, Matrix::from_vec(r, c, mask)?)
}

/// Two-layer perceptron `W2 relu(W1 x + b1) + b2`.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl Mlp {
    pub fn new(store: &mut ParamStore, prefix: &str, dims: [usize; 3], rng: &mut DeterministicRng) -> Self {
        Mlp {
            w1: store.add_glorot(format!("{prefix}.w1"), dims[0], dims[1], rng),
            b1: store.add(format!("{prefix}.b1"), Matrix::zeros(1, dims[1])),
            w2: store.add_glorot(format!("{prefix}.w2"), dims[1], dims[2], rng),
            b2: store.add(format!("{prefix}.b2"), Matrix::zeros(1, dims[2])),
        }
    }

    pub fn forward(&self, tape: &mut Tape, params: &[Var], x: Var) -> Result<Var> {
        let h = tape.matmul(x, params[self.w1.0])?;
        let h = tape.add_row(h, params[self.b1.0])?;
        let h = tape.relu(h);
        let o = tape.matmul(h, params[self.w2.0])?;
        tape.add_row(o, params[self.b2.0])
    }
}

/// Row-wise bilinear form `σ(h_uᵀ B h_v)` for paired row blocks.
pub fn bilinear_sigmoid(tape: &mut Tape, hu: Var, hv: Var, b: Var) -> Result<Var> {
    let left = tape.matmul(hu, b)?;
    let prod = tape.mul(left, hv)?;
    let s = tape.sum_cols(prod);
    Ok(tape.sigmoid(s))
}
