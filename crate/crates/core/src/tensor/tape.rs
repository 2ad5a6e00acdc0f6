use crate::error::{Error, Result};
use crate::tensor::matrix::{gemm, Matrix};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Max(Var, Var),
    MulConst(Var, Matrix),
    Scale(Var, f64),
    AddRow(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    ConcatCols(Vec<Var>),
    SumCols(Var),
    MeanCols(Var),
    MaxCols(Var, Vec<usize>),
    Sum(Var),
    GatherRows(Var, Vec<usize>),
    GcnNormalize(Var, Vec<f64>),
    Bce {
        p: Var,
        targets: Vec<f64>,
        weights: Vec<f64>,
        norm: f64,
    },
    CrossEntropy {
        logits: Var,
        rows: Vec<usize>,
        labels: Vec<usize>,
        probs: Matrix,
    },
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

/// Clamp applied to probabilities inside binary cross-entropy.
pub const BCE_EPS: f64 = 1e-7;

/// Append-only record of a forward computation. Nodes are stored in creation
/// order, which is a topological order, so backward is a reverse sweep.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Matrix> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn shape_err(op: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!("{op}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax_row(row: &[f64], out: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, &x) in out.iter_mut().zip(row) {
        *o = (x - m).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Trainable input.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Input that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::MatMul(a, b), ng))
    }

    fn binary(&mut self, name: &str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err(name, sa, sb));
        }
        Ok(self.value(a).zip_map(self.value(b), f))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary("add", a, b, |x, y| x + y)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary("sub", a, b, |x, y| x - y)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Sub(a, b), ng))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary("mul", a, b, |x, y| x * y)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Mul(a, b), ng))
    }

    /// Elementwise maximum; ties split the gradient evenly.
    pub fn maximum(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary("maximum", a, b, f64::max)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(value, Op::Max(a, b), ng))
    }

    /// Elementwise mean of two tensors.
    pub fn mean2(&mut self, a: Var, b: Var) -> Result<Var> {
        let s = self.add(a, b)?;
        Ok(self.scale(s, 0.5))
    }

    pub fn mul_const(&mut self, a: Var, c: Matrix) -> Result<Var> {
        if self.shape(a) != c.shape() {
            return Err(shape_err("mul_const", self.shape(a), c.shape()));
        }
        let value = self.value(a).zip_map(&c, |x, y| x * y);
        let ng = self.ng(a);
        Ok(self.push(value, Op::MulConst(a, c), ng))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).scale(s);
        let ng = self.ng(a);
        self.push(value, Op::Scale(a, s), ng)
    }

    /// `a + 1·row`, broadcasting a `1 x c` row over the rows of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (sa, sr) = (self.shape(a), self.shape(row));
        if sr.0 != 1 || sr.1 != sa.1 {
            return Err(shape_err("add_row", sa, sr));
        }
        let mut value = self.value(a).clone();
        let r = self.value(row).as_slice().to_vec();
        for i in 0..sa.0 {
            for (x, b) in value.row_mut(i).iter_mut().zip(&r) {
                *x += b;
            }
        }
        let ng = self.ng(a) || self.ng(row);
        Ok(self.push(value, Op::AddRow(a, row), ng))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let ng = self.ng(a);
        self.push(value, Op::Relu(a), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        let ng = self.ng(a);
        self.push(value, Op::Sigmoid(a), ng)
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let mut value = Matrix::zeros(src.rows(), src.cols());
        for i in 0..src.rows() {
            softmax_row(src.row(i), value.row_mut(i));
        }
        let ng = self.ng(a);
        self.push(value, Op::SoftmaxRows(a), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |&p| self.shape(p).0);
        for &p in parts {
            if self.shape(p).0 != rows {
                return Err(shape_err("concat_cols", (rows, 0), self.shape(p)));
            }
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut value = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let mut off = 0;
            for &p in parts {
                let src = self.value(p).row(i);
                value.row_mut(i)[off..off + src.len()].copy_from_slice(src);
                off += src.len();
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), ng))
    }

    /// Row sums, `n x c -> n x 1`.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let value = Matrix::column((0..src.rows()).map(|i| src.row(i).iter().sum()).collect());
        let ng = self.ng(a);
        self.push(value, Op::SumCols(a), ng)
    }

    /// Row means, `n x c -> n x 1`.
    pub fn mean_cols(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let c = src.cols().max(1) as f64;
        let value =
            Matrix::column((0..src.rows()).map(|i| src.row(i).iter().sum::<f64>() / c).collect());
        let ng = self.ng(a);
        self.push(value, Op::MeanCols(a), ng)
    }

    /// Row maxima, `n x c -> n x 1`; the first maximal column receives the gradient.
    pub fn max_cols(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let mut arg = Vec::with_capacity(src.rows());
        let mut vals = Vec::with_capacity(src.rows());
        for i in 0..src.rows() {
            let r = src.row(i);
            let mut best = 0;
            for (j, &x) in r.iter().enumerate() {
                if x > r[best] {
                    best = j;
                }
            }
            arg.push(best);
            vals.push(r[best]);
        }
        let ng = self.ng(a);
        self.push(Matrix::column(vals), Op::MaxCols(a, arg), ng)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::scalar(self.value(a).sum());
        let ng = self.ng(a);
        self.push(value, Op::Sum(a), ng)
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let rows = self.shape(a).0;
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(Error::Shape(format!("gather row {bad} of {rows}")));
        }
        let value = self.value(a).select_rows(idx);
        let ng = self.ng(a);
        Ok(self.push(value, Op::GatherRows(a, idx.to_vec()), ng))
    }

    /// `D̃^{-1/2} (A + I) D̃^{-1/2}` for a dense square `A`, with `D̃` the row
    /// sums of `A + I`.
    pub fn gcn_normalize(&mut self, a: Var) -> Result<Var> {
        let src = self.value(a);
        let (n, m) = src.shape();
        if n != m {
            return Err(shape_err("gcn_normalize", (n, m), (n, n)));
        }
        let mut inv_sqrt = Vec::with_capacity(n);
        for i in 0..n {
            let d: f64 = src.row(i).iter().sum::<f64>() + 1.0;
            if d <= 0.0 {
                return Err(Error::Numerical(format!("non-positive degree {d} at node {i}")));
            }
            inv_sqrt.push(1.0 / d.sqrt());
        }
        let mut value = Matrix::zeros(n, n);
        for i in 0..n {
            let si = inv_sqrt[i];
            let row = src.row(i);
            let out = value.row_mut(i);
            for j in 0..n {
                let mij = row[j] + if i == j { 1.0 } else { 0.0 };
                out[j] = si * mij * inv_sqrt[j];
            }
        }
        let ng = self.ng(a);
        Ok(self.push(value, Op::GcnNormalize(a, inv_sqrt), ng))
    }

    /// Weighted binary cross-entropy on probabilities, divided by `Σ weights`.
    /// Targets and weights follow the row-major layout of `p`.
    pub fn bce(&mut self, p: Var, targets: &[f64], weights: &[f64]) -> Result<Var> {
        let pv = self.value(p);
        if pv.rows() * pv.cols() != targets.len() || targets.len() != weights.len() {
            return Err(Error::Shape(format!(
                "bce: {}x{} predictions, {} targets, {} weights",
                pv.rows(),
                pv.cols(),
                targets.len(),
                weights.len()
            )));
        }
        let norm: f64 = weights.iter().sum();
        let norm = if norm > 0.0 { norm } else { 1.0 };
        let mut loss = 0.0;
        for ((&q, &y), &w) in pv.as_slice().iter().zip(targets).zip(weights) {
            loss += w * bce_term(q, y);
        }
        let value = Matrix::scalar(loss / norm);
        let ng = self.ng(p);
        Ok(self.push(
            value,
            Op::Bce {
                p,
                targets: targets.to_vec(),
                weights: weights.to_vec(),
                norm,
            },
            ng,
        ))
    }

    /// Mean softmax cross-entropy of `logits` rows `rows` against `labels`.
    pub fn cross_entropy(&mut self, logits: Var, rows: &[usize], labels: &[usize]) -> Result<Var> {
        let lv = self.value(logits);
        if rows.len() != labels.len() || rows.is_empty() {
            return Err(Error::Shape("cross_entropy: rows/labels".into()));
        }
        let c = lv.cols();
        let mut probs = Matrix::zeros(rows.len(), c);
        let mut loss = 0.0;
        for (k, (&r, &y)) in rows.iter().zip(labels).enumerate() {
            if r >= lv.rows() || y >= c {
                return Err(Error::Shape(format!("cross_entropy: row {r} label {y}")));
            }
            softmax_row(lv.row(r), probs.row_mut(k));
            let row = lv.row(r);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            loss += lse - row[y];
        }
        let value = Matrix::scalar(loss / rows.len() as f64);
        let ng = self.ng(logits);
        Ok(self.push(
            value,
            Op::CrossEntropy {
                logits,
                rows: rows.to_vec(),
                labels: labels.to_vec(),
                probs,
            },
            ng,
        ))
    }

    /// Reverse sweep from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::Shape("backward needs a scalar loss".into()));
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            if !g.all_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite gradient at tape node {idx} ({:?})",
                    std::mem::discriminant(&node.op)
                )));
            }
            self.propagate(&node.op, &node.value, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn acc(&self, grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
        if !self.ng(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn propagate(&self, op: &Op, out: &Matrix, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.ng(*a) {
                    let mut ga = Matrix::zeros(av.rows(), av.cols());
                    gemm(g, false, bv, true, &mut ga, 0.0);
                    self.acc(grads, *a, ga);
                }
                if self.ng(*b) {
                    let mut gb = Matrix::zeros(bv.rows(), bv.cols());
                    gemm(av, true, g, false, &mut gb, 0.0);
                    self.acc(grads, *b, gb);
                }
            }
            Op::Add(a, b) => {
                self.acc(grads, *a, g.clone());
                self.acc(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.acc(grads, *a, g.clone());
                self.acc(grads, *b, g.scale(-1.0));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.ng(*a) {
                    self.acc(grads, *a, g.zip_map(bv, |x, y| x * y));
                }
                if self.ng(*b) {
                    self.acc(grads, *b, g.zip_map(av, |x, y| x * y));
                }
            }
            Op::Max(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let share = |x: f64, y: f64| {
                    if x > y {
                        1.0
                    } else if x == y {
                        0.5
                    } else {
                        0.0
                    }
                };
                let mut ga = Matrix::zeros(av.rows(), av.cols());
                let mut gb = Matrix::zeros(av.rows(), av.cols());
                for i in 0..g.len() {
                    let (x, y, gi) = (av.as_slice()[i], bv.as_slice()[i], g.as_slice()[i]);
                    ga.as_mut_slice()[i] = gi * share(x, y);
                    gb.as_mut_slice()[i] = gi * share(y, x);
                }
                self.acc(grads, *a, ga);
                self.acc(grads, *b, gb);
            }
            Op::MulConst(a, c) => self.acc(grads, *a, g.zip_map(c, |x, y| x * y)),
            Op::Scale(a, s) => self.acc(grads, *a, g.scale(*s)),
            Op::AddRow(a, row) => {
                self.acc(grads, *a, g.clone());
                if self.ng(*row) {
                    let mut gr = Matrix::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (x, y) in gr.as_mut_slice().iter_mut().zip(g.row(i)) {
                            *x += y;
                        }
                    }
                    self.acc(grads, *row, gr);
                }
            }
            Op::Relu(a) => {
                let av = self.value(*a);
                self.acc(grads, *a, g.zip_map(av, |x, y| if y > 0.0 { x } else { 0.0 }));
            }
            Op::Sigmoid(a) => self.acc(grads, *a, g.zip_map(out, |x, s| x * s * (1.0 - s))),
            Op::SoftmaxRows(a) => {
                let mut ga = Matrix::zeros(out.rows(), out.cols());
                for i in 0..out.rows() {
                    let (s, gi) = (out.row(i), g.row(i));
                    let dot: f64 = s.iter().zip(gi).map(|(a, b)| a * b).sum();
                    for (j, o) in ga.row_mut(i).iter_mut().enumerate() {
                        *o = s[j] * (gi[j] - dot);
                    }
                }
                self.acc(grads, *a, ga);
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let (r, c) = self.shape(p);
                    if self.ng(p) {
                        let mut gp = Matrix::zeros(r, c);
                        for i in 0..r {
                            gp.row_mut(i).copy_from_slice(&g.row(i)[off..off + c]);
                        }
                        self.acc(grads, p, gp);
                    }
                    off += c;
                }
            }
            Op::SumCols(a) | Op::MeanCols(a) => {
                let (r, c) = self.shape(*a);
                let f = if matches!(op, Op::MeanCols(_)) {
                    1.0 / c.max(1) as f64
                } else {
                    1.0
                };
                let mut ga = Matrix::zeros(r, c);
                for i in 0..r {
                    ga.row_mut(i).fill(g.get(i, 0) * f);
                }
                self.acc(grads, *a, ga);
            }
            Op::MaxCols(a, arg) => {
                let (r, c) = self.shape(*a);
                let mut ga = Matrix::zeros(r, c);
                for (i, &j) in arg.iter().enumerate() {
                    ga.set(i, j, g.get(i, 0));
                }
                self.acc(grads, *a, ga);
            }
            Op::Sum(a) => {
                let (r, c) = self.shape(*a);
                self.acc(grads, *a, Matrix::filled(r, c, g.item()));
            }
            Op::GatherRows(a, idx) => {
                let (r, c) = self.shape(*a);
                let mut ga = Matrix::zeros(r, c);
                for (k, &i) in idx.iter().enumerate() {
                    for (x, y) in ga.row_mut(i).iter_mut().zip(g.row(k)) {
                        *x += y;
                    }
                }
                self.acc(grads, *a, ga);
            }
            Op::GcnNormalize(a, s) => {
                let av = self.value(*a);
                let n = s.len();
                let m = |i: usize, j: usize| av.get(i, j) + if i == j { 1.0 } else { 0.0 };
                // dL/ds_i collects both the row and the column in which s_i appears
                let mut ds = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        let t = g.get(i, j) * m(i, j);
                        ds[i] += t * s[j];
                        ds[j] += t * s[i];
                    }
                }
                let mut ga = Matrix::zeros(n, n);
                for i in 0..n {
                    let dd = ds[i] * (-0.5 * s[i] * s[i] * s[i]);
                    for j in 0..n {
                        ga.set(i, j, g.get(i, j) * s[i] * s[j] + dd);
                    }
                }
                self.acc(grads, *a, ga);
            }
            Op::Bce {
                p,
                targets,
                weights,
                norm,
            } => {
                let pv = self.value(*p);
                let gs = g.item() / norm;
                let data = pv
                    .as_slice()
                    .iter()
                    .zip(targets)
                    .zip(weights)
                    .map(|((&q, &y), &w)| {
                        if !(BCE_EPS..=1.0 - BCE_EPS).contains(&q) {
                            0.0
                        } else {
                            gs * w * (-y / q + (1.0 - y) / (1.0 - q))
                        }
                    })
                    .collect();
                let grad = Matrix::from_vec(pv.rows(), pv.cols(), data).expect("bce gradient shape");
                self.acc(grads, *p, grad);
            }
            Op::CrossEntropy {
                logits,
                rows,
                labels,
                probs,
            } => {
                let (r, c) = self.shape(*logits);
                let mut gl = Matrix::zeros(r, c);
                let f = g.item() / rows.len() as f64;
                for (k, (&row, &y)) in rows.iter().zip(labels).enumerate() {
                    for j in 0..c {
                        let onehot = if j == y { 1.0 } else { 0.0 };
                        let cur = gl.get(row, j);
                        gl.set(row, j, cur + f * (probs.get(k, j) - onehot));
                    }
                }
                self.acc(grads, *logits, gl);
            }
        }
        Ok(())
    }
}

/// Clamped `-[y ln p + (1-y) ln(1-p)]`.
pub fn bce_term(p: f64, y: f64) -> f64 {
    let q = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(y * q.ln() + (1.0 - y) * (1.0 - q).ln())
}
