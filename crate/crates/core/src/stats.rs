//! Closed-form node statistics: degree, local clustering, node homophily,
//! betweenness, and the Katz similarity matrix.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::tensor::Matrix;

pub const KATZ_DEFAULT_TOLERANCE: f64 = 1e-8;
pub const KATZ_MAX_TERMS: usize = 1000;

pub fn degrees(g: &Graph) -> Vec<usize> {
    (0..g.n()).map(|i| g.degree(i)).collect()
}

/// Number of edges among the neighbors of `i`.
pub fn triangles_at(g: &Graph, i: usize) -> usize {
    let nb = g.neighbors(i);
    let mut count = 0;
    for &a in nb {
        let na = g.neighbors(a);
        // only count each neighbor pair once, from its smaller endpoint
        count += nb.range(a + 1..).filter(|b| na.contains(b)).count();
    }
    count
}

/// Local clustering coefficient of `i`; 0 when the degree is below 2.
pub fn clustering_at(g: &Graph, i: usize) -> f64 {
    let d = g.degree(i);
    if d < 2 {
        return 0.0;
    }
    let pairs = (d * (d - 1) / 2) as f64;
    triangles_at(g, i) as f64 / pairs
}

pub fn clustering_coefficients(g: &Graph) -> Vec<f64> {
    (0..g.n()).map(|i| clustering_at(g, i)).collect()
}

/// Cosine similarity between `x_i` and the degree-normalized neighbor
/// aggregate `Σ_j x_j / (√d_j √d_i)`. Isolated nodes and zero-norm vectors
/// get 0.
pub fn homophily_at(g: &Graph, i: usize) -> f64 {
    let d_i = g.degree(i);
    if d_i == 0 {
        return 0.0;
    }
    let x = g.features();
    let k = x.cols();
    let mut agg = vec![0.0; k];
    let sd_i = (d_i as f64).sqrt();
    for &j in g.neighbors(i) {
        let w = 1.0 / ((g.degree(j) as f64).sqrt() * sd_i);
        for (a, &xj) in agg.iter_mut().zip(x.row(j)) {
            *a += w * xj;
        }
    }
    cosine(x.row(i), &agg).unwrap_or(0.0)
}

pub fn node_homophily(g: &Graph) -> Vec<f64> {
    (0..g.n()).map(|i| homophily_at(g, i)).collect()
}

/// Cosine similarity, `None` if either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Brandes shortest-path betweenness, normalized by `(n-1)(n-2)/2` (the number
/// of unordered pairs not involving the node).
pub fn betweenness_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut cb = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0; n];
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        stack.clear();
        for p in preds.iter_mut() {
            p.clear();
        }
        sigma.fill(0.0);
        dist.fill(-1);
        delta.fill(0.0);
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    // each unordered pair was counted from both endpoints
    let scale = if n > 2 {
        1.0 / ((n - 1) * (n - 2)) as f64
    } else {
        0.0
    };
    cb.iter().map(|c| c * scale).collect()
}

/// Upper bound on the spectral radius: the maximum degree.
pub fn katz_safe_beta(g: &Graph) -> f64 {
    let dmax = degrees(g).into_iter().max().unwrap_or(0);
    if dmax == 0 {
        0.5
    } else {
        // strictly inside the convergence radius
        0.9 / dmax as f64
    }
}

/// `Σ_{l≥1} β^l A^l`, truncated once the increment's max-norm drops below
/// `tolerance` (at most [`KATZ_MAX_TERMS`] terms).
pub fn katz_similarity(g: &Graph, beta: f64, tolerance: f64) -> Result<Matrix> {
    let n = g.n();
    let mut adj = Matrix::zeros(n, n);
    for (u, v) in g.edges() {
        adj.set(u, v, 1.0);
        adj.set(v, u, 1.0);
    }
    let mut term = adj.scale(beta);
    let mut total = term.clone();
    let mut last = term.max_abs();
    let mut growing = 0;
    for _ in 1..KATZ_MAX_TERMS {
        if last < tolerance {
            return Ok(total);
        }
        term = term.matmul(&adj)?.scale(beta);
        let norm = term.max_abs();
        if !norm.is_finite() {
            return Err(Error::Divergence("Katz series overflowed".into()));
        }
        if norm > last {
            growing += 1;
            if growing >= 3 {
                return Err(Error::Divergence(format!(
                    "Katz increments grew for 3 consecutive terms (beta = {beta})"
                )));
            }
        } else {
            growing = 0;
        }
        total.add_assign(&term);
        last = norm;
    }
    if last < tolerance {
        Ok(total)
    } else {
        Err(Error::Divergence(format!(
            "Katz series not converged after {KATZ_MAX_TERMS} terms"
        )))
    }
}
