//! Seeded synthetic benchmarks: a stochastic block model with
//! class-correlated Gaussian features, and block-structured binary features.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::DeterministicRng;
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmConfig {
    pub n: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Scale of the per-class feature means.
    pub signal: f64,
    /// Standard deviation of the per-node feature noise.
    pub noise: f64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            n: 300,
            blocks: 2,
            p_in: 0.1,
            p_out: 0.01,
            feature_dim: 16,
            signal: 0.5,
            noise: 1.0,
        }
    }
}

/// Node `i` belongs to block `i * blocks / n`; labels are the blocks.
pub fn sbm(cfg: &SbmConfig, rng: &mut DeterministicRng) -> Result<Graph> {
    if cfg.blocks == 0 || cfg.blocks > cfg.n {
        return Err(Error::Config(format!("{} blocks for {} nodes", cfg.blocks, cfg.n)));
    }
    for p in [cfg.p_in, cfg.p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("edge probability {p} outside [0, 1]")));
        }
    }
    let labels: Vec<usize> = (0..cfg.n).map(|i| i * cfg.blocks / cfg.n).collect();
    let mut edges = Vec::new();
    for u in 0..cfg.n {
        for v in u + 1..cfg.n {
            let p = if labels[u] == labels[v] { cfg.p_in } else { cfg.p_out };
            if rng.bernoulli(p) {
                edges.push((u, v));
            }
        }
    }
    let means: Vec<Vec<f64>> = (0..cfg.blocks)
        .map(|_| (0..cfg.feature_dim).map(|_| cfg.signal * rng.normal()).collect())
        .collect();
    let mut data = Vec::with_capacity(cfg.n * cfg.feature_dim);
    for &c in &labels {
        for j in 0..cfg.feature_dim {
            data.push(means[c][j] + cfg.noise * rng.normal());
        }
    }
    Graph::from_edges(cfg.n, &edges)?
        .with_features(Matrix::from_vec(cfg.n, cfg.feature_dim, data)?)?
        .with_labels(labels)
}

/// Binary `n × k` matrix with two node groups and two feature groups:
/// entries in matching groups are 1 with probability `p_hi`, others with
/// `p_lo`.
pub fn block_binary_features(n: usize, k: usize, p_hi: f64, p_lo: f64, rng: &mut DeterministicRng) -> Matrix {
    let mut x = Matrix::zeros(n, k);
    for v in 0..n {
        for i in 0..k {
            let same = (2 * v / n.max(1)) == (2 * i / k.max(1));
            if rng.bernoulli(if same { p_hi } else { p_lo }) {
                x.set(v, i, 1.0);
            }
        }
    }
    x
}

/// Flips `round(rate · nnz(x))` distinct uniformly chosen entries of a binary
/// matrix. Returns the attacked matrix and the flipped entries.
pub fn random_feature_flips(x: &Matrix, rate: f64, rng: &mut DeterministicRng) -> Result<(Matrix, Vec<(usize, usize)>)> {
    let nnz = x.as_slice().iter().filter(|&&v| v != 0.0).count();
    let count = (rate * nnz as f64).round() as usize;
    let total = x.rows() * x.cols();
    if count > total {
        return Err(Error::Infeasible(format!("{count} flips in a {total}-entry matrix")));
    }
    let mut out = x.clone();
    let mut flipped: Vec<(usize, usize)> = rng
        .sample_indices(total, count)
        .into_iter()
        .map(|e| (e / x.cols(), e % x.cols()))
        .collect();
    flipped.sort_unstable();
    for &(v, i) in &flipped {
        out.set(v, i, if x.get(v, i) != 0.0 { 0.0 } else { 1.0 });
    }
    Ok((out, flipped))
}
