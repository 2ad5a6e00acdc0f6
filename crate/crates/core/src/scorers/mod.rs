//! Edge scorers: the learnable ensemble and the baselines it is compared to.

pub mod knn;
pub mod leo;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::attacks::sample_non_edges;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::measures::NodeStatistic;
use crate::rng::DeterministicRng;

pub use knn::build_knn_graph;
pub use leo::{train_leo, EpochLog, LeoConfig, LeoModel, LeoScores, ModuleMask, TrainLog};

/// Scores node pairs in the context of an (attacked) graph. Higher means the
/// pair looks more like a genuine edge.
pub trait EdgeScorer {
    fn score(&mut self, g_hat: &Graph, pairs: &[Edge], rng: &DeterministicRng) -> Result<Vec<f64>>;
}

impl<F> EdgeScorer for F
where
    F: FnMut(&Graph, &[Edge]) -> Result<Vec<f64>>,
{
    fn score(&mut self, g_hat: &Graph, pairs: &[Edge], _rng: &DeterministicRng) -> Result<Vec<f64>> {
        self(g_hat, pairs)
    }
}

/// Built-in scorers, selectable by name.
#[derive(Debug, Clone, PartialEq)]
pub enum ScorerSpec {
    Leo(LeoConfig),
    Gcn(LeoConfig),
    Svd { rank: usize },
    Cosine,
    Logistic(NodeStatistic),
}

impl ScorerSpec {
    pub fn parse(name: &str, leo: LeoConfig, svd_rank: usize) -> Result<Self> {
        Ok(match name {
            "leo" => ScorerSpec::Leo(leo),
            "gcn" => ScorerSpec::Gcn(leo.gcn_only()),
            "svd" => ScorerSpec::Svd { rank: svd_rank },
            "cosine" => ScorerSpec::Cosine,
            "degree" => ScorerSpec::Logistic(NodeStatistic::Degree),
            "clscoef" => ScorerSpec::Logistic(NodeStatistic::Clustering),
            "homophily" => ScorerSpec::Logistic(NodeStatistic::Homophily),
            other => return Err(Error::Config(format!("unknown scorer '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScorerSpec::Leo(_) => "leo",
            ScorerSpec::Gcn(_) => "gcn",
            ScorerSpec::Svd { .. } => "svd",
            ScorerSpec::Cosine => "cosine",
            ScorerSpec::Logistic(NodeStatistic::Degree) => "degree",
            ScorerSpec::Logistic(NodeStatistic::Clustering) => "clscoef",
            ScorerSpec::Logistic(NodeStatistic::Homophily) => "homophily",
        }
    }
}

impl EdgeScorer for ScorerSpec {
    fn score(&mut self, g_hat: &Graph, pairs: &[Edge], rng: &DeterministicRng) -> Result<Vec<f64>> {
        let out = match self {
            ScorerSpec::Leo(cfg) | ScorerSpec::Gcn(cfg) => {
                let (model, _) = train_leo(g_hat, cfg, rng)?;
                model.score(g_hat, pairs)?
            }
            ScorerSpec::Svd { rank } => svd_score(g_hat, *rank, pairs)?,
            ScorerSpec::Cosine => cosine_score(g_hat, pairs)?,
            ScorerSpec::Logistic(stat) => property_logistic_score(g_hat, *stat, pairs, &mut rng.substream(20))?,
        };
        if let Some(bad) = out.iter().find(|s| !s.is_finite()) {
            return Err(Error::Numerical(format!("scorer produced {bad}")));
        }
        Ok(out)
    }
}

/// `count` distinct non-edges of `g_hat`, uniformly at random.
pub fn sample_negatives(g_hat: &Graph, count: usize, rng: &mut DeterministicRng) -> Result<Vec<Edge>> {
    sample_non_edges(g_hat, count, |_, _| true, rng)
}

fn check_pairs(g: &Graph, pairs: &[Edge]) -> Result<()> {
    match pairs.iter().find(|&&(u, v)| u >= g.n() || v >= g.n() || u == v) {
        Some(p) => Err(Error::Shape(format!("invalid pair {p:?} for n = {}", g.n()))),
        None => Ok(()),
    }
}

/// Rank-`rank` reconstruction of the adjacency matrix (eigenpairs with the
/// largest `|λ|`), clamped to `[0, 1]`.
pub fn svd_score(g_hat: &Graph, rank: usize, pairs: &[Edge]) -> Result<Vec<f64>> {
    let n = g_hat.n();
    if rank > n {
        return Err(Error::Config(format!("rank {rank} exceeds n = {n}")));
    }
    check_pairs(g_hat, pairs)?;
    if rank == 0 {
        return Ok(vec![0.0; pairs.len()]);
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (u, v) in g_hat.edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .abs()
            .total_cmp(&eig.eigenvalues[i].abs())
            .then(i.cmp(&j))
    });
    let top = &order[..rank];
    Ok(pairs
        .iter()
        .map(|&(u, v)| {
            let r: f64 = top
                .iter()
                .map(|&k| eig.eigenvalues[k] * eig.eigenvectors[(u, k)] * eig.eigenvectors[(v, k)])
                .sum();
            r.clamp(0.0, 1.0)
        })
        .collect())
}

/// Feature cosine similarity mapped to `[0, 1]`; zero rows give 0.5.
pub fn cosine_score(g_hat: &Graph, pairs: &[Edge]) -> Result<Vec<f64>> {
    if !g_hat.has_features() {
        return Err(Error::Shape("cosine scorer needs node features".into()));
    }
    check_pairs(g_hat, pairs)?;
    let x = g_hat.features();
    Ok(pairs
        .iter()
        .map(|&(u, v)| leo::proximity(x.row(u), x.row(v)))
        .collect())
}

fn pair_features(stat: &[f64], (u, v): Edge) -> [f64; 3] {
    let (a, b) = (stat[u], stat[v]);
    [a.min(b), a.max(b), (a - b).abs()]
}

/// Logistic regression fit by full-batch gradient descent on standardized
/// features. Returns `None` when every feature is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    mean: [f64; 3],
    std: [f64; 3],
    weights: [f64; 3],
    bias: f64,
}

const LOGISTIC_ITERS: usize = 500;
const LOGISTIC_LR: f64 = 0.5;

impl LogisticModel {
    pub fn fit(rows: &[[f64; 3]], targets: &[f64]) -> Option<LogisticModel> {
        let m = rows.len() as f64;
        let mut mean = [0.0; 3];
        let mut std = [0.0; 3];
        for j in 0..3 {
            mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / m;
            std[j] = (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / m).sqrt();
        }
        if std.iter().all(|&s| s < 1e-12) {
            return None;
        }
        let z: Vec<[f64; 3]> = rows
            .iter()
            .map(|r| std::array::from_fn(|j| if std[j] < 1e-12 { 0.0 } else { (r[j] - mean[j]) / std[j] }))
            .collect();
        let mut w = [0.0; 3];
        let mut b = 0.0;
        for _ in 0..LOGISTIC_ITERS {
            let mut gw = [0.0; 3];
            let mut gb = 0.0;
            for (zi, &y) in z.iter().zip(targets) {
                let p = sigmoid(b + (0..3).map(|j| w[j] * zi[j]).sum::<f64>());
                let e = p - y;
                gb += e;
                for j in 0..3 {
                    gw[j] += e * zi[j];
                }
            }
            b -= LOGISTIC_LR * gb / m;
            for j in 0..3 {
                w[j] -= LOGISTIC_LR * gw[j] / m;
            }
        }
        Some(LogisticModel {
            mean,
            std,
            weights: w,
            bias: b,
        })
    }

    pub fn predict(&self, row: &[f64; 3]) -> f64 {
        let s: f64 = (0..3)
            .map(|j| {
                let z = if self.std[j] < 1e-12 { 0.0 } else { (row[j] - self.mean[j]) / self.std[j] };
                self.weights[j] * z
            })
            .sum();
        sigmoid(self.bias + s)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Logistic regression on `(min, max, |diff|)` of a node statistic, trained
/// with edges of `g_hat` as positives and as many sampled non-edges as
/// negatives.
pub fn property_logistic_score(
    g_hat: &Graph,
    stat: NodeStatistic,
    pairs: &[Edge],
    rng: &mut DeterministicRng,
) -> Result<Vec<f64>> {
    check_pairs(g_hat, pairs)?;
    if stat == NodeStatistic::Homophily && !g_hat.has_features() {
        return Err(Error::Shape("homophily statistic needs node features".into()));
    }
    let values = stat.compute(g_hat);
    let positives = g_hat.edges();
    if positives.is_empty() {
        return Err(Error::Degenerate("no edges to train on".into()));
    }
    let negatives = sample_negatives(g_hat, positives.len(), rng)?;
    let rows: Vec<[f64; 3]> = positives.iter().chain(&negatives).map(|&e| pair_features(&values, e)).collect();
    let targets: Vec<f64> = (0..rows.len()).map(|i| if i < positives.len() { 1.0 } else { 0.0 }).collect();
    match LogisticModel::fit(&rows, &targets) {
        Some(model) => Ok(pairs.iter().map(|&e| model.predict(&pair_features(&values, e))).collect()),
        None => {
            log::warn!("constant {stat:?} features; logistic scorer returns 0.5");
            Ok(vec![0.5; pairs.len()])
        }
    }
}
