use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, Graph};
use crate::stats::cosine;
use crate::tensor::Matrix;

/// Undirected union of each node's `k_nn` most cosine-similar nodes (self
/// excluded, ties to the lower index). Zero vectors have similarity 0 to
/// everything.
pub fn build_knn_graph(embeddings: &Matrix, k_nn: usize) -> Result<Graph> {
    let n = embeddings.rows();
    if k_nn >= n {
        return Err(Error::Config(format!("k_nn = {k_nn} must be below n = {n}")));
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| embeddings.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let gram = embeddings.matmul(&embeddings.transpose())?;
    let mut edges: Vec<Edge> = Vec::with_capacity(n * k_nn);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        cand.clear();
        for j in 0..n {
            if j == i {
                continue;
            }
            let sim = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else {
                gram.get(i, j) / (norms[i] * norms[j])
            };
            cand.push((sim, j));
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k_nn < cand.len() {
            cand.select_nth_unstable_by(k_nn, cmp);
            cand.truncate(k_nn);
        }
        edges.extend(cand.iter().map(|&(_, j)| canonical(i, j)));
    }
    edges.sort_unstable();
    edges.dedup();
    Graph::from_edges(n, &edges)
}

/// Brute-force reference used in tests: full cosine table, stable sort.
#[doc(hidden)]
pub fn knn_reference(embeddings: &Matrix, k_nn: usize) -> Vec<Edge> {
    let n = embeddings.rows();
    let mut edges = Vec::new();
    for i in 0..n {
        let mut sims: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (cosine(embeddings.row(i), embeddings.row(j)).unwrap_or(0.0), j))
            .collect();
        sims.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        edges.extend(sims.iter().take(k_nn).map(|&(_, j)| canonical(i, j)));
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}
