use std::collections::HashSet;

use super::{AttackBudget, AttackMethod, AttackTrace, EdgeOp};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::rng::DeterministicRng;

/// `k` distinct non-edges `(u, v)` with `keep(u, v)`, uniformly at random.
///
/// Small pools are enumerated; large ones are rejection-sampled.
pub fn sample_non_edges(
    g: &Graph,
    k: usize,
    keep: impl Fn(usize, usize) -> bool,
    rng: &mut DeterministicRng,
) -> Result<Vec<Edge>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let n = g.n();
    let total_pairs = n * n.saturating_sub(1) / 2;
    // rejection is cheap when the pool is dense among all pairs
    if g.num_non_edges() >= 8 * k.max(1) && total_pairs >= 64 {
        let mut chosen = Vec::with_capacity(k);
        let mut seen = HashSet::with_capacity(k);
        let mut attempts = 0usize;
        let cap = 200 * k + 10_000;
        while chosen.len() < k && attempts < cap {
            attempts += 1;
            let u = rng.below(n);
            let v = rng.below(n);
            if u == v {
                continue;
            }
            let e = crate::graph::canonical(u, v);
            if g.has_edge(e.0, e.1) || !keep(e.0, e.1) || !seen.insert(e) {
                continue;
            }
            chosen.push(e);
        }
        if chosen.len() == k {
            return Ok(chosen);
        }
    }
    let mut pool = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) && keep(u, v) {
                pool.push((u, v));
            }
        }
    }
    if pool.len() < k {
        return Err(Error::Infeasible(format!(
            "{k} insertions requested but only {} eligible non-edges",
            pool.len()
        )));
    }
    Ok(rng.sample_indices(pool.len(), k).into_iter().map(|i| pool[i]).collect())
}

/// Inserts `Δ` uniformly random non-edges.
pub fn random_attack(g: &Graph, budget: &AttackBudget, rng: &mut DeterministicRng) -> Result<AttackTrace> {
    if budget.delta > g.num_non_edges() {
        return Err(Error::Infeasible(format!(
            "budget {} exceeds the {} non-edges",
            budget.delta,
            g.num_non_edges()
        )));
    }
    let pairs = sample_non_edges(g, budget.delta, |_, _| true, rng)?;
    Ok(AttackTrace {
        ops: pairs.into_iter().map(|(u, v)| EdgeOp::insert(u, v)).collect(),
        method: AttackMethod::Random,
        budget: *budget,
        seed: rng.seed(),
    })
}

/// Inserts `Δ` uniformly random non-edges whose endpoints carry different labels.
pub fn cross_class_attack(
    g: &Graph,
    labels: &[usize],
    budget: &AttackBudget,
    rng: &mut DeterministicRng,
) -> Result<AttackTrace> {
    if labels.len() != g.n() {
        return Err(Error::Shape("one label per node required".into()));
    }
    let pairs = sample_non_edges(g, budget.delta, |u, v| labels[u] != labels[v], rng)?;
    Ok(AttackTrace {
        ops: pairs.into_iter().map(|(u, v)| EdgeOp::insert(u, v)).collect(),
        method: AttackMethod::CrossClass,
        budget: *budget,
        seed: rng.seed(),
    })
}
