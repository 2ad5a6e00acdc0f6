use super::{AttackBudget, AttackMethod, AttackTrace, EdgeOp};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::DeterministicRng;

/// DICE: `⌈Δ/2⌉` insertions between differently-labeled non-adjacent nodes
/// and `⌊Δ/2⌋` deletions of same-labeled edges, interleaved insert-first.
pub fn dice_attack(
    g: &Graph,
    labels: &[usize],
    budget: &AttackBudget,
    rng: &mut DeterministicRng,
) -> Result<AttackTrace> {
    if labels.len() != g.n() {
        return Err(Error::Shape("one label per node required".into()));
    }
    let n_ins = budget.delta.div_ceil(2);
    let n_del = budget.delta / 2;
    let inserts = super::sample_non_edges(g, n_ins, |u, v| labels[u] != labels[v], rng)
        .map_err(|e| Error::Infeasible(format!("DICE insert pool: {e}")))?;
    let delete_pool: Vec<_> = g
        .edges()
        .into_iter()
        .filter(|&(u, v)| labels[u] == labels[v])
        .collect();
    if delete_pool.len() < n_del {
        return Err(Error::Infeasible(format!(
            "DICE needs {n_del} same-class edges, found {}",
            delete_pool.len()
        )));
    }
    let deletes: Vec<_> = rng
        .sample_indices(delete_pool.len(), n_del)
        .into_iter()
        .map(|i| delete_pool[i])
        .collect();
    let mut ops = Vec::with_capacity(budget.delta);
    for i in 0..n_ins {
        ops.push(EdgeOp::insert(inserts[i].0, inserts[i].1));
        if let Some(&(u, v)) = deletes.get(i) {
            ops.push(EdgeOp::delete(u, v));
        }
    }
    Ok(AttackTrace {
        ops,
        method: AttackMethod::Dice,
        budget: *budget,
        seed: rng.seed(),
    })
}
