use super::{AttackBudget, AttackMethod, AttackTrace, EdgeOp};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::stats;

/// Structack: pick the `2Δ` nodes of lowest betweenness (ties by index) and
/// link non-adjacent pairs among them in ascending Katz similarity. Each
/// matching round uses every selected node at most once; rounds repeat until
/// `Δ` pairs are emitted.
pub fn structack(g: &Graph, budget: &AttackBudget) -> Result<AttackTrace> {
    let delta = budget.delta;
    let trace = |ops| AttackTrace {
        ops,
        method: AttackMethod::Structack,
        budget: *budget,
        seed: 0,
    };
    if delta == 0 {
        return Ok(trace(Vec::new()));
    }
    let n = g.n();
    if 2 * delta > n {
        return Err(Error::NotApplicable(format!(
            "Structack needs {} nodes, graph has {n}",
            2 * delta
        )));
    }
    let bc = stats::betweenness_centrality(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| bc[a].total_cmp(&bc[b]).then(a.cmp(&b)));
    let mut selected = order[..2 * delta].to_vec();
    selected.sort_unstable();

    let mut pool: Vec<Edge> = Vec::new();
    for (i, &u) in selected.iter().enumerate() {
        for &v in &selected[i + 1..] {
            if !g.has_edge(u, v) {
                pool.push((u, v));
            }
        }
    }
    if pool.len() < delta {
        return Err(Error::NotApplicable(format!(
            "Structack pairing pool has {} pairs for a budget of {delta}",
            pool.len()
        )));
    }
    let katz = stats::katz_similarity(g, stats::katz_safe_beta(g), stats::KATZ_DEFAULT_TOLERANCE)?;
    pool.sort_by(|&(a, b), &(c, d)| katz.get(a, b).total_cmp(&katz.get(c, d)).then((a, b).cmp(&(c, d))));

    let mut taken = vec![false; pool.len()];
    let mut ops = Vec::with_capacity(delta);
    while ops.len() < delta {
        let mut used = vec![false; n];
        let before = ops.len();
        for (k, &(u, v)) in pool.iter().enumerate() {
            if ops.len() == delta {
                break;
            }
            if taken[k] || used[u] || used[v] {
                continue;
            }
            taken[k] = true;
            used[u] = true;
            used[v] = true;
            ops.push(EdgeOp::insert(u, v));
        }
        if ops.len() == before {
            break;
        }
    }
    if ops.len() < delta {
        return Err(Error::NotApplicable("Structack ran out of pairs".into()));
    }
    Ok(trace(ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::validate_trace;

    #[test]
    fn path_of_three() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let t = structack(&g, &AttackBudget::exact(1)).unwrap();
        assert_eq!(t.ops, vec![EdgeOp::insert(0, 2)]);
    }

    #[test]
    fn budget_beyond_pool_is_not_applicable() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(matches!(structack(&g, &AttackBudget::exact(3)), Err(Error::NotApplicable(_))));
        let k4 = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert!(matches!(structack(&k4, &AttackBudget::exact(1)), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn emits_non_edges_only() {
        let edges: Vec<_> = (0..19).map(|i| (i, i + 1)).chain([(0, 5), (3, 9)]).collect();
        let g = Graph::from_edges(20, &edges).unwrap();
        let t = structack(&g, &AttackBudget::exact(6)).unwrap();
        assert_eq!(t.len(), 6);
        validate_trace(&g, &t, 6).unwrap();
    }
}
