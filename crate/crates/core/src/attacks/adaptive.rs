use super::{AttackBudget, AttackMethod, AttackTrace, EdgeOp};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Noticeability objective minimized by the greedy adaptive attack.
///
/// `evaluate_with` scores the current graph with one extra operation applied;
/// implementations may override it with an incremental update.
pub trait GreedyObjective {
    fn evaluate(&mut self, original: &Graph, current: &Graph) -> Result<f64>;

    fn evaluate_with(&mut self, original: &Graph, current: &mut Graph, op: &EdgeOp) -> Result<f64> {
        op.apply(current)?;
        let value = self.evaluate(original, current);
        op.revert(current)?;
        value
    }

    /// Called after `op` has been applied to `current` for good.
    fn commit(&mut self, _original: &Graph, _current: &Graph, _op: &EdgeOp) -> Result<()> {
        Ok(())
    }
}

impl<F> GreedyObjective for F
where
    F: FnMut(&Graph, &Graph) -> Result<f64>,
{
    fn evaluate(&mut self, original: &Graph, current: &Graph) -> Result<f64> {
        self(original, current)
    }
}

/// Greedily applies `delta` of the candidate operations, each step taking the
/// one that minimizes the objective (ties go to the earlier candidate).
pub fn adaptive_greedy(
    g: &Graph,
    candidates: &AttackTrace,
    delta: usize,
    objective: &mut dyn GreedyObjective,
) -> Result<AttackTrace> {
    adaptive_greedy_traced(g, candidates, delta, objective).map(|(t, _)| t)
}

/// As [`adaptive_greedy`], also returning the objective value after each step.
pub fn adaptive_greedy_traced(
    g: &Graph,
    candidates: &AttackTrace,
    delta: usize,
    objective: &mut dyn GreedyObjective,
) -> Result<(AttackTrace, Vec<f64>)> {
    if delta > candidates.len() {
        return Err(Error::Infeasible(format!(
            "budget {delta} exceeds {} candidates",
            candidates.len()
        )));
    }
    let mut current = g.clone();
    let mut remaining = candidates.ops.clone();
    let mut chosen = Vec::with_capacity(delta);
    let mut values = Vec::with_capacity(delta);
    for _ in 0..delta {
        let mut best: Option<(usize, f64)> = None;
        for (i, op) in remaining.iter().enumerate() {
            let u = objective.evaluate_with(g, &mut current, op)?;
            if u.is_nan() {
                return Err(Error::Numerical(format!("objective is NaN for {op}")));
            }
            if best.is_none_or(|(_, b)| u < b) {
                best = Some((i, u));
            }
        }
        let (i, u) = best.expect("non-empty candidate list");
        let op = remaining.remove(i);
        op.apply(&mut current)?;
        objective.commit(g, &current, &op)?;
        chosen.push(op);
        values.push(u);
    }
    let budget = AttackBudget {
        delta,
        delta_c: candidates.len(),
        ..candidates.budget
    };
    Ok((
        AttackTrace {
            ops: chosen,
            method: AttackMethod::Adaptive,
            budget,
            seed: candidates.seed,
        },
        values,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(ops: Vec<EdgeOp>) -> AttackTrace {
        AttackTrace {
            budget: AttackBudget::exact(ops.len()),
            ops,
            method: AttackMethod::Random,
            seed: 0,
        }
    }

    #[test]
    fn picks_zero_cost_op() {
        let g = Graph::empty(5);
        let cands = trace(vec![EdgeOp::insert(0, 1), EdgeOp::insert(2, 3), EdgeOp::insert(0, 4)]);
        let mut touches_zero = |_: &Graph, h: &Graph| Ok(h.degree(0) as f64);
        let out = adaptive_greedy(&g, &cands, 1, &mut touches_zero).unwrap();
        assert_eq!(out.ops, vec![EdgeOp::insert(2, 3)]);
    }

    #[test]
    fn full_budget_is_permutation() {
        let g = Graph::empty(5);
        let cands = trace(vec![EdgeOp::insert(0, 1), EdgeOp::insert(2, 3), EdgeOp::insert(0, 4)]);
        let mut zero = |_: &Graph, _: &Graph| Ok(0.0);
        let out = adaptive_greedy(&g, &cands, 3, &mut zero).unwrap();
        // all ties: candidate order is preserved
        assert_eq!(out.ops, cands.ops);
        assert!(adaptive_greedy(&g, &cands, 4, &mut zero).is_err());
    }
}
