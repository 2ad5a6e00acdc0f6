use super::{AttackBudget, AttackMethod, AttackTrace, EdgeOp};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::harness::{adjacency_matrix, SurrogateModel};
use crate::rng::DeterministicRng;
use crate::tensor::{Matrix, Tape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgdConfig {
    pub steps: usize,
    pub lr: f64,
}

impl Default for PgdConfig {
    fn default() -> Self {
        PgdConfig { steps: 200, lr: 0.1 }
    }
}

/// Projects `s` onto `{0 ≤ s ≤ 1, Σ s ≤ budget}`: clamp, and if the clamped
/// mass still exceeds the budget, shift by the `μ` solving
/// `Σ clamp(s - μ, 0, 1) = budget` (found by bisection).
pub fn project_budget(s: &mut [f64], budget: f64) {
    let clamped_sum: f64 = s.iter().map(|x| x.clamp(0.0, 1.0)).sum();
    if clamped_sum <= budget {
        for x in s.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        return;
    }
    let mass = |mu: f64| s.iter().map(|x| (x - mu).clamp(0.0, 1.0)).sum::<f64>();
    let mut lo = s.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    for x in s.iter_mut() {
        *x = (*x - hi).clamp(0.0, 1.0);
    }
}

/// Gradient of the surrogate's summed cross-entropy on every labeled node
/// with respect to the pair perturbations `s` (upper-triangle order).
pub(crate) fn perturbation_gradient(
    g: &Graph,
    adjacency: &Matrix,
    labels: &[usize],
    surrogate: &SurrogateModel,
    s: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let n = g.n();
    let mut perturbed = adjacency.clone();
    let mut p = 0;
    for i in 0..n {
        for j in i + 1..n {
            let a = adjacency.get(i, j);
            let v = a + (1.0 - 2.0 * a) * s[p];
            perturbed.set(i, j, v);
            perturbed.set(j, i, v);
            p += 1;
        }
    }
    let mut tape = Tape::new();
    let a_var = tape.param(perturbed);
    let logits = surrogate.logits_on_tape(&mut tape, a_var, g.features())?;
    let rows: Vec<usize> = (0..n).collect();
    let mean = tape.cross_entropy(logits, &rows, labels)?;
    let loss = tape.scale(mean, n as f64);
    let value = tape.value(loss).item();
    let grads = tape.backward(loss)?;
    let ga = grads
        .get(a_var)
        .ok_or_else(|| Error::Numerical("no gradient reached the adjacency".into()))?;
    let mut out = Vec::with_capacity(s.len());
    for i in 0..n {
        for j in i + 1..n {
            let a = adjacency.get(i, j);
            out.push((1.0 - 2.0 * a) * (ga.get(i, j) + ga.get(j, i)));
        }
    }
    if !out.iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical("non-finite PGD gradient".into()));
    }
    Ok((value, out))
}

/// PGD topology attack against a fixed surrogate: gradient ascent on a
/// relaxed flip vector `s ∈ [0,1]^{pairs}` with projection onto the budget,
/// then the `Δ` largest entries (ties by pair order) become flips, emitted in
/// descending order of `s`.
pub fn pgd_attack(
    g: &Graph,
    labels: &[usize],
    budget: &AttackBudget,
    surrogate: &SurrogateModel,
    cfg: &PgdConfig,
    rng: &DeterministicRng,
) -> Result<AttackTrace> {
    let n = g.n();
    if labels.len() != n {
        return Err(Error::Shape("one label per node required".into()));
    }
    let pairs = n * n.saturating_sub(1) / 2;
    if budget.delta > pairs {
        return Err(Error::Infeasible(format!("budget {} exceeds {pairs} pairs", budget.delta)));
    }
    let adjacency = adjacency_matrix(g);
    let mut s = vec![0.0; pairs];
    let delta = budget.delta as f64;
    for _ in 0..cfg.steps {
        let (_, grad) = perturbation_gradient(g, &adjacency, labels, surrogate, &s)?;
        for (x, d) in s.iter_mut().zip(&grad) {
            *x += cfg.lr * d;
        }
        project_budget(&mut s, delta);
    }
    let mut order: Vec<usize> = (0..pairs).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let index_to_pair = pair_lookup(n);
    let ops = order[..budget.delta]
        .iter()
        .map(|&p| {
            let (u, v) = index_to_pair[p];
            if g.has_edge(u, v) {
                EdgeOp::delete(u, v)
            } else {
                EdgeOp::insert(u, v)
            }
        })
        .collect();
    Ok(AttackTrace {
        ops,
        method: AttackMethod::Pgd,
        budget: *budget,
        seed: rng.seed(),
    })
}

pub(crate) fn pair_lookup(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_vector_only_clamped() {
        let mut s = vec![-0.2, 0.3, 0.4, 1.5];
        project_budget(&mut s, 3.0);
        assert_eq!(s, vec![0.0, 0.3, 0.4, 1.0]);
    }

    #[test]
    fn projection_hits_budget() {
        let mut s = vec![0.9, 0.8, 0.7, 0.1];
        project_budget(&mut s, 1.0);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(s.iter().all(|&x| (0.0..=1.0).contains(&x)));
        // order preserved
        assert!(s[0] >= s[1] && s[1] >= s[2] && s[2] >= s[3]);
    }
}
