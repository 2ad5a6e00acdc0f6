//! Topological attacks. Every generator emits an ordered [`AttackTrace`] of
//! edge insertions and deletions that [`apply_trace`] replays onto the clean
//! graph.

mod adaptive;
mod dice;
mod pgd;
mod random;
mod structack;

use std::fmt;
use std::str::FromStr;

pub use adaptive::{adaptive_greedy, adaptive_greedy_traced, GreedyObjective};
pub use dice::dice_attack;
pub use pgd::{pgd_attack, project_budget, PgdConfig};
pub use random::{cross_class_attack, random_attack, sample_non_edges};
pub use structack::structack;

use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, Graph};

/// Candidate budget multiplier `Δ_C = 4Δ`.
pub const DEFAULT_CANDIDATE_MULTIPLIER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackMethod {
    Random,
    CrossClass,
    Dice,
    Pgd,
    Structack,
    Adaptive,
    Shuffled,
}

impl AttackMethod {
    pub fn name(self) -> &'static str {
        match self {
            AttackMethod::Random => "random",
            AttackMethod::CrossClass => "cross_class",
            AttackMethod::Dice => "dice",
            AttackMethod::Pgd => "pgd",
            AttackMethod::Structack => "structack",
            AttackMethod::Adaptive => "adaptive",
            AttackMethod::Shuffled => "shuffled",
        }
    }
}

impl fmt::Display for AttackMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => AttackMethod::Random,
            "cross_class" => AttackMethod::CrossClass,
            "dice" => AttackMethod::Dice,
            "pgd" => AttackMethod::Pgd,
            "structack" => AttackMethod::Structack,
            "adaptive" => AttackMethod::Adaptive,
            "shuffled" => AttackMethod::Shuffled,
            other => return Err(Error::Usage(format!("unknown attack method `{other}`"))),
        })
    }
}

/// Perturbation budget: `delta = round(gamma · |E|)` operations, a candidate
/// budget `delta_c ≥ delta`, and an optional cap on noticeability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackBudget {
    pub delta: usize,
    pub gamma: f64,
    pub delta_c: usize,
    pub noticeability_cap: f64,
}

impl AttackBudget {
    pub fn from_gamma(gamma: f64, num_edges: usize, candidate_multiplier: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("attack rate {gamma} outside [0, 1)")));
        }
        let delta = (gamma * num_edges as f64).round() as usize;
        Ok(AttackBudget {
            delta,
            gamma,
            delta_c: delta * candidate_multiplier.max(1),
            noticeability_cap: f64::INFINITY,
        })
    }

    pub fn exact(delta: usize) -> Self {
        AttackBudget {
            delta,
            gamma: 0.0,
            delta_c: delta,
            noticeability_cap: f64::INFINITY,
        }
    }

    /// Budget whose `delta` is the candidate budget, used to generate candidates.
    pub fn candidates(&self) -> Self {
        AttackBudget {
            delta: self.delta_c,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeOp {
    pub u: usize,
    pub v: usize,
    pub kind: OpKind,
}

impl EdgeOp {
    pub fn insert(u: usize, v: usize) -> Self {
        let (u, v) = canonical(u, v);
        EdgeOp {
            u,
            v,
            kind: OpKind::Insert,
        }
    }

    pub fn delete(u: usize, v: usize) -> Self {
        let (u, v) = canonical(u, v);
        EdgeOp {
            u,
            v,
            kind: OpKind::Delete,
        }
    }

    pub fn pair(&self) -> Edge {
        (self.u, self.v)
    }

    pub fn apply(&self, g: &mut Graph) -> Result<()> {
        let ok = match self.kind {
            OpKind::Insert => g.add_edge(self.u, self.v)?,
            OpKind::Delete => g.remove_edge(self.u, self.v)?,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGraph(format!("cannot apply {self}")))
        }
    }

    pub fn revert(&self, g: &mut Graph) -> Result<()> {
        let inverse = EdgeOp {
            kind: match self.kind {
                OpKind::Insert => OpKind::Delete,
                OpKind::Delete => OpKind::Insert,
            },
            ..*self
        };
        inverse.apply(g)
    }
}

impl fmt::Display for EdgeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            OpKind::Insert => 'I',
            OpKind::Delete => 'D',
        };
        write!(f, "{k} {} {}", self.u, self.v)
    }
}

/// Ordered list of edge operations produced by one attack run.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackTrace {
    pub ops: Vec<EdgeOp>,
    pub method: AttackMethod,
    pub budget: AttackBudget,
    pub seed: u64,
}

impl AttackTrace {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_inserts(&self) -> usize {
        self.ops.iter().filter(|o| o.kind == OpKind::Insert).count()
    }

    /// Same operations in a seeded random order.
    pub fn shuffled(&self, rng: &mut crate::rng::DeterministicRng) -> AttackTrace {
        let mut ops = self.ops.clone();
        rng.shuffle(&mut ops);
        AttackTrace {
            ops,
            method: AttackMethod::Shuffled,
            budget: self.budget,
            seed: rng.seed(),
        }
    }
}

/// `g` with the first `t` operations of `trace` applied.
pub fn apply_trace(g: &Graph, trace: &AttackTrace, t: usize) -> Result<Graph> {
    if t > trace.len() {
        return Err(Error::OutOfRange(format!(
            "prefix {t} of a {}-op trace",
            trace.len()
        )));
    }
    let mut out = g.clone();
    for op in &trace.ops[..t] {
        op.apply(&mut out)?;
    }
    Ok(out)
}

/// Undoes the first `t` operations of `trace` on an attacked graph.
pub fn revert_trace(g_hat: &Graph, trace: &AttackTrace, t: usize) -> Result<Graph> {
    if t > trace.len() {
        return Err(Error::OutOfRange(format!(
            "prefix {t} of a {}-op trace",
            trace.len()
        )));
    }
    let mut out = g_hat.clone();
    for op in trace.ops[..t].iter().rev() {
        op.revert(&mut out)?;
    }
    Ok(out)
}

/// Checks that inserts hit non-edges of `g`, deletes hit edges, no pair
/// repeats, and the trace fits in `limit` operations.
pub fn validate_trace(g: &Graph, trace: &AttackTrace, limit: usize) -> Result<()> {
    if trace.len() > limit {
        return Err(Error::Infeasible(format!(
            "trace has {} ops, budget {limit}",
            trace.len()
        )));
    }
    let mut seen = std::collections::HashSet::with_capacity(trace.len());
    for op in &trace.ops {
        if op.u >= op.v || op.v >= g.n() {
            return Err(Error::InvalidGraph(format!("bad pair in {op}")));
        }
        if !seen.insert(op.pair()) {
            return Err(Error::InvalidGraph(format!("pair repeated: {op}")));
        }
        let present = g.has_edge(op.u, op.v);
        match op.kind {
            OpKind::Insert if present => {
                return Err(Error::InvalidGraph(format!("{op} targets an existing edge")))
            }
            OpKind::Delete if !present => {
                return Err(Error::InvalidGraph(format!("{op} targets a non-edge")))
            }
            _ => {}
        }
    }
    Ok(())
}
