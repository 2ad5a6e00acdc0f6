//! Experiment pipelines: clean-model training, trade-off curves, bypassable
//! rate, the low-rate sensitivity probe and score-based edge filtering.

mod bench;
mod classifier;

pub use bench::{Benchmark, DEFAULT_TRAIN_FRAC, DEFAULT_VAL_FRAC};

pub use classifier::{
    accuracy, adjacency_matrix, train_clean_gcn, Split, SurrogateModel, TrainConfig,
};

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackTrace, EdgeOp};
use crate::error::{Error, Result};
use crate::graph::{AttackPair, Edge, Graph};
use crate::noticeability::MeasureHandle;
use crate::rng::DeterministicRng;
use crate::scorers::EdgeScorer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub accuracy: f64,
    /// `None` where the measure is undefined (e.g. `t = 0` for AUROC).
    pub noticeability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub measure: String,
    pub points: Vec<CurvePoint>,
    pub seed: u64,
}

impl TradeoffCurve {
    /// Noticeability with undefined points read as 0.
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.noticeability.unwrap_or(0.0)).collect()
    }

    pub fn final_accuracy(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.accuracy)
    }

    /// Trapezoidal integral of noticeability over `t`.
    pub fn area(&self) -> f64 {
        let v = self.values();
        self.points
            .windows(2)
            .zip(v.windows(2))
            .map(|(p, y)| (p[1].t - p[0].t) * (y[0] + y[1]) / 2.0)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BypassReport {
    pub area_original: f64,
    pub area_adaptive: f64,
    /// `None` when the original area is zero.
    pub bypassable_rate: Option<f64>,
}

/// Replays `trace` one operation at a time, recording the clean model's test
/// accuracy and the measure after each step.
pub fn tradeoff_curve(
    g: &Graph,
    trace: &AttackTrace,
    measure: &MeasureHandle,
    model: &SurrogateModel,
    labels: &[usize],
    rng: &DeterministicRng,
) -> Result<TradeoffCurve> {
    let m = trace.len();
    let mut current = g.clone();
    let mut points = Vec::with_capacity(m + 1);
    let test = &model.split.test;
    for t in 0..=m {
        if t > 0 {
            trace.ops[t - 1].apply(&mut current)?;
        }
        let notice = if t == 0 {
            None
        } else {
            measure
                .evaluate(g, &current, &rng.substream(t as u64))?
                .statistic
        };
        points.push(CurvePoint {
            t: if m == 0 { 0.0 } else { t as f64 / m as f64 },
            accuracy: accuracy(model, &current, labels, test)?,
            noticeability: notice,
        });
    }
    Ok(TradeoffCurve {
        measure: measure.name().to_string(),
        points,
        seed: rng.seed(),
    })
}

/// `1 − area(adaptive) / area(original)` over the shared budget schedule.
pub fn bypassable_rate(original: &TradeoffCurve, adaptive: &TradeoffCurve) -> Result<BypassReport> {
    if original.points.len() != adaptive.points.len() {
        return Err(Error::Shape(format!(
            "curves have {} and {} points",
            original.points.len(),
            adaptive.points.len()
        )));
    }
    if original.points.iter().zip(&adaptive.points).any(|(a, b)| a.t != b.t) {
        return Err(Error::Shape("curves use different budget schedules".into()));
    }
    let area_original = original.area();
    let area_adaptive = adaptive.area();
    Ok(BypassReport {
        area_original,
        area_adaptive,
        bypassable_rate: (area_original > 0.0).then(|| 1.0 - area_adaptive / area_original),
    })
}

/// Noticeability at `t = gamma_probe / full_gamma`, linearly interpolated.
pub fn sensitivity_probe(curve: &TradeoffCurve, gamma_probe: f64, full_gamma: f64) -> Result<f64> {
    if !(full_gamma > 0.0) || !(0.0..=full_gamma).contains(&gamma_probe) {
        return Err(Error::OutOfRange(format!(
            "probe rate {gamma_probe} outside [0, {full_gamma}]"
        )));
    }
    let t = gamma_probe / full_gamma;
    let v = curve.values();
    let pts = &curve.points;
    if pts.is_empty() {
        return Err(Error::EmptySample("empty curve".into()));
    }
    for i in 0..pts.len() {
        if pts[i].t == t {
            return Ok(v[i]);
        }
        if i + 1 < pts.len() && pts[i].t < t && t < pts[i + 1].t {
            let w = (t - pts[i].t) / (pts[i + 1].t - pts[i].t);
            return Ok(v[i] + w * (v[i + 1] - v[i]));
        }
    }
    Err(Error::OutOfRange(format!("t = {t} not covered by the curve")))
}

/// `Ĝ` minus its `count` lowest-scoring edges. `scores` follow `g_hat.edges()`
/// order; ties go to the earlier edge.
pub fn filter_edges(g_hat: &Graph, scores: &[f64], count: usize) -> Result<Graph> {
    let edges = g_hat.edges();
    if scores.len() != edges.len() {
        return Err(Error::Shape(format!("{} scores for {} edges", scores.len(), edges.len())));
    }
    if count > edges.len() {
        return Err(Error::OutOfRange(format!("cannot remove {count} of {} edges", edges.len())));
    }
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut out = g_hat.clone();
    for &i in &order[..count] {
        let (u, v) = edges[i];
        out.remove_edge(u, v)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub acc_attacked: f64,
    pub acc_filtered: f64,
    pub removed: usize,
}

/// Trains a GCN on `Ĝ` and on `Ĝ` with its `count` least plausible edges
/// removed, returning both test accuracies.
#[allow(clippy::too_many_arguments)]
pub fn filtered_classification(
    g_hat: &Graph,
    scorer: &mut dyn EdgeScorer,
    count: usize,
    labels: &[usize],
    split: &Split,
    cfg: &TrainConfig,
    rng: &DeterministicRng,
) -> Result<(FilterOutcome, Graph)> {
    let edges: Vec<Edge> = g_hat.edges();
    let scores = scorer.score(g_hat, &edges, &rng.substream(30))?;
    let filtered = filter_edges(g_hat, &scores, count)?;
    let attacked = train_clean_gcn(g_hat, labels, split, cfg, &mut rng.substream(31))?;
    let cleaned = train_clean_gcn(&filtered, labels, split, cfg, &mut rng.substream(31))?;
    Ok((
        FilterOutcome {
            acc_attacked: attacked.test_accuracy,
            acc_filtered: cleaned.test_accuracy,
            removed: count,
        },
        filtered,
    ))
}

/// The first `delta` candidates in seeded random order: the non-adaptive
/// schedule that adaptive curves are compared against.
pub fn original_order(candidates: &AttackTrace, delta: usize, rng: &mut DeterministicRng) -> AttackTrace {
    let mut t = candidates.clone();
    t.ops.truncate(delta);
    t.budget.delta = t.ops.len();
    t.shuffled(rng)
}

/// `ops` prefix of a trace as a pair of graphs.
pub fn attack_pair(g: &Graph, ops: &[EdgeOp]) -> Result<AttackPair> {
    let mut h = g.clone();
    for op in ops {
        op.apply(&mut h)?;
    }
    AttackPair::new(g.clone(), h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(t: &[f64], y: &[f64]) -> TradeoffCurve {
        TradeoffCurve {
            measure: "x".into(),
            points: t
                .iter()
                .zip(y)
                .map(|(&t, &y)| CurvePoint {
                    t,
                    accuracy: 0.5,
                    noticeability: Some(y),
                })
                .collect(),
            seed: 0,
        }
    }

    #[test]
    fn bypass_examples() {
        let t = [0.0, 0.5, 1.0];
        let r = bypassable_rate(&curve(&t, &[0.0, 0.5, 1.0]), &curve(&t, &[0.0, 0.1, 0.2])).unwrap();
        assert!((r.area_original - 0.5).abs() < 1e-15);
        assert!((r.area_adaptive - 0.1).abs() < 1e-15);
        assert!((r.bypassable_rate.unwrap() - 0.8).abs() < 1e-12);
        let c = curve(&t, &[0.0, 0.3, 0.4]);
        assert_eq!(bypassable_rate(&c, &c).unwrap().bypassable_rate, Some(0.0));
        let z = curve(&t, &[0.0, 0.0, 0.0]);
        assert_eq!(bypassable_rate(&c, &z).unwrap().bypassable_rate, Some(1.0));
        assert_eq!(bypassable_rate(&z, &c).unwrap().bypassable_rate, None);
    }

    #[test]
    fn probe_interpolates() {
        let c = curve(&[0.0, 1.0], &[0.0, 1.0]);
        assert!((sensitivity_probe(&c, 0.02, 0.1).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(sensitivity_probe(&c, 0.0, 0.1).unwrap(), 0.0);
        assert_eq!(sensitivity_probe(&c, 0.1, 0.1).unwrap(), 1.0);
        assert!(sensitivity_probe(&c, 0.2, 0.1).is_err());
    }

    #[test]
    fn filter_counts() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let s = [0.9, 0.1, 0.5];
        assert!(filter_edges(&g, &s, 0).unwrap().same_edges(&g));
        assert_eq!(filter_edges(&g, &s, 3).unwrap().num_edges(), 0);
        assert_eq!(filter_edges(&g, &s, 1).unwrap().edges(), vec![(0, 1), (2, 3)]);
        assert!(filter_edges(&g, &s, 4).is_err());
    }
}
