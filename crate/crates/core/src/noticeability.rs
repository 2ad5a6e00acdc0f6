//! AUROC, the learned-scorer noticeability measure, and the uniform measure
//! interface used by the adaptive attack and the harness.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackTrace, EdgeOp, GreedyObjective, OpKind};
use crate::error::{Error, Result};
use crate::graph::{AttackPair, Edge, Graph};
use crate::measures::{
    ks_two_sample, lr_statistic, statistical_measure, MeasureKind, NodeStatistic, NoticeabilityReport, DEFAULT_D_MIN,
};
use crate::rng::DeterministicRng;
use crate::scorers::{train_leo, EdgeScorer, LeoConfig, ScorerSpec};
use crate::stats;

pub const DEFAULT_AUROC_THRESHOLD: f64 = 0.6;

/// Area under the ROC curve, ties counted half: `P(s⁺ > s⁻) + ½ P(s⁺ = s⁻)`.
///
/// Computed from midranks; twice every midrank is an integer, so the sum is
/// exact.
pub fn auroc(labels: &[bool], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::Shape(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Numerical(format!("score {s} in AUROC input")));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Degenerate("AUROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum over positives of 2·rank (1-based midranks)
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let twice_mid = (i + 1 + j + 1) as u128;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        twice_rank_sum += twice_mid * pos_in_group;
        i = j + 1;
    }
    let twice_u = twice_rank_sum - (pos as u128) * (pos as u128 + 1);
    Ok(twice_u as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Settings of the learned-scorer measure.
#[derive(Debug, Clone, PartialEq)]
pub struct HideNSeekConfig {
    pub scorer: ScorerSpec,
    pub threshold: f64,
    /// Greedy steps between scorer retrains inside adaptive loops.
    pub retrain_every: usize,
}

impl Default for HideNSeekConfig {
    fn default() -> Self {
        HideNSeekConfig {
            scorer: ScorerSpec::Leo(LeoConfig::default()),
            threshold: DEFAULT_AUROC_THRESHOLD,
            retrain_every: 1,
        }
    }
}

/// Scores `E ∪ Ê` with `scorer` (fit on `Ĝ`) and reports the AUROC of
/// recognizing the original edges. `Ĝ = G` yields an undefined statistic.
pub fn hidenseek(
    pair: &AttackPair,
    scorer: &mut dyn EdgeScorer,
    threshold: f64,
    rng: &DeterministicRng,
) -> Result<NoticeabilityReport> {
    let sets = pair.edge_sets();
    let undefined = NoticeabilityReport {
        measure: MeasureKind::HideNSeek,
        statistic: None,
        p_value: None,
        threshold,
        noticeable: None,
    };
    if sets.labels.iter().all(|&l| l) || sets.labels.iter().all(|&l| !l) {
        return Ok(undefined);
    }
    if pair.attacked.num_edges() == 0 {
        return Err(Error::Degenerate("attacked graph has no edges".into()));
    }
    let scores = scorer.score(&pair.attacked, &sets.union, rng)?;
    if scores.len() != sets.union.len() {
        return Err(Error::Shape("scorer returned the wrong number of scores".into()));
    }
    let a = auroc(&sets.labels, &scores)?;
    Ok(NoticeabilityReport {
        measure: MeasureKind::HideNSeek,
        statistic: Some(a),
        p_value: None,
        threshold,
        noticeable: Some(a >= threshold),
    })
}

/// A noticeability measure with its settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureHandle {
    pub kind: MeasureKind,
    pub hidenseek: HideNSeekConfig,
    pub d_min: usize,
}

impl MeasureHandle {
    pub fn new(kind: MeasureKind) -> Self {
        MeasureHandle {
            kind,
            hidenseek: HideNSeekConfig::default(),
            d_min: DEFAULT_D_MIN,
        }
    }

    pub fn with_hidenseek(kind: MeasureKind, cfg: HideNSeekConfig) -> Self {
        MeasureHandle {
            hidenseek: cfg,
            ..MeasureHandle::new(kind)
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn evaluate(&self, g: &Graph, g_hat: &Graph, rng: &DeterministicRng) -> Result<NoticeabilityReport> {
        let pair = AttackPair::new(g.clone(), g_hat.clone())?;
        match self.kind {
            MeasureKind::HideNSeek => {
                let mut scorer = self.hidenseek.scorer.clone();
                hidenseek(&pair, &mut scorer, self.hidenseek.threshold, rng)
            }
            MeasureKind::DegreeLr if self.d_min != DEFAULT_D_MIN => {
                crate::measures::lr_degree_test(g, g_hat, self.d_min)
            }
            kind => statistical_measure(kind, &pair),
        }
    }
}

/// The objective an adaptive attack minimizes for `handle`: the test
/// statistic for statistical measures, the AUROC for the learned measure.
pub fn measure_for_adaptive(
    handle: &MeasureHandle,
    g: &Graph,
    candidates: &AttackTrace,
    rng: &DeterministicRng,
) -> Result<Box<dyn GreedyObjective>> {
    Ok(match handle.kind {
        MeasureKind::HideNSeek => {
            let cfg = match &handle.hidenseek.scorer {
                ScorerSpec::Leo(c) | ScorerSpec::Gcn(c) => *c,
                other => {
                    return Err(Error::Config(format!(
                        "adaptive objective needs a trainable scorer, got {}",
                        other.name()
                    )))
                }
            };
            Box::new(HideNSeekObjective::new(g, candidates, cfg, handle.hidenseek.retrain_every, rng)?)
        }
        kind => Box::new(StatObjective::new(kind, g, handle.d_min)?),
    })
}

/// Statistical objective with per-node incremental updates: a candidate
/// flip only changes the statistic at its endpoints (and, for clustering and
/// homophily, at their neighbours).
pub struct StatObjective {
    kind: MeasureKind,
    stat: NodeStatistic,
    d_min: usize,
    original: Vec<f64>,
    original_deg: Vec<usize>,
    current: Vec<f64>,
    synced: bool,
}

impl StatObjective {
    pub fn new(kind: MeasureKind, g: &Graph, d_min: usize) -> Result<Self> {
        let stat = match kind {
            MeasureKind::DegreeLr => NodeStatistic::Degree,
            MeasureKind::HideNSeek => {
                return Err(Error::Usage("hidenseek is not a statistical measure".into()))
            }
            k => NodeStatistic::for_measure(k).expect("KS measure"),
        };
        if stat == NodeStatistic::Homophily && !g.has_features() {
            return Err(Error::Shape("homophily needs node features".into()));
        }
        let original = stat.compute(g);
        Ok(StatObjective {
            kind,
            stat,
            d_min,
            current: original.clone(),
            original_deg: stats::degrees(g),
            original,
            synced: false,
        })
    }

    fn affected(&self, g: &Graph, u: usize, v: usize, out: &mut Vec<usize>) {
        out.clear();
        out.push(u);
        out.push(v);
        match self.stat {
            NodeStatistic::Degree => {}
            NodeStatistic::Clustering => {
                out.extend(g.neighbors(u).intersection(g.neighbors(v)).copied());
            }
            NodeStatistic::Homophily => {
                out.extend(g.neighbors(u).iter().copied());
                out.extend(g.neighbors(v).iter().copied());
            }
        }
        out.sort_unstable();
        out.dedup();
    }

    fn value(&self) -> Result<f64> {
        match self.kind {
            MeasureKind::DegreeLr => {
                let deg: Vec<usize> = self.current.iter().map(|&d| d as usize).collect();
                lr_statistic(&self.original_deg, &deg, self.d_min)
            }
            _ => Ok(ks_two_sample(&self.original, &self.current)?.statistic),
        }
    }
}

impl GreedyObjective for StatObjective {
    fn evaluate(&mut self, _original: &Graph, current: &Graph) -> Result<f64> {
        self.current = self.stat.compute(current);
        self.synced = true;
        self.value()
    }

    fn evaluate_with(&mut self, _original: &Graph, current: &mut Graph, op: &EdgeOp) -> Result<f64> {
        if !self.synced {
            self.current = self.stat.compute(current);
            self.synced = true;
        }
        let (u, v) = op.pair();
        let mut nodes = Vec::new();
        // neighbourhoods before and after the flip
        self.affected(current, u, v, &mut nodes);
        op.apply(current)?;
        let mut after = Vec::new();
        self.affected(current, u, v, &mut after);
        nodes.extend(after);
        nodes.sort_unstable();
        nodes.dedup();
        let saved: Vec<f64> = nodes.iter().map(|&i| self.current[i]).collect();
        for &i in &nodes {
            self.current[i] = self.stat.at(current, i);
        }
        let value = self.value();
        for (&i, &s) in nodes.iter().zip(&saved) {
            self.current[i] = s;
        }
        op.revert(current)?;
        value
    }

    fn commit(&mut self, _original: &Graph, current: &Graph, _op: &EdgeOp) -> Result<()> {
        // cheap relative to the candidate sweep and avoids drift
        self.current = self.stat.compute(current);
        self.synced = true;
        Ok(())
    }
}

/// Learned-scorer objective. The scorer is retrained on the current graph
/// every `retrain_every` committed steps; in between, candidate flips are
/// scored with the frozen model, so each evaluation is an O(log |E|) AUROC
/// update.
pub struct HideNSeekObjective {
    cfg: LeoConfig,
    retrain_every: usize,
    rng: DeterministicRng,
    original_edges: HashSet<Edge>,
    score_pairs: Vec<Edge>,
    scores: HashMap<Edge, f64>,
    positives: Vec<f64>,
    negatives: Vec<f64>,
    /// `2·U`, where `U` is the Mann–Whitney count over current negatives.
    twice_u: f64,
    steps_since_train: usize,
    trained: bool,
    retrains: usize,
}

impl HideNSeekObjective {
    pub fn new(
        g: &Graph,
        candidates: &AttackTrace,
        cfg: LeoConfig,
        retrain_every: usize,
        rng: &DeterministicRng,
    ) -> Result<Self> {
        let original_edges: HashSet<Edge> = g.edges().into_iter().collect();
        let mut score_pairs = g.edges();
        score_pairs.extend(candidates.ops.iter().map(|op| op.pair()).filter(|p| !original_edges.contains(p)));
        score_pairs.sort_unstable();
        score_pairs.dedup();
        Ok(HideNSeekObjective {
            cfg,
            retrain_every: retrain_every.max(1),
            rng: rng.clone(),
            original_edges,
            score_pairs,
            scores: HashMap::new(),
            positives: Vec::new(),
            negatives: Vec::new(),
            twice_u: 0.0,
            steps_since_train: 0,
            trained: false,
            retrains: 0,
        })
    }

    pub fn retrains(&self) -> usize {
        self.retrains
    }

    fn train(&mut self, current: &Graph) -> Result<()> {
        let (model, _) = train_leo(current, &self.cfg, &self.rng.substream(1000 + self.retrains as u64))?;
        let s = model.score(current, &self.score_pairs)?;
        self.scores = self.score_pairs.iter().copied().zip(s).collect();
        self.positives = self.original_edges.iter().map(|e| self.scores[e]).collect();
        self.positives.sort_by(f64::total_cmp);
        self.negatives.clear();
        self.twice_u = 0.0;
        for e in current.edges() {
            if !self.original_edges.contains(&e) {
                let s = self.score_of(e)?;
                self.twice_u += self.twice_wins(s);
                self.negatives.push(s);
            }
        }
        self.trained = true;
        self.steps_since_train = 0;
        self.retrains += 1;
        Ok(())
    }

    fn score_of(&self, e: Edge) -> Result<f64> {
        self.scores
            .get(&e)
            .copied()
            .ok_or_else(|| Error::Usage(format!("pair {e:?} is not among the candidates")))
    }

    /// `2·#{p > s} + #{p = s}` over positive scores `p`.
    fn twice_wins(&self, s: f64) -> f64 {
        let below_or_eq = self.positives.partition_point(|&p| p <= s);
        let below = self.positives.partition_point(|&p| p < s);
        let greater = self.positives.len() - below_or_eq;
        (2 * greater + (below_or_eq - below)) as f64
    }

    fn auroc_value(&self, twice_u: f64, num_neg: usize) -> f64 {
        if num_neg == 0 || self.positives.is_empty() {
            // single class: nothing to distinguish
            return 0.0;
        }
        twice_u / (2.0 * self.positives.len() as f64 * num_neg as f64)
    }

    /// Change in (2U, |negatives|) caused by `op` on `current`.
    fn delta(&self, current: &Graph, op: &EdgeOp) -> Result<(f64, isize)> {
        let e = op.pair();
        if self.original_edges.contains(&e) {
            return Ok((0.0, 0));
        }
        let s = self.score_of(e)?;
        Ok(match op.kind {
            OpKind::Insert if !current.has_edge(e.0, e.1) => (self.twice_wins(s), 1),
            OpKind::Delete if current.has_edge(e.0, e.1) => (-self.twice_wins(s), -1),
            _ => (0.0, 0),
        })
    }
}

impl GreedyObjective for HideNSeekObjective {
    fn evaluate(&mut self, _original: &Graph, current: &Graph) -> Result<f64> {
        if !self.trained {
            self.train(current)?;
        }
        Ok(self.auroc_value(self.twice_u, self.negatives.len()))
    }

    fn evaluate_with(&mut self, _original: &Graph, current: &mut Graph, op: &EdgeOp) -> Result<f64> {
        if !self.trained {
            self.train(current)?;
        }
        let (du, dn) = self.delta(current, op)?;
        let n = (self.negatives.len() as isize + dn) as usize;
        Ok(self.auroc_value(self.twice_u + du, n))
    }

    fn commit(&mut self, _original: &Graph, current: &Graph, op: &EdgeOp) -> Result<()> {
        self.steps_since_train += 1;
        if self.steps_since_train >= self.retrain_every {
            self.trained = false;
            return Ok(());
        }
        let e = op.pair();
        if self.original_edges.contains(&e) {
            return Ok(());
        }
        let s = self.score_of(e)?;
        match op.kind {
            OpKind::Insert => {
                self.twice_u += self.twice_wins(s);
                self.negatives.push(s);
            }
            OpKind::Delete => {
                if let Some(i) = self.negatives.iter().position(|&x| x == s) {
                    self.negatives.swap_remove(i);
                    self.twice_u -= self.twice_wins(s);
                }
            }
        }
        debug_assert_eq!(
            self.negatives.len(),
            current.edges().iter().filter(|e| !self.original_edges.contains(e)).count()
        );
        Ok(())
    }
}

/// Report serialized next to CLI outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    #[serde(flatten)]
    pub report: NoticeabilityReport,
    pub seed: u64,
    pub config_digest: String,
}
