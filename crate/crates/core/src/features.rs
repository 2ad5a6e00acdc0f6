//! Feature-domain noticeability: the co-occurrence score, an autoencoder
//! feature scorer, and AUROC aggregation over feature entries.

use crate::error::{Error, Result};
use crate::measures::{MeasureKind, NoticeabilityReport};
use crate::noticeability::{auroc, DEFAULT_AUROC_THRESHOLD};
use crate::rng::DeterministicRng;
use crate::tensor::nn::dropout;
use crate::tensor::{Adam, Matrix, Mlp, ParamStore, Tape};

/// Feature co-occurrence counts: `count[i][j]` is the number of nodes with
/// both features `i` and `j` nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoOccurrenceGraph {
    count: Vec<Vec<u32>>,
    degree: Vec<usize>,
    support: Vec<Vec<usize>>,
    binary: Vec<Vec<bool>>,
}

impl CoOccurrenceGraph {
    /// Builds the graph from `x`; nonzero entries count as present.
    pub fn new(x: &Matrix) -> Self {
        let k = x.cols();
        if x.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
            log::warn!("co-occurrence input is not binary; thresholding at > 0");
        }
        let support: Vec<Vec<usize>> = (0..x.rows())
            .map(|v| (0..k).filter(|&i| x.get(v, i) > 0.0).collect())
            .collect();
        let mut count = vec![vec![0u32; k]; k];
        for s in &support {
            for (a, &i) in s.iter().enumerate() {
                for &j in &s[a + 1..] {
                    count[i][j] += 1;
                    count[j][i] += 1;
                }
            }
        }
        let degree = count.iter().map(|row| row.iter().filter(|&&c| c > 0).count()).collect();
        let binary = (0..x.rows())
            .map(|v| (0..k).map(|i| x.get(v, i) > 0.0).collect())
            .collect();
        CoOccurrenceGraph {
            count,
            degree,
            support,
            binary,
        }
    }

    pub fn num_features(&self) -> usize {
        self.degree.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.count[i][j] > 0
    }

    pub fn degree(&self, j: usize) -> usize {
        self.degree[j]
    }

    /// `(p(i | S_v), σ)` on the graph built with entry `(v, i)` zeroed.
    /// Terms with `d_j = 0` are reported through `Err`.
    fn terms(&self, v: usize, i: usize) -> Result<(f64, f64)> {
        let present = self.binary[v][i];
        let s_v: Vec<usize> = self.support[v].iter().copied().filter(|&j| j != i).collect();
        if s_v.is_empty() {
            return Err(Error::Degenerate(format!("node {v} has no other features")));
        }
        let mut p = 0.0;
        let mut sigma = 0.0;
        for &j in &s_v {
            // node v stops contributing to (i, j) once its entry i is removed
            let c_ij = self.count[i][j] - u32::from(present);
            let d_j = self.degree[j] - usize::from(present && self.count[i][j] == 1);
            if d_j == 0 {
                return Err(Error::Degenerate(format!("feature {j} co-occurs with nothing")));
            }
            if c_ij > 0 {
                p += 1.0 / d_j as f64;
            }
            sigma += 0.5 / d_j as f64;
        }
        Ok((p / s_v.len() as f64, sigma))
    }

    /// `f(v, i) = (1 − p(i | S_v)) / (2σ)`; higher is more noticeable.
    pub fn score(&self, v: usize, i: usize) -> Result<f64> {
        let (p, sigma) = self.terms(v, i)?;
        Ok((1.0 - p) / (2.0 * sigma))
    }

    pub fn probability(&self, v: usize, i: usize) -> Result<f64> {
        Ok(self.terms(v, i)?.0)
    }

    pub fn sigma(&self, v: usize, i: usize) -> Result<f64> {
        Ok(self.terms(v, i)?.1)
    }
}

/// Co-occurrence noticeability of entry `(v, i)` of `x_hat`.
pub fn cooccur_score(x_hat: &Matrix, v: usize, i: usize) -> Result<f64> {
    if v >= x_hat.rows() || i >= x_hat.cols() {
        return Err(Error::Shape(format!("entry ({v}, {i}) outside {}x{}", x_hat.rows(), x_hat.cols())));
    }
    CoOccurrenceGraph::new(x_hat).score(v, i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfoConfig {
    pub hidden: usize,
    pub bottleneck: usize,
    pub epochs: usize,
    pub lr: f64,
    pub keep_percent: f64,
    /// `|T_n| = negative_multiplier · |T_p|`.
    pub negative_multiplier: f64,
    /// Dropout on the input rows during training, so entries are predicted
    /// from the rest of their row rather than copied through.
    pub input_dropout: f64,
}

impl Default for LfoConfig {
    fn default() -> Self {
        LfoConfig {
            hidden: 128,
            bottleneck: 32,
            epochs: 200,
            lr: 0.01,
            keep_percent: 90.0,
            negative_multiplier: 1.0,
            input_dropout: 0.5,
        }
    }
}

/// Autoencoder over node feature rows, `k → hidden → bottleneck → hidden → k`
/// with a sigmoid head.
#[derive(Debug, Clone)]
pub struct LfoModel {
    pub config: LfoConfig,
    pub params: ParamStore,
    encoder: Mlp,
    decoder: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LfoEpoch {
    pub loss: f64,
    pub kept_positives: usize,
    pub num_negatives: usize,
}

impl LfoModel {
    fn new(k: usize, config: LfoConfig, rng: &mut DeterministicRng) -> Self {
        let mut params = ParamStore::new();
        let encoder = Mlp::new(&mut params, "enc", [k, config.hidden, config.bottleneck], rng);
        let decoder = Mlp::new(&mut params, "dec", [config.bottleneck, config.hidden, k], rng);
        LfoModel {
            config,
            params,
            encoder,
            decoder,
        }
    }

    fn forward(
        &self,
        tape: &mut Tape,
        p: &[crate::tensor::Var],
        x: &Matrix,
        drop_rng: Option<&mut DeterministicRng>,
    ) -> Result<crate::tensor::Var> {
        let mut input = tape.constant(x.clone());
        if let Some(rng) = drop_rng {
            input = dropout(tape, input, self.config.input_dropout, rng)?;
        }
        let z = self.encoder.forward(tape, p, input)?;
        let z = tape.relu(z);
        let o = self.decoder.forward(tape, p, z)?;
        Ok(tape.sigmoid(o))
    }

    /// Reconstruction probabilities for every entry of `x`.
    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let out = self.forward(&mut tape, &p, x, None)?;
        Ok(tape.value(out).clone())
    }
}

pub fn train_lfo(x_hat: &Matrix, cfg: &LfoConfig, rng: &DeterministicRng) -> Result<(LfoModel, Vec<LfoEpoch>)> {
    let total = x_hat.rows() * x_hat.cols();
    let positives: Vec<usize> = (0..total).filter(|&e| x_hat.as_slice()[e] != 0.0).collect();
    let zeros: Vec<usize> = (0..total).filter(|&e| x_hat.as_slice()[e] == 0.0).collect();
    if positives.is_empty() {
        return Err(Error::Degenerate("feature matrix has no nonzero entries".into()));
    }
    let mut init = rng.substream(40);
    let mut neg_rng = rng.substream(41);
    let mut drop_rng = rng.substream(42);
    let mut model = LfoModel::new(x_hat.cols(), *cfg, &mut init);
    let num_neg = ((cfg.negative_multiplier * positives.len() as f64).round() as usize).min(zeros.len());
    let keep = ((cfg.keep_percent / 100.0) * positives.len() as f64 - 1e-9).ceil() as usize;
    let targets: Vec<f64> = x_hat.as_slice().iter().map(|&v| if v != 0.0 { 1.0 } else { 0.0 }).collect();
    let mut opt = Adam::new(cfg.lr);
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut tape = Tape::new();
        let p = model.params.bind(&mut tape);
        let out = model.forward(&mut tape, &p, x_hat, Some(&mut drop_rng))?;
        let scores = tape.value(out).as_slice();
        let mut weights = vec![0.0; total];
        let mut order = positives.clone();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        for &e in &order[..keep] {
            weights[e] = 1.0;
        }
        for idx in neg_rng.sample_indices(zeros.len(), num_neg) {
            weights[zeros[idx]] = 1.0;
        }
        let loss = tape.bce(out, &targets, &weights)?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(Error::Numerical(format!("feature scorer loss is {value} at epoch {epoch}")));
        }
        let mut grads = tape.backward(loss)?;
        let gs = model.params.collect_grads(&p, &mut grads);
        opt.step(&mut model.params, &gs)?;
        log.push(LfoEpoch {
            loss: value,
            kept_positives: keep,
            num_negatives: num_neg,
        });
    }
    Ok((model, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureScorer {
    Lfo,
    Cooccur,
}

impl std::str::FromStr for FeatureScorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lfo" => Ok(FeatureScorer::Lfo),
            "cooccur" => Ok(FeatureScorer::Cooccur),
            other => Err(Error::Usage(format!("unknown feature scorer `{other}`"))),
        }
    }
}

/// Entries nonzero in `x` or `x_hat` (row-major), labelled by membership in
/// the support of `x`.
pub fn union_support(x: &Matrix, x_hat: &Matrix) -> Vec<((usize, usize), bool)> {
    let mut out = Vec::new();
    for v in 0..x.rows() {
        for i in 0..x.cols() {
            let orig = x.get(v, i) != 0.0;
            if orig || x_hat.get(v, i) != 0.0 {
                out.push(((v, i), orig));
            }
        }
    }
    out
}

/// Plausibility scores (higher = more likely genuine) of `entries` of `x_hat`.
///
/// Co-occurrence scores are negated. Entries whose co-occurrence score is
/// undefined (no other features at the node, or a feature with no
/// co-occurrences) get the least plausible value of the defined entries.
pub fn score_entries(
    x_hat: &Matrix,
    entries: &[(usize, usize)],
    scorer: FeatureScorer,
    cfg: &LfoConfig,
    rng: &DeterministicRng,
) -> Result<Vec<f64>> {
    match scorer {
        FeatureScorer::Lfo => {
            let (model, _) = train_lfo(x_hat, cfg, rng)?;
            let r = model.reconstruct(x_hat)?;
            Ok(entries.iter().map(|&(v, i)| r.get(v, i)).collect())
        }
        FeatureScorer::Cooccur => {
            let c = CoOccurrenceGraph::new(x_hat);
            let raw: Vec<Option<f64>> = entries.iter().map(|&(v, i)| c.score(v, i).ok().map(|f| -f)).collect();
            let floor = raw.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            let floor = if floor.is_finite() { floor } else { 0.0 };
            Ok(raw.into_iter().map(|s| s.unwrap_or(floor)).collect())
        }
    }
}

/// AUROC of recognizing entries of the original features among the union
/// support of `x` and `x_hat`.
pub fn feature_hidenseek(
    x: &Matrix,
    x_hat: &Matrix,
    scorer: FeatureScorer,
    cfg: &LfoConfig,
    rng: &DeterministicRng,
) -> Result<NoticeabilityReport> {
    if x.rows() != x_hat.rows() || x.cols() != x_hat.cols() {
        return Err(Error::Shape("original and attacked features differ in shape".into()));
    }
    let support = union_support(x, x_hat);
    let labels: Vec<bool> = support.iter().map(|&(_, l)| l).collect();
    let mut report = NoticeabilityReport {
        measure: MeasureKind::HideNSeek,
        statistic: None,
        p_value: None,
        threshold: DEFAULT_AUROC_THRESHOLD,
        noticeable: None,
    };
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Ok(report);
    }
    let entries: Vec<(usize, usize)> = support.iter().map(|&(e, _)| e).collect();
    let scores = score_entries(x_hat, &entries, scorer, cfg, rng)?;
    let a = auroc(&labels, &scores)?;
    report.statistic = Some(a);
    report.noticeable = Some(a >= report.threshold);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_example() -> Matrix {
        // features a, b, c; v1 = {a, b}, v2 = {a, c}, v3 = {b}
        Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap()
    }

    #[test]
    fn hand_example_terms() {
        let c = CoOccurrenceGraph::new(&hand_example());
        assert_eq!(c.probability(0, 2).unwrap(), 0.25);
        assert_eq!(c.sigma(0, 2).unwrap(), 0.75);
        assert_eq!(cooccur_score(&hand_example(), 0, 2).unwrap(), 0.5);
    }

    #[test]
    fn maximal_cooccurrence_scores_zero() {
        // S_0 = {1}, feature 1 co-occurs only with 0 (via node 1): p = 1
        let y = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(cooccur_score(&y, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn no_cooccurrence_gives_inverse_two_sigma() {
        let x = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let c = CoOccurrenceGraph::new(&x);
        assert_eq!(c.probability(0, 2).unwrap(), 0.0);
        // S_0 = {0, 1}; both have degree 1
        assert_eq!(c.score(0, 2).unwrap(), 1.0 / (2.0 * 1.0));
    }

    #[test]
    fn candidate_entry_is_removed_first() {
        // v0's own entry is the only co-occurrence of 0 and 2
        let x = Matrix::from_rows(&[vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let c = CoOccurrenceGraph::new(&x);
        let mut y = x.clone();
        y.set(0, 2, 0.0);
        let reference = CoOccurrenceGraph::new(&y);
        assert_eq!(c.score(0, 2).unwrap(), reference.score(0, 2).unwrap());
    }

    #[test]
    fn empty_support_errors() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(cooccur_score(&x, 0, 0).is_err());
    }

    #[test]
    fn identical_features_are_degenerate() {
        let x = hand_example();
        let r = feature_hidenseek(&x, &x, FeatureScorer::Cooccur, &LfoConfig::default(), &DeterministicRng::new(0))
            .unwrap();
        assert_eq!(r.statistic, None);
    }

    #[test]
    fn lfo_shapes_and_negatives() {
        let mut rng = DeterministicRng::new(3);
        let x = crate::synth::block_binary_features(20, 8, 0.7, 0.05, &mut rng);
        let cfg = LfoConfig {
            hidden: 16,
            bottleneck: 4,
            epochs: 5,
            ..LfoConfig::default()
        };
        let (m, log) = train_lfo(&x, &cfg, &DeterministicRng::new(1)).unwrap();
        let nnz = x.as_slice().iter().filter(|&&v| v != 0.0).count();
        assert!(log.iter().all(|e| e.num_negatives == nnz));
        let r = m.reconstruct(&x).unwrap();
        assert_eq!((r.rows(), r.cols()), (20, 8));
        assert!(r.as_slice().iter().all(|&p| p > 0.0 && p < 1.0));
        assert!(train_lfo(&Matrix::zeros(3, 3), &cfg, &DeterministicRng::new(1)).is_err());
    }
}
