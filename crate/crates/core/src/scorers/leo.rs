//! Learnable edge scorer: an attention-weighted ensemble of
//!
//! * a GCN over the attacked graph with a bilinear edge head,
//! * a GCN over a kNN graph built from learned node embeddings, also with a
//!   bilinear head,
//! * feature proximity (cosine mapped to `[0, 1]`),
//!
//! trained self-supervised: attacked-graph edges are positives (only the top
//! `k%` by current score are kept each epoch) and an equal number of freshly
//! sampled non-edges are negatives.

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::rng::DeterministicRng;
use crate::scorers::knn::build_knn_graph;
use crate::scorers::sample_negatives;
use crate::stats::cosine;
use crate::tensor::nn::{bilinear_sigmoid, normalized_adjacency};
use crate::tensor::{bce_term, Adam, Gcn, GcnConfig, Matrix, Mlp, ParamId, ParamStore, Tape, Var};

pub const MODULE_NAMES: [&str; 3] = ["graph", "structure", "proximity"];

/// Which ensemble members are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModuleMask {
    pub graph: bool,
    pub structure: bool,
    pub proximity: bool,
}

impl ModuleMask {
    pub const ALL: ModuleMask = ModuleMask {
        graph: true,
        structure: true,
        proximity: true,
    };
    pub const GRAPH_ONLY: ModuleMask = ModuleMask {
        graph: true,
        structure: false,
        proximity: false,
    };

    fn as_array(self) -> [bool; 3] {
        [self.graph, self.structure, self.proximity]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeoConfig {
    pub hidden_dim: usize,
    pub layers: usize,
    /// Width of the hidden layer in each attention MLP.
    pub attention_hidden: usize,
    /// Width of the hidden layer of the structure module's embedding MLP.
    pub embed_hidden: usize,
    pub k_nn: usize,
    /// Epochs between kNN-graph rebuilds.
    pub knn_refresh: usize,
    /// Percentage of positives kept by adaptive filtering.
    pub keep_percent: f64,
    pub epochs: usize,
    pub lr: f64,
    pub lambda_sub: f64,
    pub dropout: f64,
    pub modules: ModuleMask,
}

impl Default for LeoConfig {
    fn default() -> Self {
        LeoConfig {
            hidden_dim: 64,
            layers: 2,
            attention_hidden: 16,
            embed_hidden: 64,
            k_nn: 20,
            knn_refresh: 20,
            keep_percent: 90.0,
            epochs: 200,
            lr: 0.01,
            lambda_sub: 1.0,
            dropout: 0.0,
            modules: ModuleMask::ALL,
        }
    }
}

impl LeoConfig {
    /// Vanilla GCN link scorer: graph module only, no sub-score loss.
    pub fn gcn_only(self) -> Self {
        LeoConfig {
            modules: ModuleMask::GRAPH_ONLY,
            lambda_sub: 0.0,
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.keep_percent > 0.0 && self.keep_percent <= 100.0) {
            return Err(Error::Config(format!("keep_percent {} outside (0, 100]", self.keep_percent)));
        }
        if self.modules.as_array().iter().all(|m| !m) {
            return Err(Error::Config("at least one scoring module must be enabled".into()));
        }
        if self.layers == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("layers and hidden_dim must be positive".into()));
        }
        Ok(())
    }

    /// `⌈k% · |T_p|⌉`.
    pub fn kept_positives(&self, num_positive: usize) -> usize {
        ((self.keep_percent / 100.0) * num_positive as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone)]
struct GraphModule {
    gcn: Gcn,
    bilinear: ParamId,
}

#[derive(Debug, Clone)]
struct StructureModule {
    embed: Mlp,
    gcn: Gcn,
    bilinear: ParamId,
}

#[derive(Debug, Clone)]
pub struct LeoModel {
    pub config: LeoConfig,
    pub params: ParamStore,
    graph_module: Option<GraphModule>,
    structure_module: Option<StructureModule>,
    projection: Option<ParamId>,
    attention: [Option<Mlp>; 3],
    knn_graph: Option<Graph>,
}

/// Per-pair outputs of [`LeoModel::score_detailed`]. Inactive modules have
/// empty vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LeoScores {
    pub score: Vec<f64>,
    pub sub_scores: [Vec<f64>; 3],
    pub attention: [Vec<f64>; 3],
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub total_loss: f64,
    pub module_losses: [f64; 3],
    pub ensemble_loss: f64,
    pub kept_positives: usize,
    pub num_positives: usize,
    pub num_negatives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub seed: u64,
}

struct Forward {
    score: Var,
    subs: Vec<(usize, Var)>,
    attention: Var,
}

struct Context {
    a_hat: Matrix,
    a_knn: Option<Matrix>,
    features: Matrix,
}

impl LeoModel {
    pub fn new(feature_dim: usize, config: LeoConfig, rng: &mut DeterministicRng) -> Result<Self> {
        config.validate()?;
        let h = config.hidden_dim;
        let gcfg = GcnConfig {
            layers: config.layers,
            hidden_dim: h,
            dropout: config.dropout,
            ..GcnConfig::default()
        };
        let mut params = ParamStore::new();
        let graph_module = if config.modules.graph {
            Some(GraphModule {
                gcn: Gcn::new(&mut params, "mg.gcn", feature_dim, h, gcfg, rng)?,
                bilinear: params.add_glorot("mg.bilinear", h, h, rng),
            })
        } else {
            None
        };
        let structure_module = if config.modules.structure {
            Some(StructureModule {
                embed: Mlp::new(&mut params, "ms.embed", [feature_dim, config.embed_hidden, h], rng),
                gcn: Gcn::new(&mut params, "ms.gcn", h, h, gcfg, rng)?,
                bilinear: params.add_glorot("ms.bilinear", h, h, rng),
            })
        } else {
            None
        };
        let projection = if config.modules.proximity {
            Some(params.add_glorot("mp.projection", feature_dim, h, rng))
        } else {
            None
        };
        let active = config.modules.as_array();
        let attention = std::array::from_fn(|m| {
            active[m].then(|| {
                Mlp::new(
                    &mut params,
                    &format!("att.{}", MODULE_NAMES[m]),
                    [2 * h, config.attention_hidden, 1],
                    rng,
                )
            })
        });
        Ok(LeoModel {
            config,
            params,
            graph_module,
            structure_module,
            projection,
            attention,
            knn_graph: None,
        })
    }

    pub fn knn_graph(&self) -> Option<&Graph> {
        self.knn_graph.as_ref()
    }

    fn structure_embedding(&self, features: &Matrix) -> Result<Option<Matrix>> {
        let Some(sm) = &self.structure_module else {
            return Ok(None);
        };
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let x = tape.constant(features.clone());
        let z = sm.embed.forward(&mut tape, &p, x)?;
        Ok(Some(tape.value(z).clone()))
    }

    fn refresh_knn(&mut self, g_hat: &Graph) -> Result<()> {
        if let Some(z) = self.structure_embedding(g_hat.features())? {
            let k = self.config.k_nn.min(g_hat.n().saturating_sub(1));
            self.knn_graph = Some(build_knn_graph(&z, k)?);
        }
        Ok(())
    }

    fn context(&self, g_hat: &Graph) -> Context {
        Context {
            a_hat: normalized_adjacency(g_hat),
            a_knn: self.knn_graph.as_ref().map(normalized_adjacency),
            features: g_hat.features().clone(),
        }
    }

    fn forward(
        &self,
        tape: &mut Tape,
        p: &[Var],
        ctx: &Context,
        us: &[usize],
        vs: &[usize],
        mut dropout_rng: Option<&mut DeterministicRng>,
    ) -> Result<Forward> {
        let x = tape.constant(ctx.features.clone());
        let mut subs = Vec::new();
        let mut logits = Vec::new();
        let mut push_attention = |tape: &mut Tape, m: usize, emb: Var| -> Result<()> {
            let mlp = self.attention[m].as_ref().expect("active module has attention");
            let eu = tape.gather_rows(emb, us)?;
            let ev = tape.gather_rows(emb, vs)?;
            let mean = tape.mean2(eu, ev)?;
            let max = tape.maximum(eu, ev)?;
            let input = tape.concat_cols(&[mean, max])?;
            logits.push(mlp.forward(tape, p, input)?);
            Ok(())
        };
        if let Some(gm) = &self.graph_module {
            let a = tape.constant(ctx.a_hat.clone());
            let h = gm.gcn.forward(tape, p, a, x, dropout_rng.as_deref_mut())?.output;
            let hu = tape.gather_rows(h, us)?;
            let hv = tape.gather_rows(h, vs)?;
            subs.push((0, bilinear_sigmoid(tape, hu, hv, p[gm.bilinear.0])?));
            push_attention(tape, 0, h)?;
        }
        if let Some(sm) = &self.structure_module {
            let a_knn = ctx
                .a_knn
                .as_ref()
                .ok_or_else(|| Error::Config("structure module used before its kNN graph was built".into()))?;
            let a = tape.constant(a_knn.clone());
            let z = sm.embed.forward(tape, p, x)?;
            let h = sm.gcn.forward(tape, p, a, z, dropout_rng.as_deref_mut())?.output;
            let hu = tape.gather_rows(h, us)?;
            let hv = tape.gather_rows(h, vs)?;
            subs.push((1, bilinear_sigmoid(tape, hu, hv, p[sm.bilinear.0])?));
            push_attention(tape, 1, h)?;
        }
        if let Some(proj) = self.projection {
            let prox: Vec<f64> = us
                .iter()
                .zip(vs)
                .map(|(&u, &v)| proximity(ctx.features.row(u), ctx.features.row(v)))
                .collect();
            subs.push((2, tape.constant(Matrix::column(prox))));
            let e = tape.matmul(x, p[proj.0])?;
            push_attention(tape, 2, e)?;
        }
        let logit_cols = tape.concat_cols(&logits)?;
        let attention = tape.softmax_rows(logit_cols);
        let sub_vars: Vec<Var> = subs.iter().map(|&(_, v)| v).collect();
        let sub_cols = tape.concat_cols(&sub_vars)?;
        let weighted = tape.mul(attention, sub_cols)?;
        let score = tape.sum_cols(weighted);
        Ok(Forward {
            score,
            subs,
            attention,
        })
    }

    /// Scores `pairs` in the context of `g_hat` with frozen parameters.
    pub fn score_detailed(&self, g_hat: &Graph, pairs: &[Edge]) -> Result<LeoScores> {
        let ctx = self.context(g_hat);
        let (us, vs): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        if let Some(bad) = pairs.iter().find(|&&(u, v)| u >= g_hat.n() || v >= g_hat.n()) {
            return Err(Error::Shape(format!("pair {bad:?} out of range")));
        }
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let fwd = self.forward(&mut tape, &p, &ctx, &us, &vs, None)?;
        let mut sub_scores: [Vec<f64>; 3] = Default::default();
        let mut attention: [Vec<f64>; 3] = Default::default();
        let att = tape.value(fwd.attention);
        for (col, &(m, v)) in fwd.subs.iter().enumerate() {
            sub_scores[m] = tape.value(v).as_slice().to_vec();
            attention[m] = (0..att.rows()).map(|i| att.get(i, col)).collect();
        }
        Ok(LeoScores {
            score: tape.value(fwd.score).as_slice().to_vec(),
            sub_scores,
            attention,
        })
    }

    pub fn score(&self, g_hat: &Graph, pairs: &[Edge]) -> Result<Vec<f64>> {
        Ok(self.score_detailed(g_hat, pairs)?.score)
    }
}

/// Cosine similarity mapped affinely to `[0, 1]`; zero vectors give 0.5.
pub fn proximity(a: &[f64], b: &[f64]) -> f64 {
    (cosine(a, b).unwrap_or(0.0) + 1.0) / 2.0
}

/// Indices of the `keep` highest-scoring positives (ties to the lower index).
fn top_positive_mask(scores: &[f64], keep: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut mask = vec![false; scores.len()];
    for &i in &order[..keep.min(scores.len())] {
        mask[i] = true;
    }
    mask
}

/// Trains a model on `g_hat` and returns it with its per-epoch log.
pub fn train_leo(g_hat: &Graph, cfg: &LeoConfig, rng: &DeterministicRng) -> Result<(LeoModel, TrainLog)> {
    if g_hat.num_edges() == 0 {
        return Err(Error::Degenerate("cannot train an edge scorer on a graph without edges".into()));
    }
    if !g_hat.has_features() {
        return Err(Error::Shape("edge scorer needs node features".into()));
    }
    if g_hat.num_non_edges() < g_hat.num_edges() {
        return Err(Error::Infeasible("too few non-edges for balanced negatives".into()));
    }
    let mut init_rng = rng.substream(10);
    let mut neg_rng = rng.substream(11);
    let mut drop_rng = rng.substream(12);
    let mut model = LeoModel::new(g_hat.feature_dim(), *cfg, &mut init_rng)?;
    let positives = g_hat.edges();
    let num_pos = positives.len();
    let keep = cfg.kept_positives(num_pos);
    let mut opt = Adam::new(cfg.lr);
    let mut log = TrainLog {
        epochs: Vec::with_capacity(cfg.epochs),
        seed: rng.seed(),
    };
    model.refresh_knn(g_hat)?;
    let mut ctx = model.context(g_hat);
    for epoch in 0..cfg.epochs {
        if epoch > 0 && cfg.knn_refresh > 0 && epoch % cfg.knn_refresh == 0 && cfg.modules.structure {
            model.refresh_knn(g_hat)?;
            ctx.a_knn = model.knn_graph.as_ref().map(normalized_adjacency);
        }
        let negatives = sample_negatives(g_hat, num_pos, &mut neg_rng)?;
        let pairs: Vec<Edge> = positives.iter().chain(&negatives).copied().collect();
        let (us, vs): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let targets: Vec<f64> = (0..pairs.len()).map(|i| if i < num_pos { 1.0 } else { 0.0 }).collect();

        let mut tape = Tape::new();
        let p = model.params.bind(&mut tape);
        let drop = (cfg.dropout > 0.0).then_some(&mut drop_rng);
        let fwd = model.forward(&mut tape, &p, &ctx, &us, &vs, drop)?;
        let scores = tape.value(fwd.score).as_slice().to_vec();
        let kept = top_positive_mask(&scores[..num_pos], keep);
        let weights: Vec<f64> = (0..pairs.len())
            .map(|i| if i >= num_pos || kept[i] { 1.0 } else { 0.0 })
            .collect();

        let ensemble = tape.bce(fwd.score, &targets, &weights)?;
        let mut total = ensemble;
        let mut module_losses = [0.0; 3];
        for &(m, v) in &fwd.subs {
            let l = tape.bce(v, &targets, &weights)?;
            module_losses[m] = tape.value(l).item();
            if cfg.lambda_sub > 0.0 && m != 2 {
                let scaled = tape.scale(l, cfg.lambda_sub);
                total = tape.add(total, scaled)?;
            }
        }
        // the proximity sub-score has no parameters; its loss is logged only
        let total_value = tape.value(total).item()
            + if cfg.modules.proximity { cfg.lambda_sub * module_losses[2] } else { 0.0 };
        if !total_value.is_finite() {
            return Err(Error::Numerical(format!("edge scorer loss is {total_value} at epoch {epoch}")));
        }
        let mut grads = tape.backward(total)?;
        let gs = model.params.collect_grads(&p, &mut grads);
        opt.step(&mut model.params, &gs)?;
        log.epochs.push(EpochLog {
            total_loss: total_value,
            module_losses,
            ensemble_loss: tape.value(ensemble).item(),
            kept_positives: kept.iter().filter(|&&k| k).count(),
            num_positives: num_pos,
            num_negatives: negatives.len(),
        });
    }
    Ok((model, log))
}

/// Mean clamped BCE of `scores` against `targets`.
pub fn mean_bce(scores: &[f64], targets: &[f64]) -> f64 {
    scores.iter().zip(targets).map(|(&p, &y)| bce_term(p, y)).sum::<f64>() / scores.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    fn small_graph() -> Graph {
        let n = 12;
        let mut edges = Vec::new();
        for i in 0..n {
            edges.push(crate::graph::canonical(i, (i + 1) % n));
        }
        edges.push((0, 6));
        let mut rng = DeterministicRng::new(2);
        let feats = Matrix::from_vec(n, 4, (0..n * 4).map(|_| rng.normal()).collect()).unwrap();
        Graph::from_edges(n, &edges).unwrap().with_features(feats).unwrap()
    }

    fn tiny_cfg() -> LeoConfig {
        LeoConfig {
            hidden_dim: 8,
            attention_hidden: 4,
            embed_hidden: 8,
            k_nn: 3,
            epochs: 5,
            ..LeoConfig::default()
        }
    }

    #[test]
    fn kept_positive_count() {
        let cfg = LeoConfig::default();
        assert_eq!(cfg.kept_positives(100), 90);
        assert_eq!(cfg.kept_positives(11), 10);
        assert_eq!(LeoConfig { keep_percent: 100.0, ..cfg }.kept_positives(7), 7);
    }

    #[test]
    fn proximity_of_identical_rows_is_one() {
        assert!((proximity(&[0.3, 2.0], &[0.3, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(proximity(&[1.0, 0.0], &[0.0, 1.0]), 0.5);
        assert_eq!(proximity(&[0.0, 0.0], &[0.0, 1.0]), 0.5);
    }

    #[test]
    fn scores_are_convex_combinations() {
        let g = small_graph();
        let (model, log) = train_leo(&g, &tiny_cfg(), &DeterministicRng::new(1)).unwrap();
        assert_eq!(log.epochs.len(), 5);
        let pairs: Vec<Edge> = (0..12).flat_map(|u| (u + 1..12).map(move |v| (u, v))).collect();
        let s = model.score_detailed(&g, &pairs).unwrap();
        for i in 0..pairs.len() {
            let w: f64 = (0..3).map(|m| s.attention[m][i]).sum();
            assert!((w - 1.0).abs() < 1e-9);
            let combo: f64 = (0..3).map(|m| s.attention[m][i] * s.sub_scores[m][i]).sum();
            assert!((combo - s.score[i]).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&s.score[i]));
        }
    }

    #[test]
    fn filtering_keeps_ceil_fraction() {
        let g = small_graph();
        for keep in [25.0, 50.0, 90.0, 100.0] {
            let cfg = LeoConfig {
                keep_percent: keep,
                ..tiny_cfg()
            };
            let (_, log) = train_leo(&g, &cfg, &DeterministicRng::new(1)).unwrap();
            for e in &log.epochs {
                assert_eq!(e.kept_positives, (keep / 100.0 * 13.0f64).ceil() as usize);
                assert_eq!(e.num_negatives, e.num_positives);
            }
        }
    }

    #[test]
    fn gcn_only_has_unit_attention() {
        let g = small_graph();
        let (model, _) = train_leo(&g, &tiny_cfg().gcn_only(), &DeterministicRng::new(1)).unwrap();
        let s = model.score_detailed(&g, &[(0, 1), (2, 9)]).unwrap();
        assert!(s.attention[0].iter().all(|&a| a == 1.0));
        assert_eq!(s.score, s.sub_scores[0]);
        assert!(s.sub_scores[1].is_empty());
    }

    #[test]
    fn training_is_reproducible() {
        let g = small_graph();
        let (m1, l1) = train_leo(&g, &tiny_cfg(), &DeterministicRng::new(8)).unwrap();
        let (m2, l2) = train_leo(&g, &tiny_cfg(), &DeterministicRng::new(8)).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(m1.params, m2.params);
    }

    #[test]
    fn edgeless_graph_rejected() {
        let g = Graph::empty(4).with_features(Matrix::identity(4)).unwrap();
        assert!(train_leo(&g, &tiny_cfg(), &DeterministicRng::new(0)).is_err());
    }
}
