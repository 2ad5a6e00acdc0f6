use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::DeterministicRng;
use crate::tensor::nn::{dense_adjacency, normalized_adjacency};
use crate::tensor::{Adam, Gcn, GcnConfig, Matrix, ParamStore, Tape, Var};

/// Train/validation/test node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Class-stratified split; each class contributes `round(frac · size)`
    /// nodes to train and to validation, the rest go to test.
    pub fn stratified(labels: &[usize], train_frac: f64, val_frac: f64, rng: &mut DeterministicRng) -> Result<Split> {
        if train_frac < 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0 {
            return Err(Error::Config(format!("bad split fractions {train_frac}/{val_frac}")));
        }
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut split = Split {
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        };
        for c in 0..classes {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
            rng.shuffle(&mut members);
            let ntr = (train_frac * members.len() as f64).round() as usize;
            let nva = ((val_frac * members.len() as f64).round() as usize).min(members.len() - ntr);
            split.train.extend_from_slice(&members[..ntr]);
            split.val.extend_from_slice(&members[ntr..ntr + nva]);
            split.test.extend_from_slice(&members[ntr + nva..]);
        }
        split.train.sort_unstable();
        split.val.sort_unstable();
        split.test.sort_unstable();
        Ok(split)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub gcn: GcnConfig,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gcn: GcnConfig::default(),
            lr: 0.01,
            weight_decay: 5e-4,
            max_epochs: 300,
            patience: 30,
        }
    }
}

/// Node classifier: a GCN with its trained parameters and the split it was
/// fitted on. Doubles as the attacker's surrogate.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    pub gcn: Gcn,
    pub params: ParamStore,
    pub split: Split,
    pub num_classes: usize,
    /// Test accuracy on the training graph, recorded at the best epoch.
    pub test_accuracy: f64,
}

impl SurrogateModel {
    /// Class logits with message passing over `g`.
    pub fn logits(&self, g: &Graph) -> Result<Matrix> {
        let mut tape = Tape::new();
        let p = self.params.bind_frozen(&mut tape);
        let a = tape.constant(normalized_adjacency(g));
        let x = tape.constant(g.features().clone());
        let out = self.gcn.forward(&mut tape, &p, a, x, None)?;
        Ok(tape.value(out.output).clone())
    }

    /// Logits for a dense (possibly relaxed) adjacency recorded on `tape`;
    /// parameters are frozen.
    pub fn logits_on_tape(&self, tape: &mut Tape, adjacency: Var, features: &Matrix) -> Result<Var> {
        let p = self.params.bind_frozen(tape);
        let a = tape.gcn_normalize(adjacency)?;
        let x = tape.constant(features.clone());
        Ok(self.gcn.forward(tape, &p, a, x, None)?.output)
    }

    pub fn predict(&self, g: &Graph) -> Result<Vec<usize>> {
        let logits = self.logits(g)?;
        Ok((0..logits.rows()).map(|i| argmax(logits.row(i))).collect())
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = j;
        }
    }
    best
}

fn accuracy_of(logits: &Matrix, labels: &[usize], idx: &[usize]) -> f64 {
    let correct = idx.iter().filter(|&&i| argmax(logits.row(i)) == labels[i]).count();
    correct as f64 / idx.len() as f64
}

/// Fraction of `test_idx` nodes whose arg-max prediction over `g_eval` is correct.
pub fn accuracy(model: &SurrogateModel, g_eval: &Graph, labels: &[usize], test_idx: &[usize]) -> Result<f64> {
    if test_idx.is_empty() {
        return Err(Error::EmptySample("empty test set".into()));
    }
    Ok(accuracy_of(&model.logits(g_eval)?, labels, test_idx))
}

/// Trains a GCN classifier on `g`, keeping the parameters of the epoch with
/// the best validation accuracy (stopping after `patience` epochs without
/// improvement).
pub fn train_clean_gcn(
    g: &Graph,
    labels: &[usize],
    split: &Split,
    cfg: &TrainConfig,
    rng: &mut DeterministicRng,
) -> Result<SurrogateModel> {
    if labels.len() != g.n() {
        return Err(Error::Shape("one label per node required".into()));
    }
    if split.train.is_empty() {
        return Err(Error::EmptySample("empty training set".into()));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
    let mut init_rng = rng.substream(0);
    let mut drop_rng = rng.substream(1);
    let mut params = ParamStore::new();
    let gcn = Gcn::new(&mut params, "gcn", g.feature_dim(), num_classes, cfg.gcn, &mut init_rng)?;
    let a_hat = normalized_adjacency(g);
    let train_labels: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    let eval_idx = if split.val.is_empty() { &split.train } else { &split.val };

    let mut opt = Adam::new(cfg.lr).with_weight_decay(cfg.weight_decay);
    let mut best = params.clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut since_best = 0;
    let eval = |params: &ParamStore| -> Result<Matrix> {
        let mut tape = Tape::new();
        let p = params.bind_frozen(&mut tape);
        let a = tape.constant(a_hat.clone());
        let x = tape.constant(g.features().clone());
        let out = gcn.forward(&mut tape, &p, a, x, None)?;
        Ok(tape.value(out.output).clone())
    };
    if cfg.max_epochs == 0 {
        best_val = accuracy_of(&eval(&params)?, labels, eval_idx);
    }
    for _ in 0..cfg.max_epochs {
        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let a = tape.constant(a_hat.clone());
        let x = tape.constant(g.features().clone());
        let out = gcn.forward(&mut tape, &p, a, x, Some(&mut drop_rng))?;
        let loss = tape.cross_entropy(out.output, &split.train, &train_labels)?;
        if !tape.value(loss).item().is_finite() {
            return Err(Error::Numerical("GCN training loss diverged".into()));
        }
        let mut grads = tape.backward(loss)?;
        let gs = params.collect_grads(&p, &mut grads);
        opt.step(&mut params, &gs)?;

        let val = accuracy_of(&eval(&params)?, labels, eval_idx);
        if val > best_val {
            best_val = val;
            best = params.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    let mut model = SurrogateModel {
        gcn,
        params: best,
        split: split.clone(),
        num_classes,
        test_accuracy: 0.0,
    };
    if !split.test.is_empty() {
        model.test_accuracy = accuracy(&model, g, labels, &split.test)?;
    }
    Ok(model)
}

/// Dense adjacency helper re-exported for relaxed-perturbation attacks.
pub fn adjacency_matrix(g: &Graph) -> Matrix {
    dense_adjacency(g)
}
