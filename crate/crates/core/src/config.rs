//! `key = value` run configuration. Precedence: built-in defaults, then a
//! config file, then command-line overrides. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use crate::attacks::{AttackMethod, PgdConfig, DEFAULT_CANDIDATE_MULTIPLIER};
use crate::error::{Error, Result};
use crate::features::LfoConfig;
use crate::harness::{TrainConfig, DEFAULT_TRAIN_FRAC, DEFAULT_VAL_FRAC};
use crate::measures::{MeasureKind, DEFAULT_D_MIN};
use crate::noticeability::{HideNSeekConfig, MeasureHandle, DEFAULT_AUROC_THRESHOLD};
use crate::scorers::{LeoConfig, ScorerSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub attack_method: AttackMethod,
    pub gamma: f64,
    pub candidate_multiplier: usize,
    pub probe_gamma: f64,
    pub measure: MeasureKind,
    pub threshold: f64,
    pub retrain_every: usize,
    pub d_min: usize,
    pub scorer: String,
    pub svd_rank: usize,
    pub leo: LeoConfig,
    pub lfo: LfoConfig,
    pub pgd: PgdConfig,
    pub train: TrainConfig,
    pub train_frac: f64,
    pub val_frac: f64,
    /// Edges removed by `filter`; `None` means the attack budget Δ.
    pub filter_count: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            attack_method: AttackMethod::Pgd,
            gamma: 0.1,
            candidate_multiplier: DEFAULT_CANDIDATE_MULTIPLIER,
            probe_gamma: 0.02,
            measure: MeasureKind::DegreeKs,
            threshold: DEFAULT_AUROC_THRESHOLD,
            retrain_every: 1,
            d_min: DEFAULT_D_MIN,
            scorer: "leo".into(),
            svd_rank: 16,
            leo: LeoConfig::default(),
            lfo: LfoConfig::default(),
            pgd: PgdConfig::default(),
            train: TrainConfig::default(),
            train_frac: DEFAULT_TRAIN_FRAC,
            val_frac: DEFAULT_VAL_FRAC,
            filter_count: None,
            out: PathBuf::from("."),
        }
    }
}

/// Every accepted key, in the order `dump` writes them.
pub const KEYS: &[&str] = &[
    "seed",
    "attack.method",
    "attack.gamma",
    "attack.candidate_multiplier",
    "probe.gamma",
    "measure.name",
    "measure.threshold",
    "measure.retrain_every",
    "measure.d_min",
    "scorer.name",
    "scorer.svd_rank",
    "leo.hidden_dim",
    "leo.layers",
    "leo.attention_hidden",
    "leo.embed_hidden",
    "leo.k_nn",
    "leo.knn_refresh",
    "leo.keep_percent",
    "leo.epochs",
    "leo.lr",
    "leo.lambda_sub",
    "leo.dropout",
    "lfo.hidden",
    "lfo.bottleneck",
    "lfo.epochs",
    "lfo.lr",
    "lfo.keep_percent",
    "lfo.negative_multiplier",
    "lfo.input_dropout",
    "pgd.steps",
    "pgd.lr",
    "gcn.hidden_dim",
    "gcn.layers",
    "gcn.dropout",
    "gcn.lr",
    "gcn.weight_decay",
    "gcn.max_epochs",
    "gcn.patience",
    "split.train",
    "split.val",
    "filter.count",
    "out",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("`{value}` is not a valid value for `{key}`")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = num(key, v)?,
            "attack.method" => self.attack_method = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "attack.gamma" => self.gamma = num(key, v)?,
            "attack.candidate_multiplier" => self.candidate_multiplier = num(key, v)?,
            "probe.gamma" => self.probe_gamma = num(key, v)?,
            "measure.name" => self.measure = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "measure.threshold" => self.threshold = num(key, v)?,
            "measure.retrain_every" => self.retrain_every = num(key, v)?,
            "measure.d_min" => self.d_min = num(key, v)?,
            "scorer.name" => {
                ScorerSpec::parse(v, self.leo, self.svd_rank)?;
                self.scorer = v.to_string();
            }
            "scorer.svd_rank" => self.svd_rank = num(key, v)?,
            "leo.hidden_dim" => self.leo.hidden_dim = num(key, v)?,
            "leo.layers" => self.leo.layers = num(key, v)?,
            "leo.attention_hidden" => self.leo.attention_hidden = num(key, v)?,
            "leo.embed_hidden" => self.leo.embed_hidden = num(key, v)?,
            "leo.k_nn" => self.leo.k_nn = num(key, v)?,
            "leo.knn_refresh" => self.leo.knn_refresh = num(key, v)?,
            "leo.keep_percent" => self.leo.keep_percent = num(key, v)?,
            "leo.epochs" => self.leo.epochs = num(key, v)?,
            "leo.lr" => self.leo.lr = num(key, v)?,
            "leo.lambda_sub" => self.leo.lambda_sub = num(key, v)?,
            "leo.dropout" => self.leo.dropout = num(key, v)?,
            "lfo.hidden" => self.lfo.hidden = num(key, v)?,
            "lfo.bottleneck" => self.lfo.bottleneck = num(key, v)?,
            "lfo.epochs" => self.lfo.epochs = num(key, v)?,
            "lfo.lr" => self.lfo.lr = num(key, v)?,
            "lfo.keep_percent" => self.lfo.keep_percent = num(key, v)?,
            "lfo.negative_multiplier" => self.lfo.negative_multiplier = num(key, v)?,
            "lfo.input_dropout" => self.lfo.input_dropout = num(key, v)?,
            "pgd.steps" => self.pgd.steps = num(key, v)?,
            "pgd.lr" => self.pgd.lr = num(key, v)?,
            "gcn.hidden_dim" => self.train.gcn.hidden_dim = num(key, v)?,
            "gcn.layers" => self.train.gcn.layers = num(key, v)?,
            "gcn.dropout" => self.train.gcn.dropout = num(key, v)?,
            "gcn.lr" => self.train.lr = num(key, v)?,
            "gcn.weight_decay" => self.train.weight_decay = num(key, v)?,
            "gcn.max_epochs" => self.train.max_epochs = num(key, v)?,
            "gcn.patience" => self.train.patience = num(key, v)?,
            "split.train" => self.train_frac = num(key, v)?,
            "split.val" => self.val_frac = num(key, v)?,
            "filter.count" => self.filter_count = if v == "delta" { None } else { Some(num(key, v)?) },
            "out" => self.out = PathBuf::from(v),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<String> {
        Ok(match key {
            "seed" => self.seed.to_string(),
            "attack.method" => self.attack_method.name().into(),
            "attack.gamma" => self.gamma.to_string(),
            "attack.candidate_multiplier" => self.candidate_multiplier.to_string(),
            "probe.gamma" => self.probe_gamma.to_string(),
            "measure.name" => self.measure.name().into(),
            "measure.threshold" => self.threshold.to_string(),
            "measure.retrain_every" => self.retrain_every.to_string(),
            "measure.d_min" => self.d_min.to_string(),
            "scorer.name" => self.scorer.clone(),
            "scorer.svd_rank" => self.svd_rank.to_string(),
            "leo.hidden_dim" => self.leo.hidden_dim.to_string(),
            "leo.layers" => self.leo.layers.to_string(),
            "leo.attention_hidden" => self.leo.attention_hidden.to_string(),
            "leo.embed_hidden" => self.leo.embed_hidden.to_string(),
            "leo.k_nn" => self.leo.k_nn.to_string(),
            "leo.knn_refresh" => self.leo.knn_refresh.to_string(),
            "leo.keep_percent" => self.leo.keep_percent.to_string(),
            "leo.epochs" => self.leo.epochs.to_string(),
            "leo.lr" => self.leo.lr.to_string(),
            "leo.lambda_sub" => self.leo.lambda_sub.to_string(),
            "leo.dropout" => self.leo.dropout.to_string(),
            "lfo.hidden" => self.lfo.hidden.to_string(),
            "lfo.bottleneck" => self.lfo.bottleneck.to_string(),
            "lfo.epochs" => self.lfo.epochs.to_string(),
            "lfo.lr" => self.lfo.lr.to_string(),
            "lfo.keep_percent" => self.lfo.keep_percent.to_string(),
            "lfo.negative_multiplier" => self.lfo.negative_multiplier.to_string(),
            "lfo.input_dropout" => self.lfo.input_dropout.to_string(),
            "pgd.steps" => self.pgd.steps.to_string(),
            "pgd.lr" => self.pgd.lr.to_string(),
            "gcn.hidden_dim" => self.train.gcn.hidden_dim.to_string(),
            "gcn.layers" => self.train.gcn.layers.to_string(),
            "gcn.dropout" => self.train.gcn.dropout.to_string(),
            "gcn.lr" => self.train.lr.to_string(),
            "gcn.weight_decay" => self.train.weight_decay.to_string(),
            "gcn.max_epochs" => self.train.max_epochs.to_string(),
            "gcn.patience" => self.train.patience.to_string(),
            "split.train" => self.train_frac.to_string(),
            "split.val" => self.val_frac.to_string(),
            "filter.count" => self.filter_count.map_or_else(|| "delta".into(), |c| c.to_string()),
            "out" => self.out.display().to_string(),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        })
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str, path: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{path}:{}: expected `key = value`", i + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("{path}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        self.apply_str(&text, &path.display().to_string())
    }

    /// Every key with its current value, one `key = value` per line.
    pub fn dump(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    /// FNV-1a 64 of [`RunConfig::dump`] without the `out` line, as 16 hex
    /// digits. Runs that differ only in where they write share a digest.
    pub fn digest(&self) -> String {
        let text: String = self.dump().lines().filter(|l| !l.starts_with("out =")).map(|l| format!("{l}\n")).collect();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn scorer_spec(&self) -> Result<ScorerSpec> {
        ScorerSpec::parse(&self.scorer, self.leo, self.svd_rank)
    }

    pub fn measure_handle(&self) -> Result<MeasureHandle> {
        Ok(MeasureHandle {
            kind: self.measure,
            hidenseek: HideNSeekConfig {
                scorer: self.scorer_spec()?,
                threshold: self.threshold,
                retrain_every: self.retrain_every,
            },
            d_min: self.d_min,
        })
    }
}
