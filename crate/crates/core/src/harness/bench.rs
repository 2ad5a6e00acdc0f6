use super::{train_clean_gcn, Split, SurrogateModel, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::DeterministicRng;
use crate::synth::{sbm, SbmConfig};

/// A labelled graph with its split and the clean-trained classifier.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub graph: Graph,
    pub labels: Vec<usize>,
    pub split: Split,
    pub model: SurrogateModel,
    pub seed: u64,
}

pub const DEFAULT_TRAIN_FRAC: f64 = 0.1;
pub const DEFAULT_VAL_FRAC: f64 = 0.1;

impl Benchmark {
    pub fn from_graph(graph: Graph, train: &TrainConfig, seed: u64) -> Result<Self> {
        Self::with_split(graph, train, DEFAULT_TRAIN_FRAC, DEFAULT_VAL_FRAC, seed)
    }

    pub fn with_split(graph: Graph, train: &TrainConfig, train_frac: f64, val_frac: f64, seed: u64) -> Result<Self> {
        let labels = graph
            .labels()
            .ok_or_else(|| Error::Shape("benchmark graph needs labels".into()))?
            .to_vec();
        let rng = DeterministicRng::new(seed);
        let split = Split::stratified(&labels, train_frac, val_frac, &mut rng.substream(1))?;
        let model = train_clean_gcn(&graph, &labels, &split, train, &mut rng.substream(2))?;
        Ok(Benchmark {
            graph,
            labels,
            split,
            model,
            seed,
        })
    }

    /// Seeded stochastic block model benchmark.
    pub fn sbm(cfg: &SbmConfig, train: &TrainConfig, seed: u64) -> Result<Self> {
        let graph = sbm(cfg, &mut DeterministicRng::new(seed).substream(0))?;
        Self::from_graph(graph, train, seed)
    }

    pub fn rng(&self) -> DeterministicRng {
        DeterministicRng::new(self.seed)
    }
}
