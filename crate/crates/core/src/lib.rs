//! Graph adversarial attacks and the measures used to notice them.
//!
//! The crate bundles topological attack generators (random insertion, DICE,
//! PGD, Structack and the greedy adaptive reordering), the classical
//! statistical noticeability tests, a learnable edge scorer whose AUROC over
//! the union of original and attacked edges serves as a noticeability
//! measure, a feature-domain counterpart, and the evaluation harness that
//! ties them together.

pub mod attacks;
pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod graph;
pub mod harness;
pub mod io;
pub mod measures;
pub mod noticeability;
pub mod rng;
pub mod scorers;
pub mod stats;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use graph::{AttackPair, EdgeSets, Graph};
pub use rng::DeterministicRng;
