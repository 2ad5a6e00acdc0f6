//! Dense matrices, a reverse-mode tape over them, and the neural layers
//! built on top.

pub mod checkpoint;
mod matrix;
pub mod nn;
mod tape;

pub use matrix::Matrix;
pub use nn::{Adam, Gcn, GcnConfig, GcnOutput, Mlp, ParamId, ParamStore};
pub use tape::{bce_term, Gradients, Tape, Var, BCE_EPS};
