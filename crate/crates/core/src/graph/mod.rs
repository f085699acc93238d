//! Computational-graph models: validation, evaluation and reverse-mode gradients.

mod compose;
mod eval;
mod gradcheck;
mod model;
mod node;

pub use eval::{BackpropRule, EvalTrace};
pub(crate) use eval::relu_derivative;
pub use gradcheck::check_gradient;
pub use model::ModelGraph;
pub use node::{NodeSpec, Op, PiecewiseKind};
