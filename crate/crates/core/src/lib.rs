//! Feature attribution over small computational graphs.
//!
//! The crate evaluates networks described as DAGs of typed ops, computes
//! exact reverse-mode gradients (plus the deconvnet and guided-backprop
//! variants), and attributes a prediction to its input features with
//! integrated gradients, general path methods, Shapley-Shubik values,
//! rescale-rule discrete gradients and modified backprop. The `axioms`
//! module audits any method against completeness, sensitivity,
//! implementation invariance, linearity and symmetry.
//!
//! Engine and attribution types are generic over [`Scalar`] (`f32`/`f64`);
//! the aliases below fix the scalar to `f64`, which the model format,
//! the audits and the renderer use.

pub mod attribution;
pub mod axioms;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod render;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use graph::{check_gradient, BackpropRule, EvalTrace, ModelGraph, NodeSpec, Op, PiecewiseKind};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type Model64 = ModelGraph<f64>;
pub type Model32 = ModelGraph<f32>;
pub type AttributionResult64 = attribution::AttributionResult<f64>;
pub type MethodSpec64 = attribution::MethodSpec<f64>;
pub type BaselineSpec64 = attribution::BaselineSpec<f64>;
pub type PathSpec64 = attribution::PathSpec<f64>;
