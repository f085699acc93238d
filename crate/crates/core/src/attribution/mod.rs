//! Attribution methods.
//!
//! Every method produces an [`AttributionResult`] whose completeness gap
//! `|sum(a) - (F(x) - F(x'))|` is recomputed here from two extra forward
//! evaluations rather than reported by the method itself.

mod adaptive;
mod baseline;
mod discrete;
mod gradients;
mod path;
mod riemann;
mod shapley;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ModelGraph;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub use adaptive::{adaptive_search, adaptive_steps, AdaptiveConfig, AdaptiveOutcome};
pub use baseline::{validate_baseline, BaselineVerdict};
pub use discrete::{discrete_gradient_backprop, DiscreteVariant};
pub use gradients::{grad_times_input, modified_backprop_attribution, vanilla_gradients, ModifiedRule};
pub use path::{integrated_gradients, path_integrated_gradients, PathSpec};
pub use riemann::{RiemannConfig, RiemannRule};
pub use shapley::{shapley_shubik, ShapleyMode, EXACT_SHAPLEY_MAX_FEATURES};

/// Reference input `x'` that attributions are measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum BaselineSpec<T> {
    Zeros,
    Constant(T),
    Explicit(Tensor<T>),
}

impl<T: Scalar> BaselineSpec<T> {
    /// Resolves to a tensor with the same shape as `input`.
    pub fn resolve(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            BaselineSpec::Zeros => Ok(Tensor::zeros(input.shape().to_vec())),
            BaselineSpec::Constant(v) => Tensor::filled(input.shape().to_vec(), *v),
            BaselineSpec::Explicit(t) => {
                if t.len() != input.len() {
                    return Err(Error::ShapeMismatch {
                        shape: input.shape().to_vec(),
                        expected: input.len(),
                        actual: t.len(),
                    });
                }
                t.reshaped(input.shape().to_vec())
            }
        }
    }

    /// Resolves against a flat input of the model's arity.
    pub fn resolve_for(&self, model: &ModelGraph<T>) -> Result<Tensor<T>> {
        self.resolve(&Tensor::zeros(vec![model.input_arity()]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", bound = "T: Scalar")]
pub enum MethodSpec<T> {
    Gradients,
    GradTimesInput,
    IntegratedGradients {
        config: RiemannConfig,
    },
    /// Integrated gradients with the step count chosen by [`adaptive_search`].
    AdaptiveIntegratedGradients {
        config: AdaptiveConfig,
    },
    PathMethod {
        path: PathSpec<T>,
        config: RiemannConfig,
    },
    ShapleyShubik {
        mode: ShapleyMode,
    },
    DiscreteGradient {
        variant: DiscreteVariant,
    },
    ModifiedBackprop {
        rule: ModifiedRule,
    },
}

impl<T: Scalar> MethodSpec<T> {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Gradients => "gradients".into(),
            MethodSpec::GradTimesInput => "grad_times_input".into(),
            MethodSpec::IntegratedGradients { config } => {
                format!("integrated_gradients(m={}, {:?})", config.steps(), config.rule())
            }
            MethodSpec::AdaptiveIntegratedGradients { config } => format!(
                "integrated_gradients(adaptive {}..{}, tol {})",
                config.m_min, config.m_max, config.tolerance_fraction
            ),
            MethodSpec::PathMethod { path, config } => {
                format!("path_method({}, m={})", path.label(), config.steps())
            }
            MethodSpec::ShapleyShubik { mode } => match mode {
                ShapleyMode::Exact => "shapley_shubik(exact)".into(),
                ShapleyMode::Sampled { num_orderings, seed } => {
                    format!("shapley_shubik(sampled {num_orderings}, seed {seed})")
                }
            },
            MethodSpec::DiscreteGradient { variant } => match variant {
                DiscreteVariant::DeepliftRescale => "deeplift_rescale".into(),
                DiscreteVariant::LrpZeroBaseline => "lrp_zero_baseline".into(),
            },
            MethodSpec::ModifiedBackprop { rule } => match rule {
                ModifiedRule::Deconvnet => "deconvnet".into(),
                ModifiedRule::Guided => "guided_backprop".into(),
            },
        }
    }

    /// Whether the method integrates gradients along a path (and so should
    /// satisfy completeness in the limit).
    pub fn is_path_method(&self) -> bool {
        matches!(
            self,
            MethodSpec::IntegratedGradients { .. }
                | MethodSpec::AdaptiveIntegratedGradients { .. }
                | MethodSpec::PathMethod { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AttributionResult<T> {
    pub values: Tensor<T>,
    pub method: MethodSpec<T>,
    pub output_at_input: T,
    pub output_at_baseline: T,
    pub completeness_gap: T,
    pub model_calls: u64,
}

impl<T: Scalar> AttributionResult<T> {
    /// Assembles a result, evaluating `F(x)` and `F(x')` to compute the gap.
    pub(crate) fn assemble(
        model: &ModelGraph<T>,
        input: &Tensor<T>,
        baseline: &Tensor<T>,
        values: Vec<T>,
        method: MethodSpec<T>,
        calls: u64,
    ) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} attributions", method.label())));
        }
        let values = Tensor::new(input.shape().to_vec(), values)?;
        let output_at_input = model.value(input)?;
        let output_at_baseline = model.value(baseline)?;
        let completeness_gap = (values.sum() - (output_at_input - output_at_baseline)).abs();
        Ok(Self {
            values,
            method,
            output_at_input,
            output_at_baseline,
            completeness_gap,
            model_calls: calls + 2,
        })
    }

    /// `F(x) - F(x')`.
    pub fn output_delta(&self) -> T {
        self.output_at_input - self.output_at_baseline
    }
}

/// Runs any method. Methods that fix their own baseline (LRP, deconvnet,
/// guided backprop) ignore `baseline`.
pub fn attribute<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
    method: &MethodSpec<T>,
) -> Result<AttributionResult<T>> {
    match method {
        MethodSpec::Gradients => vanilla_gradients(model, input, baseline),
        MethodSpec::GradTimesInput => grad_times_input(model, input, baseline),
        MethodSpec::IntegratedGradients { config } => {
            integrated_gradients(model, input, baseline, config)
        }
        MethodSpec::AdaptiveIntegratedGradients { config } => {
            adaptive_search(model, input, baseline, config).map(|o| o.result)
        }
        MethodSpec::PathMethod { path, config } => {
            path_integrated_gradients(model, input, baseline, path, config)
        }
        MethodSpec::ShapleyShubik { mode } => shapley_shubik(model, input, baseline, mode),
        MethodSpec::DiscreteGradient { variant } => {
            discrete_gradient_backprop(model, input, baseline, *variant)
        }
        MethodSpec::ModifiedBackprop { rule } => modified_backprop_attribution(model, input, *rule),
    }
}

pub(crate) fn check_shapes<T: Scalar>(model: &ModelGraph<T>, input: &Tensor<T>) -> Result<()> {
    if input.len() != model.input_arity() {
        return Err(Error::ArityMismatch {
            expected: model.input_arity(),
            actual: input.len(),
        });
    }
    Ok(())
}

/// Rejects reachable nodes whose op is outside `allowed`.
pub(crate) fn require_ops<T: Scalar>(
    model: &ModelGraph<T>,
    method: &str,
    allowed: &[&str],
) -> Result<()> {
    match model.reachable_nodes().find(|n| !allowed.contains(&n.op.name())) {
        Some(node) => Err(Error::UnsupportedOp {
            method: method.to_string(),
            op: node.op.name().to_string(),
            node: node.id.clone(),
        }),
        None => Ok(()),
    }
}
