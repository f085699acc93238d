use serde::{Deserialize, Serialize};

use crate::attribution::{check_shapes, require_ops, AttributionResult, BaselineSpec, MethodSpec};
use crate::error::Result;
use crate::graph::{BackpropRule, ModelGraph};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifiedRule {
    Deconvnet,
    Guided,
}

impl From<ModifiedRule> for BackpropRule {
    fn from(rule: ModifiedRule) -> Self {
        match rule {
            ModifiedRule::Deconvnet => BackpropRule::Deconvnet,
            ModifiedRule::Guided => BackpropRule::Guided,
        }
    }
}

/// Ops the modified-backprop rules are defined for.
const MODIFIED_BACKPROP_OPS: &[&str] = &[
    "input", "constant", "dense", "relu", "add", "subtract", "scale", "sum_reduce",
];

/// Raw gradient `dF/dx_i` as the attribution. The baseline only enters the
/// reported completeness gap.
pub fn vanilla_gradients<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
) -> Result<AttributionResult<T>> {
    check_shapes(model, input)?;
    let baseline = baseline.resolve(input)?;
    let grad = model.gradient(input, BackpropRule::Standard)?;
    AttributionResult::assemble(model, input, &baseline, grad.into_values(), MethodSpec::Gradients, 1)
}

/// `dF/dx_i * (x_i - x'_i)`.
pub fn grad_times_input<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
) -> Result<AttributionResult<T>> {
    check_shapes(model, input)?;
    let baseline = baseline.resolve(input)?;
    let grad = model.gradient(input, BackpropRule::Standard)?;
    let values = grad
        .values()
        .iter()
        .zip(input.values().iter().zip(baseline.values()))
        .map(|(g, (x, b))| *g * (*x - *b))
        .collect();
    AttributionResult::assemble(model, input, &baseline, values, MethodSpec::GradTimesInput, 1)
}

/// Deconvnet or guided-backprop signal at each feature times the feature
/// value. The gap is measured against the all-zeros baseline.
pub fn modified_backprop_attribution<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    rule: ModifiedRule,
) -> Result<AttributionResult<T>> {
    check_shapes(model, input)?;
    let method = MethodSpec::ModifiedBackprop { rule };
    require_ops(model, &method.label(), MODIFIED_BACKPROP_OPS)?;
    let signal = model.gradient(input, rule.into())?;
    let values = signal
        .values()
        .iter()
        .zip(input.values())
        .map(|(s, x)| *s * *x)
        .collect();
    let zeros = Tensor::zeros(input.shape().to_vec());
    AttributionResult::assemble(model, input, &zeros, values, method, 1)
}
