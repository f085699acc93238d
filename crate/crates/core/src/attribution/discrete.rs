use serde::{Deserialize, Serialize};

use crate::attribution::{check_shapes, require_ops, AttributionResult, BaselineSpec, MethodSpec};
use crate::error::Result;
use crate::graph::ModelGraph;
use crate::graph::Op;
use crate::scalar::{sigmoid, Scalar};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteVariant {
    DeepliftRescale,
    /// The rescale engine with the baseline forced to zeros.
    LrpZeroBaseline,
}

/// Below this input difference a nonlinearity's multiplier falls back to
/// its derivative at the input.
pub const RESCALE_EPSILON: f64 = 1e-9;

const RESCALE_OPS: &[&str] = &[
    "input", "constant", "dense", "relu", "sigmoid", "tanh", "add", "subtract", "scale",
    "sum_reduce",
];

/// Discrete-gradient attribution with the rescale rule.
///
/// Every nonlinearity gets the multiplier `(y(x) - y(x')) / (u(x) - u(x'))`
/// for its input `u` and output `y`; linear nodes keep their exact
/// Jacobian. Multipliers compose by the chain rule with fan-out summation
/// and the result is scaled by `x_i - x'_i`.
pub fn discrete_gradient_backprop<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
    variant: DiscreteVariant,
) -> Result<AttributionResult<T>> {
    check_shapes(model, input)?;
    let method = MethodSpec::DiscreteGradient { variant };
    require_ops(model, &method.label(), RESCALE_OPS)?;
    let baseline = match variant {
        DiscreteVariant::DeepliftRescale => baseline.resolve(input)?,
        DiscreteVariant::LrpZeroBaseline => Tensor::zeros(input.shape().to_vec()),
    };
    let (_, at_input) = model.forward(input)?;
    let (_, at_baseline) = model.forward(&baseline)?;
    let epsilon = T::lit(RESCALE_EPSILON);

    let multipliers = model.backpropagate(&at_input, |node, k, upstream| {
        let arg = model.edges(node)[0];
        let u_x = at_input.node_value(arg)[k];
        let u_b = at_baseline.node_value(arg)[k];
        let du = u_x - u_b;
        let slope = if du.abs() >= epsilon {
            (at_input.node_value(node)[k] - at_baseline.node_value(node)[k]) / du
        } else {
            match model.nodes()[node].op {
                Op::Relu => crate::graph::relu_derivative(u_x),
                Op::Sigmoid => {
                    let s = sigmoid(u_x);
                    s * (T::one() - s)
                }
                Op::Tanh => T::one() - u_x.tanh().powi(2),
                _ => unreachable!("unary callback only runs for relu/sigmoid/tanh"),
            }
        };
        slope * upstream
    });

    let values = multipliers
        .iter()
        .zip(input.values().iter().zip(baseline.values()))
        .map(|(m, (x, b))| *m * (*x - *b))
        .collect();
    AttributionResult::assemble(model, input, &baseline, values, method, 2)
}
