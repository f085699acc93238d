use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::model::ModelGraph;
use crate::graph::node::{Op, PiecewiseKind};
use crate::scalar::{sigmoid, Scalar};
use crate::tensor::Tensor;

/// How the backward pass treats ReLU nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackpropRule {
    /// Exact derivative (zero at the kink).
    Standard,
    /// Pass the incoming signal iff it is positive, ignoring the forward activation.
    Deconvnet,
    /// Pass the incoming signal iff it is positive and the pre-activation is positive.
    Guided,
}

/// Forward values of every node for one input, indexed like `ModelGraph::nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalTrace<T> {
    values: Vec<Vec<T>>,
    output: T,
}

impl<T: Scalar> EvalTrace<T> {
    pub fn output(&self) -> T {
        self.output
    }

    pub fn node_value(&self, node: usize) -> &[T] {
        &self.values[node]
    }

    pub fn value_of(&self, model: &ModelGraph<T>, id: &str) -> Option<&[T]> {
        model.node_index(id).map(|i| self.values[i].as_slice())
    }
}

impl<T: Scalar> ModelGraph<T> {
    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        if input.len() != self.input_arity() {
            return Err(Error::ArityMismatch {
                expected: self.input_arity(),
                actual: input.len(),
            });
        }
        if let Some(index) = input.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(())
    }

    /// Evaluates the model, returning `F(input)` and every node's value.
    pub fn forward(&self, input: &Tensor<T>) -> Result<(T, EvalTrace<T>)> {
        self.check_input(input)?;
        let x = input.values();
        let mut values: Vec<Vec<T>> = vec![Vec::new(); self.nodes().len()];
        for &n in self.order() {
            let args = self.edges(n);
            let arg = |k: usize| values[args[k]].as_slice();
            let out = match &self.nodes()[n].op {
                Op::Input { start, len } => x[*start..*start + *len].to_vec(),
                Op::Constant { value } => value.clone(),
                Op::Dense {
                    rows,
                    cols,
                    weights,
                    bias,
                } => {
                    let v = arg(0);
                    (0..*rows)
                        .map(|r| {
                            let row = &weights[r * cols..(r + 1) * cols];
                            let mut acc = bias[r];
                            for (w, xi) in row.iter().zip(v) {
                                acc += *w * *xi;
                            }
                            acc
                        })
                        .collect()
                }
                Op::Relu => arg(0).iter().map(|&v| v.max(T::zero())).collect(),
                Op::Sigmoid => arg(0).iter().map(|&v| sigmoid(v)).collect(),
                Op::Tanh => arg(0).iter().map(|&v| v.tanh()).collect(),
                Op::Add => zip_with(arg(0), arg(1), |a, b| a + b),
                Op::Subtract => zip_with(arg(0), arg(1), |a, b| a - b),
                Op::Multiply => zip_with(arg(0), arg(1), |a, b| a * b),
                Op::Min => zip_with(arg(0), arg(1), |a, b| if a <= b { a } else { b }),
                Op::Max => zip_with(arg(0), arg(1), |a, b| if a >= b { a } else { b }),
                Op::Scale(s) => arg(0).iter().map(|&v| v * *s).collect(),
                Op::SumReduce => vec![arg(0).iter().copied().sum()],
                Op::Piecewise(kind) => vec![piecewise_value(kind, arg(0))],
            };
            values[n] = out;
        }
        let output = values[self.output_index()][0];
        if !output.is_finite() {
            return Err(Error::NonFinite(format!(
                "model output at node '{}'",
                self.output()
            )));
        }
        Ok((output, EvalTrace { values, output }))
    }

    /// `F(input)` without keeping the trace.
    pub fn value(&self, input: &Tensor<T>) -> Result<T> {
        self.forward(input).map(|(v, _)| v)
    }

    /// Gradient of the output with respect to each input feature.
    pub fn gradient(&self, input: &Tensor<T>, rule: BackpropRule) -> Result<Tensor<T>> {
        let (_, trace) = self.forward(input)?;
        let grad = self.gradient_from_trace(&trace, rule);
        finite_tensor(input.shape().to_vec(), grad)
    }

    /// Output value and gradient from a single forward pass.
    pub fn value_and_gradient(
        &self,
        input: &Tensor<T>,
        rule: BackpropRule,
    ) -> Result<(T, Tensor<T>)> {
        let (value, trace) = self.forward(input)?;
        let grad = self.gradient_from_trace(&trace, rule);
        Ok((value, finite_tensor(input.shape().to_vec(), grad)?))
    }

    pub fn gradient_from_trace(&self, trace: &EvalTrace<T>, rule: BackpropRule) -> Vec<T> {
        self.backpropagate(trace, |node, k, upstream| {
            let pre = trace.node_value(self.edges(node)[0])[k];
            let post = trace.node_value(node)[k];
            match (&self.nodes()[node].op, rule) {
                (Op::Relu, BackpropRule::Standard) => relu_derivative(pre) * upstream,
                (Op::Relu, BackpropRule::Deconvnet) => upstream.max(T::zero()),
                (Op::Relu, BackpropRule::Guided) => {
                    if pre > T::zero() && upstream > T::zero() {
                        upstream
                    } else {
                        T::zero()
                    }
                }
                (Op::Sigmoid, _) => post * (T::one() - post) * upstream,
                (Op::Tanh, _) => (T::one() - post * post) * upstream,
                _ => unreachable!("unary callback only runs for relu/sigmoid/tanh"),
            }
        })
    }

    /// Reverse-mode accumulation from the output back to the input features.
    ///
    /// Linear and piecewise ops use their exact local derivatives at `trace`;
    /// the elementwise nonlinearities (relu, sigmoid, tanh) delegate to `unary`,
    /// which maps `(node, element, upstream adjoint)` to the adjoint of the
    /// node's input element.
    pub(crate) fn backpropagate(
        &self,
        trace: &EvalTrace<T>,
        mut unary: impl FnMut(usize, usize, T) -> T,
    ) -> Vec<T> {
        let mut adjoints: Vec<Vec<T>> = (0..self.nodes().len())
            .map(|n| vec![T::zero(); self.width(n)])
            .collect();
        adjoints[self.output_index()][0] = T::one();
        let mut grad = vec![T::zero(); self.input_arity()];

        for &n in self.order().iter().rev() {
            let upstream = std::mem::take(&mut adjoints[n]);
            if upstream.iter().all(|u| u.is_zero()) {
                continue;
            }
            let args = self.edges(n);
            match &self.nodes()[n].op {
                Op::Input { start, .. } => {
                    for (k, u) in upstream.iter().enumerate() {
                        grad[start + k] += *u;
                    }
                }
                Op::Constant { .. } => {}
                Op::Dense { rows, cols, weights, .. } => {
                    let target = &mut adjoints[args[0]];
                    for r in 0..*rows {
                        let u = upstream[r];
                        for c in 0..*cols {
                            target[c] += weights[r * cols + c] * u;
                        }
                    }
                }
                Op::Relu | Op::Sigmoid | Op::Tanh => {
                    let contributions: Vec<T> = upstream
                        .iter()
                        .enumerate()
                        .map(|(k, &u)| unary(n, k, u))
                        .collect();
                    for (t, c) in adjoints[args[0]].iter_mut().zip(contributions) {
                        *t += c;
                    }
                }
                Op::Scale(s) => {
                    for (t, u) in adjoints[args[0]].iter_mut().zip(&upstream) {
                        *t += *u * *s;
                    }
                }
                Op::Add | Op::Subtract => {
                    let sign = if matches!(self.nodes()[n].op, Op::Add) {
                        T::one()
                    } else {
                        -T::one()
                    };
                    for (t, u) in adjoints[args[0]].iter_mut().zip(&upstream) {
                        *t += *u;
                    }
                    for (t, u) in adjoints[args[1]].iter_mut().zip(&upstream) {
                        *t += *u * sign;
                    }
                }
                Op::Multiply => {
                    let (a, b) = (trace.node_value(args[0]), trace.node_value(args[1]));
                    for k in 0..upstream.len() {
                        adjoints[args[0]][k] += upstream[k] * b[k];
                        adjoints[args[1]][k] += upstream[k] * a[k];
                    }
                }
                Op::Min | Op::Max => {
                    let is_min = matches!(self.nodes()[n].op, Op::Min);
                    let (a, b) = (trace.node_value(args[0]), trace.node_value(args[1]));
                    for k in 0..upstream.len() {
                        // ties go to the first operand
                        let first = if is_min { a[k] <= b[k] } else { a[k] >= b[k] };
                        let target = if first { args[0] } else { args[1] };
                        adjoints[target][k] += upstream[k];
                    }
                }
                Op::SumReduce => {
                    for t in adjoints[args[0]].iter_mut() {
                        *t += upstream[0];
                    }
                }
                Op::Piecewise(kind) => {
                    for (idx, d) in piecewise_gradient(kind, trace.node_value(args[0])) {
                        adjoints[args[0]][idx] += d * upstream[0];
                    }
                }
            }
        }
        grad
    }

    /// Smallest distance of any kink-defining quantity from its kink, over
    /// nodes the output depends on: relu pre-activations from zero, min/max
    /// operands from each other, symmetry-cex coordinates from `a`/`b`.
    pub fn kink_margin(&self, trace: &EvalTrace<T>) -> T {
        let reachable = self.reachable();
        let mut margin = T::infinity();
        for (n, node) in self.nodes().iter().enumerate() {
            if !reachable[n] {
                continue;
            }
            let args = self.edges(n);
            match &node.op {
                Op::Relu => {
                    for v in trace.node_value(args[0]) {
                        margin = margin.min(v.abs());
                    }
                }
                Op::Min | Op::Max => {
                    let (a, b) = (trace.node_value(args[0]), trace.node_value(args[1]));
                    for (x, y) in a.iter().zip(b) {
                        margin = margin.min((*x - *y).abs());
                    }
                }
                Op::Piecewise(PiecewiseKind::SymmetryCex { a, b, i, j }) => {
                    let v = trace.node_value(args[0]);
                    for idx in [*i, *j] {
                        margin = margin.min((v[idx] - *a).abs()).min((v[idx] - *b).abs());
                    }
                }
                _ => {}
            }
        }
        margin
    }
}

pub(crate) fn relu_derivative<T: Scalar>(pre: T) -> T {
    if pre > T::zero() {
        T::one()
    } else {
        T::zero()
    }
}

fn zip_with<T: Scalar>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn clamp<T: Scalar>(v: T, lo: T, hi: T) -> T {
    v.max(lo).min(hi)
}

fn piecewise_value<T: Scalar>(kind: &PiecewiseKind<T>, x: &[T]) -> T {
    match kind {
        PiecewiseKind::SymmetryCex { a, b, i, j } => {
            (clamp(x[*i], *a, *b) - *a) * (clamp(x[*j], *a, *b) - *a)
        }
    }
}

/// Nonzero partial derivatives as `(feature, value)` pairs. A coordinate
/// sitting exactly on `a` or `b` is treated as being in the flat region.
fn piecewise_gradient<T: Scalar>(kind: &PiecewiseKind<T>, x: &[T]) -> Vec<(usize, T)> {
    match kind {
        PiecewiseKind::SymmetryCex { a, b, i, j } => {
            let inside = |v: T| v > *a && v < *b;
            let mut out = Vec::with_capacity(2);
            if inside(x[*i]) {
                out.push((*i, clamp(x[*j], *a, *b) - *a));
            }
            if inside(x[*j]) {
                out.push((*j, clamp(x[*i], *a, *b) - *a));
            }
            out
        }
    }
}

fn finite_tensor<T: Scalar>(shape: Vec<usize>, values: Vec<T>) -> Result<Tensor<T>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok(Tensor::from_parts_unchecked(shape, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node::NodeSpec;

    fn one_relu() -> ModelGraph<f64> {
        // 1 - relu(1 - x)
        ModelGraph::new(
            vec![
                NodeSpec::new("x", Op::Input { start: 0, len: 1 }, &[]),
                NodeSpec::new("flip", Op::dense(vec![vec![-1.0]], vec![1.0]), &["x"]),
                NodeSpec::new("r", Op::Relu, &["flip"]),
                NodeSpec::new("out", Op::dense(vec![vec![-1.0]], vec![1.0]), &["r"]),
            ],
            "out",
            1,
        )
        .unwrap()
    }

    fn t(v: &[f64]) -> Tensor<f64> {
        Tensor::from_f64s(v).unwrap()
    }

    #[test]
    fn relu_kink_has_zero_derivative() {
        let m = one_relu();
        assert_eq!(m.gradient(&t(&[1.0]), BackpropRule::Standard).unwrap()[0], 0.0);
        assert_eq!(m.gradient(&t(&[0.5]), BackpropRule::Standard).unwrap()[0], 1.0);
        assert_eq!(m.gradient(&t(&[2.0]), BackpropRule::Standard).unwrap()[0], 0.0);
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let err = one_relu().forward(&t(&[1.0, 2.0])).unwrap_err();
        assert_eq!(err, Error::ArityMismatch { expected: 1, actual: 2 });
    }

    #[test]
    fn min_and_max_ties_route_to_first_operand() {
        for (op, id) in [(Op::Min, "m"), (Op::Max, "m")] {
            let m = ModelGraph::new(
                vec![
                    NodeSpec::new("a", Op::Input { start: 0, len: 1 }, &[]),
                    NodeSpec::new("b", Op::Input { start: 1, len: 1 }, &[]),
                    NodeSpec::new(id, op, &["a", "b"]),
                ],
                id,
                2,
            )
            .unwrap();
            let g = m.gradient(&t(&[2.0, 2.0]), BackpropRule::Standard).unwrap();
            assert_eq!(g.values(), &[1.0, 0.0]);
        }
    }

    #[test]
    fn multiply_uses_product_rule() {
        let m = ModelGraph::new(
            vec![
                NodeSpec::new("a", Op::Input { start: 0, len: 1 }, &[]),
                NodeSpec::new("b", Op::Input { start: 1, len: 1 }, &[]),
                NodeSpec::new("p", Op::Multiply, &["a", "b"]),
            ],
            "p",
            2,
        )
        .unwrap();
        let g = m.gradient(&t(&[3.0, -2.0]), BackpropRule::Standard).unwrap();
        assert_eq!(g.values(), &[-2.0, 3.0]);
    }

    #[test]
    fn symmetry_cex_regions() {
        let m = ModelGraph::new(
            vec![
                NodeSpec::new("x", Op::Input { start: 0, len: 2 }, &[]),
                NodeSpec::new(
                    "f",
                    Op::Piecewise(PiecewiseKind::SymmetryCex { a: 0.0, b: 1.0, i: 0, j: 1 }),
                    &["x"],
                ),
            ],
            "f",
            2,
        )
        .unwrap();
        // flat low region
        assert_eq!(m.value(&t(&[-0.5, 0.7])).unwrap(), 0.0);
        assert_eq!(
            m.gradient(&t(&[-0.5, 0.7]), BackpropRule::Standard).unwrap().values(),
            &[0.0, 0.0]
        );
        // flat high region
        assert_eq!(m.value(&t(&[1.5, 2.0])).unwrap(), 1.0);
        // interior
        assert_eq!(m.value(&t(&[0.5, 0.25])).unwrap(), 0.125);
        let g = m.gradient(&t(&[0.5, 0.25]), BackpropRule::Standard).unwrap();
        assert_eq!(g.values(), &[0.25, 0.5]);
        // on the boundary x_0 = b only x_1 moves the output
        let g = m.gradient(&t(&[1.0, 0.25]), BackpropRule::Standard).unwrap();
        assert_eq!(g.values(), &[0.0, 1.0]);
    }

    #[test]
    fn sigmoid_and_tanh_derivatives() {
        let m = ModelGraph::new(
            vec![
                NodeSpec::new("x", Op::Input { start: 0, len: 1 }, &[]),
                NodeSpec::new("s", Op::Sigmoid, &["x"]),
                NodeSpec::new("t", Op::Tanh, &["s"]),
            ],
            "t",
            1,
        )
        .unwrap();
        let x = 0.3_f64;
        let s = 1.0 / (1.0 + (-x).exp());
        let expected = (1.0 - s.tanh().powi(2)) * s * (1.0 - s);
        let g = m.gradient(&t(&[x]), BackpropRule::Standard).unwrap()[0];
        assert!((g - expected).abs() < 1e-15);
    }
}
