use crate::scalar::Scalar;

/// Built-in piecewise functions that cannot be expressed exactly with the
/// elementary ops.
#[derive(Debug, Clone, PartialEq)]
pub enum PiecewiseKind<T> {
    /// Symmetric function of features `i` and `j` of its input vector:
    /// `(clamp(x_i, a, b) - a) * (clamp(x_j, a, b) - a)`.
    ///
    /// Zero when `min(x_i, x_j) <= a`, `(b - a)^2` when both are `>= b`, and
    /// the plain product `(x_i - a)(x_j - a)` inside the box.
    SymmetryCex { a: T, b: T, i: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op<T> {
    /// Reads `len` consecutive features starting at `start`.
    Input { start: usize, len: usize },
    Constant { value: Vec<T> },
    /// `W x + b` with `W` stored row-major as `rows x cols`.
    Dense {
        rows: usize,
        cols: usize,
        weights: Vec<T>,
        bias: Vec<T>,
    },
    Relu,
    Sigmoid,
    Tanh,
    Add,
    Subtract,
    Scale(T),
    Multiply,
    Min,
    Max,
    SumReduce,
    Piecewise(PiecewiseKind<T>),
}

impl<T: Scalar> Op<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Input { .. } => "input",
            Op::Constant { .. } => "constant",
            Op::Dense { .. } => "dense",
            Op::Relu => "relu",
            Op::Sigmoid => "sigmoid",
            Op::Tanh => "tanh",
            Op::Add => "add",
            Op::Subtract => "subtract",
            Op::Scale(_) => "scale",
            Op::Multiply => "multiply",
            Op::Min => "min",
            Op::Max => "max",
            Op::SumReduce => "sum_reduce",
            Op::Piecewise(PiecewiseKind::SymmetryCex { .. }) => "symmetry_cex",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Op::Input { .. } | Op::Constant { .. } => 0,
            Op::Add | Op::Subtract | Op::Multiply | Op::Min | Op::Max => 2,
            _ => 1,
        }
    }

    /// Dense layer from a list of weight rows.
    pub fn dense(weight_rows: Vec<Vec<T>>, bias: Vec<T>) -> Self {
        let rows = weight_rows.len();
        let cols = weight_rows.first().map_or(0, Vec::len);
        Op::Dense {
            rows,
            cols,
            weights: weight_rows.into_iter().flatten().collect(),
            bias,
        }
    }

    pub(crate) fn params_finite(&self) -> bool {
        match self {
            Op::Constant { value } => value.iter().all(|v| v.is_finite()),
            Op::Dense { weights, bias, .. } => {
                weights.iter().chain(bias.iter()).all(|v| v.is_finite())
            }
            Op::Scale(s) => s.is_finite(),
            Op::Piecewise(PiecewiseKind::SymmetryCex { a, b, .. }) => {
                a.is_finite() && b.is_finite()
            }
            _ => true,
        }
    }

    pub(crate) fn cast<U: Scalar>(&self) -> Op<U> {
        let c = |v: &T| U::lit(v.to_f64_lossy());
        match self {
            Op::Input { start, len } => Op::Input {
                start: *start,
                len: *len,
            },
            Op::Constant { value } => Op::Constant {
                value: value.iter().map(c).collect(),
            },
            Op::Dense {
                rows,
                cols,
                weights,
                bias,
            } => Op::Dense {
                rows: *rows,
                cols: *cols,
                weights: weights.iter().map(c).collect(),
                bias: bias.iter().map(c).collect(),
            },
            Op::Relu => Op::Relu,
            Op::Sigmoid => Op::Sigmoid,
            Op::Tanh => Op::Tanh,
            Op::Add => Op::Add,
            Op::Subtract => Op::Subtract,
            Op::Scale(s) => Op::Scale(c(s)),
            Op::Multiply => Op::Multiply,
            Op::Min => Op::Min,
            Op::Max => Op::Max,
            Op::SumReduce => Op::SumReduce,
            Op::Piecewise(PiecewiseKind::SymmetryCex { a, b, i, j }) => {
                Op::Piecewise(PiecewiseKind::SymmetryCex {
                    a: c(a),
                    b: c(b),
                    i: *i,
                    j: *j,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec<T> {
    pub id: String,
    pub op: Op<T>,
    pub inputs: Vec<String>,
}

impl<T: Scalar> NodeSpec<T> {
    pub fn new(id: impl Into<String>, op: Op<T>, inputs: &[&str]) -> Self {
        Self {
            id: id.into(),
            op,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
        }
    }
}
