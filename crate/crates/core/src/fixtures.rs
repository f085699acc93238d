//! Named example networks with known closed forms.
//!
//! | id | function |
//! |----|----------|
//! | `one_relu` | `1 - relu(1 - x)` |
//! | `appendix_f` | `relu(relu(x1) - 1 - relu(x2))` |
//! | `appendix_g` | `relu(relu(x1 - 1) - relu(x2))` |
//! | `appendix_h` | `relu(x1) - 1 - relu(x2)` |
//! | `appendix_k` | `relu(x1 - 1) - relu(x2)` |
//! | `logistic_sym(n)` | `sigmoid(x1 + ... + xn)` |
//! | `min2` | `min(x1, x2)` |
//! | `linear(w, b)` | `w . x + b` |
//! | `symmetry_cex(a, b, i, j, n)` | `(clamp(xi) - a)(clamp(xj) - a)`, clamped to `[a, b]` |
//!
//! `appendix_f` and `appendix_g` compute the same function through different
//! graphs; `appendix_h` and `appendix_k` are their pre-activations and differ
//! whenever `x1 < 1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{ModelGraph, NodeSpec, Op, PiecewiseKind};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum FixtureId {
    OneRelu,
    AppendixF,
    AppendixG,
    AppendixH,
    AppendixK,
    LogisticSym { n: usize },
    Min2,
    Linear { w: Vec<f64>, b: f64 },
    SymmetryCex { a: f64, b: f64, i: usize, j: usize, n: usize },
}

impl FixtureId {
    /// File stem used when writing fixtures to disk.
    pub fn file_stem(&self) -> String {
        match self {
            FixtureId::OneRelu => "one_relu".into(),
            FixtureId::AppendixF => "appendix_f".into(),
            FixtureId::AppendixG => "appendix_g".into(),
            FixtureId::AppendixH => "appendix_h".into(),
            FixtureId::AppendixK => "appendix_k".into(),
            FixtureId::LogisticSym { n } => format!("logistic_sym{n}"),
            FixtureId::Min2 => "min2".into(),
            FixtureId::Linear { .. } => "linear".into(),
            FixtureId::SymmetryCex { .. } => "symmetry_cex".into(),
        }
    }

    /// The set written by the `fixtures` command.
    pub fn catalog() -> Vec<FixtureId> {
        vec![
            FixtureId::OneRelu,
            FixtureId::AppendixF,
            FixtureId::AppendixG,
            FixtureId::AppendixH,
            FixtureId::AppendixK,
            FixtureId::LogisticSym { n: 2 },
            FixtureId::LogisticSym { n: 4 },
            FixtureId::LogisticSym { n: 8 },
            FixtureId::Min2,
            FixtureId::Linear { w: vec![2.0, 3.0], b: 0.0 },
            FixtureId::SymmetryCex { a: 0.0, b: 1.0, i: 0, j: 1, n: 2 },
        ]
    }

    pub fn input_arity(&self) -> usize {
        match self {
            FixtureId::OneRelu => 1,
            FixtureId::LogisticSym { n } | FixtureId::SymmetryCex { n, .. } => *n,
            FixtureId::Linear { w, .. } => w.len(),
            _ => 2,
        }
    }
}

impl fmt::Display for FixtureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixtureId::LogisticSym { n } => write!(f, "logistic_sym({n})"),
            FixtureId::Linear { w, b } => {
                let ws: Vec<String> = w.iter().map(|v| v.to_string()).collect();
                write!(f, "linear({};{b})", ws.join(","))
            }
            FixtureId::SymmetryCex { a, b, i, j, n } => {
                write!(f, "symmetry_cex({a},{b},{i},{j},{n})")
            }
            other => f.write_str(&other.file_stem()),
        }
    }
}

impl FromStr for FixtureId {
    type Err = Error;

    /// Parses `one_relu`, `logistic_sym(4)`, `linear(2,3;0)`,
    /// `symmetry_cex(0,1,0,1,2)` and the other plain names.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) if s.ends_with(')') => (&s[..open], Some(&s[open + 1..s.len() - 1])),
            _ => (s, None),
        };
        let bad = || Error::InvalidParameter(format!("cannot parse fixture '{s}'"));
        let nums = |text: &str| -> Result<Vec<f64>> {
            text.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        let index = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(bad())
            }
        };
        match (name, args) {
            ("one_relu", None) => Ok(FixtureId::OneRelu),
            ("appendix_f", None) => Ok(FixtureId::AppendixF),
            ("appendix_g", None) => Ok(FixtureId::AppendixG),
            ("appendix_h", None) => Ok(FixtureId::AppendixH),
            ("appendix_k", None) => Ok(FixtureId::AppendixK),
            ("min2", None) => Ok(FixtureId::Min2),
            ("logistic_sym", Some(a)) => {
                let v = nums(a)?;
                match v.as_slice() {
                    [n] => Ok(FixtureId::LogisticSym { n: index(*n)? }),
                    _ => Err(bad()),
                }
            }
            ("linear", Some(a)) => {
                let (w, b) = a.split_once(';').unwrap_or((a, "0"));
                Ok(FixtureId::Linear {
                    w: nums(w)?,
                    b: b.trim().parse().map_err(|_| bad())?,
                })
            }
            ("symmetry_cex", Some(a)) => match nums(a)?.as_slice() {
                [a, b, i, j, n] => Ok(FixtureId::SymmetryCex {
                    a: *a,
                    b: *b,
                    i: index(*i)?,
                    j: index(*j)?,
                    n: index(*n)?,
                }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

fn input<T: Scalar>(id: &str, start: usize, len: usize) -> NodeSpec<T> {
    NodeSpec::new(id, Op::Input { start, len }, &[])
}

fn constant<T: Scalar>(id: &str, value: f64) -> NodeSpec<T> {
    NodeSpec::new(id, Op::Constant { value: vec![T::lit(value)] }, &[])
}

fn node<T: Scalar>(id: &str, op: Op<T>, inputs: &[&str]) -> NodeSpec<T> {
    NodeSpec::new(id, op, inputs)
}

/// `relu(x1) - 1 - relu(x2)`, ending at node `h`.
fn h_nodes<T: Scalar>() -> Vec<NodeSpec<T>> {
    vec![
        input("x1", 0, 1),
        input("x2", 1, 1),
        constant("one", 1.0),
        node("relu_x1", Op::Relu, &["x1"]),
        node("relu_x2", Op::Relu, &["x2"]),
        node("relu_x1_minus_1", Op::Subtract, &["relu_x1", "one"]),
        node("h", Op::Subtract, &["relu_x1_minus_1", "relu_x2"]),
    ]
}

/// `relu(x1 - 1) - relu(x2)`, ending at node `k`.
fn k_nodes<T: Scalar>() -> Vec<NodeSpec<T>> {
    vec![
        input("x1", 0, 1),
        input("x2", 1, 1),
        constant("one", 1.0),
        node("x1_minus_1", Op::Subtract, &["x1", "one"]),
        node("relu_x1_minus_1", Op::Relu, &["x1_minus_1"]),
        node("relu_x2", Op::Relu, &["x2"]),
        node("k", Op::Subtract, &["relu_x1_minus_1", "relu_x2"]),
    ]
}

pub fn build_fixture<T: Scalar>(id: &FixtureId) -> Result<ModelGraph<T>> {
    match id {
        FixtureId::OneRelu => {
            // the constant 1 lives in the two dense biases
            let flip = || Op::dense(vec![vec![-T::one()]], vec![T::one()]);
            ModelGraph::new(
                vec![
                    input("x", 0, 1),
                    node("one_minus_x", flip(), &["x"]),
                    node("relu", Op::Relu, &["one_minus_x"]),
                    node("out", flip(), &["relu"]),
                ],
                "out",
                1,
            )
        }
        FixtureId::AppendixF => {
            let mut nodes = h_nodes();
            nodes.push(node("f", Op::Relu, &["h"]));
            ModelGraph::new(nodes, "f", 2)
        }
        FixtureId::AppendixG => {
            let mut nodes = k_nodes();
            nodes.push(node("g", Op::Relu, &["k"]));
            ModelGraph::new(nodes, "g", 2)
        }
        FixtureId::AppendixH => ModelGraph::new(h_nodes(), "h", 2),
        FixtureId::AppendixK => ModelGraph::new(k_nodes(), "k", 2),
        FixtureId::LogisticSym { n } => {
            if *n == 0 {
                return Err(Error::InvalidParameter("logistic_sym needs n >= 1".into()));
            }
            ModelGraph::new(
                vec![
                    input("x", 0, *n),
                    node("sum", Op::SumReduce, &["x"]),
                    node("out", Op::Sigmoid, &["sum"]),
                ],
                "out",
                *n,
            )
        }
        FixtureId::Min2 => ModelGraph::new(
            vec![
                input("x1", 0, 1),
                input("x2", 1, 1),
                node("min", Op::Min, &["x1", "x2"]),
            ],
            "min",
            2,
        ),
        FixtureId::Linear { w, b } => {
            if w.is_empty() {
                return Err(Error::InvalidParameter("linear needs at least one weight".into()));
            }
            if w.iter().chain(std::iter::once(b)).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("linear weights must be finite".into()));
            }
            let row = w.iter().map(|&v| T::lit(v)).collect();
            ModelGraph::new(
                vec![
                    input("x", 0, w.len()),
                    node("out", Op::dense(vec![row], vec![T::lit(*b)]), &["x"]),
                ],
                "out",
                w.len(),
            )
        }
        FixtureId::SymmetryCex { a, b, i, j, n } => {
            if !(0.0 <= *a && a < b && b.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "symmetry_cex requires 0 <= a < b, got a={a}, b={b}"
                )));
            }
            if i == j || *i >= *n || *j >= *n {
                return Err(Error::InvalidParameter(format!(
                    "symmetry_cex requires distinct i, j below n={n}, got i={i}, j={j}"
                )));
            }
            let kind = PiecewiseKind::SymmetryCex {
                a: T::lit(*a),
                b: T::lit(*b),
                i: *i,
                j: *j,
            };
            ModelGraph::new(
                vec![input("x", 0, *n), node("out", Op::Piecewise(kind), &["x"])],
                "out",
                *n,
            )
        }
    }
}
