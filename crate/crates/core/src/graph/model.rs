use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::graph::node::{NodeSpec, Op, PiecewiseKind};
use crate::scalar::Scalar;

/// A validated DAG of operation nodes with a single scalar output.
///
/// Nodes are kept sorted by id so two graphs built from the same node set
/// compare equal regardless of declaration order. Evaluation follows a
/// topological order computed once at construction.
#[derive(Debug, Clone)]
pub struct ModelGraph<T> {
    nodes: Vec<NodeSpec<T>>,
    output: String,
    input_arity: usize,
    order: Vec<usize>,
    edges: Vec<Vec<usize>>,
    widths: Vec<usize>,
    output_index: usize,
}

impl<T: Scalar> PartialEq for ModelGraph<T> {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.output == other.output
            && self.input_arity == other.input_arity
    }
}

impl<T: Scalar> ModelGraph<T> {
    pub fn new(
        mut nodes: Vec<NodeSpec<T>>,
        output: impl Into<String>,
        input_arity: usize,
    ) -> Result<Self> {
        let output = output.into();
        if input_arity == 0 {
            return Err(Error::InvalidModel("input_arity must be at least 1".into()));
        }
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidModel(format!(
                    "duplicate node id '{}'",
                    pair[0].id
                )));
            }
        }
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();

        let mut edges = Vec::with_capacity(nodes.len());
        for node in &nodes {
            if node.id.is_empty() {
                return Err(Error::InvalidModel("empty node id".into()));
            }
            if node.inputs.len() != node.op.arity() {
                return Err(invalid(
                    node,
                    format!(
                        "op '{}' takes {} input(s), got {}",
                        node.op.name(),
                        node.op.arity(),
                        node.inputs.len()
                    ),
                ));
            }
            if !node.op.params_finite() {
                return Err(invalid(node, "non-finite parameter".into()));
            }
            let mut resolved = Vec::with_capacity(node.inputs.len());
            for name in &node.inputs {
                match index.get(name.as_str()) {
                    Some(&i) => resolved.push(i),
                    None => {
                        return Err(invalid(node, format!("unknown input node '{name}'")))
                    }
                }
            }
            edges.push(resolved);
        }

        let order = topological_order(&nodes, &edges)?;
        let output_index = *index
            .get(output.as_str())
            .ok_or_else(|| Error::InvalidModel(format!("output node '{output}' not found")))?;

        let mut widths = vec![0; nodes.len()];
        for &n in &order {
            widths[n] = node_width(&nodes[n], &edges[n], &widths, input_arity)?;
        }
        if widths[output_index] != 1 {
            return Err(invalid(
                &nodes[output_index],
                format!(
                    "output must be scalar, node has width {}",
                    widths[output_index]
                ),
            ));
        }

        Ok(Self {
            nodes,
            output,
            input_arity,
            order,
            edges,
            widths,
            output_index,
        })
    }

    pub fn nodes(&self) -> &[NodeSpec<T>] {
        &self.nodes
    }

    pub fn output(&self) -> &str {
        &self.output
    }

    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    pub(crate) fn order(&self) -> &[usize] {
        &self.order
    }

    pub(crate) fn edges(&self, node: usize) -> &[usize] {
        &self.edges[node]
    }

    pub(crate) fn width(&self, node: usize) -> usize {
        self.widths[node]
    }

    pub(crate) fn output_index(&self) -> usize {
        self.output_index
    }

    /// Nodes the output depends on (including the output itself).
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.output_index];
        while let Some(n) = stack.pop() {
            if !seen[n] {
                seen[n] = true;
                stack.extend(self.edges[n].iter().copied());
            }
        }
        seen
    }

    /// For each feature, whether some input node feeding the output reads it.
    pub fn wired_features(&self) -> Vec<bool> {
        let reachable = self.reachable();
        let mut wired = vec![false; self.input_arity];
        for (n, node) in self.nodes.iter().enumerate() {
            if let (true, Op::Input { start, len }) = (reachable[n], &node.op) {
                wired[*start..*start + *len].iter_mut().for_each(|w| *w = true);
            }
        }
        wired
    }

    /// Ops present among nodes the output depends on.
    pub fn reachable_nodes(&self) -> impl Iterator<Item = &NodeSpec<T>> {
        let reachable = self.reachable();
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(i, _)| reachable[*i])
            .map(|(_, n)| n)
    }

    pub fn cast<U: Scalar>(&self) -> ModelGraph<U> {
        ModelGraph {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    id: n.id.clone(),
                    op: n.op.cast(),
                    inputs: n.inputs.clone(),
                })
                .collect(),
            output: self.output.clone(),
            input_arity: self.input_arity,
            order: self.order.clone(),
            edges: self.edges.clone(),
            widths: self.widths.clone(),
            output_index: self.output_index,
        }
    }

    pub fn into_parts(self) -> (Vec<NodeSpec<T>>, String, usize) {
        (self.nodes, self.output, self.input_arity)
    }
}

fn invalid<T>(node: &NodeSpec<T>, reason: String) -> Error {
    Error::InvalidNode {
        node: node.id.clone(),
        reason,
    }
}

/// Kahn's algorithm, always releasing the lowest-index ready node first.
fn topological_order<T>(nodes: &[NodeSpec<T>], edges: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut indegree: Vec<usize> = edges.iter().map(Vec::len).collect();
    let mut consumers = vec![Vec::new(); nodes.len()];
    for (n, inputs) in edges.iter().enumerate() {
        for &i in inputs {
            consumers[i].push(n);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = indegree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(n)) = ready.pop() {
        order.push(n);
        for &c in &consumers[n] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() != nodes.len() {
        let stuck = indegree.iter().position(|&d| d > 0).unwrap_or(0);
        return Err(Error::Cycle(nodes[stuck].id.clone()));
    }
    Ok(order)
}

fn node_width<T: Scalar>(
    node: &NodeSpec<T>,
    inputs: &[usize],
    widths: &[usize],
    input_arity: usize,
) -> Result<usize> {
    let w = |k: usize| widths[inputs[k]];
    match &node.op {
        Op::Input { start, len } => {
            if *len == 0 || start + len > input_arity {
                return Err(invalid(
                    node,
                    format!("input slice {start}..{} outside 0..{input_arity}", start + len),
                ));
            }
            Ok(*len)
        }
        Op::Constant { value } => {
            if value.is_empty() {
                return Err(invalid(node, "constant must have at least one value".into()));
            }
            Ok(value.len())
        }
        Op::Dense {
            rows,
            cols,
            weights,
            bias,
        } => {
            if *rows == 0 || weights.len() != rows * cols || bias.len() != *rows {
                return Err(invalid(
                    node,
                    format!(
                        "dense weights must be {rows}x{cols} with {rows} biases, got {} weights and {} biases",
                        weights.len(),
                        bias.len()
                    ),
                ));
            }
            if *cols != w(0) {
                return Err(invalid(
                    node,
                    format!(
                        "dense weight matrix has {cols} columns but input '{}' has width {}",
                        node.inputs[0],
                        w(0)
                    ),
                ));
            }
            Ok(*rows)
        }
        Op::Relu | Op::Sigmoid | Op::Tanh | Op::Scale(_) => Ok(w(0)),
        Op::Add | Op::Subtract | Op::Multiply | Op::Min | Op::Max => {
            if w(0) != w(1) {
                return Err(invalid(
                    node,
                    format!("operand widths differ: {} vs {}", w(0), w(1)),
                ));
            }
            Ok(w(0))
        }
        Op::SumReduce => Ok(1),
        Op::Piecewise(PiecewiseKind::SymmetryCex { a, b, i, j }) => {
            if i == j || *i >= w(0) || *j >= w(0) {
                return Err(invalid(
                    node,
                    format!("feature indices ({i}, {j}) must be distinct and below {}", w(0)),
                ));
            }
            // parameters are already known to be finite
            if a >= b {
                return Err(invalid(node, format!("requires a < b, got a={a}, b={b}")));
            }
            Ok(1)
        }
    }
}
