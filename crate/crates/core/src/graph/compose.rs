use crate::error::{Error, Result};
use crate::graph::model::ModelGraph;
use crate::graph::node::{NodeSpec, Op};
use crate::scalar::Scalar;

impl<T: Scalar> ModelGraph<T> {
    /// Graph computing `a * first(x) + b * second(x)`.
    ///
    /// Node ids of the two operands are prefixed with `f1/` and `f2/`.
    pub fn linear_combination(a: T, first: &Self, b: T, second: &Self) -> Result<Self> {
        if first.input_arity() != second.input_arity() {
            return Err(Error::ArityMismatch {
                expected: first.input_arity(),
                actual: second.input_arity(),
            });
        }
        let mut nodes = prefixed(first, "f1/");
        nodes.extend(prefixed(second, "f2/"));
        let out1 = format!("f1/{}", first.output());
        let out2 = format!("f2/{}", second.output());
        nodes.push(NodeSpec::new("lin/a", Op::Scale(a), &[&out1]));
        nodes.push(NodeSpec::new("lin/b", Op::Scale(b), &[&out2]));
        nodes.push(NodeSpec::new("lin/out", Op::Add, &["lin/a", "lin/b"]));
        ModelGraph::new(nodes, "lin/out", first.input_arity())
    }

    /// Same function with one extra trailing feature that nothing reads.
    pub fn with_dummy_feature(&self) -> Result<Self> {
        ModelGraph::new(self.nodes().to_vec(), self.output(), self.input_arity() + 1)
    }

    /// A functionally equivalent graph with a different structure: the
    /// output `y` is re-expressed as `relu(y) - relu(-y)`.
    pub fn equivalent_rewrite(&self) -> Result<Self> {
        let mut nodes = prefixed(self, "orig/");
        let y = format!("orig/{}", self.output());
        nodes.push(NodeSpec::new("rw/pos", Op::Relu, &[&y]));
        nodes.push(NodeSpec::new("rw/flip", Op::Scale(-T::one()), &[&y]));
        nodes.push(NodeSpec::new("rw/neg", Op::Relu, &["rw/flip"]));
        nodes.push(NodeSpec::new("rw/out", Op::Subtract, &["rw/pos", "rw/neg"]));
        ModelGraph::new(nodes, "rw/out", self.input_arity())
    }
}

fn prefixed<T: Scalar>(model: &ModelGraph<T>, prefix: &str) -> Vec<NodeSpec<T>> {
    model
        .nodes()
        .iter()
        .map(|n| NodeSpec {
            id: format!("{prefix}{}", n.id),
            op: n.op.clone(),
            inputs: n.inputs.iter().map(|i| format!("{prefix}{i}")).collect(),
        })
        .collect()
}
