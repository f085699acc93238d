//! Random models shared by the integration tests.
#![allow(dead_code)]

use attrib_core::{Model64, NodeSpec, Op, Tensor64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    fn op(self) -> Op<f64> {
        match self {
            Activation::Relu => Op::Relu,
            Activation::Tanh => Op::Tanh,
            Activation::Sigmoid => Op::Sigmoid,
        }
    }
}

fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// `w2 . act(W1 x + b1) + b2` with weights uniform in `[-1, 1)`.
pub fn random_mlp(rng: &mut ChaCha8Rng, n: usize, hidden: usize, act: Activation) -> Model64 {
    let w1 = matrix(rng, hidden, n);
    let b1 = (0..hidden).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w2 = matrix(rng, 1, hidden);
    let b2 = vec![rng.gen_range(-1.0..1.0)];
    Model64::new(
        vec![
            NodeSpec::new("x", Op::Input { start: 0, len: n }, &[]),
            NodeSpec::new("hidden", Op::dense(w1, b1), &["x"]),
            NodeSpec::new("act", act.op(), &["hidden"]),
            NodeSpec::new("out", Op::dense(w2, b2), &["act"]),
        ],
        "out",
        n,
    )
    .expect("random MLPs are well-formed")
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Tensor64 {
    Tensor64::vector((0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

pub fn t(values: &[f64]) -> Tensor64 {
    Tensor64::from_f64s(values).unwrap()
}
