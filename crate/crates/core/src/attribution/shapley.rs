use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{check_shapes, AttributionResult, BaselineSpec, MethodSpec};
use crate::error::{Error, Result};
use crate::graph::ModelGraph;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Largest feature count for exact enumeration (2^16 forward passes).
pub const EXACT_SHAPLEY_MAX_FEATURES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyMode {
    Exact,
    Sampled { num_orderings: usize, seed: u64 },
}

/// Shapley values of the game `S -> F(x on S, x' elsewhere)`.
///
/// Exact mode enumerates all `2^n` coalitions and weights marginal
/// contributions by `|S|! (n - |S| - 1)! / n!`, which equals averaging over
/// all `n!` feature orderings. Sampled mode averages over seeded random
/// orderings.
pub fn shapley_shubik<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
    mode: &ShapleyMode,
) -> Result<AttributionResult<T>> {
    check_shapes(model, input)?;
    let baseline = baseline.resolve(input)?;
    let (values, calls) = match *mode {
        ShapleyMode::Exact => exact(model, input, &baseline)?,
        ShapleyMode::Sampled { num_orderings, seed } => {
            sampled(model, input, &baseline, num_orderings, seed)?
        }
    };
    AttributionResult::assemble(
        model,
        input,
        &baseline,
        values,
        MethodSpec::ShapleyShubik { mode: *mode },
        calls,
    )
}

fn hybrid<T: Scalar>(input: &Tensor<T>, baseline: &Tensor<T>, on: impl Fn(usize) -> bool) -> Tensor<T> {
    let values = input
        .values()
        .iter()
        .zip(baseline.values())
        .enumerate()
        .map(|(i, (x, b))| if on(i) { *x } else { *b })
        .collect();
    Tensor::from_parts_unchecked(input.shape().to_vec(), values)
}

fn exact<T: Scalar>(model: &ModelGraph<T>, input: &Tensor<T>, baseline: &Tensor<T>) -> Result<(Vec<T>, u64)> {
    let n = input.len();
    if n > EXACT_SHAPLEY_MAX_FEATURES {
        return Err(Error::InvalidParameter(format!(
            "exact Shapley supports at most {EXACT_SHAPLEY_MAX_FEATURES} features, model has {n}"
        )));
    }
    let subsets = 1usize << n;
    let game: Vec<T> = (0..subsets)
        .into_par_iter()
        .map(|mask| model.value(&hybrid(input, baseline, |i| mask & (1 << i) != 0)))
        .collect::<Result<_>>()?;

    // weight[s] = s! (n - s - 1)! / n!
    let weight: Vec<T> = (0..n)
        .map(|s| {
            let w = (1..=s).map(|k| k as f64).product::<f64>()
                * (1..n - s).map(|k| k as f64).product::<f64>()
                / (1..=n).map(|k| k as f64).product::<f64>();
            T::lit(w)
        })
        .collect();

    let mut values = vec![T::zero(); n];
    for mask in 0..subsets {
        let size = mask.count_ones() as usize;
        for (i, v) in values.iter_mut().enumerate() {
            if mask & (1 << i) == 0 {
                *v += weight[size] * (game[mask | (1 << i)] - game[mask]);
            }
        }
    }
    Ok((values, subsets as u64))
}

fn sampled<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &Tensor<T>,
    num_orderings: usize,
    seed: u64,
) -> Result<(Vec<T>, u64)> {
    if num_orderings == 0 {
        return Err(Error::InvalidParameter("sampled Shapley needs at least one ordering".into()));
    }
    let n = input.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orderings: Vec<Vec<usize>> = (0..num_orderings)
        .map(|_| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();
    let start = model.value(baseline)?;

    let marginals: Vec<Vec<T>> = orderings
        .par_iter()
        .map(|order| {
            let mut on = vec![false; n];
            let mut previous = start;
            let mut out = vec![T::zero(); n];
            for &i in order {
                on[i] = true;
                let current = model.value(&hybrid(input, baseline, |k| on[k]))?;
                out[i] = current - previous;
                previous = current;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut values = vec![T::zero(); n];
    for m in &marginals {
        for (v, d) in values.iter_mut().zip(m) {
            *v += *d;
        }
    }
    let count = T::from_usize_lossy(num_orderings);
    values.iter_mut().for_each(|v| *v = *v / count);
    Ok((values, (num_orderings * n) as u64 + 1))
}
