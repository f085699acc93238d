use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{check_shapes, AttributionResult, BaselineSpec, MethodSpec, RiemannConfig};
use crate::error::{Error, Result};
use crate::graph::{BackpropRule, ModelGraph};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// A monotone path from the baseline to the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "T: Scalar")]
pub enum PathSpec<T> {
    Straightline,
    /// Interior waypoints; the baseline and input are the implicit endpoints.
    Polyline(Vec<Tensor<T>>),
    /// Moves one feature at a time from its baseline to its input value, in
    /// the given order.
    AxisSequential(Vec<usize>),
}

impl<T: Scalar> PathSpec<T> {
    pub fn label(&self) -> String {
        match self {
            PathSpec::Straightline => "straightline".into(),
            PathSpec::Polyline(w) => format!("polyline({} waypoints)", w.len()),
            PathSpec::AxisSequential(order) => format!("axis_sequential({order:?})"),
        }
    }

    /// Every vertex of the path, baseline first and input last, with
    /// consecutive duplicates removed. Fails if some coordinate is not
    /// monotone along the vertices.
    pub fn skeleton(&self, baseline: &Tensor<T>, input: &Tensor<T>) -> Result<Vec<Vec<T>>> {
        let start = baseline.values().to_vec();
        let end = input.values().to_vec();
        let n = end.len();
        let mut points = vec![start.clone()];
        match self {
            PathSpec::Straightline => {}
            PathSpec::Polyline(waypoints) => {
                for (w, p) in waypoints.iter().enumerate() {
                    if p.len() != n {
                        return Err(Error::ShapeMismatch {
                            shape: input.shape().to_vec(),
                            expected: n,
                            actual: p.len(),
                        });
                    }
                    if p.values().iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidParameter(format!("waypoint {w} is not finite")));
                    }
                    points.push(p.values().to_vec());
                }
            }
            PathSpec::AxisSequential(order) => {
                let mut seen = vec![false; n];
                if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                    return Err(Error::InvalidParameter(format!(
                        "axis order {order:?} is not a permutation of 0..{n}"
                    )));
                }
                let mut current = start.clone();
                for &i in order {
                    current[i] = end[i];
                    points.push(current.clone());
                }
            }
        }
        points.push(end.clone());
        points.dedup();

        for i in 0..n {
            let increasing = end[i] >= start[i];
            for pair in points.windows(2) {
                let step = pair[1][i] - pair[0][i];
                let backwards = if increasing { step < T::zero() } else { step > T::zero() };
                if backwards {
                    return Err(Error::NonMonotonePath(format!(
                        "feature {i} moves from {} to {} while heading from {} to {}",
                        pair[0][i], pair[1][i], start[i], end[i]
                    )));
                }
            }
        }
        Ok(points)
    }
}

/// Integrated gradients along the straight line from baseline to input.
///
/// With the default right rule this is `(x_i - x'_i) * sum_k dF/dx_i(x' + (k/m)(x - x')) / m`.
pub fn integrated_gradients<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
    config: &RiemannConfig,
) -> Result<AttributionResult<T>> {
    let baseline = baseline.resolve(input)?;
    let (values, calls) = integrate(model, input, &baseline, &PathSpec::Straightline, config)?;
    AttributionResult::assemble(
        model,
        input,
        &baseline,
        values,
        MethodSpec::IntegratedGradients { config: *config },
        calls,
    )
}

/// Path integrated gradients along an arbitrary monotone path.
///
/// The `m` sub-intervals are shared out over the path's segments as evenly
/// as possible (each segment gets at least one); within a segment the
/// integrand is the gradient at the sample point times the segment's
/// displacement.
pub fn path_integrated_gradients<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
    path: &PathSpec<T>,
    config: &RiemannConfig,
) -> Result<AttributionResult<T>> {
    let baseline = baseline.resolve(input)?;
    let (values, calls) = integrate(model, input, &baseline, path, config)?;
    AttributionResult::assemble(
        model,
        input,
        &baseline,
        values,
        MethodSpec::PathMethod {
            path: path.clone(),
            config: *config,
        },
        calls,
    )
}

fn integrate<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &Tensor<T>,
    path: &PathSpec<T>,
    config: &RiemannConfig,
) -> Result<(Vec<T>, u64)> {
    check_shapes(model, input)?;
    let points = path.skeleton(baseline, input)?;
    let n = input.len();
    let segments = points.len() - 1;
    let mut values = vec![T::zero(); n];
    if segments == 0 {
        return Ok((values, 0));
    }

    let mut calls = 0u64;
    for (s, pair) in points.windows(2).enumerate() {
        let steps = (config.steps() / segments + usize::from(s < config.steps() % segments)).max(1);
        let (nodes, m) = config.with_steps(steps)?.unit_nodes::<T>();
        let (from, to) = (&pair[0], &pair[1]);
        let delta: Vec<T> = to.iter().zip(from).map(|(b, a)| *b - *a).collect();

        let grads: Vec<Vec<T>> = nodes
            .par_iter()
            .map(|&(tau, _)| {
                let point: Vec<T> = from.iter().zip(&delta).map(|(a, d)| *a + tau * *d).collect();
                model
                    .gradient(&Tensor::from_parts_unchecked(input.shape().to_vec(), point), BackpropRule::Standard)
                    .map(Tensor::into_values)
            })
            .collect::<Result<_>>()?;
        calls += grads.len() as u64;

        let mut acc = vec![T::zero(); n];
        for (g, &(_, w)) in grads.iter().zip(&nodes) {
            for (a, gi) in acc.iter_mut().zip(g) {
                *a += *gi * w;
            }
        }
        for ((v, a), d) in values.iter_mut().zip(&acc).zip(&delta) {
            *v += *d * (*a / m);
        }
    }
    Ok((values, calls))
}
