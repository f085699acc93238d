use crate::error::{Error, Result};
use crate::graph::eval::BackpropRule;
use crate::graph::model::ModelGraph;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Largest component-wise discrepancy between the reverse-mode gradient and
/// central finite differences with step `epsilon`.
///
/// The error for each feature is `|g - fd| / max(1, |g|, |fd|)`, i.e.
/// relative for large derivatives and absolute near zero. Points on a kink
/// produce a large error, not a failure.
pub fn check_gradient<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    epsilon: T,
) -> Result<T> {
    if epsilon <= T::zero() || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "finite-difference epsilon must be positive, got {epsilon}"
        )));
    }
    let analytic = model.gradient(input, BackpropRule::Standard)?;
    let mut probe = input.values().to_vec();
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for i in 0..probe.len() {
        let original = probe[i];
        probe[i] = original + epsilon;
        let plus = model.value(&Tensor::from_parts_unchecked(input.shape().to_vec(), probe.clone()))?;
        probe[i] = original - epsilon;
        let minus = model.value(&Tensor::from_parts_unchecked(input.shape().to_vec(), probe.clone()))?;
        probe[i] = original;
        let fd = (plus - minus) / (two * epsilon);
        let g = analytic[i];
        let scale = T::one().max(g.abs()).max(fd.abs());
        worst = worst.max((g - fd).abs() / scale);
    }
    Ok(worst)
}
