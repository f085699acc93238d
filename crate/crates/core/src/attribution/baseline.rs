use serde::{Deserialize, Serialize};

use crate::attribution::BaselineSpec;
use crate::error::Result;
use crate::graph::ModelGraph;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BaselineVerdict<T> {
    /// `|F(x')|`
    pub score: T,
    pub threshold: T,
    pub passed: bool,
}

/// Checks that the baseline scores near zero, i.e. `|F(x')| <= threshold`.
pub fn validate_baseline<T: Scalar>(
    model: &ModelGraph<T>,
    baseline: &BaselineSpec<T>,
    threshold: T,
) -> Result<BaselineVerdict<T>> {
    let resolved = baseline.resolve_for(model)?;
    let score = model.value(&resolved)?.abs();
    Ok(BaselineVerdict {
        score,
        threshold,
        passed: score <= threshold,
    })
}
