use serde::{Deserialize, Serialize};

use crate::attribution::{integrated_gradients, AttributionResult, BaselineSpec, RiemannConfig, RiemannRule};
use crate::error::{Error, Result};
use crate::graph::ModelGraph;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Output differences below this are treated as zero; the search then
/// accepts `m_min` immediately.
pub const NEGLIGIBLE_OUTPUT_DELTA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub tolerance_fraction: f64,
    pub m_min: usize,
    pub m_max: usize,
    pub rule: RiemannRule,
}

impl Default for AdaptiveConfig {
    /// 5% tolerance over 20..=300 steps with the right-endpoint rule.
    fn default() -> Self {
        Self {
            tolerance_fraction: 0.05,
            m_min: 20,
            m_max: 300,
            rule: RiemannRule::Right,
        }
    }
}

impl AdaptiveConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance_fraction > 0.0 && self.tolerance_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance fraction must lie in (0, 1), got {}",
                self.tolerance_fraction
            )));
        }
        if self.m_min == 0 || self.m_min > self.m_max {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= m_min <= m_max, got {}..{}",
                self.m_min, self.m_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome<T> {
    /// Step count of `result`.
    pub steps: usize,
    pub result: AttributionResult<T>,
    /// `(m, completeness gap)` for every step count tried.
    pub trajectory: Vec<(usize, T)>,
    pub converged: bool,
}

/// Doubles `m` from `m_min` until the completeness gap is within
/// `tolerance_fraction * |F(x) - F(x')|`. When doubling would overshoot
/// `m_max`, `m_max` itself is tried last. Never fails on an exhausted
/// budget; the outcome then carries the lowest-gap result and
/// `converged == false`.
pub fn adaptive_search<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
    config: &AdaptiveConfig,
) -> Result<AdaptiveOutcome<T>> {
    config.validate()?;
    let tolerance = T::lit(config.tolerance_fraction);
    let mut trajectory = Vec::new();
    let mut best: Option<(usize, AttributionResult<T>)> = None;
    let mut m = config.m_min;
    loop {
        let result = integrated_gradients(model, input, baseline, &RiemannConfig::new(m, config.rule)?)?;
        let gap = result.completeness_gap;
        trajectory.push((m, gap));
        let delta = result.output_delta().abs();
        let passed = delta < T::lit(NEGLIGIBLE_OUTPUT_DELTA) || gap <= tolerance * delta;
        if passed {
            return Ok(AdaptiveOutcome {
                steps: m,
                result,
                trajectory,
                converged: true,
            });
        }
        if best.as_ref().is_none_or(|(_, b)| gap < b.completeness_gap) {
            best = Some((m, result));
        }
        if m >= config.m_max {
            break;
        }
        m = (m * 2).min(config.m_max);
    }
    let (steps, result) = best.expect("at least one step count was tried");
    Ok(AdaptiveOutcome {
        steps,
        result,
        trajectory,
        converged: false,
    })
}

/// Like [`adaptive_search`] but reports an exhausted budget as
/// [`Error::BudgetExhausted`] carrying the best gap reached.
pub fn adaptive_steps<T: Scalar>(
    model: &ModelGraph<T>,
    input: &Tensor<T>,
    baseline: &BaselineSpec<T>,
    config: &AdaptiveConfig,
) -> Result<AdaptiveOutcome<T>> {
    let outcome = adaptive_search(model, input, baseline, config)?;
    if outcome.converged {
        Ok(outcome)
    } else {
        Err(Error::BudgetExhausted {
            max_steps: config.m_max,
            best_steps: outcome.steps,
            best_gap: outcome.result.completeness_gap.to_f64_lossy(),
        })
    }
}
