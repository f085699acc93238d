//! Axiom audits for attribution methods.
//!
//! Each check runs a method on concrete inputs and returns an
//! [`AxiomReport`]. A failing report always carries a [`Witness`] whose
//! recorded attributions are reproduced bit-for-bit by [`AxiomReport::replay`].
//! Random sampling uses a ChaCha stream seeded per check, so reports are
//! stable for a given seed regardless of how many checks run in parallel.

mod audit;
mod checks;
mod counterexample;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{attribute, AttributionResult, BaselineSpec};
use crate::error::{Error, Result};
use crate::{MethodSpec64, Model64, Tensor64};

pub use audit::{run_audit, AuditBatch, AuditPlan};
pub use checks::{
    check_completeness, check_implementation_invariance, check_linearity, check_sensitivity_a,
    check_sensitivity_b_dummy, check_symmetry, EquivalencePair, SamplingConfig, SwapVerification,
};
pub use counterexample::{build_appendix_a_counterexample, CounterexampleSummary, SymmetryCounterexample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Completeness,
    SensitivityA,
    SensitivityBDummy,
    Linearity,
    ImplementationInvariance,
    Symmetry,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [
        Axiom::Completeness,
        Axiom::SensitivityA,
        Axiom::SensitivityBDummy,
        Axiom::Linearity,
        Axiom::ImplementationInvariance,
        Axiom::Symmetry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Completeness => "completeness",
            Axiom::SensitivityA => "sensitivity_a",
            Axiom::SensitivityBDummy => "sensitivity_b_dummy",
            Axiom::Linearity => "linearity",
            Axiom::ImplementationInvariance => "implementation_invariance",
            Axiom::Symmetry => "symmetry",
        }
    }

    /// Distinct RNG stream per axiom.
    pub(crate) fn rng(self, seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self as u64 + 1);
        rng
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == key || (key == "sensitivity_b" && *a == Axiom::SensitivityBDummy))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown axiom '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Concrete evidence for a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub input: Vec<f64>,
    pub baseline: Vec<f64>,
    /// Attributions of the audited model (the composite for linearity,
    /// `model_a` for implementation invariance).
    pub attributions: Vec<f64>,
    /// What `attributions` was compared against: `model_b`'s attributions,
    /// or the weighted sum for linearity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    pub completeness_gap: f64,
    pub output_delta: f64,
    /// The feature (sensitivity) or feature pair (symmetry) at fault.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub features: Vec<usize>,
}

impl Witness {
    pub(crate) fn from_result(
        input: &Tensor64,
        baseline: &Tensor64,
        result: &AttributionResult<f64>,
    ) -> Self {
        Self {
            input: input.values().to_vec(),
            baseline: baseline.values().to_vec(),
            attributions: result.values.values().to_vec(),
            reference: None,
            completeness_gap: result.completeness_gap,
            output_delta: result.output_delta(),
            features: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub method: MethodSpec64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub trials: usize,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AxiomReport {
    pub(crate) fn new(axiom: Axiom, method: &MethodSpec64, tolerance: f64) -> Self {
        Self {
            axiom,
            method: method.clone(),
            verdict: Verdict::Inconclusive,
            witness: None,
            trials: 0,
            tolerance,
            notes: Vec::new(),
        }
    }

    pub(crate) fn inconclusive(mut self, note: impl Into<String>) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.notes.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    /// Re-runs the method on the witness and checks that the recorded
    /// attributions come back bit-for-bit.
    ///
    /// `model` is the audited model (the composite graph for linearity,
    /// `model_a` for invariance); `partner` is `model_b` for invariance.
    pub fn replay(&self, model: &Model64, partner: Option<&Model64>) -> Result<bool> {
        let Some(w) = &self.witness else {
            return Ok(false);
        };
        let input = Tensor64::vector(w.input.clone())?;
        let baseline = BaselineSpec::Explicit(Tensor64::vector(w.baseline.clone())?);
        let rerun = attribute(model, &input, &baseline, &self.method)?;
        let mut same = rerun.values.values() == w.attributions.as_slice();
        if let (Axiom::ImplementationInvariance, Some(other), Some(reference)) =
            (self.axiom, partner, &w.reference)
        {
            let rerun = attribute(other, &input, &baseline, &self.method)?;
            same &= rerun.values.values() == reference.as_slice();
        }
        Ok(same)
    }
}

/// Errors that make a method inapplicable to a model rather than broken.
pub(crate) fn is_inapplicable(err: &Error) -> bool {
    matches!(
        err,
        Error::UnsupportedOp { .. } | Error::InvalidParameter(_) | Error::NonMonotonePath(_)
    )
}
