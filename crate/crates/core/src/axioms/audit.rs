use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::BaselineSpec;
use crate::axioms::checks::{
    check_completeness, check_implementation_invariance, check_linearity, check_sensitivity_a,
    check_sensitivity_b_dummy, check_symmetry, EquivalencePair, SamplingConfig, SwapVerification,
};
use crate::axioms::{Axiom, AxiomReport, Verdict};
use crate::error::{Error, Result};
use crate::fixtures::{build_fixture, FixtureId};
use crate::{MethodSpec64, Model64, Tensor64};

/// Everything an audit batch needs besides the model itself.
#[derive(Debug, Clone)]
pub struct AuditPlan {
    pub method: MethodSpec64,
    pub axioms: Vec<Axiom>,
    /// Input for the single-point checks; defaults to all ones.
    pub input: Option<Tensor64>,
    pub baseline: BaselineSpec<f64>,
    pub sampling: SamplingConfig,
    /// Per-axiom tolerance overrides.
    pub tolerances: Vec<(Axiom, f64)>,
    /// Functionally equivalent partner for implementation invariance;
    /// without one an automatically rewritten copy of the model is used.
    pub partner: Option<Model64>,
    /// Feature pairs declared symmetric; by default every pair on which the
    /// input and baseline agree is tried (and swap-verified).
    pub symmetric_pairs: Option<Vec<(usize, usize)>>,
    /// Feature the model ignores; by default a dummy feature is appended.
    pub dummy_index: Option<usize>,
    /// Second function and weights `(f2, a, b)` for linearity; defaults to
    /// `linear(1, ..., 1; 0)` with `a = 2`, `b = 0.5`.
    pub linearity_partner: Option<(Model64, f64, f64)>,
}

impl AuditPlan {
    pub fn new(method: MethodSpec64) -> Self {
        Self {
            method,
            axioms: Axiom::ALL.to_vec(),
            input: None,
            baseline: BaselineSpec::Zeros,
            sampling: SamplingConfig::default(),
            tolerances: Vec::new(),
            partner: None,
            symmetric_pairs: None,
            dummy_index: None,
            linearity_partner: None,
        }
    }

    pub fn default_tolerance(axiom: Axiom) -> f64 {
        match axiom {
            Axiom::Completeness => 0.05,
            Axiom::SensitivityA => 1e-6,
            Axiom::SensitivityBDummy => 1e-9,
            Axiom::Linearity => 1e-9,
            Axiom::ImplementationInvariance => 1e-6,
            Axiom::Symmetry => 1e-9,
        }
    }

    pub fn tolerance(&self, axiom: Axiom) -> f64 {
        self.tolerances
            .iter()
            .rev()
            .find(|(a, _)| *a == axiom)
            .map_or_else(|| Self::default_tolerance(axiom), |(_, t)| *t)
    }
}

/// Reports for one audit run, in the order the axioms were requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditBatch {
    pub method: String,
    pub seed: u64,
    pub reports: Vec<AxiomReport>,
}

impl AuditBatch {
    pub fn any_failed(&self) -> bool {
        self.reports.iter().any(AxiomReport::failed)
    }

    pub fn verdict(&self, axiom: Axiom) -> Option<Verdict> {
        self.reports.iter().find(|r| r.axiom == axiom).map(|r| r.verdict)
    }
}

/// Runs each requested axiom check as an independent job.
pub fn run_audit(model: &Model64, plan: &AuditPlan) -> Result<AuditBatch> {
    let n = model.input_arity();
    let input = match &plan.input {
        Some(x) if x.len() != n => {
            return Err(Error::ArityMismatch { expected: n, actual: x.len() })
        }
        Some(x) => x.clone(),
        None => Tensor64::filled(vec![n], 1.0)?,
    };
    if let Some(partner) = &plan.partner {
        if partner.input_arity() != n {
            return Err(Error::ArityMismatch { expected: n, actual: partner.input_arity() });
        }
    }
    let reports = plan
        .axioms
        .par_iter()
        .map(|&axiom| run_one(model, plan, axiom, &input))
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditBatch {
        method: plan.method.label(),
        seed: plan.sampling.seed,
        reports,
    })
}

fn run_one(model: &Model64, plan: &AuditPlan, axiom: Axiom, input: &Tensor64) -> Result<AxiomReport> {
    let method = &plan.method;
    let tol = plan.tolerance(axiom);
    let baseline = &plan.baseline;
    match axiom {
        Axiom::Completeness => check_completeness(model, method, input, baseline, tol),
        Axiom::SensitivityA => check_sensitivity_a(model, method, &plan.sampling, tol),
        Axiom::SensitivityBDummy => match plan.dummy_index {
            Some(d) => check_sensitivity_b_dummy(model, method, d, &plan.sampling, tol),
            None => {
                let padded = model.with_dummy_feature()?;
                let mut report =
                    check_sensitivity_b_dummy(&padded, method, model.input_arity(), &plan.sampling, tol)?;
                report.notes.push("dummy feature appended to the model".into());
                Ok(report)
            }
        },
        Axiom::Linearity => {
            let (second, a, b) = match &plan.linearity_partner {
                Some(p) => p.clone(),
                None => {
                    let ones = FixtureId::Linear { w: vec![1.0; model.input_arity()], b: 0.0 };
                    (build_fixture(&ones)?, 2.0, 0.5)
                }
            };
            check_linearity(model, &second, a, b, method, input, baseline, tol)
        }
        Axiom::ImplementationInvariance => {
            let (partner, note) = match &plan.partner {
                Some(p) => (p.clone(), None),
                None => (
                    model.equivalent_rewrite()?,
                    Some("partner is the rewrite relu(y) - relu(-y) of the model"),
                ),
            };
            let pair = EquivalencePair {
                domain: plan.sampling.domain,
                seed: plan.sampling.seed,
                ..EquivalencePair::new(model.clone(), partner)
            };
            let mut inputs = vec![input.clone()];
            let mut rng = Axiom::ImplementationInvariance.rng(plan.sampling.seed.wrapping_add(1));
            let (lo, hi) = plan.sampling.domain;
            for _ in 0..plan.sampling.trials {
                use rand::Rng;
                let x: Vec<f64> = (0..model.input_arity()).map(|_| rng.gen_range(lo..hi)).collect();
                inputs.push(Tensor64::vector(x)?);
            }
            let mut report = check_implementation_invariance(&pair, method, &inputs, baseline, tol)?;
            report.notes.extend(note.map(String::from));
            Ok(report)
        }
        Axiom::Symmetry => {
            let pairs = match &plan.symmetric_pairs {
                Some(p) => p.clone(),
                None => {
                    let n = model.input_arity();
                    let resolved = baseline.resolve(input)?;
                    let (x, b) = (input.values(), resolved.values());
                    (0..n)
                        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                        .filter(|&(i, j)| x[i] == x[j] && b[i] == b[j])
                        .collect()
                }
            };
            let verification = SwapVerification {
                domain: plan.sampling.domain,
                seed: plan.sampling.seed,
                ..SwapVerification::default()
            };
            check_symmetry(model, method, &pairs, input, baseline, tol, &verification)
        }
    }
}
