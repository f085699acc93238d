use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{attribute, BaselineSpec};
use crate::axioms::{is_inapplicable, Axiom, AxiomReport, Verdict, Witness};
use crate::error::{Error, Result};
use crate::{MethodSpec64, Model64, Tensor64};

/// Largest `|F_a - F_b|` (or `|F(x) - F(swap x)|`) still counted as agreement.
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

/// Random-trial settings shared by the sampled audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub trials: usize,
    pub seed: u64,
    /// Every coordinate is drawn uniformly from `[lo, hi)`.
    pub domain: (f64, f64),
    /// `(input, baseline)` pairs tried before any random ones.
    #[serde(default)]
    pub probes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            domain: (-5.0, 5.0),
            probes: Vec::new(),
        }
    }
}

fn sample_point(rng: &mut ChaCha8Rng, n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn tensor(v: &[f64]) -> Result<Tensor64> {
    Tensor64::vector(v.to_vec())
}

/// Passes iff the completeness gap is at most `tolerance * max(1, |F(x) - F(x')|)`.
pub fn check_completeness(
    model: &Model64,
    method: &MethodSpec64,
    input: &Tensor64,
    baseline: &BaselineSpec<f64>,
    tolerance: f64,
) -> Result<AxiomReport> {
    let mut report = AxiomReport::new(Axiom::Completeness, method, tolerance);
    let resolved = baseline.resolve(input)?;
    let result = match attribute(model, input, baseline, method) {
        Ok(r) => r,
        Err(e) if is_inapplicable(&e) => return Ok(report.inconclusive(e.to_string())),
        Err(e) => return Err(e),
    };
    report.trials = 1;
    let allowed = tolerance * result.output_delta().abs().max(1.0);
    report.verdict = if result.completeness_gap <= allowed {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.notes.push(format!(
        "gap {:e} vs allowed {:e}",
        result.completeness_gap, allowed
    ));
    report.witness = Some(Witness::from_result(input, &resolved, &result));
    Ok(report)
}

/// Samples `(x, x')` differing in one feature with `|F(x) - F(x')| > 10 * tolerance`
/// and fails if that feature's attribution magnitude is at most `tolerance`.
pub fn check_sensitivity_a(
    model: &Model64,
    method: &MethodSpec64,
    sampling: &SamplingConfig,
    tolerance: f64,
) -> Result<AxiomReport> {
    let mut report = AxiomReport::new(Axiom::SensitivityA, method, tolerance);
    let n = model.input_arity();
    let floor = 10.0 * tolerance;
    let mut rng = Axiom::SensitivityA.rng(sampling.seed);
    let mut probes = sampling.probes.iter();
    let max_attempts = sampling.probes.len() + sampling.trials.max(1) * 50;

    for _ in 0..max_attempts {
        if report.trials >= sampling.trials.max(sampling.probes.len()) {
            break;
        }
        let (x, xb, feature) = match probes.next() {
            Some((x, xb)) => {
                let differing: Vec<usize> = (0..n).filter(|&i| x.get(i) != xb.get(i)).collect();
                if x.len() != n || xb.len() != n || differing.len() != 1 {
                    report.notes.push("skipped probe not differing in exactly one feature".into());
                    continue;
                }
                (x.clone(), xb.clone(), differing[0])
            }
            None => {
                let xb = sample_point(&mut rng, n, sampling.domain);
                let feature = rng.gen_range(0..n);
                let mut x = xb.clone();
                x[feature] = rng.gen_range(sampling.domain.0..sampling.domain.1);
                (x, xb, feature)
            }
        };
        let (xt, bt) = (tensor(&x)?, tensor(&xb)?);
        if (model.value(&xt)? - model.value(&bt)?).abs() <= floor {
            continue;
        }
        let result = match attribute(model, &xt, &BaselineSpec::Explicit(bt.clone()), method) {
            Ok(r) => r,
            Err(e) if is_inapplicable(&e) => return Ok(report.inconclusive(e.to_string())),
            Err(e) => return Err(e),
        };
        report.trials += 1;
        if result.values[feature].abs() <= tolerance {
            let mut witness = Witness::from_result(&xt, &bt, &result);
            witness.features = vec![feature];
            report.verdict = Verdict::Fail;
            report.witness = Some(witness);
            report.notes.push(format!(
                "feature {feature} changes the output by {:e} but receives attribution {:e}",
                result.output_delta(),
                result.values[feature]
            ));
            return Ok(report);
        }
    }
    if report.trials == 0 {
        return Ok(report.inconclusive("no sampled pair changed the output"));
    }
    report.verdict = Verdict::Pass;
    Ok(report)
}

/// Fails if a feature the model never reads gets `|attribution| > tolerance`.
pub fn check_sensitivity_b_dummy(
    model: &Model64,
    method: &MethodSpec64,
    dummy_index: usize,
    sampling: &SamplingConfig,
    tolerance: f64,
) -> Result<AxiomReport> {
    let mut report = AxiomReport::new(Axiom::SensitivityBDummy, method, tolerance);
    let n = model.input_arity();
    if dummy_index >= n {
        return Err(Error::InvalidParameter(format!(
            "dummy feature {dummy_index} out of range for arity {n}"
        )));
    }
    if model.wired_features()[dummy_index] {
        return Ok(report.inconclusive(format!("feature {dummy_index} is wired to the output")));
    }
    let mut rng = Axiom::SensitivityBDummy.rng(sampling.seed);
    let mut probes = sampling.probes.iter().filter(|(x, b)| x.len() == n && b.len() == n);
    for _ in 0..sampling.trials.max(1) {
        let (x, xb) = match probes.next() {
            Some((x, b)) => (x.clone(), b.clone()),
            None => (
                sample_point(&mut rng, n, sampling.domain),
                sample_point(&mut rng, n, sampling.domain),
            ),
        };
        let (xt, bt) = (tensor(&x)?, tensor(&xb)?);
        let result = match attribute(model, &xt, &BaselineSpec::Explicit(bt.clone()), method) {
            Ok(r) => r,
            Err(e) if is_inapplicable(&e) => return Ok(report.inconclusive(e.to_string())),
            Err(e) => return Err(e),
        };
        report.trials += 1;
        if result.values[dummy_index].abs() > tolerance {
            let mut witness = Witness::from_result(&xt, &bt, &result);
            witness.features = vec![dummy_index];
            report.verdict = Verdict::Fail;
            report.witness = Some(witness);
            return Ok(report);
        }
    }
    report.verdict = Verdict::Pass;
    Ok(report)
}

/// Compares attributions of `a * first + b * second` with the same
/// combination of the individual attributions, component-wise.
#[allow(clippy::too_many_arguments)]
pub fn check_linearity(
    first: &Model64,
    second: &Model64,
    a: f64,
    b: f64,
    method: &MethodSpec64,
    input: &Tensor64,
    baseline: &BaselineSpec<f64>,
    tolerance: f64,
) -> Result<AxiomReport> {
    let mut report = AxiomReport::new(Axiom::Linearity, method, tolerance);
    let composite = Model64::linear_combination(a, first, b, second)?;
    let run = |m: &Model64| attribute(m, input, baseline, method);
    let (combined, r1, r2) = match (run(&composite), run(first), run(second)) {
        (Ok(c), Ok(r1), Ok(r2)) => (c, r1, r2),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) if is_inapplicable(&e) => {
            return Ok(report.inconclusive(e.to_string()))
        }
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Err(e),
    };
    report.trials = 1;
    let expected: Vec<f64> = r1
        .values
        .values()
        .iter()
        .zip(r2.values.values())
        .map(|(u, v)| a * u + b * v)
        .collect();
    let worst = combined
        .values
        .values()
        .iter()
        .zip(&expected)
        .map(|(c, e)| (c - e).abs())
        .fold(0.0, f64::max);
    let resolved = baseline.resolve(input)?;
    let mut witness = Witness::from_result(input, &resolved, &combined);
    witness.reference = Some(expected);
    report.witness = Some(witness);
    report.notes.push(format!("max deviation {worst:e}"));
    report.verdict = if worst <= tolerance { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}

/// Two graphs claimed to compute the same function, with the sampling
/// evidence used to certify the claim.
#[derive(Debug, Clone)]
pub struct EquivalencePair {
    pub model_a: Model64,
    pub model_b: Model64,
    pub domain: (f64, f64),
    pub samples: usize,
    pub seed: u64,
}

impl EquivalencePair {
    pub fn new(model_a: Model64, model_b: Model64) -> Self {
        Self {
            model_a,
            model_b,
            domain: (-5.0, 5.0),
            samples: 1000,
            seed: 0,
        }
    }

    /// Largest `|F_a(x) - F_b(x)|` over the sampled box, or an error on an
    /// arity mismatch.
    pub fn max_disagreement(&self) -> Result<f64> {
        if self.model_a.input_arity() != self.model_b.input_arity() {
            return Err(Error::ArityMismatch {
                expected: self.model_a.input_arity(),
                actual: self.model_b.input_arity(),
            });
        }
        let mut rng = Axiom::ImplementationInvariance.rng(self.seed);
        let mut worst = 0.0_f64;
        for _ in 0..self.samples {
            let x = tensor(&sample_point(&mut rng, self.model_a.input_arity(), self.domain))?;
            worst = worst.max((self.model_a.value(&x)? - self.model_b.value(&x)?).abs());
        }
        Ok(worst)
    }
}

/// Fails if the two (sampled-equivalent) models attribute any input differently.
pub fn check_implementation_invariance(
    pair: &EquivalencePair,
    method: &MethodSpec64,
    inputs: &[Tensor64],
    baseline: &BaselineSpec<f64>,
    tolerance: f64,
) -> Result<AxiomReport> {
    let mut report = AxiomReport::new(Axiom::ImplementationInvariance, method, tolerance);
    let disagreement = pair.max_disagreement()?;
    report.notes.push(format!(
        "equivalence sampled at {} points in [{}, {}): max |F_a - F_b| = {disagreement:e}",
        pair.samples, pair.domain.0, pair.domain.1
    ));
    if disagreement > AGREEMENT_TOLERANCE {
        return Ok(report.inconclusive("models are not functionally equivalent on the sampled box"));
    }
    for input in inputs {
        let (ra, rb) = match (
            attribute(&pair.model_a, input, baseline, method),
            attribute(&pair.model_b, input, baseline, method),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) if is_inapplicable(&e) => {
                return Ok(report.inconclusive(e.to_string()))
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        report.trials += 1;
        let differs = ra
            .values
            .values()
            .iter()
            .zip(rb.values.values())
            .any(|(a, b)| (a - b).abs() > tolerance);
        if differs {
            let resolved = baseline.resolve(input)?;
            let mut witness = Witness::from_result(input, &resolved, &ra);
            witness.reference = Some(rb.values.values().to_vec());
            report.witness = Some(witness);
            report.verdict = Verdict::Fail;
            return Ok(report);
        }
    }
    if report.trials == 0 {
        return Ok(report.inconclusive("no inputs given"));
    }
    report.verdict = Verdict::Pass;
    Ok(report)
}

/// How declared symmetric pairs are checked before being audited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapVerification {
    pub samples: usize,
    pub domain: (f64, f64),
    pub seed: u64,
}

impl Default for SwapVerification {
    fn default() -> Self {
        Self {
            samples: 100,
            domain: (-5.0, 5.0),
            seed: 0,
        }
    }
}

impl SwapVerification {
    fn is_symmetric(&self, model: &Model64, (i, j): (usize, usize)) -> Result<bool> {
        let mut rng = Axiom::Symmetry.rng(self.seed ^ ((i as u64) << 32 | j as u64));
        for _ in 0..self.samples.max(100) {
            let x = sample_point(&mut rng, model.input_arity(), self.domain);
            let mut swapped = x.clone();
            swapped.swap(i, j);
            if (model.value(&tensor(&x)?)? - model.value(&tensor(&swapped)?)?).abs() > AGREEMENT_TOLERANCE {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Fails if features of a verified symmetric pair, with equal input and
/// equal baseline values, get attributions differing by more than `tolerance`.
#[allow(clippy::too_many_arguments)]
pub fn check_symmetry(
    model: &Model64,
    method: &MethodSpec64,
    pairs: &[(usize, usize)],
    input: &Tensor64,
    baseline: &BaselineSpec<f64>,
    tolerance: f64,
    verification: &SwapVerification,
) -> Result<AxiomReport> {
    let mut report = AxiomReport::new(Axiom::Symmetry, method, tolerance);
    let n = model.input_arity();
    let resolved = baseline.resolve(input)?;
    let (x, xb) = (input.values(), resolved.values());
    let mut verified = Vec::new();
    for &(i, j) in pairs {
        if i >= n || j >= n || i == j {
            report.notes.push(format!("pair ({i}, {j}) is not a valid feature pair"));
        } else if !verification.is_symmetric(model, (i, j))? {
            report.notes.push(format!("pair ({i}, {j}) failed swap verification"));
        } else if x[i] != x[j] || xb[i] != xb[j] {
            report.notes.push(format!("pair ({i}, {j}) has unequal input or baseline values"));
        } else {
            verified.push((i, j));
        }
    }
    if verified.is_empty() {
        return Ok(report.inconclusive("no verified symmetric pair"));
    }
    let result = match attribute(model, input, baseline, method) {
        Ok(r) => r,
        Err(e) if is_inapplicable(&e) => return Ok(report.inconclusive(e.to_string())),
        Err(e) => return Err(e),
    };
    report.trials = verified.len();
    for (i, j) in verified {
        let diff = (result.values[i] - result.values[j]).abs();
        if diff > tolerance {
            let mut witness = Witness::from_result(input, &resolved, &result);
            witness.features = vec![i, j];
            report.witness = Some(witness);
            report.verdict = Verdict::Fail;
            report.notes.push(format!("features {i} and {j} differ by {diff:e}"));
            return Ok(report);
        }
    }
    report.verdict = Verdict::Pass;
    Ok(report)
}
