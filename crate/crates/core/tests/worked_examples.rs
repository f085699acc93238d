//! Worked examples with known answers, through the public API only.

mod common;

use attrib_core::attribution::{
    adaptive_steps, attribute, grad_times_input, integrated_gradients, path_integrated_gradients,
    validate_baseline, AdaptiveConfig, BaselineSpec, DiscreteVariant, MethodSpec, ModifiedRule, PathSpec,
    RiemannConfig, ShapleyMode,
};
use attrib_core::axioms::{
    build_appendix_a_counterexample, check_completeness, check_implementation_invariance, check_linearity,
    check_sensitivity_a, check_sensitivity_b_dummy, check_symmetry, EquivalencePair, SamplingConfig,
    SwapVerification, Verdict,
};
use attrib_core::fixtures::{build_fixture, FixtureId};
use attrib_core::{check_gradient, BackpropRule, Error, MethodSpec64, Model64, NodeSpec, Op};
use common::{random_point, t};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(id: FixtureId) -> Model64 {
    build_fixture(&id).unwrap()
}

fn linear23() -> Model64 {
    fixture(FixtureId::Linear { w: vec![2.0, 3.0], b: 0.0 })
}

fn ig(m: usize) -> MethodSpec64 {
    MethodSpec::IntegratedGradients { config: RiemannConfig::right(m).unwrap() }
}

fn run(model: &Model64, x: &[f64], method: &MethodSpec64) -> Vec<f64> {
    attribute(model, &t(x), &BaselineSpec::Zeros, method).unwrap().values.into_values()
}

fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
    assert_eq!(actual.len(), expected.len());
    for (a, e) in actual.iter().zip(expected) {
        // slack of a few ulps so values lying exactly on the tolerance edge pass
        assert!((a - e).abs() <= tol + 1e-12, "{actual:?} vs {expected:?}");
    }
}

#[test]
fn forward_values() {
    assert_eq!(fixture(FixtureId::AppendixF).value(&t(&[3.0, 1.0])).unwrap(), 1.0);
    assert_eq!(fixture(FixtureId::AppendixG).value(&t(&[3.0, 1.0])).unwrap(), 1.0);
    assert_eq!(fixture(FixtureId::OneRelu).value(&t(&[2.0])).unwrap(), 1.0);
    assert_eq!(fixture(FixtureId::Min2).value(&t(&[1.0, 3.0])).unwrap(), 1.0);
    assert_eq!(fixture(FixtureId::AppendixH).value(&t(&[0.5, 0.0])).unwrap(), -0.5);
    assert_eq!(fixture(FixtureId::AppendixK).value(&t(&[0.5, 0.0])).unwrap(), 0.0);
}

#[test]
fn f_and_g_agree_on_random_points() {
    let (f, g) = (fixture(FixtureId::AppendixF), fixture(FixtureId::AppendixG));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let x = random_point(&mut rng, 2, -5.0, 5.0);
        assert_eq!(f.value(&x).unwrap(), g.value(&x).unwrap(), "{:?}", x.values());
    }
}

#[test]
fn gradient_examples() {
    let one = fixture(FixtureId::OneRelu);
    assert_eq!(one.gradient(&t(&[2.0]), BackpropRule::Standard).unwrap().values(), &[0.0]);
    assert_eq!(one.gradient(&t(&[0.5]), BackpropRule::Standard).unwrap().values(), &[1.0]);
    let f = fixture(FixtureId::AppendixF);
    assert_eq!(f.gradient(&t(&[3.0, 1.0]), BackpropRule::Guided).unwrap()[1], 0.0);

    let logistic = fixture(FixtureId::LogisticSym { n: 2 });
    let g = logistic.gradient(&t(&[1.0, 1.0]), BackpropRule::Standard).unwrap();
    let s = 1.0 / (1.0 + (-2.0f64).exp());
    assert_close(g.values(), &[s * (1.0 - s); 2], 1e-15);
    assert!((g[0] - 0.10499).abs() < 1e-5);

    assert!(check_gradient(&logistic, &t(&[1.0, 1.0]), 1e-6).unwrap() <= 1e-6);
    assert!(check_gradient(&linear23(), &t(&[0.3, -2.0]), 1e-3).unwrap() <= 1e-9);
    assert!(check_gradient(&f, &t(&[3.0, 1.0]), 1e-6).unwrap() <= 1e-6);
}

#[test]
fn integrated_gradients_examples() {
    assert_close(&run(&fixture(FixtureId::AppendixF), &[3.0, 1.0], &ig(1000)), &[1.5, -0.5], 0.01);
    assert_close(&run(&fixture(FixtureId::AppendixG), &[3.0, 1.0], &ig(1000)), &[1.5, -0.5], 0.01);
    // right-rule nodes 1..=49 lie in the active region and node 50 sits on the
    // kink where relu' is 0, so the sum is exactly 49/50: on the tolerance edge
    let one_relu = run(&fixture(FixtureId::OneRelu), &[2.0], &ig(100));
    assert!((one_relu[0] - 0.98).abs() <= 1e-12, "{one_relu:?}");
    assert_close(&one_relu, &[1.0], 0.02);
    assert_close(&run(&fixture(FixtureId::Min2), &[1.0, 3.0], &ig(1000)), &[1.0, 0.0], 0.01);
    let logistic = run(&fixture(FixtureId::LogisticSym { n: 2 }), &[1.0, 1.0], &ig(500));
    assert_eq!(logistic[0], logistic[1]);
    assert!((logistic[0] - 0.1904).abs() < 0.001, "{logistic:?}");
}

#[test]
fn path_method_examples() {
    let f = fixture(FixtureId::AppendixF);
    let x = t(&[3.0, 1.0]);
    let config = RiemannConfig::right(1000).unwrap();
    let a = integrated_gradients(&f, &x, &BaselineSpec::Zeros, &config).unwrap();
    let b = path_integrated_gradients(&f, &x, &BaselineSpec::Zeros, &PathSpec::Straightline, &config).unwrap();
    assert_eq!(a.values, b.values);

    let r = path_integrated_gradients(
        &linear23(),
        &t(&[1.0, 1.0]),
        &BaselineSpec::Zeros,
        &PathSpec::AxisSequential(vec![1, 0]),
        &config,
    )
    .unwrap();
    assert_eq!(r.values.values(), &[2.0, 3.0]);

    let cex = fixture(FixtureId::SymmetryCex { a: 0.0, b: 1.0, i: 0, j: 1, n: 2 });
    let corner = PathSpec::Polyline(vec![t(&[1.0, 0.0])]);
    let r = path_integrated_gradients(&cex, &t(&[1.0, 1.0]), &BaselineSpec::Zeros, &corner, &config).unwrap();
    assert!(r.values[1] > r.values[0], "{:?}", r.values.values());
}

#[test]
fn gradient_based_examples() {
    let r = grad_times_input(&linear23(), &t(&[1.0, 1.0]), &BaselineSpec::Zeros).unwrap();
    assert_eq!(r.values.values(), &[2.0, 3.0]);
    assert_eq!(r.completeness_gap, 0.0);

    let f = fixture(FixtureId::AppendixF);
    for rule in [ModifiedRule::Guided, ModifiedRule::Deconvnet] {
        assert_eq!(run(&f, &[3.0, 1.0], &MethodSpec::ModifiedBackprop { rule })[1], 0.0);
    }

    // every signal positive: the modified rules coincide with gradient * input
    let chain = Model64::new(
        vec![
            NodeSpec::new("x", Op::Input { start: 0, len: 2 }, &[]),
            NodeSpec::new("h", Op::dense(vec![vec![1.0, 2.0], vec![0.5, 1.0]], vec![0.1, 0.2]), &["x"]),
            NodeSpec::new("r", Op::Relu, &["h"]),
            NodeSpec::new("out", Op::dense(vec![vec![1.0, 3.0]], vec![0.0]), &["r"]),
        ],
        "out",
        2,
    )
    .unwrap();
    let x = t(&[1.0, 2.0]);
    let gti = grad_times_input(&chain, &x, &BaselineSpec::Zeros).unwrap();
    for rule in [ModifiedRule::Guided, ModifiedRule::Deconvnet] {
        let r = attribute(&chain, &x, &BaselineSpec::Zeros, &MethodSpec::ModifiedBackprop { rule }).unwrap();
        assert_eq!(r.values, gti.values);
    }
}

#[test]
fn shapley_and_rescale_examples() {
    let exact = MethodSpec::ShapleyShubik { mode: ShapleyMode::Exact };
    assert_close(&run(&fixture(FixtureId::Min2), &[1.0, 3.0], &exact), &[0.5, 0.5], 1e-12);
    assert_close(&run(&linear23(), &[1.0, 1.0], &exact), &[2.0, 3.0], 1e-12);
    assert_close(&run(&fixture(FixtureId::AppendixF), &[3.0, 1.0], &exact), &[1.5, -0.5], 1e-12);

    let rescale = MethodSpec::DiscreteGradient { variant: DiscreteVariant::DeepliftRescale };
    assert_close(&run(&fixture(FixtureId::AppendixF), &[3.0, 1.0], &rescale), &[1.5, -0.5], 1e-12);
    assert_close(&run(&fixture(FixtureId::AppendixG), &[3.0, 1.0], &rescale), &[2.0, -1.0], 1e-12);
    assert_close(&run(&linear23(), &[1.0, 1.0], &rescale), &[2.0, 3.0], 1e-12);

    let lrp = MethodSpec::DiscreteGradient { variant: DiscreteVariant::LrpZeroBaseline };
    assert_eq!(run(&fixture(FixtureId::AppendixF), &[3.0, 1.0], &lrp), vec![1.5, -0.5]);
    // rescale needs an elementwise graph: min is rejected by name
    let err = attribute(&fixture(FixtureId::Min2), &t(&[1.0, 3.0]), &BaselineSpec::Zeros, &rescale).unwrap_err();
    assert!(matches!(err, Error::UnsupportedOp { ref op, .. } if op == "min"), "{err}");
}

#[test]
fn adaptive_step_examples() {
    let config = AdaptiveConfig::default();
    assert_eq!((config.m_min, config.m_max), (20, 300));
    let lin = adaptive_steps(&linear23(), &t(&[1.0, 1.0]), &BaselineSpec::Zeros, &config).unwrap();
    assert_eq!(lin.steps, 20);
    assert_eq!(lin.result.completeness_gap, 0.0);

    let f = adaptive_steps(&fixture(FixtureId::AppendixF), &t(&[3.0, 1.0]), &BaselineSpec::Zeros, &config).unwrap();
    assert!(f.steps <= 320 && f.result.completeness_gap <= 0.05);

    // an off-grid kink keeps the gap O(1/m), far above 1e-9 by m = 40
    let tight = AdaptiveConfig { tolerance_fraction: 1e-9, m_max: 40, ..config };
    let err = adaptive_steps(&fixture(FixtureId::AppendixF), &t(&[3.3, 1.0]), &BaselineSpec::Zeros, &tight).unwrap_err();
    assert!(matches!(err, Error::BudgetExhausted { max_steps: 40, .. }), "{err}");
}

#[test]
fn baseline_validation_examples() {
    let zeros = BaselineSpec::Zeros;
    assert!(validate_baseline(&fixture(FixtureId::AppendixF), &zeros, 0.01).unwrap().passed);
    assert!(!validate_baseline(&fixture(FixtureId::LogisticSym { n: 2 }), &zeros, 0.01).unwrap().passed);
    assert!(validate_baseline(&fixture(FixtureId::OneRelu), &zeros, 0.01).unwrap().passed);
}

#[test]
fn completeness_audit_examples() {
    let f = fixture(FixtureId::AppendixF);
    assert!(check_completeness(&f, &ig(1000), &t(&[3.0, 1.0]), &BaselineSpec::Zeros, 0.02).unwrap().passed());
    let one = fixture(FixtureId::OneRelu);
    let r = check_completeness(&one, &MethodSpec::Gradients, &t(&[2.0]), &BaselineSpec::Zeros, 0.02).unwrap();
    assert!(r.failed());
    assert_eq!(r.witness.unwrap().completeness_gap, 1.0);
    let exact = MethodSpec::ShapleyShubik { mode: ShapleyMode::Exact };
    let min2 = fixture(FixtureId::Min2);
    assert!(check_completeness(&min2, &exact, &t(&[1.0, 3.0]), &BaselineSpec::Zeros, 1e-9).unwrap().passed());
}

#[test]
fn sensitivity_audit_examples() {
    let one = fixture(FixtureId::OneRelu);
    let probe = SamplingConfig { probes: vec![(vec![2.0], vec![0.0])], ..SamplingConfig::default() };
    let r = check_sensitivity_a(&one, &MethodSpec::Gradients, &probe, 1e-6).unwrap();
    assert!(r.failed());
    let w = r.witness.as_ref().unwrap();
    assert_eq!((w.input.clone(), w.baseline.clone()), (vec![2.0], vec![0.0]));
    assert!(r.replay(&one, None).unwrap());

    let f = fixture(FixtureId::AppendixF);
    let probe = SamplingConfig { probes: vec![(vec![3.0, 1.0], vec![3.0, 0.0])], ..SamplingConfig::default() };
    let guided = MethodSpec::ModifiedBackprop { rule: ModifiedRule::Guided };
    assert!(check_sensitivity_a(&f, &guided, &probe, 1e-6).unwrap().failed());

    let adaptive = MethodSpec::AdaptiveIntegratedGradients { config: AdaptiveConfig::default() };
    assert!(check_sensitivity_a(&one, &adaptive, &SamplingConfig::default(), 1e-6).unwrap().passed());
}

#[test]
fn dummy_audit_examples() {
    let wired = Model64::new(
        vec![
            NodeSpec::new("x", Op::Input { start: 0, len: 2 }, &[]),
            NodeSpec::new("out", Op::dense(vec![vec![1.5, -2.0]], vec![0.0]), &["x"]),
            NodeSpec::new("r", Op::Tanh, &["out"]),
        ],
        "r",
        3,
    )
    .unwrap();
    let sampling = SamplingConfig { trials: 25, ..SamplingConfig::default() };
    for method in [ig(100), MethodSpec::GradTimesInput, MethodSpec::ShapleyShubik { mode: ShapleyMode::Exact }] {
        let r = check_sensitivity_b_dummy(&wired, &method, 2, &sampling, 0.0).unwrap();
        assert!(r.passed(), "{}", method.label());
    }
}

#[test]
fn linearity_audit_examples() {
    let f = fixture(FixtureId::AppendixF);
    let ones = fixture(FixtureId::Linear { w: vec![1.0, 1.0], b: 0.0 });
    let x = t(&[3.0, 1.0]);
    let r = check_linearity(&f, &ones, 2.0, 0.5, &ig(300), &x, &BaselineSpec::Zeros, 1e-12).unwrap();
    assert!(r.passed(), "{:?}", r.notes);
    let exact = MethodSpec::ShapleyShubik { mode: ShapleyMode::Exact };
    assert!(check_linearity(&f, &ones, 2.0, 0.5, &exact, &x, &BaselineSpec::Zeros, 1e-9).unwrap().passed());
    // rescale on a composite sharing one input: recorded either way
    let rescale = MethodSpec::DiscreteGradient { variant: DiscreteVariant::DeepliftRescale };
    let g = fixture(FixtureId::AppendixG);
    let r = check_linearity(&f, &g, 1.0, 1.0, &rescale, &x, &BaselineSpec::Zeros, 1e-9).unwrap();
    assert_ne!(r.verdict, Verdict::Inconclusive);
}

#[test]
fn invariance_audit_examples() {
    let pair = EquivalencePair::new(fixture(FixtureId::AppendixF), fixture(FixtureId::AppendixG));
    let x = [t(&[3.0, 1.0])];
    let rescale = MethodSpec::DiscreteGradient { variant: DiscreteVariant::DeepliftRescale };
    let r = check_implementation_invariance(&pair, &rescale, &x, &BaselineSpec::Zeros, 1e-6).unwrap();
    assert!(r.failed());
    let w = r.witness.as_ref().unwrap();
    assert_eq!((w.attributions.clone(), w.reference.clone()), (vec![1.5, -0.5], Some(vec![2.0, -1.0])));
    assert!(r.replay(&pair.model_a, Some(&pair.model_b)).unwrap());

    assert!(check_implementation_invariance(&pair, &ig(1000), &x, &BaselineSpec::Zeros, 1e-6).unwrap().passed());
    assert!(check_implementation_invariance(&pair, &MethodSpec::Gradients, &x, &BaselineSpec::Zeros, 1e-6)
        .unwrap()
        .passed());
}

#[test]
fn symmetry_audit_examples() {
    let logistic = fixture(FixtureId::LogisticSym { n: 2 });
    let x = t(&[1.0, 1.0]);
    let verify = SwapVerification::default();
    assert!(check_symmetry(&logistic, &ig(300), &[(0, 1)], &x, &BaselineSpec::Zeros, 1e-12, &verify)
        .unwrap()
        .passed());
    let exact = MethodSpec::ShapleyShubik { mode: ShapleyMode::Exact };
    assert!(check_symmetry(&logistic, &exact, &[(0, 1)], &x, &BaselineSpec::Zeros, 1e-12, &verify)
        .unwrap()
        .passed());

    let cex = fixture(FixtureId::SymmetryCex { a: 0.0, b: 1.0, i: 0, j: 1, n: 2 });
    let corner = MethodSpec::PathMethod {
        path: PathSpec::Polyline(vec![t(&[1.0, 0.0])]),
        config: RiemannConfig::right(1000).unwrap(),
    };
    let r = check_symmetry(&cex, &corner, &[(0, 1)], &x, &BaselineSpec::Zeros, 1e-6, &verify).unwrap();
    assert!(r.failed());
    assert!(r.replay(&cex, None).unwrap());
}

#[test]
fn counterexample_construction_examples() {
    let cex = build_appendix_a_counterexample(&PathSpec::Polyline(vec![t(&[1.0, 0.0])])).unwrap();
    assert_eq!(cex.fixture, FixtureId::SymmetryCex { a: 0.0, b: 1.0, i: 0, j: 1, n: 2 });
    assert_eq!(cex.larger, 1);
    let mirrored = build_appendix_a_counterexample(&PathSpec::Polyline(vec![t(&[0.0, 1.0])])).unwrap();
    assert_eq!(mirrored.larger, 0);
    let err = build_appendix_a_counterexample(&PathSpec::Straightline).unwrap_err();
    assert!(err.to_string().contains("no counterexample for straightline"));
}
