//! Trained SVM decision values against recorded reference QP solutions.

mod common;

use aic_core::svm::{train_multiclass_svm_with, Kernel, KernelSpec, SolverOptions, SvmModel};
use common::{reference_fixture, ReferenceInstance};
use proptest::prelude::*;

pub const DECISION_TOL: f64 = 1e-3;
pub const KKT_TOL: f64 = 1e-3;

fn spec_of(kernel: &Kernel) -> KernelSpec {
    match *kernel {
        Kernel::Linear => KernelSpec::linear(),
        Kernel::Polynomial { degree } => KernelSpec::polynomial(degree),
        Kernel::Rbf { gamma } => KernelSpec::rbf(Some(gamma)),
    }
}

fn train(inst: &ReferenceInstance) -> SvmModel {
    let (model, _) = train_multiclass_svm_with(
        &inst.features,
        &inst.labels,
        inst.gamma,
        &spec_of(&inst.kernel),
        &SolverOptions::default(),
    )
    .unwrap();
    model
}

#[test]
fn two_class_decision_values_match_reference() {
    let fixture = reference_fixture();
    assert_eq!(fixture.two_class.len(), 50);
    for (n, inst) in fixture.two_class.iter().enumerate() {
        assert!(inst.features.len() <= 12);
        let model = train(inst);
        assert!(model.converged, "instance {n} did not converge");
        let biases = inst.biases.as_ref().unwrap();
        for (p, kp) in inst.points.iter().zip(&inst.kernel_part) {
            let g = model.decision_values(p).unwrap();
            for m in 0..2 {
                let expected = kp[m] - biases[m];
                assert!(
                    (g[m] - expected).abs() <= DECISION_TOL,
                    "instance {n}: g_{m} = {} vs reference {expected}",
                    g[m]
                );
            }
        }
        let r = model.kkt_residual(&inst.features, &inst.labels).unwrap();
        assert!(r <= KKT_TOL, "instance {n}: KKT residual {r}");
    }
}

#[test]
fn three_class_kernel_part_and_objective_match_reference() {
    let fixture = reference_fixture();
    for (n, inst) in fixture.three_class.iter().enumerate() {
        let opts = SolverOptions {
            record_objective: true,
            ..SolverOptions::default()
        };
        let spec = spec_of(&inst.kernel);
        let (model, sol) =
            train_multiclass_svm_with(&inst.features, &inst.labels, inst.gamma, &spec, &opts).unwrap();
        assert!(model.converged);
        assert!(
            (sol.objective - inst.objective).abs() <= DECISION_TOL * inst.objective.abs().max(1.0),
            "instance {n}: objective {} vs {}",
            sol.objective,
            inst.objective
        );
        for (p, kp) in inst.points.iter().zip(&inst.kernel_part) {
            let g = model.decision_values(p).unwrap();
            for m in 0..3 {
                let kernel_part = g[m] + model.biases[m];
                assert!(
                    (kernel_part - kp[m]).abs() <= DECISION_TOL,
                    "instance {n}: class {m} {kernel_part} vs {}",
                    kp[m]
                );
            }
        }
        assert!(model.kkt_residual(&inst.features, &inst.labels).unwrap() <= KKT_TOL);
    }
}

fn points_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u32>)> {
    (4usize..14, 1usize..4, 2u32..4).prop_flat_map(|(n, k, classes)| {
        (
            prop::collection::vec(prop::collection::vec(-3.0..3.0f64, k), n),
            prop::collection::vec(0..classes, n),
        )
            .prop_map(move |(x, mut y)| {
                // Every class present.
                for (c, label) in y.iter_mut().take(classes as usize).enumerate() {
                    *label = c as u32;
                }
                (x, y.into_iter().map(|c| c + 2).collect())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_invariants((x, y) in points_strategy(), gamma in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        let opts = SolverOptions { record_objective: true, ..SolverOptions::default() };
        let (model, sol) = train_multiclass_svm_with(&x, &y, gamma, &KernelSpec::linear(), &opts).unwrap();
        prop_assert!(model.converged);
        let residual = model.kkt_residual(&x, &y).unwrap();
        prop_assert!(residual >= 0.0);
        prop_assert!(residual <= KKT_TOL);
        // Dual objective never decreases.
        for w in sol.objective_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
        }
        // Per-class coefficient sums vanish; each variable stays in its box.
        for m in 0..model.classes.len() {
            let s: f64 = sol.coef.iter().map(|c| c[m]).sum();
            prop_assert!(s.abs() <= 1e-9);
        }
        for a in sol.alpha.iter().flatten() {
            prop_assert!(*a >= 0.0 && *a <= gamma);
        }
        // Points beyond the margin carry no weight.
        for (i, xi) in x.iter().enumerate() {
            let d = model.classes.binary_search(&y[i]).unwrap();
            let g = model.decision_values(xi).unwrap();
            for m in (0..g.len()).filter(|&m| m != d) {
                if g[d] - g[m] > 1.0 + 1e-3 {
                    prop_assert!(sol.alpha[i][m] <= 1e-6);
                }
            }
        }
        // Two classes: argmax agrees with the sign of the binary decision.
        if model.classes.len() == 2 {
            for p in &x {
                let probe: Vec<f64> = p.iter().map(|v| v * 0.7 + 0.3).collect();
                let bd = model.binary_decision(&probe).unwrap();
                let expected = if bd > 0.0 { model.classes[1] } else { model.classes[0] };
                prop_assert_eq!(model.predict(&probe).unwrap(), expected);
            }
        }
    }

    #[test]
    fn scaling_inputs_keeps_separable_training_labels(
        n in 4usize..12,
        seed in any::<u64>(),
        scale in 0.2f64..5.0,
    ) {
        // Two clusters separated along the first axis.
        let mut rng = aic_core::rng::seeded(seed);
        use rand::Rng as _;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let side = if i % 2 == 0 { -2.0 } else { 2.0 };
                vec![side + rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)]
            })
            .collect();
        let y: Vec<u32> = (0..n).map(|i| if i % 2 == 0 { 2 } else { 3 }).collect();
        let scaled: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        let a = aic_core::svm::train_multiclass_svm(&x, &y, 1e3, &KernelSpec::linear()).unwrap();
        let b = aic_core::svm::train_multiclass_svm(&scaled, &y, 1e3, &KernelSpec::linear()).unwrap();
        for i in 0..n {
            prop_assert_eq!(a.predict(&x[i]).unwrap(), y[i]);
            prop_assert_eq!(b.predict(&scaled[i]).unwrap(), y[i]);
        }
    }
}
