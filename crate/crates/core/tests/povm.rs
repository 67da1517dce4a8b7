use num_complex::Complex64 as C64;
use spqm::fock::FockOperator;
use spqm::povm::*;
use spqm::SpqmError;

#[test]
fn partition_identity_and_warning() {
    let p = partition_function_check(1.0, 60).unwrap();
    assert!(p.residual < 1e-12 && !p.truncation_warning);
    let q = partition_function_check(0.05, 20).unwrap();
    assert!(q.truncation_warning && q.residual > 1e-3);
}

#[test]
fn completeness_small_grid() {
    let r = completeness_quadrature(0.5, 10, 30, 48).unwrap();
    assert!(r.deviation < 1e-6, "{r:?}");
    assert!(completeness_integral(0.0, 10, 4, 4).is_err());
}

#[test]
fn analytic_channel_preserves_trace_and_positivity() {
    let dim = 10;
    let sup = analytic_channel(0.2, dim).unwrap();
    let mut rho = FockOperator::zeros(dim);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    let out = apply_superoperator(&sup, &rho);
    assert!(out.is_hermitian());
    let ev = out.hermitian_eigenvalues();
    assert!(ev.iter().all(|&e| e > -1e-10));
    // Leakage past the truncation is tiny for this short time.
    assert!((out.trace().re - 1.0).abs() < 1e-3);
    assert!(matches!(analytic_channel(0.2, MAX_CHANNEL_DIM + 1), Err(SpqmError::Contract(_))));
}

#[test]
fn trace_distance_basic() {
    let a = FockOperator::from_diag([C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let b = FockOperator::from_diag([C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
    assert!(trace_distance(&a, &a) < 1e-15);
}

#[test]
fn channel_monte_carlo_small() {
    let dim = 6;
    let mut rho = FockOperator::zeros(dim);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    let cfg = ChannelConfig { kappa: 1.0, kt: 0.1, dt: 0.01, dim, paths: 2000, seed: 3 };
    let r = channel_monte_carlo(&rho, &cfg).unwrap();
    assert_eq!(r.steps, 10);
    assert!(r.trace_distance < 0.05, "{r:?}");
    let bad = ChannelConfig { kt: 0.105, ..cfg.clone() };
    assert!(channel_monte_carlo(&rho, &bad).is_err());
    assert!(channel_monte_carlo(&FockOperator::zeros(4), &cfg).is_err());
}

#[test]
fn kraus_operators_approach_coherent_projectors() {
    for kt in [2.0, 4.0] {
        let res = late_time_coherent_residual(kt, C64::new(0.5, 0.2), C64::new(-0.3, 0.4), 40).unwrap();
        assert!((res - (-2.0 * kt).exp()).abs() < 1e-8, "kt={kt}: {res}");
    }
}

#[test]
fn partition_examples() {
    let half = partition_function_check(0.5, 60).unwrap();
    assert!((half.trace - 1.0 / (2.0 * 1f64.sinh())).abs() < 1e-15, "{half:?}");
    assert!((half.trace - 0.425_459_0).abs() < 1e-7 && half.residual <= 1e-10);
    let late = partition_function_check(3.0, 20).unwrap();
    assert!((late.trace / (-6f64).exp() - 1.0).abs() < 1e-5);
    assert!(partition_function_check(1.0, 40).unwrap().residual <= 1e-12);
}

#[test]
fn completeness_at_late_time_and_grid_refinement() {
    let rep = completeness_quadrature(4.0, 16, 40, 64).unwrap();
    assert!(rep.deviation <= 1e-3, "{}", rep.deviation);
    assert!(rep.grid_converged);
    let kt = 4.0;
    let integrand_gap = late_time_coherent_residual(kt, C64::new(0.5, -0.3), C64::new(0.5, -0.3), 40).unwrap();
    assert!(integrand_gap <= (-2.0 * kt).exp() * 1.01);
}

#[test]
fn zero_time_channel_is_identity() {
    let rho = FockOperator::from_fn(6, |i, j| C64::new(if i == j { 1.0 / 6.0 } else { 0.0 }, 0.0));
    let cfg = ChannelConfig { kappa: 1.0, kt: 0.0, dt: 1e-3, dim: 6, paths: 10, seed: 1 };
    let rep = channel_monte_carlo(&rho, &cfg).unwrap();
    assert_eq!(rep.steps, 0);
    assert!(rep.trace_distance < 1e-14);
}

#[test]
fn late_time_coherent_examples() {
    let one = C64::new(1.0, 0.0);
    assert!(late_time_coherent_residual(3.0, one, one, 40).unwrap() <= 5e-3);
    let r2 = late_time_coherent_residual(2.0, one, one, 40).unwrap();
    let r3 = late_time_coherent_residual(3.0, one, one, 40).unwrap();
    assert!(((r3 / r2) / (-2f64).exp() - 1.0).abs() < 0.05, "{}", r3 / r2);
}
