use num_complex::Complex64 as C64;
use spqm::group::*;
use spqm::SpqmError;

fn sample_hc() -> HCCoords {
    HCCoords { nu: C64::new(0.3, -0.2), r: 0.9, z: C64::new(0.15, 0.4), mu: C64::new(-0.1, 0.25) }
}

#[test]
fn chart_round_trip() {
    let x = sample_hc();
    let y = hc_to_cartan(&x).unwrap();
    let back = cartan_to_hc(&y).unwrap();
    for (a, b) in x.to_array().iter().zip(back.to_array()) {
        assert!((a - b).abs() < 1e-13);
    }
    assert!((y.ell - (x.s() - gauge_hc(&x).unwrap().f)).abs() < 1e-14);
}

#[test]
fn array_layout_round_trips() {
    let x = sample_hc();
    assert_eq!(HCCoords::from_array(x.to_array()), x);
    let y = hc_to_cartan(&x).unwrap();
    let yy = CartanCoords::from_array(y.to_array());
    for (a, b) in y.to_array().iter().zip(yy.to_array()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn both_charts_represent_the_same_operator() {
    let x = sample_hc();
    let y = hc_to_cartan(&x).unwrap();
    let a = represent_hc(&x, 30).unwrap().interior();
    let b = represent_cartan(&y, 30).unwrap().interior();
    assert!((&a - &b).norm_fro() < 1e-9 * a.norm_fro(), "{}", (&a - &b).norm_fro());
}

#[test]
fn gauges_agree_across_charts() {
    let x = sample_hc();
    let y = hc_to_cartan(&x).unwrap();
    let g1 = gauge_functions(&Coords::Hc(x)).unwrap();
    let g2 = gauge_functions(&Coords::Cartan(y)).unwrap();
    assert!((g1.f - g2.f).abs() < 1e-13 && (g1.xi - g2.xi).abs() < 1e-13);
}

#[test]
fn singular_ruler_is_rejected() {
    let mut x = sample_hc();
    x.r = 0.0;
    assert!(matches!(hc_to_cartan(&x), Err(SpqmError::SingularChart { .. })));
}

#[test]
fn left_multiplication_matches_group_product_up_to_central_shift() {
    // The exact product with the one-step element pairs dw* with the
    // undecayed ν; the recursion uses the decayed one. Only z differs.
    let x = sample_hc();
    let (dw, kappa, dt) = (C64::new(0.05, -0.03), 1.3, 0.01);
    let x1 = increment_left_multiply(&x, dw, kappa, dt);
    let c = dw * kappa.sqrt();
    let rho = (-2.0 * kappa * dt).exp();
    let step = increment_left_multiply(&HCCoords::identity(), dw, kappa, dt);
    let mut exact = x1;
    exact.z += c.conj() * x.nu * (1.0 - rho);
    let lhs = represent_hc(&exact, 30).unwrap().interior();
    let rhs = represent_hc(&step, 30).unwrap().matmul(&represent_hc(&x, 30).unwrap()).interior();
    assert!((&lhs - &rhs).norm_fro() < 1e-10 * lhs.norm_fro(), "{}", (&lhs - &rhs).norm_fro());
}

#[test]
fn haar_densities() {
    let x = sample_hc();
    let h = haar_density(&Coords::Hc(x)).unwrap();
    assert!((h - (2.0 * x.r).exp() / (4.0 * std::f64::consts::PI.powi(2))).abs() < 1e-14);
    let y = hc_to_cartan(&x).unwrap();
    let c = haar_density(&Coords::Cartan(y)).unwrap();
    assert!((c - x.r.sinh().powi(2) / std::f64::consts::PI.powi(2)).abs() < 1e-14);
}

#[test]
fn frame_generators_at_identity_point() {
    let x = Coords::Hc(HCCoords { nu: C64::new(0.1, 0.0), r: 0.5, z: C64::new(0.0, 0.0), mu: C64::new(0.0, 0.2) });
    for d in Direction::ALL {
        let res = frame_derivative_residual(&x, 20, d).unwrap();
        assert!(res.relative() < 1e-6, "{d:?}: {}", res.relative());
    }
}

#[test]
fn jacobian_has_full_rank() {
    let j = hc_to_cartan_jacobian(&sample_hc()).unwrap();
    assert!(j.determinant().abs() > 1e-6);
    assert!(jacobian_consistency_residual(&sample_hc()).unwrap() < 1e-6);
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn hc_to_cartan_examples() {
    let origin = HCCoords { nu: c(0.0, 0.0), r: 1.0, z: c(0.0, 0.0), mu: c(0.0, 0.0) };
    let y = hc_to_cartan(&origin).unwrap();
    assert_eq!((y.beta, y.phi, y.r, y.ell, y.alpha), (c(0.0, 0.0), 0.0, 1.0, 0.0, c(0.0, 0.0)));
    for &(cv, r) in &[(0.7, 0.3), (-1.2, 2.0), (0.05, 9.0)] {
        let y = hc_to_cartan(&HCCoords { nu: c(cv, 0.0), r, z: c(0.1, 0.2), mu: c(cv, 0.0) }).unwrap();
        let want = cv * (0.5 * r).exp() / (2.0 * (0.5 * r).sinh());
        assert!((y.beta - c(want, 0.0)).norm() < 1e-13 * want.abs().max(1.0));
        assert!((y.alpha - c(want, 0.0)).norm() < 1e-13 * want.abs().max(1.0));
    }
}

#[test]
fn cartan_to_hc_examples() {
    let b = c(0.4, -0.3);
    let r = 1.3;
    let y = CartanCoords { beta: b, phi: 0.0, r, ell: 0.0, alpha: b };
    let x = cartan_to_hc(&y).unwrap();
    let g = gauge_cartan(&y).unwrap();
    let want = b * (1.0 - (-r).exp());
    assert!((x.nu - want).norm() < 1e-15 && (x.mu - want).norm() < 1e-15);
    assert!((x.s() - g.f).abs() < 1e-15 && (x.psi() - g.xi).abs() < 1e-15);

    let far = CartanCoords { beta: c(1.0, 0.0), phi: 0.0, r: 30.0, ell: 0.0, alpha: c(0.0, 0.0) };
    let x = cartan_to_hc(&far).unwrap();
    assert!((x.nu - c(1.0, 0.0)).norm() < 1e-12 && x.mu.norm() < 1e-12);
    assert!((gauge_cartan(&far).unwrap().f - 0.5).abs() < 1e-12);

    let coset = CartanCoords { beta: c(0.0, 0.0), phi: 0.0, r: 0.5, ell: 0.0, alpha: c(0.0, 0.0) };
    assert_eq!(
        cartan_to_hc(&coset).unwrap(),
        HCCoords { nu: c(0.0, 0.0), r: 0.5, z: c(0.0, 0.0), mu: c(0.0, 0.0) }
    );
}

#[test]
fn gauge_examples() {
    let real = CartanCoords { beta: c(0.8, 0.0), phi: 0.3, r: 0.7, ell: 0.1, alpha: c(0.8, 0.0) };
    assert_eq!(gauge_cartan(&real).unwrap().xi, 0.0);
    let ones = CartanCoords { beta: c(1.0, 0.0), phi: 0.0, r: 30.0, ell: 0.0, alpha: c(1.0, 0.0) };
    assert!((gauge_cartan(&ones).unwrap().f - 1.0).abs() < 1e-12);
    let zero = gauge_hc(&HCCoords { nu: c(0.0, 0.0), r: 0.9, z: c(0.2, 0.1), mu: c(0.0, 0.0) }).unwrap();
    assert_eq!((zero.f, zero.xi), (0.0, 0.0));
}

#[test]
fn representation_examples() {
    let id = represent_hc(&HCCoords::identity(), 12).unwrap();
    assert!((&id - &spqm::fock::FockOperator::identity(12)).norm_op() < 1e-15);
    let r = 0.8;
    let diag = represent_hc(&HCCoords { nu: c(0.0, 0.0), r, z: c(0.0, 0.0), mu: c(0.0, 0.0) }, 12).unwrap();
    for i in 0..12 {
        for j in 0..12 {
            let want = if i == j { (-(i as f64 + 0.5) * r).exp() } else { 0.0 };
            assert!((diag[(i, j)] - c(want, 0.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn increment_examples() {
    let (kappa, dt, dw) = (1.3, 1e-2, c(0.05, -0.02));
    let x = increment_left_multiply(&HCCoords::identity(), dw, kappa, dt);
    let want = dw * kappa.sqrt();
    assert!((x.nu - want).norm() < 1e-16 && (x.mu - want).norm() < 1e-16);
    assert!((x.r - 2.0 * kappa * dt).abs() < 1e-16);
    assert!((x.z - c(0.5 * kappa * dw.norm_sqr(), 0.0)).norm() < 1e-16);

    let start = HCCoords { nu: c(0.3, 0.1), r: 0.4, z: c(-0.2, 0.5), mu: c(0.1, -0.6) };
    let y = increment_left_multiply(&start, c(0.0, 0.0), kappa, dt);
    assert!((y.nu - start.nu * (-2.0 * kappa * dt).exp()).norm() < 1e-16);
    assert_eq!((y.mu, y.z), (start.mu, start.z));
    assert!((y.r - start.r - 2.0 * kappa * dt).abs() < 1e-15);
}

#[test]
fn haar_density_values() {
    let y = CartanCoords { beta: c(0.0, 0.0), phi: 0.0, r: 1.0, ell: 0.0, alpha: c(0.0, 0.0) };
    // sinh²(1)/π² = 0.13993446843617935
    assert!((haar_density(&Coords::Cartan(y)).unwrap() - 0.139_934_468_436_179_35).abs() < 1e-15);
    let x = HCCoords::identity();
    let want = 1.0 / (2.0 * std::f64::consts::PI).powi(2);
    assert!((haar_density(&Coords::Hc(x)).unwrap() - want).abs() < 1e-16);
}

#[test]
fn analytic_frame_generators() {
    let ops = spqm::fock::canonical_operators(10).unwrap();
    let g = frame_generator(&Coords::Hc(HCCoords::identity()), 10, Direction::Left1).unwrap();
    assert!((&g - &ops.a_dag.scale_real(std::f64::consts::FRAC_1_SQRT_2)).norm_op() < 1e-14);
    let x = HCCoords { nu: c(0.0, 0.0), r: 0.6, z: c(0.1, 0.2), mu: c(0.3, -0.1) };
    let g = frame_generator(&Coords::Hc(x), 10, Direction::Ruler).unwrap();
    assert!((&g + &ops.ho).norm_op() < 1e-14);
}

#[test]
fn jacobian_residual_examples() {
    let origin = HCCoords { nu: c(0.0, 0.0), r: 1.0, z: c(0.0, 0.0), mu: c(0.0, 0.0) };
    assert!(jacobian_consistency_residual(&origin).unwrap() <= 1e-6);
    let near = HCCoords { nu: c(0.12, -0.31), r: 0.2, z: c(0.05, 0.4), mu: c(-0.27, 0.08) };
    assert!(jacobian_consistency_residual(&near).unwrap() <= 1e-5);
    let far = HCCoords { nu: c(0.9, 0.4), r: 5.0, z: c(-0.3, 1.1), mu: c(0.2, -0.7) };
    assert!(jacobian_consistency_residual(&far).unwrap() <= 1e-6);
}
