use num_complex::Complex64 as C64;
use spqm::fock::exp_number;
use spqm::group::{hc_to_cartan, Chart, HCCoords};
use spqm::moments::{kernel_inverse, Kernel};
use spqm::paths::*;
use spqm::SpqmError;

// Direct O(N²) evaluation of the stochastic sums.
fn naive_sums(p: &WienerPath) -> HCCoords {
    let n = p.len();
    let rho = (-2.0 * p.kappa * p.dt).exp();
    let c: Vec<C64> = p.increments.iter().map(|d| d * p.kappa.sqrt()).collect();
    let mut z = C64::new(0.0, 0.0);
    for k in 0..n {
        z += 0.5 * c[k].norm_sqr();
        for l in 0..k {
            z += c[k].conj() * c[l] * rho.powi((k - l) as i32);
        }
    }
    HCCoords {
        nu: (0..n).map(|k| c[k] * rho.powi((n - 1 - k) as i32)).sum(),
        r: 2.0 * p.kappa * p.dt * n as f64,
        z,
        mu: (0..n).map(|k| c[k] * rho.powi(k as i32)).sum(),
    }
}

#[test]
fn sampling_is_deterministic_per_index() {
    let a = sample_wiener_indexed(50, 0.01, 1.0, 3, 5);
    let b = sample_wiener_indexed(50, 0.01, 1.0, 3, 5);
    let c = sample_wiener_indexed(50, 0.01, 1.0, 3, 6);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(sample_wiener(50, 0.01, 1.0, 3), sample_wiener_indexed(50, 0.01, 1.0, 3, 0));
}

#[test]
fn plain_increments_have_unit_rate() {
    let p = sample_wiener_indexed(200_000, 1e-3, 1.0, 11, 0);
    let mean_sq: f64 = p.increments.iter().map(|d| d.norm_sqr()).sum::<f64>() / p.len() as f64;
    assert!((mean_sq / 1e-3 - 1.0).abs() < 0.01, "{mean_sq}");
}

#[test]
fn coarsen_sums_blocks() {
    let p = sample_wiener_indexed(12, 0.01, 2.0, 1, 0);
    let q = p.coarsen(3);
    assert_eq!(q.len(), 4);
    assert!((q.dt - 0.03).abs() < 1e-15);
    let s: C64 = p.increments[3..6].iter().sum();
    assert!((q.increments[1] - s).norm() < 1e-15);
}

#[test]
fn closed_form_matches_naive_double_sum() {
    for i in 0..5 {
        let p = sample_wiener_indexed(300, 0.004, 1.5, 21, i);
        let a = closed_form_hc(&p);
        let b = naive_sums(&p);
        assert!((a.nu - b.nu).norm() < 1e-12);
        assert!((a.mu - b.mu).norm() < 1e-12);
        assert!((a.z - b.z).norm() < 1e-11);
        assert!((a.r - b.r).abs() < 1e-12);
    }
}

#[test]
fn closed_form_cartan_matches_transformed_hc() {
    let p = sample_wiener_indexed(500, 0.002, 1.0, 4, 2);
    let y = closed_form_cartan(&p).unwrap();
    let yt = hc_to_cartan(&closed_form_hc(&p)).unwrap();
    assert!((y.beta - yt.beta).norm() < 1e-12);
    assert!((y.alpha - yt.alpha).norm() < 1e-12);
    assert!((y.ell - yt.ell).abs() < 1e-12 && (y.phi - yt.phi).abs() < 1e-12);
}

#[test]
fn empty_path_is_singular_for_cartan() {
    let p = WienerPath { dt: 0.01, kappa: 1.0, increments: Vec::new() };
    assert!(matches!(closed_form_cartan(&p), Err(SpqmError::SingularChart { .. })));
    assert!(propagate_sde(&p, Chart::Cartan).is_err());
    assert_eq!(propagate_sde(&p, Chart::Hc).unwrap().hc.len(), 1);
}

#[test]
fn trajectory_indices() {
    let p = sample_wiener_indexed(100, 0.01, 1.0, 9, 0);
    let t = propagate_sde(&p, Chart::Cartan).unwrap();
    assert_eq!(t.times.len(), 101);
    assert_eq!(t.cartan_start, 25);
    assert!(t.cartan_at(24).is_none());
    let y = t.cartan_at(25).unwrap();
    let yt = hc_to_cartan(&t.hc[25]).unwrap();
    assert!((y.beta - yt.beta).norm() < 1e-14);
    assert_eq!(t.cartan.len(), 76);
}

#[test]
fn sampler_factors_reproduce_inverse_kernel() {
    for &(n, dt, kappa) in &[(1usize, 0.01, 1.0), (2, 0.05, 1.0), (40, 0.01, 1.0), (64, 0.02, 3.0)] {
        let want = kernel_inverse(&Kernel::new(n, dt, kappa).unwrap()).unwrap();
        for method in [ModifiedMethod::Dense, ModifiedMethod::Banded] {
            let got = ModifiedSampler::new(n, dt, kappa, method).unwrap().realized_covariance();
            let err = (&got - &want).amax();
            assert!(err < 1e-10, "{method:?} n={n}: {err}");
        }
    }
}

#[test]
fn zero_rate_sampler_is_plain() {
    let s = ModifiedSampler::new(10, 0.01, 0.0, ModifiedMethod::Banded).unwrap();
    let cov = s.realized_covariance();
    assert!((cov - nalgebra::DMatrix::<f64>::identity(10, 10)).amax() < 1e-15);
}

#[test]
fn modified_sampling_is_reproducible() {
    let a = sample_modified(30, 0.01, 1.0, 8).unwrap();
    let b = sample_modified(30, 0.01, 1.0, 8).unwrap();
    assert_eq!(a, b);
}

#[test]
fn silent_path_gives_thermal_kraus() {
    let p = WienerPath { dt: 0.01, kappa: 1.0, increments: vec![C64::new(0.0, 0.0); 30] };
    let k = kraus_time_ordered(&p, 8).unwrap();
    let want = exp_number(8, 0.6, C64::new(0.0, 0.0));
    assert!((&k - &want).norm_fro() < 1e-12);
}

#[test]
fn kraus_product_tracks_closed_form() {
    let p = sample_wiener_indexed(200, 1e-3, 1.0, 5, 0);
    let k = kraus_time_ordered(&p, 20).unwrap();
    let r = spqm::group::represent_hc(&closed_form_hc(&p), 20).unwrap();
    let rel = (&k - &r).interior().norm_fro() / r.interior().norm_fro();
    assert!(rel < 5e-3, "{rel}");
}

#[test]
fn wiener_mean_and_second_moment_over_a_million_increments() {
    let (n, dt) = (1_000_000, 1e-2);
    let p = sample_wiener(n, dt, 1.0, 2024);
    let mean: C64 = p.increments.iter().sum::<C64>() / n as f64;
    assert!(mean.norm() <= 3.0 * (dt / n as f64).sqrt(), "{mean}");
    let second = p.increments.iter().map(|d| d.norm_sqr()).sum::<f64>() / n as f64;
    assert!((second / dt - 1.0).abs() < 0.01, "{second}");
}

#[test]
fn single_increment_closed_form() {
    let dw = C64::new(0.07, -0.03);
    let p = WienerPath { dt: 1e-3, kappa: 2.0, increments: vec![dw] };
    let x = closed_form_hc(&p);
    let c = dw * 2f64.sqrt();
    assert!((x.nu - c).norm() < 1e-16 && (x.mu - c).norm() < 1e-16);
    assert!((x.z - C64::new(0.5 * c.norm_sqr(), 0.0)).norm() < 1e-16);
}

#[test]
fn silent_path_examples() {
    let p = WienerPath { dt: 1e-2, kappa: 1.5, increments: vec![C64::new(0.0, 0.0); 40] };
    let kt = p.kt();
    let tr = propagate_sde(&p, Chart::Hc).unwrap();
    let end = tr.hc.last().unwrap();
    assert_eq!((end.nu, end.z, end.mu), (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    assert!((end.r - 2.0 * kt).abs() < 1e-12);
    let y = closed_form_cartan(&p).unwrap();
    assert_eq!((y.beta, y.alpha, y.ell, y.phi), (C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0, 0.0));
    assert!((y.r - 2.0 * kt).abs() < 1e-12);
}
