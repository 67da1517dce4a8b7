//! Acceptance suite: one check per criterion with pinned tolerances.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dists::{
    feynman_kac_estimate, gauge_relation_residual, normalization, sigma_rate, sigma_width, FkConfig,
    Measure, Observable, ReducedPoint, Weight,
};
use crate::error::Result;
use crate::fock::FockOperator;
use crate::group::{
    frame_derivative_residual, gauge_hc, hc_to_cartan, jacobian_consistency_residual, represent_hc,
    CartanCoords, Coords, Direction, HCCoords,
};
use crate::moments::{
    analytic_determinant, analytic_moments, dense_determinant, direct_moments, kernel_inverse,
    persymmetry_defect, recursive_determinant, riccati_integrate, Kernel,
};
use crate::par::{map_chunks, CHUNK};
use crate::paths::{
    closed_form_hc, hc_endpoint, kraus_time_ordered, propagate_sde, sample_wiener_indexed,
    ModifiedMethod, ModifiedSampler,
};
use crate::povm::{channel_monte_carlo, completeness_quadrature, partition_function_check, ChannelConfig};

/// Pinned tolerances.
pub mod tol {
    pub const MOMENTS_ABS: f64 = 5e-3;
    pub const HALVING_RATIO: (f64, f64) = (1.8, 2.2);
    pub const MOMENTS_SECONDS: f64 = 30.0;
    pub const RICCATI: f64 = 1e-8;
    pub const DET_RECURSION_REL: f64 = 1e-10;
    pub const DET_CLOSED_REL: f64 = 5e-3;
    pub const PERSYMMETRY: f64 = 1e-12;
    pub const RECURSION_SUM: f64 = 1e-10;
    pub const CROSS_CHART_PER_DT: f64 = 10.0;
    pub const SIGMAS: f64 = 3.0;
    pub const COVARIANCE_REL: f64 = 0.05;
    pub const GAUGE: f64 = 1e-12;
    pub const SIGMA_ONE_ABS: f64 = 1e-7;
    pub const SIGMA_RATE: f64 = 1e-6;
    pub const SIGMA_CUBIC_REL: f64 = 0.02;
    pub const PARTITION: f64 = 1e-10;
    pub const COMPLETENESS: f64 = 1e-3;
    pub const TRACE_DISTANCE: f64 = 0.02;
    pub const KRAUS_REL: f64 = 0.05;
    pub const KRAUS_MIN_RATIO: f64 = 2.0;
    pub const FRAME_REL: f64 = 1e-6;
    pub const JACOBIAN: f64 = 1e-6;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub kappa: f64,
    pub t_final: f64,
    pub dt: f64,
    pub dim: usize,
    /// Paths for the channel Monte Carlo.
    pub paths: usize,
    /// Paths for the moment and Feynman-Kac Monte Carlo checks.
    pub mc_paths: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { kappa: 1.0, t_final: 1.0, dt: 1e-3, dim: 24, paths: 20_000, mc_paths: 100_000, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<28} {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

type Check = (u32, &'static str, fn(&VerifyConfig) -> Result<(bool, String)>);

pub const CHECKS: [Check; 17] = [
    (1, "moments", check_moments),
    (2, "riccati", check_riccati),
    (3, "determinant", check_determinant),
    (4, "persymmetry", check_persymmetry),
    (5, "recursion-vs-sums", check_recursion_sums),
    (6, "cross-chart", check_cross_chart),
    (7, "plain-ito-isometry", check_plain_isometry),
    (8, "modified-measure", check_modified),
    (9, "feynman-kac-normalization", check_feynman_kac),
    (10, "gauge-relation", check_gauge),
    (11, "sigma-width", check_sigma),
    (12, "partition-identity", check_partition),
    (13, "completeness-quadrature", check_completeness),
    (14, "channel-monte-carlo", check_channel),
    (15, "kraus-product", check_kraus),
    (16, "frame-derivatives", check_frames),
    (17, "haar-jacobian", check_jacobian),
];

pub fn run_check(id: u32, cfg: &VerifyConfig) -> CheckOutcome {
    let (id, name, f) = CHECKS[(id - 1) as usize];
    let start = Instant::now();
    let (passed, detail) = match f(cfg) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckOutcome { id, name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all(cfg: &VerifyConfig) -> Vec<CheckOutcome> {
    (1..=CHECKS.len() as u32).map(|id| run_check(id, cfg)).collect()
}

fn steps_for(kt: f64, cfg: &VerifyConfig, dt: f64) -> usize {
    (kt / (cfg.kappa * dt)).round() as usize
}

fn check_moments(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let start = Instant::now();
    let exact = analytic_moments(1.0);
    let err_at = |dt: f64| -> Result<f64> {
        let m = direct_moments(&Kernel::new(steps_for(1.0, cfg, dt), dt, cfg.kappa)?)?;
        Ok(m.max_abs_diff(&exact))
    };
    let m = direct_moments(&Kernel::new(steps_for(1.0, cfg, cfg.dt), cfg.dt, cfg.kappa)?)?;
    let e1 = m.max_abs_diff(&exact);
    let e2 = err_at(cfg.dt / 2.0)?;
    let ratio = e1 / e2;
    let secs = start.elapsed().as_secs_f64();
    let ok = e1 <= tol::MOMENTS_ABS
        && ratio >= tol::HALVING_RATIO.0
        && ratio <= tol::HALVING_RATIO.1
        && secs < tol::MOMENTS_SECONDS;
    Ok((
        ok,
        format!("(n,m,q)=({:.6},{:.6},{:.6}) err={e1:.2e} halving ratio={ratio:.3}", m.n, m.m, m.q),
    ))
}

fn check_riccati(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let t = 5.0 / cfg.kappa;
    let sol = riccati_integrate(cfg.kappa, t, 5000)?;
    let worst = sol
        .iter()
        .map(|(t, m)| m.max_abs_diff(&analytic_moments(cfg.kappa * t)))
        .fold(0.0, f64::max);
    Ok((worst <= tol::RICCATI, format!("max error over κT∈[0,5] = {worst:.2e}")))
}

fn check_determinant(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let n = steps_for(1.0, cfg, cfg.dt);
    let rec = *recursive_determinant(n, cfg.dt, cfg.kappa)?.last().unwrap_or(&1.0);
    let dense = dense_determinant(&Kernel::new(n, cfg.dt, cfg.kappa)?);
    let closed = analytic_determinant(1.0);
    let r1 = (rec - dense).abs() / dense.abs();
    let r2 = (rec - closed).abs() / closed;
    Ok((
        r1 <= tol::DET_RECURSION_REL && r2 <= tol::DET_CLOSED_REL,
        format!("det={rec:.7} vs dense rel {r1:.1e}, vs closed {closed:.7} rel {r2:.1e}"),
    ))
}

fn check_persymmetry(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let k = Kernel::new(2000, cfg.dt, cfg.kappa)?;
    let m = direct_moments(&k)?;
    let defect = persymmetry_defect(&kernel_inverse(&k)?);
    let nm = (m.n - m.m).abs();
    Ok((
        nm <= tol::PERSYMMETRY && defect <= tol::PERSYMMETRY,
        format!("N=2000 |n-m|={nm:.1e} persymmetry defect={defect:.1e}"),
    ))
}

fn check_recursion_sums(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let n = steps_for(1.0, cfg, cfg.dt);
    let errs = map_chunks(1000, 64, |range| {
        range
            .map(|i| {
                let p = sample_wiener_indexed(n, cfg.dt, cfg.kappa, cfg.seed ^ 0x5, i as u64);
                let a = hc_endpoint(&p);
                let b = closed_form_hc(&p);
                (a.nu - b.nu).norm().max((a.mu - b.mu).norm()).max((a.z - b.z).norm())
            })
            .fold(0.0, f64::max)
    });
    let worst = errs.into_iter().fold(0.0, f64::max);
    Ok((worst <= tol::RECURSION_SUM, format!("1000 paths, max |Δ(ν,μ,z)| = {worst:.1e}")))
}

fn check_cross_chart(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut worst_ell = 0.0f64;
    for kt in [1.0, 2.0] {
        let n = steps_for(kt, cfg, cfg.dt);
        for i in 0..20 {
            let p = sample_wiener_indexed(n, cfg.dt, cfg.kappa, cfg.seed ^ 0x6, i);
            let tr = propagate_sde(&p, crate::group::Chart::Cartan)?;
            let y = tr.cartan.last().copied().expect("non-empty");
            let x = tr.hc[n];
            let yt = hc_to_cartan(&x)?;
            let e = (y.beta - yt.beta)
                .norm()
                .max((y.alpha - yt.alpha).norm())
                .max((y.ell - yt.ell).abs())
                .max((y.phi - yt.phi).abs());
            worst = worst.max(e);
            worst_ell = worst_ell.max((y.ell - (x.s() - gauge_hc(&x)?.f)).abs());
        }
    }
    let lim = tol::CROSS_CHART_PER_DT * cfg.dt;
    Ok((
        worst <= lim && worst_ell <= lim,
        format!("κT∈{{1,2}} max endpoint error {:.2}·dt, ℓ vs s−f {:.2}·dt", worst / cfg.dt, worst_ell / cfg.dt),
    ))
}

fn within(est: &crate::dists::Estimate, target: f64) -> bool {
    est.z_score(target) <= tol::SIGMAS
}

fn check_plain_isometry(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let n = steps_for(1.0, cfg, cfg.dt);
    let fk = FkConfig::new(Measure::Plain, Weight::None, cfg.mc_paths, n, cfg.dt, cfg.kappa, cfg.seed ^ 0x7);
    let est = feynman_kac_estimate(&fk, &[Observable::NuAbs2, Observable::MuAbs2, Observable::ReNuConjMu])?;
    let nn = (1.0 - (-4.0f64).exp()) / 4.0;
    let nm = (-2.0f64).exp();
    let ok = within(&est[0], nn) && within(&est[1], nn) && within(&est[2], nm);
    Ok((
        ok,
        format!(
            "<|ν|²>={:.5}±{:.5} (z={:.2}) <|μ|²> z={:.2} <ν*μ>={:.5}±{:.5} (z={:.2})",
            est[0].mean,
            est[0].std_err,
            est[0].z_score(nn),
            est[1].z_score(nn),
            est[2].mean,
            est[2].std_err,
            est[2].z_score(nm)
        ),
    ))
}

fn covariance_check(cfg: &VerifyConfig) -> Result<(bool, f64)> {
    let n = 200;
    let dt = 0.01 / cfg.kappa;
    let sampler = ModifiedSampler::new(n, dt, cfg.kappa, ModifiedMethod::Banded)?;
    let target = kernel_inverse(&Kernel::new(n, dt, cfg.kappa)?)?;
    let paths = cfg.mc_paths;
    let parts = map_chunks(paths, CHUNK, |range| {
        let mut acc = vec![0.0f64; n * n];
        for i in range {
            let p = sampler.sample(cfg.seed ^ 0x8, i as u64);
            let w = &p.increments;
            for k in 0..n {
                let row = &mut acc[k * n..(k + 1) * n];
                let (a, b) = (w[k].re, w[k].im);
                for l in k..n {
                    row[l] += a * w[l].re + b * w[l].im;
                }
            }
        }
        acc
    });
    let mut acc = vec![0.0f64; n * n];
    for p in parts {
        for (a, b) in acc.iter_mut().zip(&p) {
            *a += b;
        }
    }
    let mut worst = 0.0f64;
    for k in 0..n {
        for l in k..n {
            let est = acc[k * n + l] / paths as f64;
            let want = dt * target[(k, l)];
            let scale = dt * (target[(k, k)] * target[(l, l)]).sqrt();
            worst = worst.max((est - want).abs() / scale);
        }
    }
    Ok((worst <= tol::COVARIANCE_REL, worst))
}

fn check_modified(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let (cov_ok, cov_worst) = covariance_check(cfg)?;
    let n = steps_for(1.0, cfg, cfg.dt);
    let fk = FkConfig::new(Measure::Modified, Weight::None, cfg.mc_paths, n, cfg.dt, cfg.kappa, cfg.seed ^ 0x88);
    let est = feynman_kac_estimate(&fk, &[Observable::NuAbs2, Observable::MuAbs2, Observable::ReSumConjDiff])?;
    let ok = cov_ok && within(&est[0], 0.5) && within(&est[1], 0.5) && within(&est[2], 0.0);
    Ok((
        ok,
        format!(
            "cov max dev {:.3} (corr scale); <|ν|²>={:.5}±{:.5} (z={:.2}); <|μ|²> z={:.2}; Re<(ν+μ)*(ν−μ)> z={:.2}",
            cov_worst,
            est[0].mean,
            est[0].std_err,
            est[0].z_score(0.5),
            est[1].z_score(0.5),
            est[2].z_score(0.0)
        ),
    ))
}

fn check_feynman_kac(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let dt = 1e-2 / cfg.kappa;
    let n = steps_for(0.5, cfg, dt);
    let nt = normalization(0.5);
    let plain = FkConfig::new(Measure::Plain, Weight::ExpMinus2S, cfg.mc_paths, n, dt, cfg.kappa, cfg.seed ^ 0x9);
    let e = feynman_kac_estimate(&plain, &[Observable::One])?[0];
    // Reciprocal with delta-method error.
    let inv = 1.0 / e.mean;
    let inv_se = e.std_err / (e.mean * e.mean);
    let inv_z = (inv - 1.0 / nt).abs() / inv_se;
    let modified = FkConfig::new(Measure::Modified, Weight::ExpPlus2S, cfg.mc_paths, n, dt, cfg.kappa, cfg.seed ^ 0x99);
    let m = feynman_kac_estimate(&modified, &[Observable::One])?[0];
    let ok = within(&e, nt) && inv_z <= tol::SIGMAS && within(&m, 1.0 / nt);
    Ok((
        ok,
        format!(
            "E[e^-2s]={:.5}±{:.5} vs N_T={nt:.5} (z={:.2}); 1/E={inv:.5} vs {:.6} (z={inv_z:.2}); E_M[e^2s]={:.5}±{:.5} (z={:.2}); ESS={:.0}",
            e.mean,
            e.std_err,
            e.z_score(nt),
            1.0 / nt,
            m.mean,
            m.std_err,
            m.z_score(1.0 / nt),
            e.ess
        ),
    ))
}

fn random_c(rng: &mut ChaCha8Rng, scale: f64) -> C64 {
    C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn check_gauge(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x10);
    let mut worst = 0.0f64;
    for kt in [0.2, 1.0, 5.0] {
        for _ in 0..1000 {
            let p = ReducedPoint { r: 2.0 * kt, beta: random_c(&mut rng, 1.0), alpha: random_c(&mut rng, 1.0) };
            worst = worst.max(gauge_relation_residual(&p, kt)?);
        }
    }
    Ok((worst <= tol::GAUGE, format!("3000 cosets, max residual {worst:.1e}")))
}

fn check_sigma(_cfg: &VerifyConfig) -> Result<(bool, String)> {
    let s1 = sigma_width(1.0);
    let h = 1e-4;
    let kappa = 1.0;
    let mut worst = 0.0f64;
    for i in 1..=50 {
        let t = 0.1 * i as f64;
        let fd = (sigma_width(kappa * (t + h)) - sigma_width(kappa * (t - h))) / (2.0 * h);
        worst = worst.max((fd - sigma_rate(kappa, t)).abs());
    }
    let cubic = sigma_width(0.1) / (0.1f64.powi(3) / 3.0) - 1.0;
    let ok = (s1 - 0.2384058).abs() <= tol::SIGMA_ONE_ABS && worst <= tol::SIGMA_RATE && cubic.abs() <= tol::SIGMA_CUBIC_REL;
    Ok((ok, format!("Σ(1)={s1:.7}, max |FD−κtanh²|={worst:.1e}, Σ(0.1)/((0.1)³/3)−1={cubic:.4}")))
}

fn check_partition(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let dim = cfg.dim.max(60);
    let mut worst = 0.0f64;
    for kt in [0.5, 1.0, 2.0] {
        worst = worst.max(partition_function_check(kt, dim)?.residual);
    }
    Ok((worst <= tol::PARTITION, format!("dim={dim}, max residual {worst:.1e}")))
}

fn check_completeness(_cfg: &VerifyConfig) -> Result<(bool, String)> {
    let r = completeness_quadrature(1.0, 16, 40, 64)?;
    Ok((
        r.deviation <= tol::COMPLETENESS,
        format!(
            "κT=1 dim=16, 8×8 deviation {:.1e} (refined {:.1e}, converged={})",
            r.deviation, r.deviation_refined, r.grid_converged
        ),
    ))
}

fn check_channel(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let dim = 8;
    let mut rho = FockOperator::zeros(dim);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    let cc = ChannelConfig { kappa: cfg.kappa, kt: 0.3, dt: cfg.dt, dim, paths: cfg.paths, seed: cfg.seed ^ 0x14 };
    let r = channel_monte_carlo(&rho, &cc)?;
    Ok((
        r.trace_distance <= tol::TRACE_DISTANCE && r.trace_z <= tol::SIGMAS,
        format!(
            "{} paths: trace distance {:.4}, mean trace {:.5}±{:.5} (z={:.2})",
            cc.paths, r.trace_distance, r.trace_mean, r.trace_std_err, r.trace_z
        ),
    ))
}

fn kraus_error(path: &crate::paths::WienerPath, dim: usize) -> Result<f64> {
    let k = kraus_time_ordered(path, dim)?;
    let r = represent_hc(&closed_form_hc(path), dim)?;
    Ok((&k - &r).interior().norm_fro() / r.interior().norm_fro())
}

fn check_kraus(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let fine_dt = cfg.dt / 4.0;
    let n = steps_for(0.5, cfg, fine_dt);
    let mut coarse = Vec::new();
    let mut ratios = Vec::new();
    for i in 0..4 {
        let fine = sample_wiener_indexed(n, fine_dt, cfg.kappa, cfg.seed ^ 0x15, i);
        let ec = kraus_error(&fine.coarsen(4), cfg.dim)?;
        let ef = kraus_error(&fine, cfg.dim)?;
        coarse.push(ec);
        ratios.push(ec / ef);
    }
    ratios.sort_by(f64::total_cmp);
    let median = 0.5 * (ratios[1] + ratios[2]);
    let worst = coarse.iter().copied().fold(0.0, f64::max);
    Ok((
        worst <= tol::KRAUS_REL && median >= tol::KRAUS_MIN_RATIO,
        format!("dim={} max rel error {worst:.2e} at dt={}, median ratio dt/(dt/4) = {median:.2}", cfg.dim, cfg.dt),
    ))
}

fn check_frames(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x16);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let r = rng.gen_range(0.2..2.0);
        let hc = HCCoords {
            nu: random_c(&mut rng, 0.4),
            r,
            z: random_c(&mut rng, 0.5),
            mu: random_c(&mut rng, 0.4),
        };
        let ca = CartanCoords {
            beta: random_c(&mut rng, 0.4),
            phi: rng.gen_range(-1.0..1.0),
            r,
            ell: rng.gen_range(-0.5..0.5),
            alpha: random_c(&mut rng, 0.4),
        };
        for x in [Coords::Hc(hc), Coords::Cartan(ca)] {
            for d in Direction::ALL {
                worst = worst.max(frame_derivative_residual(&x, cfg.dim, d)?.relative());
            }
        }
    }
    Ok((worst <= tol::FRAME_REL, format!("dim={} 20 points × 14 directions, max relative residual {worst:.1e}", cfg.dim)))
}

fn check_jacobian(cfg: &VerifyConfig) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x17);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = HCCoords {
            nu: random_c(&mut rng, 1.0),
            r: rng.gen_range(0.2..5.0),
            z: random_c(&mut rng, 1.0),
            mu: random_c(&mut rng, 1.0),
        };
        worst = worst.max(jacobian_consistency_residual(&x)?);
    }
    Ok((worst <= tol::JACOBIAN, format!("20 points r∈[0.2,5], max residual {worst:.1e}")))
}
