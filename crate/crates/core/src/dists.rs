//! Reduced Kraus-operator distributions on the coset and the weighted Monte
//! Carlo estimators that reproduce them.
//!
//! Densities are evaluated on shell: the ruler factor `δ(r − 2κT)` is implied,
//! never represented numerically.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpqmError};
use crate::group::{gauge_cartan, CartanCoords};
use crate::par::{map_chunks, Stats, CHUNK};
use crate::paths::{closed_form_cartan, closed_form_hc, sample_wiener_indexed, ModifiedMethod, ModifiedSampler};
use crate::quad::gauss_hermite;

/// `Σ_T = κT − tanh κT`.
pub fn sigma_width(kt: f64) -> f64 {
    if kt.abs() < 1e-2 {
        let x2 = kt * kt;
        kt * x2 * (1.0 / 3.0 - x2 * (2.0 / 15.0 - x2 * (17.0 / 315.0 - x2 * 62.0 / 2835.0)))
    } else {
        kt - kt.tanh()
    }
}

/// `dΣ/dt = κ tanh²κt`.
pub fn sigma_rate(kappa: f64, t: f64) -> f64 {
    kappa * (kappa * t).tanh().powi(2)
}

/// `N_T = e^{2κT}/(1+κT)`.
pub fn normalization(kt: f64) -> f64 {
    (2.0 * kt).exp() / (1.0 + kt)
}

/// A point of the coset `Zx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub r: f64,
    pub beta: C64,
    pub alpha: C64,
}

impl ReducedPoint {
    pub fn from_nu_mu(r: f64, nu: C64, mu: C64) -> Self {
        let e = (-r).exp();
        let d = -(-2.0 * r).exp_m1();
        Self { r, beta: (nu + mu * e) / d, alpha: (mu + nu * e) / d }
    }

    pub fn nu_mu(&self) -> (C64, C64) {
        let e = (-self.r).exp();
        (self.beta - self.alpha * e, self.alpha - self.beta * e)
    }
}

/// `prefactor · e^{exponent}`, with `δ(r − 2κT)` factored out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub prefactor: f64,
    pub exponent: f64,
}

impl DensityValue {
    pub fn value(&self) -> f64 {
        self.prefactor * self.exponent.exp()
    }
}

fn check_shell(point: &ReducedPoint, kt: f64) -> Result<()> {
    if !(kt > 0.0) {
        return Err(SpqmError::Contract(format!("κT must be positive, got {kt}")));
    }
    let want = 2.0 * kt;
    if (point.r - want).abs() > 1e-9 * want.max(1.0) {
        return Err(SpqmError::Contract(format!("off-shell ruler r = {} (expected {want})", point.r)));
    }
    Ok(())
}

fn prefactor(kt: f64) -> f64 {
    2.0 / ((2.0 * kt).sinh() * sigma_width(kt))
}

/// Cartan-reduced density `C_T`.
pub fn density_cartan_reduced(point: &ReducedPoint, kt: f64) -> Result<DensityValue> {
    check_shell(point, kt)?;
    Ok(DensityValue {
        prefactor: prefactor(kt),
        exponent: -(point.beta - point.alpha).norm_sqr() / sigma_width(kt),
    })
}

/// `B_T` exponent in `(ν, μ)` variables.
fn hc_exponent_nu_mu(point: &ReducedPoint, kt: f64) -> f64 {
    let (nu, mu) = point.nu_mu();
    let (sh, ch, e) = (kt.sinh(), kt.cosh(), kt.exp());
    -(nu + mu).norm_sqr() * e / (4.0 * sh) - (nu - mu).norm_sqr() * e * (1.0 + kt) / (4.0 * ch * sigma_width(kt))
}

/// `B_T` exponent in `(β, α)` variables.
fn hc_exponent_beta_alpha(point: &ReducedPoint, kt: f64) -> f64 {
    let (sh, ch, e) = (kt.sinh(), kt.cosh(), (-kt).exp());
    -(point.beta + point.alpha).norm_sqr() * e * sh
        - (point.beta - point.alpha).norm_sqr() * e * ch * (1.0 + kt) / sigma_width(kt)
}

/// Phase-space form used to evaluate `B_T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variables {
    NuMu,
    BetaAlpha,
}

/// `B_T`, or `B̃_T = B_T/N_T` when `normalized`.
pub fn density_hc_reduced(point: &ReducedPoint, kt: f64, normalized: bool) -> Result<DensityValue> {
    density_hc_reduced_in(point, kt, normalized, Variables::NuMu)
}

pub fn density_hc_reduced_in(
    point: &ReducedPoint,
    kt: f64,
    normalized: bool,
    vars: Variables,
) -> Result<DensityValue> {
    check_shell(point, kt)?;
    let mut pre = prefactor(kt);
    if normalized {
        pre /= normalization(kt);
    }
    let exponent = match vars {
        Variables::NuMu => hc_exponent_nu_mu(point, kt),
        Variables::BetaAlpha => hc_exponent_beta_alpha(point, kt),
    };
    Ok(DensityValue { prefactor: pre, exponent })
}

/// `|C_T − e^{2f}B_T| / C_T`.
pub fn gauge_relation_residual(point: &ReducedPoint, kt: f64) -> Result<f64> {
    let c = density_cartan_reduced(point, kt)?;
    let b = density_hc_reduced(point, kt, false)?;
    let f = gauge_cartan(&CartanCoords { beta: point.beta, phi: 0.0, r: point.r, ell: 0.0, alpha: point.alpha })?.f;
    // Compare in log space; both sides share the prefactor.
    let log_ratio = (b.prefactor.ln() + b.exponent + 2.0 * f) - (c.prefactor.ln() + c.exponent);
    Ok(log_ratio.exp_m1().abs())
}

/// `∫ g(ν, μ) B̃_T e^{2r} d²ν d²μ/(2π)²` by tensor Gauss-Hermite in the
/// sum and difference variables.
pub fn hc_reduced_expectation(kt: f64, nodes: usize, g: impl Fn(C64, C64) -> f64) -> Result<f64> {
    let r = 2.0 * kt;
    let (sh, ch, e) = (kt.sinh(), kt.cosh(), kt.exp());
    let a = e / (4.0 * sh);
    let b = e * (1.0 + kt) / (4.0 * ch * sigma_width(kt));
    let pre = prefactor(kt) / normalization(kt);
    let (x, w) = gauss_hermite(nodes);
    let (sa, sb) = (a.sqrt(), b.sqrt());
    let mut total = 0.0;
    for (&u1, &w1) in x.iter().zip(&w) {
        for (&u2, &w2) in x.iter().zip(&w) {
            let u = C64::new(u1, u2) / sa;
            for (&d1, &w3) in x.iter().zip(&w) {
                for (&d2, &w4) in x.iter().zip(&w) {
                    let d = C64::new(d1, d2) / sb;
                    total += w1 * w2 * w3 * w4 * g((u + d) / 2.0, (u - d) / 2.0);
                }
            }
        }
    }
    // d²ν d²μ = d²u d²d / 4, and d²u = dx/a per Gaussian pair.
    let jac = 1.0 / (4.0 * a * b);
    Ok(total * jac * pre * (2.0 * r).exp() / (4.0 * std::f64::consts::PI.powi(2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    Plain,
    Modified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    None,
    /// `e^{−2s}`.
    ExpMinus2S,
    /// `e^{−2ℓ}`.
    ExpMinus2Ell,
    /// `e^{+2s}`, the inverse weight, useful under the modified measure.
    ExpPlus2S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    One,
    NuAbs2,
    MuAbs2,
    ReNuConjMu,
    ImNuConjMu,
    /// `Re (ν+μ)*(ν−μ)`.
    ReSumConjDiff,
    ImSumConjDiff,
    DiffAbs2,
}

impl Observable {
    fn eval(&self, nu: C64, mu: C64, beta: C64, alpha: C64) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::NuAbs2 => nu.norm_sqr(),
            Observable::MuAbs2 => mu.norm_sqr(),
            Observable::ReNuConjMu => (nu.conj() * mu).re,
            Observable::ImNuConjMu => (nu.conj() * mu).im,
            Observable::ReSumConjDiff => ((nu + mu).conj() * (nu - mu)).re,
            Observable::ImSumConjDiff => ((nu + mu).conj() * (nu - mu)).im,
            Observable::DiffAbs2 => (beta - alpha).norm_sqr(),
        }
    }

    fn needs_cartan(&self) -> bool {
        matches!(self, Observable::DiffAbs2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkConfig {
    pub measure: Measure,
    pub weight: Weight,
    pub n_paths: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub kappa: f64,
    pub seed: u64,
    /// Minimum `ESS / n_paths` before the estimate is rejected.
    pub min_ess_fraction: f64,
}

impl FkConfig {
    pub fn new(measure: Measure, weight: Weight, n_paths: usize, n_steps: usize, dt: f64, kappa: f64, seed: u64) -> Self {
        Self { measure, weight, n_paths, n_steps, dt, kappa, seed, min_ess_fraction: 0.01 }
    }
}

/// Mean of `weight · observable` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    /// `Σw / max w`.
    pub ess: f64,
    pub n_paths: usize,
}

impl Estimate {
    /// Distance to `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.std_err
    }
}

#[derive(Clone, Debug)]
struct Partial {
    stats: Vec<Stats>,
    w_sum: f64,
    w_max: f64,
}

/// Smallest sample accepted by [`feynman_kac_estimate`].
pub const MIN_FK_PATHS: usize = 1000;

pub fn feynman_kac_estimate(cfg: &FkConfig, observables: &[Observable]) -> Result<Vec<Estimate>> {
    if cfg.n_paths < MIN_FK_PATHS {
        return Err(SpqmError::Contract(format!("need at least {MIN_FK_PATHS} paths, got {}", cfg.n_paths)));
    }
    let sampler = match cfg.measure {
        Measure::Plain => None,
        Measure::Modified => Some(ModifiedSampler::new(cfg.n_steps, cfg.dt, cfg.kappa, ModifiedMethod::Banded)?),
    };
    let cartan = cfg.weight == Weight::ExpMinus2Ell || observables.iter().any(Observable::needs_cartan);
    let chunks = map_chunks(cfg.n_paths, CHUNK, |range| -> Result<Partial> {
        let mut p = Partial { stats: vec![Stats::default(); observables.len()], w_sum: 0.0, w_max: 0.0 };
        for i in range {
            let path = match &sampler {
                Some(s) => s.sample(cfg.seed, i as u64),
                None => sample_wiener_indexed(cfg.n_steps, cfg.dt, cfg.kappa, cfg.seed, i as u64),
            };
            let x = closed_form_hc(&path);
            let y = if cartan { Some(closed_form_cartan(&path)?) } else { None };
            let w = match cfg.weight {
                Weight::None => 1.0,
                Weight::ExpMinus2S => (-2.0 * x.s()).exp(),
                Weight::ExpPlus2S => (2.0 * x.s()).exp(),
                Weight::ExpMinus2Ell => (-2.0 * y.as_ref().map_or(0.0, |y| y.ell)).exp(),
            };
            if !w.is_finite() {
                return Err(SpqmError::EssCollapse { ess: 0.0, paths: cfg.n_paths });
            }
            p.w_sum += w;
            p.w_max = p.w_max.max(w);
            let (beta, alpha) = y.map_or((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |y| (y.beta, y.alpha));
            for (st, obs) in p.stats.iter_mut().zip(observables) {
                st.push(w * obs.eval(x.nu, x.mu, beta, alpha));
            }
        }
        Ok(p)
    });
    let mut stats = vec![Stats::default(); observables.len()];
    let (mut w_sum, mut w_max) = (0.0, 0.0f64);
    for c in chunks {
        let c = c?;
        for (s, cs) in stats.iter_mut().zip(&c.stats) {
            s.merge(cs);
        }
        w_sum += c.w_sum;
        w_max = w_max.max(c.w_max);
    }
    let ess = w_sum / w_max;
    if ess < cfg.min_ess_fraction * cfg.n_paths as f64 {
        return Err(SpqmError::EssCollapse { ess, paths: cfg.n_paths });
    }
    Ok(stats
        .iter()
        .map(|s| Estimate { mean: s.mean(), std_err: s.std_err(), ess, n_paths: cfg.n_paths })
        .collect())
}
