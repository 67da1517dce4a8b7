//! POVM completeness and channel checks in the truncated representation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dists::sigma_width;
use crate::error::{Result, SpqmError};
use crate::fock::{
    canonical_operators, coherent_state, displacement_compressed, displacement_operator, exp_number,
    matrix_exponential, FockOperator,
};
use crate::par::{map_chunks, Stats};
use crate::paths::{kraus_time_ordered, sample_wiener_indexed};
use crate::quad::{gauss_hermite, gauss_laguerre};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub trace: f64,
    pub closed_form: f64,
    /// `|trace · 2sinh 2κT − 1|`.
    pub residual: f64,
    /// Set when `dim·4κT < 30`, where the truncated tail is not negligible.
    pub truncation_warning: bool,
}

pub fn partition_function_check(kt: f64, dim: usize) -> Result<PartitionCheck> {
    canonical_operators(dim)?;
    let trace = exp_number(dim, 4.0 * kt, C64::new(0.0, 0.0)).trace().re;
    let z = 2.0 * (2.0 * kt).sinh();
    Ok(PartitionCheck {
        trace,
        closed_form: 1.0 / z,
        residual: (trace * z - 1.0).abs(),
        truncation_warning: dim as f64 * 4.0 * kt < 30.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    /// Operator-norm deviation from the identity on the top `⌈dim/2⌉` block.
    pub deviation: f64,
    /// Same with twice the radial nodes.
    pub deviation_refined: f64,
    /// Refinement changed the deviation by less than 10% (or both are at rounding level).
    pub grid_converged: bool,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

/// `2sinh(2κT) ∫ d²α/π D_α e^{−4κT Ho} D_α†` on the first `dim` states.
///
/// Radial Gauss-Laguerre in `x = (1 − e^{−4κT})|α|²` times a uniform angular
/// rule. Displacements are exact compressions, so large-`|α|` nodes carry no
/// truncation artifact.
pub fn completeness_integral(kt: f64, dim: usize, radial: usize, angular: usize) -> Result<FockOperator> {
    if !(kt > 0.0) || radial == 0 || angular == 0 {
        return Err(SpqmError::Contract("need κT > 0 and a non-empty grid".into()));
    }
    canonical_operators(dim)?;
    // Thermal weights below 1e−16 are dropped.
    let work = dim.max((37.0 / (4.0 * kt)).ceil() as usize + 1);
    let thermal = exp_number(work, 4.0 * kt, C64::new(0.0, 0.0));
    let lam = -(-4.0 * kt).exp_m1();
    let (x, w) = gauss_laguerre(radial);
    let mut acc = FockOperator::zeros(dim);
    for (&xi, &wi) in x.iter().zip(&w) {
        let rho = (xi / lam).sqrt();
        // e^{x}·w·(2π/A)/π·1/(2λ)
        let weight = wi * xi.exp() / (angular as f64 * lam);
        for j in 0..angular {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / angular as f64;
            let d = displacement_compressed(work, C64::from_polar(rho, theta))?;
            let f = d.matmul(&thermal).matmul(&d.adjoint()).block(dim);
            acc = acc.add_scaled(&f, C64::new(weight, 0.0));
        }
    }
    Ok(acc.scale_real(2.0 * (2.0 * kt).sinh()))
}

pub fn completeness_quadrature(kt: f64, dim: usize, radial: usize, angular: usize) -> Result<CompletenessReport> {
    let dev = |n: usize| -> Result<f64> {
        let m = completeness_integral(kt, dim, n, angular)?;
        Ok(m.interior().add_identity(C64::new(-1.0, 0.0)).norm_op())
    };
    let deviation = dev(radial)?;
    let deviation_refined = dev(2 * radial)?;
    let grid_converged =
        (deviation_refined - deviation).abs() <= 0.1 * deviation.max(deviation_refined) || deviation.max(deviation_refined) < 1e-12;
    Ok(CompletenessReport { deviation, deviation_refined, grid_converged, radial_nodes: radial, angular_nodes: angular })
}

/// `∫ d²β/(πΣ) e^{−|β−α|²/Σ}` by tensor Gauss-Hermite; equals 1.
pub fn beta_marginal_integral(kt: f64, alpha: C64, nodes: usize) -> f64 {
    let sigma = sigma_width(kt);
    let (x, w) = gauss_hermite(nodes);
    let mut total = 0.0;
    for (&x1, &w1) in x.iter().zip(&w) {
        for (&x2, &w2) in x.iter().zip(&w) {
            // β = α + √Σ(x1 + i x2); the Gaussian is absorbed in the weights.
            let beta = alpha + C64::new(x1, x2) * sigma.sqrt();
            let g = (-(beta - alpha).norm_sqr() / sigma + x1 * x1 + x2 * x2).exp();
            total += w1 * w2 * g;
        }
    }
    total / std::f64::consts::PI
}

/// Largest truncation for the dense `dim² × dim²` reference channel.
pub const MAX_CHANNEL_DIM: usize = 16;

/// Dense superoperator `exp(−½κT(ad_Q² + ad_P²))` on row-major vectorized
/// operators.
pub fn analytic_channel(kt: f64, dim: usize) -> Result<FockOperator> {
    if dim > MAX_CHANNEL_DIM {
        return Err(SpqmError::Contract(format!(
            "dense superoperator limited to dim ≤ {MAX_CHANNEL_DIM}, got {dim}"
        )));
    }
    let c = canonical_operators(dim)?;
    let n = dim * dim;
    let mut gen = FockOperator::zeros(n);
    for x in [&c.q, &c.p] {
        let x2 = x.matmul(x);
        // vec(AρB) = (A ⊗ Bᵀ) vec(ρ) for row-major vec.
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let id_ik = if i == k { 1.0 } else { 0.0 };
                        let id_jl = if j == l { 1.0 } else { 0.0 };
                        let v = x2[(i, k)] * id_jl - 2.0 * x[(i, k)] * x[(l, j)] + x2[(l, j)] * id_ik;
                        gen[(i * dim + j, k * dim + l)] += v;
                    }
                }
            }
        }
    }
    matrix_exponential(&gen.scale_real(-0.5 * kt))
}

pub fn apply_superoperator(sup: &FockOperator, rho: &FockOperator) -> FockOperator {
    let dim = rho.dim();
    let v = sup.mat_vec(rho.as_slice());
    FockOperator::from_fn(dim, |i, j| v[i * dim + j])
}

/// `½‖A − B‖₁` for Hermitian arguments.
pub fn trace_distance(a: &FockOperator, b: &FockOperator) -> f64 {
    0.5 * (a - b).hermitian_eigenvalues().iter().map(|e| e.abs()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kappa: f64,
    pub kt: f64,
    pub dt: f64,
    pub dim: usize,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub config: ChannelConfig,
    pub steps: usize,
    pub trace_distance: f64,
    pub trace_mean: f64,
    pub trace_std_err: f64,
    /// `|trace_mean − 1| / trace_std_err`.
    pub trace_z: f64,
    /// Population of the last number state relative to the trace.
    pub leakage: f64,
}

/// Monte Carlo average of `LρL†` over time-ordered Kraus products against the
/// dense analytic channel.
pub fn channel_monte_carlo(rho: &FockOperator, cfg: &ChannelConfig) -> Result<ChannelReport> {
    let dim = cfg.dim;
    if rho.dim() != dim {
        return Err(SpqmError::Contract("state dimension differs from configured dimension".into()));
    }
    let steps = (cfg.kt / (cfg.kappa * cfg.dt)).round() as usize;
    if (steps as f64 * cfg.kappa * cfg.dt - cfg.kt).abs() > 1e-9 * cfg.kt.max(1.0) {
        return Err(SpqmError::Contract("κT must be a multiple of κdt".into()));
    }
    let reference = apply_superoperator(&analytic_channel(cfg.kt, dim)?, rho);
    if steps == 0 {
        return Ok(ChannelReport {
            config: cfg.clone(),
            steps,
            trace_distance: trace_distance(rho, &reference),
            trace_mean: rho.trace().re,
            trace_std_err: 0.0,
            trace_z: 0.0,
            leakage: 0.0,
        });
    }
    let chunks = map_chunks(cfg.paths, 256, |range| -> Result<(FockOperator, Stats)> {
        let mut acc = FockOperator::zeros(dim);
        let mut tr = Stats::default();
        for i in range {
            let path = sample_wiener_indexed(steps, cfg.dt, cfg.kappa, cfg.seed, i as u64);
            let l = kraus_time_ordered(&path, dim)?;
            let out = l.matmul(rho).matmul(&l.adjoint());
            tr.push(out.trace().re);
            acc = &acc + &out;
        }
        Ok((acc, tr))
    });
    let mut acc = FockOperator::zeros(dim);
    let mut tr = Stats::default();
    for c in chunks {
        let (a, t) = c?;
        acc = &acc + &a;
        tr.merge(&t);
    }
    let avg = acc.scale_real(1.0 / cfg.paths as f64);
    let leakage = avg[(dim - 1, dim - 1)].re / avg.trace().re;
    if leakage > 1e-3 {
        return Err(SpqmError::Truncation(format!("boundary population {leakage:.2e} exceeds 1e-3")));
    }
    let (trace_mean, trace_std_err) = (tr.mean(), tr.std_err());
    Ok(ChannelReport {
        config: cfg.clone(),
        steps,
        trace_distance: trace_distance(&avg, &reference),
        trace_mean,
        trace_std_err,
        trace_z: (trace_mean - 1.0).abs() / trace_std_err,
        leakage,
    })
}

/// `‖e^{κT} D_β e^{−2κT Ho} D_α† − |β⟩⟨α|‖` (operator norm).
pub fn late_time_coherent_residual(kt: f64, beta: C64, alpha: C64, dim: usize) -> Result<f64> {
    let db = displacement_operator(dim, beta)?;
    let da = displacement_operator(dim, alpha)?;
    let k = db.matmul(&exp_number(dim, 2.0 * kt, C64::new(kt, 0.0))).matmul(&da.adjoint());
    let proj = FockOperator::outer(&coherent_state(dim, beta)?, &coherent_state(dim, alpha)?);
    Ok((&k - &proj).norm_op())
}
