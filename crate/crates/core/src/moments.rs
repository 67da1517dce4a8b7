//! The modified-measure kernel `M_kl = δ_kl − κdt·e^{−2κdt|k−l|}`, its
//! determinant and moments, and the Riccati system they obey.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dists::sigma_width;
use crate::error::{Result, SpqmError};

/// Hard limit on `κdt`.
pub const MAX_KAPPA_DT: f64 = 1.0;
/// Above this `κdt` the continuum limit is poor and a warning is logged.
pub const WARN_KAPPA_DT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub n: usize,
    pub dt: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTriple {
    pub n: f64,
    pub m: f64,
    pub q: f64,
}

impl MomentTriple {
    pub fn sum(&self) -> f64 {
        self.n + self.q
    }

    pub fn diff(&self) -> f64 {
        self.n - self.q
    }

    pub fn max_abs_diff(&self, other: &MomentTriple) -> f64 {
        (self.n - other.n).abs().max((self.m - other.m).abs()).max((self.q - other.q).abs())
    }
}

impl Kernel {
    pub fn new(n: usize, dt: f64, kappa: f64) -> Result<Self> {
        if !(dt > 0.0) || !(kappa >= 0.0) || !dt.is_finite() || !kappa.is_finite() {
            return Err(SpqmError::Regime(format!("need dt > 0 and κ ≥ 0, got dt={dt}, κ={kappa}")));
        }
        let kdt = kappa * dt;
        if kdt >= MAX_KAPPA_DT {
            return Err(SpqmError::Regime(format!("κdt = {kdt} must be below {MAX_KAPPA_DT}")));
        }
        if kdt > WARN_KAPPA_DT {
            log::warn!("κdt = {kdt} exceeds {WARN_KAPPA_DT}; discretization error will be large");
        }
        Ok(Self { n, dt, kappa })
    }

    pub fn rho(&self) -> f64 {
        (-2.0 * self.kappa * self.dt).exp()
    }

    pub fn entry(&self, k: usize, l: usize) -> f64 {
        let d = if k == l { 1.0 } else { 0.0 };
        d - self.kappa * self.dt * self.rho().powi(k.abs_diff(l) as i32)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let kdt = self.kappa * self.dt;
        let pows: Vec<f64> = (0..self.n).map(|j| (-2.0 * kdt * j as f64).exp()).collect();
        DMatrix::from_fn(self.n, self.n, |k, l| {
            let d = if k == l { 1.0 } else { 0.0 };
            d - kdt * pows[k.abs_diff(l)]
        })
    }

    /// Load of `ν_T` on `dw_k`: `e^{−2κdt(N−1−k)}`.
    pub fn nu_load(&self) -> DVector<f64> {
        let h = 2.0 * self.kappa * self.dt;
        DVector::from_fn(self.n, |k, _| (-h * (self.n - 1 - k) as f64).exp())
    }

    /// Load of `μ_T` on `dw_k`: `e^{−2κdt·k}`.
    pub fn mu_load(&self) -> DVector<f64> {
        let h = 2.0 * self.kappa * self.dt;
        DVector::from_fn(self.n, |k, _| (-h * k as f64).exp())
    }
}

pub fn build_kernel(n: usize, dt: f64, kappa: f64) -> Result<Kernel> {
    Kernel::new(n, dt, kappa)
}

// The kernel symbol peaks at κdt·coth κdt > 1, so long paths at coarse κdt
// lose definiteness (roughly once κT exceeds 2.7/κdt).
fn indefinite(n: usize, kdt: f64) -> String {
    format!("kernel is not positive definite at N={n}, κdt={kdt}: κT={} is too long for this step", n as f64 * kdt)
}

fn cholesky(kernel: &Kernel) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    kernel
        .to_dense()
        .cholesky()
        .ok_or_else(|| SpqmError::Regime(indefinite(kernel.n, kernel.kappa * kernel.dt)))
}

/// `n = κdt·vᵀM⁻¹v`, `m = κdt·uᵀM⁻¹u`, `q = κdt·vᵀM⁻¹u` by one factorization
/// and two solves.
pub fn direct_moments(kernel: &Kernel) -> Result<MomentTriple> {
    if kernel.n == 0 {
        return Ok(MomentTriple { n: 0.0, m: 0.0, q: 0.0 });
    }
    let chol = cholesky(kernel)?;
    let v = kernel.nu_load();
    let u = kernel.mu_load();
    let mv = chol.solve(&v);
    let mu = chol.solve(&u);
    let kdt = kernel.kappa * kernel.dt;
    Ok(MomentTriple { n: kdt * v.dot(&mv), m: kdt * u.dot(&mu), q: kdt * v.dot(&mu) })
}

pub fn kernel_inverse(kernel: &Kernel) -> Result<DMatrix<f64>> {
    Ok(cholesky(kernel)?.inverse())
}

/// `max |A_kl − A_{N−1−l, N−1−k}|`.
pub fn persymmetry_defect(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for l in 0..n {
            worst = worst.max((a[(k, l)] - a[(n - 1 - l, n - 1 - k)]).abs());
        }
    }
    worst
}

/// Determinant by dense LU.
pub fn dense_determinant(kernel: &Kernel) -> f64 {
    kernel.to_dense().lu().determinant()
}

/// Incremental Cholesky of the growing kernel.
///
/// Appending index `N` adds the row `[yᵀ, √s]` with `y = L⁻¹c`,
/// `c_k = −κdt·ρ^{N−k}` and `s = 1 − κdt − |y|²`. Since the next `c` is `ρ`
/// times the current one plus a new entry, `y` updates in O(N). The solves
/// `L⁻¹u` and `L⁻¹v` against the μ and ν loads grow the same way, which gives
/// the moments of every prefix.
#[derive(Clone, Debug)]
pub struct SchurRecursion {
    kdt: f64,
    rho: f64,
    y: Vec<f64>,
    y_sq: f64,
    det: f64,
    // L⁻¹ applied to the μ load (fixed) and the ν load (shifts each step).
    a: Vec<f64>,
    b: Vec<f64>,
    u_next: f64,
}

impl SchurRecursion {
    pub fn new(dt: f64, kappa: f64) -> Result<Self> {
        Kernel::new(0, dt, kappa)?;
        Ok(Self {
            kdt: kappa * dt,
            rho: (-2.0 * kappa * dt).exp(),
            y: Vec::new(),
            y_sq: 0.0,
            det: 1.0,
            a: Vec::new(),
            b: Vec::new(),
            u_next: 1.0,
        })
    }

    /// Off-diagonal part of the next Cholesky row.
    pub fn next_row(&self) -> &[f64] {
        &self.y
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn size(&self) -> usize {
        self.y.len()
    }

    /// Moments of the current size; equal to [`direct_moments`] up to rounding.
    pub fn moments(&self) -> MomentTriple {
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        MomentTriple {
            n: self.kdt * dot(&self.b, &self.b),
            m: self.kdt * dot(&self.a, &self.a),
            q: self.kdt * dot(&self.b, &self.a),
        }
    }

    /// Append one index; returns the Schur complement `s = det_{N+1}/det_N`.
    pub fn append(&mut self) -> Result<f64> {
        let s = 1.0 - self.kdt - self.y_sq;
        if !(s > 0.0) {
            return Err(SpqmError::Regime(indefinite(self.y.len() + 1, self.kdt)));
        }
        let root = s.sqrt();
        let ya: f64 = self.y.iter().zip(&self.a).map(|(p, q)| p * q).sum();
        let yb: f64 = self.y.iter().zip(&self.b).map(|(p, q)| p * q).sum();
        self.a.push((self.u_next - ya) / root);
        for v in &mut self.b {
            *v *= self.rho;
        }
        self.b.push((1.0 - self.rho * yb) / root);
        self.u_next *= self.rho;
        let last = -self.rho * (self.kdt + self.y_sq) / root;
        for v in &mut self.y {
            *v *= self.rho;
        }
        self.y.push(last);
        self.y_sq = self.rho * self.rho * self.y_sq + last * last;
        self.det *= s;
        Ok(s)
    }
}

/// `det M` for sizes `0..=n`.
pub fn recursive_determinant(n: usize, dt: f64, kappa: f64) -> Result<Vec<f64>> {
    let mut rec = SchurRecursion::new(dt, kappa)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    for _ in 0..n {
        rec.append()?;
        out.push(rec.det());
    }
    Ok(out)
}

/// `det M_T = e^{−2κT}(1+κT)`.
pub fn analytic_determinant(kt: f64) -> f64 {
    (-2.0 * kt).exp() * (1.0 + kt)
}

pub fn analytic_moments(kt: f64) -> MomentTriple {
    let n = kt / (1.0 + kt);
    MomentTriple { n, m: n, q: 1.0 / (1.0 + kt) - (-2.0 * kt).exp() }
}

/// `(n+q, n−q)` from their own closed forms: `2e^{−κT}sinh κT` and
/// `2e^{−κT}cosh κT·Σ_T/(1+κT)`.
pub fn analytic_sum_diff(kt: f64) -> (f64, f64) {
    let e = (-kt).exp();
    (2.0 * e * kt.sinh(), 2.0 * e * kt.cosh() * sigma_width(kt) / (1.0 + kt))
}

fn riccati_rhs(kappa: f64, t: f64, y: [f64; 3]) -> [f64; 3] {
    let [n, _, q] = y;
    let e = (-2.0 * kappa * t).exp();
    [
        kappa * (1.0 - n) * (1.0 - n),
        kappa * (q + e) * (q + e),
        kappa * (-q * (1.0 - n) + e * (1.0 + n)),
    ]
}

/// Classical RK4 on the moment Riccati system from zero initial data.
/// Returns `(t, moments)` at `steps + 1` equally spaced times.
pub fn riccati_integrate(kappa: f64, t_final: f64, steps: usize) -> Result<Vec<(f64, MomentTriple)>> {
    let needed = (100.0 * kappa * t_final).ceil() as usize;
    if steps < needed.max(1) {
        return Err(SpqmError::Regime(format!(
            "{steps} steps is below 100 per unit κT (need {needed})"
        )));
    }
    let h = t_final / steps as f64;
    let mut y = [0.0; 3];
    let mut out = Vec::with_capacity(steps + 1);
    let triple = |y: [f64; 3]| MomentTriple { n: y[0], m: y[1], q: y[2] };
    out.push((0.0, triple(y)));
    let axpy = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = riccati_rhs(kappa, t, y);
        let k2 = riccati_rhs(kappa, t + 0.5 * h, axpy(y, k1, 0.5 * h));
        let k3 = riccati_rhs(kappa, t + 0.5 * h, axpy(y, k2, 0.5 * h));
        let k4 = riccati_rhs(kappa, t + h, axpy(y, k3, h));
        for j in 0..3 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(((i + 1) as f64 * h, triple(y)));
    }
    Ok(out)
}
