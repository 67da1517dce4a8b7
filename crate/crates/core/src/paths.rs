//! Wiener paths, SDE propagation in both charts, closed-form sums and
//! time-ordered Kraus products.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpqmError};
use crate::fock::{canonical_operators, matrix_exponential, Canonical, FockOperator};
use crate::group::{
    gauge_cartan, hc_to_cartan, increment_left_multiply, CartanCoords, Chart,
    HCCoords,
};
use crate::moments::Kernel;

/// Default `κ·t` at which Cartan integration takes over from the exact HC state.
pub const CARTAN_SEED_KT: f64 = 0.25;

/// Outcome record `dw_k`, `k = 0..N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerPath {
    pub dt: f64,
    pub kappa: f64,
    pub increments: Vec<C64>,
}

impl WienerPath {
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn t_final(&self) -> f64 {
        self.dt * self.len() as f64
    }

    pub fn kt(&self) -> f64 {
        self.kappa * self.t_final()
    }

    /// Sum consecutive blocks of `factor` increments.
    pub fn coarsen(&self, factor: usize) -> WienerPath {
        assert!(factor > 0 && self.len().is_multiple_of(factor), "length must be a multiple of the factor");
        WienerPath {
            dt: self.dt * factor as f64,
            kappa: self.kappa,
            increments: self.increments.chunks(factor).map(|c| c.iter().sum()).collect(),
        }
    }
}

/// Independent generator for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn standard_complex<R: Rng>(rng: &mut R) -> (f64, f64) {
    (rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Plain-measure path on substream `index`.
pub fn sample_wiener_indexed(n: usize, dt: f64, kappa: f64, seed: u64, index: u64) -> WienerPath {
    let mut rng = path_rng(seed, index);
    let s = (0.5 * dt).sqrt();
    let increments = (0..n)
        .map(|_| {
            let (x, y) = standard_complex(&mut rng);
            C64::new(x * s, y * s)
        })
        .collect();
    WienerPath { dt, kappa, increments }
}

pub fn sample_wiener(n: usize, dt: f64, kappa: f64, seed: u64) -> WienerPath {
    sample_wiener_indexed(n, dt, kappa, seed, 0)
}

/// Factorization route for the modified measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModifiedMethod {
    /// Dense Cholesky `M = LLᵀ`, `w = √dt·L⁻ᵀξ`.
    Dense,
    /// Banded factors from the tridiagonal inverse of the exponential kernel.
    Banded,
}

/// Draws increments with `⟨dw_k* dw_l⟩ = dt·(M⁻¹)_kl`.
#[derive(Clone, Debug)]
pub struct ModifiedSampler {
    n: usize,
    dt: f64,
    kappa: f64,
    repr: SamplerRepr,
}

#[derive(Clone, Debug)]
enum SamplerRepr {
    Plain,
    Dense(DMatrix<f64>),
    Banded(Banded),
}

// Covariance M⁻¹ = S⁻¹T with T = K⁻¹ tridiagonal and S = T − κdt·I.
// y = Cξ has covariance TS = CCᵀ (pentadiagonal); w = S⁻¹y.
#[derive(Clone, Debug)]
struct Banded {
    // Cholesky of TS: diagonal and the two subdiagonals.
    c0: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    // S tridiagonal.
    s_diag: Vec<f64>,
    s_off: f64,
}

impl ModifiedSampler {
    pub fn new(n: usize, dt: f64, kappa: f64, method: ModifiedMethod) -> Result<Self> {
        let repr = if kappa == 0.0 {
            SamplerRepr::Plain
        } else {
            match method {
                ModifiedMethod::Dense => {
                    let m = Kernel::new(n, dt, kappa)?.to_dense();
                    let chol = m.cholesky().ok_or_else(|| {
                        SpqmError::NumericalDomain("kernel is not positive definite for this κT and κdt".into())
                    })?;
                    SamplerRepr::Dense(chol.l())
                }
                ModifiedMethod::Banded => {
                    Kernel::new(n, dt, kappa)?;
                    SamplerRepr::Banded(Banded::new(n, dt, kappa)?)
                }
            }
        };
        Ok(Self { n, dt, kappa, repr })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Maps i.i.d. standard normals to one real component with covariance `M⁻¹`.
    pub fn correlate(&self, xi: &mut [f64]) {
        match &self.repr {
            SamplerRepr::Plain => {}
            SamplerRepr::Dense(l) => {
                // Back substitution with Lᵀ.
                let n = self.n;
                for i in (0..n).rev() {
                    let mut s = xi[i];
                    for k in i + 1..n {
                        s -= l[(k, i)] * xi[k];
                    }
                    xi[i] = s / l[(i, i)];
                }
            }
            SamplerRepr::Banded(b) => b.apply(xi),
        }
    }

    pub fn sample(&self, seed: u64, index: u64) -> WienerPath {
        let mut rng = path_rng(seed, index);
        let mut re = vec![0.0; self.n];
        let mut im = vec![0.0; self.n];
        for (a, b) in re.iter_mut().zip(im.iter_mut()) {
            (*a, *b) = standard_complex(&mut rng);
        }
        self.correlate(&mut re);
        self.correlate(&mut im);
        let s = (0.5 * self.dt).sqrt();
        WienerPath {
            dt: self.dt,
            kappa: self.kappa,
            increments: re.iter().zip(&im).map(|(&a, &b)| C64::new(a * s, b * s)).collect(),
        }
    }

    /// Exact covariance `F Fᵀ` realized by the factor, for checking.
    pub fn realized_covariance(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut f = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            self.correlate(&mut e);
            for i in 0..n {
                f[(i, j)] = e[i];
            }
        }
        &f * f.transpose()
    }
}

impl Banded {
    fn new(n: usize, dt: f64, kappa: f64) -> Result<Self> {
        let eps = kappa * dt;
        let rho = (-2.0 * kappa * dt).exp();
        let (t_diag, t_off) = if n == 1 {
            (vec![1.0], 0.0)
        } else {
            let g = 1.0 / (1.0 - rho * rho);
            let mut d = vec![(1.0 + rho * rho) * g; n];
            d[0] = g;
            d[n - 1] = g;
            (d, -rho * g)
        };
        let s_diag: Vec<f64> = t_diag.iter().map(|d| d - eps).collect();
        let s_off = t_off;
        // TS = T² − εT, pentadiagonal.
        let tt = |i: usize, j: usize| -> f64 {
            let t = |a: usize, b: usize| -> f64 {
                if a == b {
                    t_diag[a]
                } else if a.abs_diff(b) == 1 {
                    t_off
                } else {
                    0.0
                }
            };
            let lo = i.saturating_sub(1).max(j.saturating_sub(1));
            let hi = (i + 1).min(j + 1).min(n - 1);
            let mut s = 0.0;
            for k in lo..=hi {
                s += t(i, k) * t(k, j);
            }
            s - eps * t(i, j)
        };
        let mut c0 = vec![0.0; n];
        let mut c1 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        for i in 0..n {
            if i >= 2 {
                c2[i] = tt(i, i - 2) / c0[i - 2];
            }
            if i >= 1 {
                let mut v = tt(i, i - 1);
                if i >= 2 {
                    v -= c2[i] * c1[i - 1];
                }
                c1[i] = v / c0[i - 1];
            }
            let d = tt(i, i) - c1[i] * c1[i] - c2[i] * c2[i];
            if !(d > 0.0) {
                return Err(SpqmError::NumericalDomain("banded factor not positive definite for this κT and κdt".into()));
            }
            c0[i] = d.sqrt();
        }
        Ok(Self { c0, c1, c2, s_diag, s_off })
    }

    fn apply(&self, xi: &mut [f64]) {
        let n = xi.len();
        if n == 0 {
            return;
        }
        // y = Cξ, in place from the bottom.
        for i in (0..n).rev() {
            let mut v = self.c0[i] * xi[i];
            if i >= 1 {
                v += self.c1[i] * xi[i - 1];
            }
            if i >= 2 {
                v += self.c2[i] * xi[i - 2];
            }
            xi[i] = v;
        }
        // Solve S w = y (Thomas).
        let mut cp = vec![0.0; n];
        let mut beta = self.s_diag[0];
        xi[0] /= beta;
        for i in 1..n {
            cp[i] = self.s_off / beta;
            beta = self.s_diag[i] - self.s_off * cp[i];
            xi[i] = (xi[i] - self.s_off * xi[i - 1]) / beta;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            xi[i] -= cp[i + 1] * xi[i + 1];
        }
    }
}

/// Modified-measure path on substream `index` through the banded route.
pub fn sample_modified(n: usize, dt: f64, kappa: f64, seed: u64) -> Result<WienerPath> {
    Ok(ModifiedSampler::new(n, dt, kappa, ModifiedMethod::Banded)?.sample(seed, 0))
}

/// Sample-path coordinates at `t_k = k·dt`, `k = 0..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub hc: Vec<HCCoords>,
    /// Cartan coordinates at `times[cartan_start..]`.
    pub cartan: Vec<CartanCoords>,
    pub cartan_start: usize,
}

impl Trajectory {
    pub fn cartan_at(&self, k: usize) -> Option<&CartanCoords> {
        k.checked_sub(self.cartan_start).and_then(|i| self.cartan.get(i))
    }
}

/// Propagate with the default Cartan seed time.
pub fn propagate_sde(path: &WienerPath, chart: Chart) -> Result<Trajectory> {
    propagate_sde_seeded(path, chart, CARTAN_SEED_KT)
}

/// Propagate a path. For the Cartan chart the exact HC state at step
/// `max(1, round(seed_kt/κdt))` seeds Itô-Euler steps of the Cartan SDEs.
pub fn propagate_sde_seeded(path: &WienerPath, chart: Chart, seed_kt: f64) -> Result<Trajectory> {
    let n = path.len();
    let (kappa, dt) = (path.kappa, path.dt);
    let mut hc = Vec::with_capacity(n + 1);
    let mut x = HCCoords::identity();
    hc.push(x);
    for &dw in &path.increments {
        x = increment_left_multiply(&x, dw, kappa, dt);
        hc.push(x);
    }
    let times = (0..=n).map(|k| k as f64 * dt).collect();
    if chart == Chart::Hc {
        return Ok(Trajectory { times, hc, cartan: Vec::new(), cartan_start: n + 1 });
    }
    if n == 0 {
        return Err(SpqmError::SingularChart { r: 0.0, r_min: crate::group::R_MIN });
    }
    let start = ((seed_kt / (kappa * dt)).round() as usize).clamp(1, n);
    let mut y = hc_to_cartan(&hc[start])?;
    let mut cartan = Vec::with_capacity(n + 1 - start);
    cartan.push(y);
    for &dw in &path.increments[start..] {
        y = cartan_euler_step(&y, dw, kappa, dt);
        cartan.push(y);
    }
    Ok(Trajectory { times, hc, cartan, cartan_start: start })
}

/// One Itô-Euler step of the Cartan SDEs at ruler `y.r = 2κt`.
pub fn cartan_euler_step(y: &CartanCoords, dw: C64, kappa: f64, dt: f64) -> CartanCoords {
    let c = dw * kappa.sqrt();
    let (b, a, r) = (y.beta, y.alpha, y.r);
    let csch = 1.0 / r.sinh();
    let coth = 1.0 / r.tanh();
    let da = (c - b * (2.0 * kappa * dt)) * csch;
    let db = da * r.cosh();
    let dl = -(coth * c.norm_sqr() - 2.0 * b.norm_sqr() * kappa * dt + 2.0 * (b * c.conj()).re);
    let dphi = 2.0 * csch * kappa * dt * (a * b.conj()).im + ((b * coth - a * csch) * c.conj()).im;
    CartanCoords {
        beta: b + db,
        phi: y.phi + dphi,
        r: r + 2.0 * kappa * dt,
        ell: y.ell + dl,
        alpha: a + da,
    }
}

/// Endpoint of the HC recursion without storing the trajectory.
pub fn hc_endpoint(path: &WienerPath) -> HCCoords {
    path.increments
        .iter()
        .fold(HCCoords::identity(), |x, &dw| increment_left_multiply(&x, dw, path.kappa, path.dt))
}

/// Stochastic-integral sums for the HC endpoint.
///
/// `ν = Σ c_k e^{−2κ(T−t_{k+1})}`, `μ = Σ c_k e^{−2κt_k}` and
/// `z = ½Σ|c_k|² + Σ_{k>l} c_k* c_l e^{−2κdt(k−l)}` with `c = √κ dw`.
/// The double sum is evaluated through prefix sums of `c_l e^{2κt_l}`.
pub fn closed_form_hc(path: &WienerPath) -> HCCoords {
    let n = path.len();
    let h = 2.0 * path.kappa * path.dt;
    let sk = path.kappa.sqrt();
    let mut nu = C64::new(0.0, 0.0);
    let mut mu = C64::new(0.0, 0.0);
    let mut diag = 0.0;
    let mut off = C64::new(0.0, 0.0);
    let mut prefix = C64::new(0.0, 0.0);
    for (k, &dw) in path.increments.iter().enumerate() {
        let c = dw * sk;
        let tk = h * k as f64;
        nu += c * (-h * (n - 1 - k) as f64).exp();
        mu += c * (-tk).exp();
        diag += c.norm_sqr();
        off += c.conj() * (-tk).exp() * prefix;
        prefix += c * tk.exp();
    }
    HCCoords { nu, r: h * n as f64, z: off + 0.5 * diag, mu }
}

/// Cartan endpoint from its own stochastic sums.
///
/// `β = Σ c_k (e^{2κt_{k+1}} + e^{−2κt_k}) / 2sinh r` and
/// `α = Σ c_k (e^{r−2κt_k} + e^{−(r−2κt_{k+1})}) / 2sinh r`; the centre follows
/// from `ℓ = s − f`, `φ = ψ − ξ`.
pub fn closed_form_cartan(path: &WienerPath) -> Result<CartanCoords> {
    let n = path.len();
    let h = 2.0 * path.kappa * path.dt;
    let r = h * n as f64;
    if !(r > crate::group::R_MIN) {
        return Err(SpqmError::SingularChart { r, r_min: crate::group::R_MIN });
    }
    let sk = path.kappa.sqrt();
    let denom = 2.0 * r.sinh();
    let mut beta = C64::new(0.0, 0.0);
    let mut alpha = C64::new(0.0, 0.0);
    for (k, &dw) in path.increments.iter().enumerate() {
        let c = dw * sk;
        let (t0, t1) = (h * k as f64, h * (k + 1) as f64);
        beta += c * (t1.exp() + (-t0).exp());
        alpha += c * ((r - t0).exp() + (t1 - r).exp());
    }
    beta /= denom;
    alpha /= denom;
    let x = closed_form_hc(path);
    let mut y = CartanCoords { beta, phi: 0.0, r, ell: 0.0, alpha };
    let g = gauge_cartan(&y)?;
    y.ell = x.s() - g.f;
    y.phi = x.psi() - g.xi;
    Ok(y)
}

/// `exp(−2κdt·Ho + a c* + a† c)` for `c = √κ dw`.
pub fn step_kraus(ops: &Canonical, dw: C64, kappa: f64, dt: f64) -> Result<FockOperator> {
    let c = dw * kappa.sqrt();
    let g = ops
        .ho
        .scale_real(-2.0 * kappa * dt)
        .add_scaled(&ops.a, c.conj())
        .add_scaled(&ops.a_dag, c);
    matrix_exponential(&g)
}

/// Time-ordered product of step Kraus operators, latest step leftmost.
pub fn kraus_time_ordered(path: &WienerPath, dim: usize) -> Result<FockOperator> {
    let ops = canonical_operators(dim)?;
    let mut k = FockOperator::identity(dim);
    for &dw in &path.increments {
        k = step_kraus(&ops, dw, path.kappa, path.dt)?.matmul(&k);
        if !k.is_finite() {
            return Err(SpqmError::NumericalDomain("Kraus product overflowed".into()));
        }
    }
    Ok(k)
}
