//! Truncated Fock-space operators and dense kernels.
//!
//! Matrices are stored row-major on the number basis `|0⟩ … |dim-1⟩`.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Result, SpqmError};

/// Dense complex square matrix on a truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    dim: usize,
    data: Vec<C64>,
}

impl FockOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag((0..dim).map(|_| C64::new(1.0, 0.0)))
    }

    pub fn from_diag<It: IntoIterator<Item = C64>>(diag: It) -> Self {
        let d: Vec<C64> = diag.into_iter().collect();
        let mut m = Self::zeros(d.len());
        for (i, v) in d.into_iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rk = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(rk) {
                    *o += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect(),
        }
    }

    pub fn add_identity(&self, s: C64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)] += s;
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn norm_op(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        self.to_nalgebra().singular_values().max()
    }

    /// Top-left `m × m` block.
    pub fn block(&self, m: usize) -> Self {
        assert!(m <= self.dim);
        Self::from_fn(m, |i, j| self[(i, j)])
    }

    /// Top-left `⌈dim/2⌉` block, where truncation artifacts are negligible.
    pub fn interior(&self) -> Self {
        self.block(interior_dim(self.dim))
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (self + &self.adjoint()).scale_real(0.5);
        let mut ev: Vec<f64> = h.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Solve `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
                .unwrap_or(col);
            let pv = a[piv * n + col];
            if pv.norm() == 0.0 || !pv.norm().is_finite() {
                return Err(SpqmError::NumericalDomain("singular matrix in LU solve".into()));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                    b.swap(col * n + j, piv * n + j);
                }
            }
            let inv = pv.inv();
            for r in col + 1..n {
                let f = a[r * n + col] * inv;
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                for j in col..n {
                    let t = a[col * n + j];
                    a[r * n + j] -= f * t;
                }
                for j in 0..n {
                    let t = b[col * n + j];
                    b[r * n + j] -= f * t;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = a[col * n + col].inv();
            for j in 0..n {
                let mut s = b[col * n + j];
                for k in col + 1..n {
                    s -= a[col * n + k] * b[k * n + j];
                }
                b[col * n + j] = s * inv;
            }
        }
        Ok(Self { dim: n, data: b })
    }
}

impl Index<(usize, usize)> for FockOperator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for FockOperator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &FockOperator {
    type Output = FockOperator;
    fn add(self, rhs: &FockOperator) -> FockOperator {
        self.add_scaled(rhs, C64::new(1.0, 0.0))
    }
}

impl Sub for &FockOperator {
    type Output = FockOperator;
    fn sub(self, rhs: &FockOperator) -> FockOperator {
        self.add_scaled(rhs, C64::new(-1.0, 0.0))
    }
}

impl Mul for &FockOperator {
    type Output = FockOperator;
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        self.matmul(rhs)
    }
}

/// Size of the interior comparison block.
pub fn interior_dim(dim: usize) -> usize {
    dim.div_ceil(2)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(SpqmError::InvalidDimension { dim, min: 2 });
    }
    Ok(())
}

/// The canonical operators at one truncation.
#[derive(Clone, Debug)]
pub struct Canonical {
    pub a: FockOperator,
    pub a_dag: FockOperator,
    pub q: FockOperator,
    pub p: FockOperator,
    pub ho: FockOperator,
}

pub fn canonical_operators(dim: usize) -> Result<Canonical> {
    check_dim(dim)?;
    let a = FockOperator::from_fn(dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let a_dag = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &a_dag).scale_real(s);
    let p = (&a - &a_dag).scale(C64::new(0.0, -s));
    let ho = FockOperator::from_diag((0..dim).map(|n| C64::new(n as f64 + 0.5, 0.0)));
    Ok(Canonical { a, a_dag, q, p, ho })
}

/// `D_α = exp(a†α − a α*)`.
pub fn displacement_operator(dim: usize, alpha: C64) -> Result<FockOperator> {
    let c = canonical_operators(dim)?;
    matrix_exponential(&c.a_dag.scale(alpha).add_scaled(&c.a, -alpha.conj()))
}

/// `exp(−t·Ho + c)`, diagonal.
pub fn exp_number(dim: usize, t: f64, c: C64) -> FockOperator {
    FockOperator::from_diag((0..dim).map(|n| (c - t * (n as f64 + 0.5)).exp()))
}

/// `exp(a† ν)`, exact: the truncated creation operator is nilpotent.
pub fn exp_creation(dim: usize, nu: C64) -> FockOperator {
    // ⟨m|e^{νa†}|n⟩ = ν^{m−n} √(m!/n!) / (m−n)!
    let mut out = FockOperator::zeros(dim);
    for n in 0..dim {
        let mut v = C64::new(1.0, 0.0);
        out[(n, n)] = v;
        for m in n + 1..dim {
            let k = (m - n) as f64;
            v = v * nu * (m as f64).sqrt() / k;
            out[(m, n)] = v;
        }
    }
    out
}

/// `exp(a μ*)`, exact.
pub fn exp_annihilation(dim: usize, mu: C64) -> FockOperator {
    exp_creation(dim, mu).adjoint()
}

/// Compression of the untruncated `D_α` onto the first `dim` number states.
///
/// Uses `D_α = e^{−|α|²/2} e^{αa†} e^{−α*a}`; every intermediate index of the
/// product stays below `min(m, n)`, so entries are exact for any `α`.
pub fn displacement_compressed(dim: usize, alpha: C64) -> Result<FockOperator> {
    check_dim(dim)?;
    let left = exp_creation(dim, alpha);
    let right = exp_annihilation(dim, -alpha);
    Ok(left.matmul(&right).scale_real((-0.5 * alpha.norm_sqr()).exp()))
}

/// Coherent state `D_β|0⟩` computed through the truncated displacement.
pub fn coherent_state(dim: usize, beta: C64) -> Result<Vec<C64>> {
    Ok(displacement_operator(dim, beta)?.column(0))
}

// Padé coefficients b_0..b_m for degrees 3, 5, 7, 9, 13.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539_398_330_063_23e-1,
    9.504178996162932e-1,
    2.097847961257068e0,
    5.371920351148152e0,
];

/// Matrix exponential by scaling and squaring around a Padé core.
///
/// Low degrees (3, 5, 7, 9) are used when the 1-norm permits; otherwise the
/// argument is scaled until the degree-13 approximant is accurate.
pub fn matrix_exponential(x: &FockOperator) -> Result<FockOperator> {
    if !x.is_finite() {
        return Err(SpqmError::NumericalDomain("non-finite entries in exponential argument".into()));
    }
    let n = x.dim();
    let norm = x.norm_one();
    let id = FockOperator::identity(n);
    if norm == 0.0 {
        return Ok(id);
    }
    let low: [&[f64]; 4] = [&PADE3, &PADE5, &PADE7, &PADE9];
    for (b, &theta) in low.iter().zip(THETA.iter()) {
        if norm <= theta {
            return pade_low(x, b);
        }
    }
    let s = (norm / THETA[4]).log2().ceil().max(0.0) as i32;
    let xs = x.scale_real(0.5f64.powi(s));
    let mut r = pade13(&xs)?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(SpqmError::NumericalDomain("matrix exponential overflowed".into()));
    }
    Ok(r)
}

fn pade_low(x: &FockOperator, b: &[f64]) -> Result<FockOperator> {
    let n = x.dim();
    let x2 = x.matmul(x);
    let mut pow = FockOperator::identity(n);
    let mut u = FockOperator::zeros(n);
    let mut v = FockOperator::zeros(n);
    for j in (0..b.len()).step_by(2) {
        v = v.add_scaled(&pow, C64::new(b[j], 0.0));
        u = u.add_scaled(&pow, C64::new(b[j + 1], 0.0));
        pow = pow.matmul(&x2);
    }
    let u = x.matmul(&u);
    (&v - &u).solve(&(&v + &u))
}

fn pade13(x: &FockOperator) -> Result<FockOperator> {
    let b = &PADE13;
    let n = x.dim();
    let c = |v: f64| C64::new(v, 0.0);
    let id = FockOperator::identity(n);
    let a2 = x.matmul(x);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let inner_u = a6.scale_real(b[13]).add_scaled(&a4, c(b[11])).add_scaled(&a2, c(b[9]));
    let u = a6
        .matmul(&inner_u)
        .add_scaled(&a6, c(b[7]))
        .add_scaled(&a4, c(b[5]))
        .add_scaled(&a2, c(b[3]))
        .add_scaled(&id, c(b[1]));
    let u = x.matmul(&u);
    let inner_v = a6.scale_real(b[12]).add_scaled(&a4, c(b[10])).add_scaled(&a2, c(b[8]));
    let v = a6
        .matmul(&inner_v)
        .add_scaled(&a6, c(b[6]))
        .add_scaled(&a4, c(b[4]))
        .add_scaled(&a2, c(b[2]))
        .add_scaled(&id, c(b[0]));
    (&v - &u).solve(&(&v + &u))
}
