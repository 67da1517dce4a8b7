//! Coordinates on the instrumental Weyl-Heisenberg group.
//!
//! Harish-Chandra form `x = e^{a†ν} e^{−Ho r + z} e^{a μ*}` with `z = −s + iψ`,
//! Cartan form `x = D_β e^{iφ} e^{−Ho r − ℓ} D_α†`. The central element is
//! represented by the identity, so central coordinates act as scalars.
//!
//! Real components follow `ν = (ν₁ + iν₂)/√2`, which makes `d²ν = ½dν₁dν₂`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpqmError};
use crate::fock::{
    canonical_operators, displacement_operator, exp_annihilation, exp_creation, exp_number,
    FockOperator,
};

/// Smallest ruler accepted by the Cartan chart.
pub const R_MIN: f64 = 1e-12;

/// Finite-difference step for frame and Jacobian checks.
pub const FD_STEP: f64 = 1e-5;

const IM: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HCCoords {
    pub nu: C64,
    pub r: f64,
    pub z: C64,
    pub mu: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanCoords {
    pub beta: C64,
    pub phi: f64,
    pub r: f64,
    pub ell: f64,
    pub alpha: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    Hc,
    Cartan,
}

/// A group element in either chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coords {
    Hc(HCCoords),
    Cartan(CartanCoords),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gauge {
    pub f: f64,
    pub xi: f64,
}

impl HCCoords {
    pub fn identity() -> Self {
        Self { nu: C64::new(0.0, 0.0), r: 0.0, z: C64::new(0.0, 0.0), mu: C64::new(0.0, 0.0) }
    }

    /// Normalization coordinate `s = −Re z`.
    pub fn s(&self) -> f64 {
        -self.z.re
    }

    pub fn psi(&self) -> f64 {
        self.z.im
    }

    /// `[ψ, s, ν₁, ν₂, r, μ₁, μ₂]`.
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.psi(),
            self.s(),
            SQRT_2 * self.nu.re,
            SQRT_2 * self.nu.im,
            self.r,
            SQRT_2 * self.mu.re,
            SQRT_2 * self.mu.im,
        ]
    }

    pub fn from_array(v: [f64; 7]) -> Self {
        Self {
            nu: C64::new(v[2], v[3]) / SQRT_2,
            r: v[4],
            z: C64::new(-v[1], v[0]),
            mu: C64::new(v[5], v[6]) / SQRT_2,
        }
    }
}

impl CartanCoords {
    /// `[φ, ℓ, β₁, β₂, r, α₁, α₂]`.
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.phi,
            self.ell,
            SQRT_2 * self.beta.re,
            SQRT_2 * self.beta.im,
            self.r,
            SQRT_2 * self.alpha.re,
            SQRT_2 * self.alpha.im,
        ]
    }

    pub fn from_array(v: [f64; 7]) -> Self {
        Self {
            beta: C64::new(v[2], v[3]) / SQRT_2,
            phi: v[0],
            r: v[4],
            ell: v[1],
            alpha: C64::new(v[5], v[6]) / SQRT_2,
        }
    }
}

impl Coords {
    pub fn chart(&self) -> Chart {
        match self {
            Coords::Hc(_) => Chart::Hc,
            Coords::Cartan(_) => Chart::Cartan,
        }
    }

    pub fn r(&self) -> f64 {
        match self {
            Coords::Hc(x) => x.r,
            Coords::Cartan(y) => y.r,
        }
    }

    fn to_array(self) -> [f64; 7] {
        match self {
            Coords::Hc(x) => x.to_array(),
            Coords::Cartan(y) => y.to_array(),
        }
    }

    fn with_array(&self, v: [f64; 7]) -> Coords {
        match self {
            Coords::Hc(_) => Coords::Hc(HCCoords::from_array(v)),
            Coords::Cartan(_) => Coords::Cartan(CartanCoords::from_array(v)),
        }
    }
}

fn check_r(r: f64) -> Result<()> {
    if r.is_finite() && r > R_MIN {
        Ok(())
    } else {
        Err(SpqmError::SingularChart { r, r_min: R_MIN })
    }
}

/// Gauge functions from Harish-Chandra variables.
pub fn gauge_hc(x: &HCCoords) -> Result<Gauge> {
    check_r(x.r)?;
    let e = (-x.r).exp();
    let cross = x.nu.conj() * x.mu;
    let denom = -(-2.0 * x.r).exp_m1();
    let f = (x.nu.norm_sqr() + x.mu.norm_sqr() + 2.0 * e * cross.re) / (2.0 * denom);
    let xi = cross.im / (2.0 * x.r.sinh());
    Ok(Gauge { f, xi })
}

/// Gauge functions from Cartan variables.
pub fn gauge_cartan(y: &CartanCoords) -> Result<Gauge> {
    check_r(y.r)?;
    let e = (-y.r).exp();
    let cross = y.beta.conj() * y.alpha;
    let f = 0.5 * (y.beta.norm_sqr() + y.alpha.norm_sqr() - 2.0 * e * cross.re);
    let xi = e * cross.im;
    Ok(Gauge { f, xi })
}

pub fn gauge_functions(coords: &Coords) -> Result<Gauge> {
    match coords {
        Coords::Hc(x) => gauge_hc(x),
        Coords::Cartan(y) => gauge_cartan(y),
    }
}

pub fn hc_to_cartan(x: &HCCoords) -> Result<CartanCoords> {
    let g = gauge_hc(x)?;
    let e = (-x.r).exp();
    let denom = -(-2.0 * x.r).exp_m1();
    Ok(CartanCoords {
        beta: (x.nu + x.mu * e) / denom,
        phi: x.psi() - g.xi,
        r: x.r,
        ell: x.s() - g.f,
        alpha: (x.mu + x.nu * e) / denom,
    })
}

pub fn cartan_to_hc(y: &CartanCoords) -> Result<HCCoords> {
    let g = gauge_cartan(y)?;
    let e = (-y.r).exp();
    Ok(HCCoords {
        nu: y.beta - y.alpha * e,
        r: y.r,
        z: C64::new(-y.ell - g.f, y.phi + g.xi),
        mu: y.alpha - y.beta * e,
    })
}

pub fn represent_hc(x: &HCCoords, dim: usize) -> Result<FockOperator> {
    canonical_operators(dim)?;
    let left = exp_creation(dim, x.nu);
    let mid = exp_number(dim, x.r, x.z);
    let right = exp_annihilation(dim, x.mu);
    Ok(left.matmul(&mid).matmul(&right))
}

pub fn represent_cartan(y: &CartanCoords, dim: usize) -> Result<FockOperator> {
    check_r(y.r)?;
    let db = displacement_operator(dim, y.beta)?;
    let da = displacement_operator(dim, y.alpha)?;
    let mid = exp_number(dim, y.r, C64::new(-y.ell, y.phi));
    Ok(db.matmul(&mid).matmul(&da.adjoint()))
}

pub fn represent(coords: &Coords, dim: usize) -> Result<FockOperator> {
    match coords {
        Coords::Hc(x) => represent_hc(x, dim),
        Coords::Cartan(y) => represent_cartan(y, dim),
    }
}

/// Left multiplication by one SPQM increment.
///
/// The central update pairs `dw*` with the already-decayed `ν`, which makes the
/// iterated map agree exactly with the closed-form stochastic sums.
pub fn increment_left_multiply(x: &HCCoords, dw: C64, kappa: f64, dt: f64) -> HCCoords {
    let c = dw * kappa.sqrt();
    let nu_dec = x.nu * (-2.0 * kappa * dt).exp();
    HCCoords {
        nu: nu_dec + c,
        r: x.r + 2.0 * kappa * dt,
        z: x.z + 0.5 * c.norm_sqr() + c.conj() * nu_dec,
        mu: x.mu + c * (-x.r).exp(),
    }
}

/// Haar density with respect to the flat coordinate volume of the chart.
pub fn haar_density(coords: &Coords) -> Result<f64> {
    match coords {
        Coords::Hc(x) => Ok((2.0 * x.r).exp() / (4.0 * PI * PI)),
        Coords::Cartan(y) => {
            check_r(y.r)?;
            Ok(y.r.sinh().powi(2) / (PI * PI))
        }
    }
}

/// Coordinate index within a chart, in `to_array` order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// ψ or φ.
    Phase = 0,
    /// s or ℓ.
    Norm = 1,
    /// ν₁ or β₁.
    Left1 = 2,
    /// ν₂ or β₂.
    Left2 = 3,
    Ruler = 4,
    /// μ₁ or α₁.
    Right1 = 5,
    /// μ₂ or α₂.
    Right2 = 6,
}

impl Direction {
    pub const ALL: [Direction; 7] = [
        Direction::Phase,
        Direction::Norm,
        Direction::Left1,
        Direction::Left2,
        Direction::Ruler,
        Direction::Right1,
        Direction::Right2,
    ];
}

/// Operator `G` with `∂_d R(x) = G·R(x)`.
pub fn frame_generator(coords: &Coords, dim: usize, dir: Direction) -> Result<FockOperator> {
    let c = canonical_operators(dim)?;
    let id = FockOperator::identity(dim);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = match (coords, dir) {
        (Coords::Hc(_), Direction::Phase) | (Coords::Cartan(_), Direction::Phase) => id.scale(IM),
        (Coords::Hc(_), Direction::Norm) | (Coords::Cartan(_), Direction::Norm) => {
            id.scale_real(-1.0)
        }
        (Coords::Hc(_), Direction::Left1) => c.a_dag.scale_real(s),
        (Coords::Hc(_), Direction::Left2) => c.a_dag.scale(IM * s),
        (Coords::Hc(x), Direction::Ruler) => c.a_dag.scale(x.nu).add_scaled(&c.ho, C64::new(-1.0, 0.0)),
        (Coords::Hc(x), Direction::Right1) => {
            c.a.scale_real(s).add_identity(-x.nu * s).scale_real(x.r.exp())
        }
        (Coords::Hc(x), Direction::Right2) => {
            c.a.scale(-IM * s).add_identity(IM * x.nu * s).scale_real(x.r.exp())
        }
        (Coords::Cartan(y), dir) => {
            check_r(y.r)?;
            let [_, _, b1, b2, r, a1, a2] = y.to_array();
            let (ch, sh) = (r.cosh(), r.sinh());
            match dir {
                Direction::Left1 => c.p.scale(-IM).add_identity(IM * 0.5 * b2),
                Direction::Left2 => c.q.scale(IM).add_identity(-IM * 0.5 * b1),
                Direction::Ruler => c
                    .ho
                    .add_scaled(&c.q, C64::new(-b1, 0.0))
                    .add_scaled(&c.p, C64::new(-b2, 0.0))
                    .add_identity(C64::new(0.5 * (b1 * b1 + b2 * b2), 0.0))
                    .scale_real(-1.0),
                Direction::Right1 => c
                    .p
                    .scale(IM * ch)
                    .add_scaled(&c.q, C64::new(sh, 0.0))
                    .add_identity(C64::new(-b1 * sh, -(b2 * ch - 0.5 * a2))),
                Direction::Right2 => c
                    .q
                    .scale(-IM * ch)
                    .add_scaled(&c.p, C64::new(sh, 0.0))
                    .add_identity(C64::new(-b2 * sh, b1 * ch - 0.5 * a1)),
                Direction::Phase | Direction::Norm => unreachable!(),
            }
        }
    };
    Ok(g)
}

/// Residual of a frame-derivative identity on the interior block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameResidual {
    /// Frobenius norm of `(R(x+h) − R(x−h))/2h − G·R(x)`.
    pub residual: f64,
    /// Frobenius norm of `R(x)`.
    pub scale: f64,
}

impl FrameResidual {
    pub fn relative(&self) -> f64 {
        self.residual / self.scale
    }
}

pub fn frame_derivative_residual(coords: &Coords, dim: usize, dir: Direction) -> Result<FrameResidual> {
    let base = coords.to_array();
    let shifted = |sign: f64| {
        let mut v = base;
        v[dir as usize] += sign * FD_STEP;
        represent(&coords.with_array(v), dim)
    };
    let fd = (&shifted(1.0)? - &shifted(-1.0)?).scale_real(0.5 / FD_STEP);
    let r = represent(coords, dim)?;
    let analytic = frame_generator(coords, dim, dir)?.matmul(&r);
    Ok(FrameResidual {
        residual: (&fd - &analytic).interior().norm_fro(),
        scale: r.interior().norm_fro(),
    })
}

/// Numerical 7×7 Jacobian of `hc_to_cartan` in `to_array` coordinates.
pub fn hc_to_cartan_jacobian(x: &HCCoords) -> Result<DMatrix<f64>> {
    let base = x.to_array();
    let mut jac = DMatrix::zeros(7, 7);
    for j in 0..7 {
        let mut plus = base;
        let mut minus = base;
        plus[j] += FD_STEP;
        minus[j] -= FD_STEP;
        let yp = hc_to_cartan(&HCCoords::from_array(plus))?.to_array();
        let ym = hc_to_cartan(&HCCoords::from_array(minus))?.to_array();
        for i in 0..7 {
            jac[(i, j)] = (yp[i] - ym[i]) / (2.0 * FD_STEP);
        }
    }
    Ok(jac)
}

/// `|det J · ρ_Cartan / ρ_HC − 1|` at `x`.
pub fn jacobian_consistency_residual(x: &HCCoords) -> Result<f64> {
    let det = hc_to_cartan_jacobian(x)?.determinant().abs();
    let y = hc_to_cartan(x)?;
    let ratio = haar_density(&Coords::Cartan(y))? / haar_density(&Coords::Hc(*x))?;
    Ok((det * ratio - 1.0).abs())
}
