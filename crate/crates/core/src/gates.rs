//! Two-qubit gates in the dual-unitary parameterization
//! `U = e^{i theta} (u+ (x) u-) V[J] (v+ (x) v-)`.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_minus_i, kron, pauli, CMat, PauliIndex};

/// Tolerance for the unitarity / SU(2) checks on single-qubit factors.
pub const FACTOR_TOL: f64 = 1e-12;

/// A 4x4 two-qubit gate in the computational basis `|q1 q2>`, q1 the left factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMat", into = "CMat")]
pub struct Gate2Q(CMat);

impl Gate2Q {
    pub fn new(m: CMat) -> Result<Self> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(Error::DimensionMismatch(format!(
                "two-qubit gate must be 4x4, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(Gate2Q(m))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn swap() -> Self {
        Gate2Q(CMat::from_real(&[
            &[1., 0., 0., 0.],
            &[0., 0., 1., 0.],
            &[0., 1., 0., 0.],
            &[0., 0., 0., 1.],
        ]))
    }

    pub fn identity() -> Self {
        Gate2Q(CMat::identity(4))
    }
}

impl TryFrom<CMat> for Gate2Q {
    type Error = Error;
    fn try_from(m: CMat) -> Result<Self> {
        Gate2Q::new(m)
    }
}

impl From<Gate2Q> for CMat {
    fn from(g: Gate2Q) -> CMat {
        g.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub theta: f64,
    pub u_plus: CMat,
    pub u_minus: CMat,
    pub v_plus: CMat,
    pub v_minus: CMat,
    pub j_coupling: f64,
}

impl GateParams {
    /// Identity single-qubit factors, no global phase.
    pub fn bare(j_coupling: f64) -> Self {
        let i2 = CMat::identity(2);
        GateParams {
            theta: 0.0,
            u_plus: i2.clone(),
            u_minus: i2.clone(),
            v_plus: i2.clone(),
            v_minus: i2,
            j_coupling,
        }
    }

    /// Same local factors on both legs: `(u (x) u) V[J] (v (x) v)`.
    pub fn symmetric(u: CMat, v: CMat, j_coupling: f64) -> Self {
        GateParams {
            theta: 0.0,
            u_plus: u.clone(),
            u_minus: u,
            v_plus: v.clone(),
            v_minus: v,
            j_coupling,
        }
    }
}

/// `V[J] = exp(-i (pi/4 XX + pi/4 YY + J ZZ))`.
pub fn build_v(j_coupling: f64) -> Gate2Q {
    let h = v_hamiltonian(FRAC_PI_4, FRAC_PI_4, j_coupling);
    Gate2Q(expm_minus_i(&h).expect("Pauli sum is Hermitian"))
}

pub(crate) fn v_hamiltonian(jx: f64, jy: f64, jz: f64) -> CMat {
    let term = |p: PauliIndex, w: f64| kron(&pauli(p), &pauli(p)).scale(Complex64::new(w, 0.0));
    let xy = &term(PauliIndex::X, jx) + &term(PauliIndex::Y, jy);
    &xy + &term(PauliIndex::Z, jz)
}

fn check_su2(name: &str, m: &CMat) -> Result<()> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimensionMismatch(format!("{name} must be 2x2")));
    }
    let res = m.unitarity_residual();
    if res > FACTOR_TOL {
        return Err(Error::NotUnitary(res));
    }
    let det = m.det2()?;
    if (det - Complex64::new(1.0, 0.0)).norm() > FACTOR_TOL {
        return Err(Error::InvalidInput(format!(
            "{name} is not in SU(2): det = {det}"
        )));
    }
    Ok(())
}

pub fn assemble(p: &GateParams) -> Result<Gate2Q> {
    check_su2("u_plus", &p.u_plus)?;
    check_su2("u_minus", &p.u_minus)?;
    check_su2("v_plus", &p.v_plus)?;
    check_su2("v_minus", &p.v_minus)?;
    let v = build_v(p.j_coupling);
    let left = kron(&p.u_plus, &p.u_minus);
    let right = kron(&p.v_plus, &p.v_minus);
    let u = (&(&left * v.matrix()) * &right).scale(Complex64::from_polar(1.0, p.theta));
    Ok(Gate2Q(u))
}

/// Space-time dual: `<k l| U~ |i j> = <j l| U |i k>`. An involution.
pub fn dual_reshuffle(u: &Gate2Q) -> Gate2Q {
    let m = u.matrix();
    let mut out = CMat::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * k + l, 2 * i + j)] = m[(2 * j + l, 2 * i + k)];
                }
            }
        }
    }
    Gate2Q(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualUnitarity {
    pub dual_unitary: bool,
    pub unitary_residual: f64,
    pub dual_residual: f64,
}

impl DualUnitarity {
    pub fn max_residual(&self) -> f64 {
        self.unitary_residual.max(self.dual_residual)
    }
}

pub fn is_dual_unitary(u: &Gate2Q, tol: f64) -> DualUnitarity {
    let unitary_residual = u.matrix().unitarity_residual();
    let dual_residual = dual_reshuffle(u).matrix().unitarity_residual();
    DualUnitarity {
        dual_unitary: unitary_residual < tol && dual_residual < tol,
        unitary_residual,
        dual_residual,
    }
}

/// `exp(i a Y)`.
pub fn ry(a: f64) -> CMat {
    let (s, c) = a.sin_cos();
    CMat::from_real(&[&[c, s], &[-s, c]])
}

/// `exp(i a Z)`.
pub fn rz(a: f64) -> CMat {
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = Complex64::from_polar(1.0, a);
    m[(1, 1)] = Complex64::from_polar(1.0, -a);
    m
}

/// Haar-random SU(2) element from a normalized Gaussian quaternion.
pub fn haar_su2<R: Rng + ?Sized>(rng: &mut R) -> CMat {
    let q: [f64; 4] = loop {
        let q = [(); 4].map(|_| rng.sample::<f64, _>(StandardNormal));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            break q.map(|x| x / n);
        }
    };
    let a = Complex64::new(q[0], q[1]);
    let b = Complex64::new(q[2], q[3]);
    CMat::from_rows(&[vec![a, -b.conj()], vec![b, a.conj()]]).expect("2x2 literal")
}

/// Random parameters: Haar factors, uniform `J` in `[0, pi/2)` and `theta` in `[0, 2 pi)`.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R) -> GateParams {
    GateParams {
        theta: rng.random_range(0.0..std::f64::consts::TAU),
        u_plus: haar_su2(rng),
        u_minus: haar_su2(rng),
        v_plus: haar_su2(rng),
        v_minus: haar_su2(rng),
        j_coupling: rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
    }
}
