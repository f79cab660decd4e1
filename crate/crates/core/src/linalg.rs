//! Dense complex matrices and the handful of operations the rest of the crate needs.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Absolute max-norm tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(CMat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    /// Real matrix from row slices; panics on ragged input (used for literals).
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let data: Vec<Complex64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        let c = rows.first().map_or(0, |r| r.len());
        assert_eq!(data.len(), rows.len() * c, "ragged literal");
        CMat {
            rows: rows.len(),
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        self.data
            .chunks(self.cols.max(1))
            .map(<[_]>::to_vec)
            .collect()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![ZERO; n * p];
        // i-k-j order keeps the inner loop on contiguous rows of both operands.
        const BLOCK: usize = 64;
        for kk in (0..m).step_by(BLOCK) {
            let kend = (kk + BLOCK).min(m);
            for i in 0..n {
                let orow = &mut out[i * p..(i + 1) * p];
                for k in kk..kend {
                    let a = self.data[i * m + k];
                    if a == ZERO {
                        continue;
                    }
                    let brow = &rhs.data[k * p..(k + 1) * p];
                    for (o, &b) in orow.iter_mut().zip(brow) {
                        *o += a * b;
                    }
                }
            }
        }
        Ok(CMat {
            rows: n,
            cols: p,
            data: out,
        })
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut e: u32) -> Result<CMat> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "power of a non-square matrix".into(),
            ));
        }
        let mut acc = CMat::identity(self.rows);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.matmul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm distance; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |U^dag U - 1|`.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = self
            .dagger()
            .matmul(self)
            .expect("square matrix times its adjoint");
        g.max_abs_diff(&CMat::identity(self.rows))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.dagger())
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = m[(i, j)];
            }
        }
        out
    }

    /// Determinant of a 2x2 matrix.
    pub fn det2(&self) -> Result<Complex64> {
        if self.rows != 2 || self.cols != 2 {
            return Err(Error::DimensionMismatch("det2 needs a 2x2 matrix".into()));
        }
        Ok(self.data[0] * self.data[3] - self.data[1] * self.data[2])
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMat {
    type Output = CMat;
    /// Panics on a shape mismatch; use [`CMat::matmul`] for a checked product.
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Serialize for CMat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(d)?;
        CMat::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = CMat::zeros(ar * br, ac * bc);
    let oc = ac * bc;
    for i in 0..ar {
        for j in 0..ac {
            let x = a.data[i * ac + j];
            for k in 0..br {
                for l in 0..bc {
                    out.data[(i * br + k) * oc + j * bc + l] = x * b.data[k * bc + l];
                }
            }
        }
    }
    out
}

/// `exp(-i H)` for Hermitian `H`, via `H = Q diag(w) Q^dag`.
pub fn expm_minus_i(h: &CMat) -> Result<CMat> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(
            "expm_minus_i needs a square matrix".into(),
        ));
    }
    let dev = h.hermiticity_residual();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    // Symmetrize so round-off in the input cannot leak into the eigensolver.
    let hs = (&h.to_nalgebra() + h.to_nalgebra().adjoint()) * Complex64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(hs);
    let q = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|w| Complex64::from_polar(1.0, -w)));
    let e = q * phases * q.adjoint();
    Ok(CMat::from_nalgebra(&e))
}

/// Which tensor factor to trace out; `One` is the left Kronecker factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Site {
    One,
    Two,
}

pub fn partial_trace(m: &CMat, which: Site) -> Result<CMat> {
    if m.rows != 4 || m.cols != 4 {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace needs 4x4, got {}x{}",
            m.rows, m.cols
        )));
    }
    let mut out = CMat::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            let mut s = ZERO;
            for k in 0..2 {
                let (r, c) = match which {
                    Site::One => (2 * k + a, 2 * k + b),
                    Site::Two => (2 * a + k, 2 * b + k),
                };
                s += m.data[r * 4 + c];
            }
            out.data[a * 2 + b] = s;
        }
    }
    Ok(out)
}

/// Index into the Pauli basis (1, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PauliIndex(u8);

impl PauliIndex {
    pub const I: PauliIndex = PauliIndex(0);
    pub const X: PauliIndex = PauliIndex(1);
    pub const Y: PauliIndex = PauliIndex(2);
    pub const Z: PauliIndex = PauliIndex(3);
    pub const ALL: [PauliIndex; 4] = [Self::I, Self::X, Self::Y, Self::Z];
    pub const NONTRIVIAL: [PauliIndex; 3] = [Self::X, Self::Y, Self::Z];

    pub fn new(value: u8) -> Result<Self> {
        if value < 4 {
            Ok(PauliIndex(value))
        } else {
            Err(Error::InvalidInput(format!(
                "Pauli index {value} not in 0..=3"
            )))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> char {
        ['i', 'x', 'y', 'z'][self.index()]
    }

    /// Accepts `i`/`1`/`0`, `x`, `y`, `z` (case-insensitive).
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" | "0" | "id" => Ok(Self::I),
            "x" => Ok(Self::X),
            "y" => Ok(Self::Y),
            "z" => Ok(Self::Z),
            other => Err(Error::InvalidInput(format!(
                "unknown Pauli label '{other}'"
            ))),
        }
    }
}

impl TryFrom<u8> for PauliIndex {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        PauliIndex::new(v)
    }
}

impl From<PauliIndex> for u8 {
    fn from(p: PauliIndex) -> u8 {
        p.0
    }
}

impl fmt::Display for PauliIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

pub fn pauli(p: PauliIndex) -> CMat {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let data = match p.0 {
        0 => [c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
        1 => [c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        2 => [c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
        _ => [c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
    };
    CMat {
        rows: 2,
        cols: 2,
        data: data.to_vec(),
    }
}

/// `c_a = tr(sigma_a m) / 2`, so that `m = sum_a c_a sigma_a`.
pub fn pauli_coeffs(m: &CMat) -> Result<[Complex64; 4]> {
    if m.rows != 2 || m.cols != 2 {
        return Err(Error::DimensionMismatch(
            "pauli_coeffs needs a 2x2 matrix".into(),
        ));
    }
    let d = &m.data;
    let i = Complex64::i();
    Ok([
        (d[0] + d[3]) * 0.5,
        (d[1] + d[2]) * 0.5,
        (d[1] - d[2]) * i * 0.5,
        (d[0] - d[3]) * 0.5,
    ])
}

pub fn from_pauli_coeffs(c: &[Complex64; 4]) -> CMat {
    let mut out = CMat::zeros(2, 2);
    for (k, &ck) in c.iter().enumerate() {
        let p = pauli(PauliIndex(k as u8));
        for (o, &x) in out.data.iter_mut().zip(&p.data) {
            *o += ck * x;
        }
    }
    out
}
