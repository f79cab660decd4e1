//! Pauli transfer matrices along the light-cone edges, their Jordan structure,
//! and the ergodicity classification.

use nalgebra::{DMatrix, Matrix3, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{is_dual_unitary, Gate2Q};
use crate::linalg::{kron, partial_trace, pauli, pauli_coeffs, CMat, PauliIndex, Site};

/// Dual-unitarity tolerance assumed by the transfer-matrix constructors.
pub const DUAL_UNITARY_TOL: f64 = 1e-10;
/// Default tolerance for eigenvalue clustering and rank decisions.
pub const DEFAULT_JORDAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `a -> tr_1[U^dag (a (x) 1) U] / 2`
    Plus,
    /// `a -> tr_2[U^dag (1 (x) a) U] / 2`
    Minus,
}

/// Real 4x4 matrix of a unital single-site channel in the Pauli basis (1, x, y, z).
/// `entries[a][b]` is the `sigma_a` coefficient of the image of `sigma_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub entries: [[f64; 4]; 4],
    pub direction: Direction,
}

impl TransferMatrix {
    pub fn new(entries: [[f64; 4]; 4], direction: Direction) -> Self {
        TransferMatrix { entries, direction }
    }

    pub fn get(&self, a: PauliIndex, b: PauliIndex) -> f64 {
        self.entries[a.index()][b.index()]
    }

    pub fn to_matrix4(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.entries[i][j])
    }

    pub fn max_abs_diff(&self, other: &[[f64; 4]; 4]) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `M^n` by repeated squaring.
    pub fn power(&self, mut n: u64) -> Matrix4<f64> {
        let mut acc = Matrix4::identity();
        let mut base = self.to_matrix4();
        while n > 0 {
            if n & 1 == 1 {
                acc *= base;
            }
            n >>= 1;
            if n > 0 {
                base *= base;
            }
        }
        acc
    }

    /// The block acting on the traceless Paulis (x, y, z).
    pub fn nontrivial_block(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entries[i + 1][j + 1])
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.to_matrix4()
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect()
    }
}

/// Transfer matrix of `u` without the dual-unitarity precondition.
pub fn transfer_matrix(u: &Gate2Q, direction: Direction) -> TransferMatrix {
    let m = u.matrix();
    let ud = m.dagger();
    let id = CMat::identity(2);
    let mut entries = [[0.0; 4]; 4];
    for b in PauliIndex::ALL {
        let (op, site) = match direction {
            Direction::Plus => (kron(&pauli(b), &id), Site::One),
            Direction::Minus => (kron(&id, &pauli(b)), Site::Two),
        };
        let heis = &(&ud * &op) * m;
        let reduced = partial_trace(&heis, site)
            .expect("4x4 operator")
            .scale(Complex64::new(0.5, 0.0));
        let c = pauli_coeffs(&reduced).expect("2x2 operator");
        for a in 0..4 {
            entries[a][b.index()] = c[a].re;
        }
    }
    TransferMatrix { entries, direction }
}

fn checked(u: &Gate2Q, direction: Direction) -> Result<TransferMatrix> {
    let m = transfer_matrix(u, direction);
    let du = is_dual_unitary(u, DUAL_UNITARY_TOL);
    if du.dual_unitary {
        Ok(m)
    } else {
        Err(Error::NotDualUnitary {
            residual: du.max_residual(),
            matrix: Box::new(m),
        })
    }
}

/// `M+`. A non-dual-unitary gate yields [`Error::NotDualUnitary`], which still carries the matrix.
pub fn transfer_plus(u: &Gate2Q) -> Result<TransferMatrix> {
    checked(u, Direction::Plus)
}

/// `M-`; see [`transfer_plus`].
pub fn transfer_minus(u: &Gate2Q) -> Result<TransferMatrix> {
    checked(u, Direction::Minus)
}

/// Light-cone correlator `C^{ab}(t) = (M^{2t})[a][b]`.
pub fn lightcone_corr(m: &TransferMatrix, alpha: PauliIndex, beta: PauliIndex, t: u32) -> f64 {
    m.power(2 * t as u64)[(alpha.index(), beta.index())]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCluster {
    pub eigenvalue: Complex64,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
    pub block_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanReport {
    pub clusters: Vec<EigenCluster>,
    pub tolerance_used: f64,
    /// Set when clusters sit close enough that the grouping is not trustworthy.
    pub ambiguous: bool,
}

impl JordanReport {
    pub fn has_exceptional_point(&self) -> bool {
        self.max_block_size() >= 2
    }

    pub fn max_block_size(&self) -> usize {
        self.clusters
            .iter()
            .flat_map(|c| c.block_sizes.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.max_block_size() <= 1
    }

    /// Clusters carrying a nontrivial Jordan block.
    pub fn defective(&self) -> impl Iterator<Item = &EigenCluster> {
        self.clusters
            .iter()
            .filter(|c| c.block_sizes.iter().any(|&b| b >= 2))
    }
}

/// Single-linkage grouping of eigenvalue indices at distance `radius`.
fn cluster_indices(eigs: &[Complex64], idx: &[usize], radius: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in idx {
        let hits: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.iter().any(|&j| (eigs[i] - eigs[j]).norm() <= radius))
            .map(|(k, _)| k)
            .collect();
        let mut merged = vec![i];
        for &k in hits.iter().rev() {
            merged.extend(groups.remove(k));
        }
        merged.sort_unstable();
        groups.push(merged);
    }
    groups.sort_by_key(|g| g[0]);
    groups
}

fn nullity(a: &DMatrix<Complex64>, threshold: f64) -> usize {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s <= threshold)
        .count()
}

/// Nullities of `(M - lambda)^k` for `k = 1..=m`.
fn nullities(m: &DMatrix<Complex64>, lambda: Complex64, max_k: usize, tol: f64) -> Vec<usize> {
    let n = m.nrows();
    let shifted = m - DMatrix::<Complex64>::identity(n, n) * lambda;
    let norm = shifted
        .clone()
        .svd(false, false)
        .singular_values
        .max()
        .max(1.0);
    let mut p = DMatrix::<Complex64>::identity(n, n);
    (1..=max_k)
        .map(|k| {
            p = &p * &shifted;
            nullity(&p, tol * norm.powi(k as i32))
        })
        .collect()
}

fn blocks_from_nullities(ns: &[usize]) -> Vec<usize> {
    // ns[k-1] = dim ker (M - lambda)^k; blocks of size >= k number ns[k-1] - ns[k-2].
    let at = |k: usize| {
        if k == 0 {
            0
        } else {
            ns[(k - 1).min(ns.len() - 1)]
        }
    };
    let at_least = |k: usize| at(k).saturating_sub(at(k - 1));
    let mut sizes = Vec::new();
    for k in 1..=ns.len() {
        let exact = at_least(k).saturating_sub(if k < ns.len() { at_least(k + 1) } else { 0 });
        sizes.extend(std::iter::repeat_n(k, exact));
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Jordan structure of a transfer matrix. Eigenvalues are grouped by single
/// linkage at radius `tol^(1/3)` (a size-3 block splits by roughly that much
/// under round-off); block sizes come from nullities of powers of the shifted
/// matrix, with singular-value threshold `tol * max(1, |M - lambda|_2)^k`.
pub fn jordan_structure(m: &TransferMatrix, tol: f64) -> JordanReport {
    let real = m.to_matrix4();
    let cm: DMatrix<Complex64> = DMatrix::from_fn(4, 4, |i, j| Complex64::new(real[(i, j)], 0.0));
    let eigs: Vec<Complex64> = real.complex_eigenvalues().iter().copied().collect();
    let radius = tol.cbrt();
    let mut clusters = Vec::new();
    let mut ambiguous = false;
    let all: Vec<usize> = (0..eigs.len()).collect();
    let mut pending = vec![(cluster_indices(&eigs, &all, radius), radius)];
    while let Some((groups, r)) = pending.pop() {
        for g in groups {
            let am = g.len();
            let mean = g.iter().map(|&i| eigs[i]).sum::<Complex64>() / am as f64;
            let ns = nullities(&cm, mean, am, tol);
            let top = *ns.last().unwrap();
            if top < am && am > 1 && r > 1e-14 {
                // Not a single generalized eigenspace: split more finely.
                pending.push((cluster_indices(&eigs, &g, r / 10.0), r / 10.0));
                continue;
            }
            if top > am {
                ambiguous = true;
            }
            let ns: Vec<usize> = ns.iter().map(|&n| n.min(am)).collect();
            let mut block_sizes = blocks_from_nullities(&ns);
            let covered: usize = block_sizes.iter().sum();
            if covered < am {
                // Rank test disagrees with the eigenvalue count; report simple blocks.
                ambiguous = true;
                block_sizes.extend(std::iter::repeat_n(1, am - covered));
            }
            clusters.push(EigenCluster {
                eigenvalue: mean,
                algebraic_mult: am,
                geometric_mult: block_sizes.len(),
                block_sizes,
            });
        }
    }
    clusters.sort_by(|a, b| {
        b.eigenvalue
            .norm()
            .total_cmp(&a.eigenvalue.norm())
            .then(b.eigenvalue.re.total_cmp(&a.eigenvalue.re))
            .then(b.eigenvalue.im.total_cmp(&a.eigenvalue.im))
    });
    for (i, a) in clusters.iter().enumerate() {
        for b in &clusters[i + 1..] {
            if (a.eigenvalue - b.eigenvalue).norm() < 2.0 * radius {
                ambiguous = true;
            }
        }
    }
    JordanReport {
        clusters,
        tolerance_used: tol,
        ambiguous,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgodicityClass {
    Noninteracting,
    Nonergodic,
    ErgodicNonmixing,
    ErgodicMixing,
}

impl std::fmt::Display for ErgodicityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ErgodicityClass::Noninteracting => "noninteracting",
            ErgodicityClass::Nonergodic => "nonergodic",
            ErgodicityClass::ErgodicNonmixing => "ergodic_nonmixing",
            ErgodicityClass::ErgodicMixing => "ergodic_mixing",
        };
        f.write_str(s)
    }
}

/// Classify from the three eigenvalues of the traceless block.
pub fn classify(m: &TransferMatrix, tol: f64) -> ErgodicityClass {
    let eigs = m.nontrivial_block().complex_eigenvalues();
    classify_eigenvalues(eigs.as_slice(), tol)
}

pub fn classify_eigenvalues(eigs: &[Complex64], tol: f64) -> ErgodicityClass {
    let one = Complex64::new(1.0, 0.0);
    let unit = eigs.iter().filter(|e| (*e - one).norm() <= tol).count();
    if unit == eigs.len() {
        ErgodicityClass::Noninteracting
    } else if unit > 0 {
        ErgodicityClass::Nonergodic
    } else if eigs.iter().any(|e| (e.norm() - 1.0).abs() <= tol) {
        ErgodicityClass::ErgodicNonmixing
    } else {
        ErgodicityClass::ErgodicMixing
    }
}
