//! Dense vectors, exactly-symmetric matrices and a cyclic Jacobi eigensolver.
//!
//! Hessians in this crate are small (N up to about 100), so a plain cyclic
//! Jacobi iteration is accurate and fast enough. Eigenvalues come back in
//! ascending order so the smallest one sits at index 0.

use std::fmt;
use std::ops::{Deref, DerefMut, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point or direction in R^N.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Self {
        Vector(components)
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + scale * dir`
    pub fn add_scaled(&self, scale: f64, dir: &[f64]) -> Vector {
        Vector(self.0.iter().zip(dir).map(|(a, d)| a + scale * d).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Vector(v.to_vec())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Symmetric N x N matrix; only the upper triangle is stored, so
/// `get(i, j) == get(j, i)` holds by representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from packed upper-triangular entries (row-major).
    pub fn from_packed_upper(n: usize, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != n * (n + 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: n * (n + 1) / 2,
                got: upper.len(),
            });
        }
        Ok(SymmetricMatrix { n, upper })
    }

    /// Builds from a full row-major matrix, reading the upper triangle only.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate().skip(i) {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[row_offset(self.n, i.min(j)) + (i.max(j) - i.min(j))]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = (i.min(j), i.max(j));
        let k = row_offset(self.n, lo) + (hi - lo);
        self.upper[k] = value;
    }

    pub fn packed_upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, s: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            n: self.n,
            upper: self.upper.iter().map(|v| v * s).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vector {
        let mut out = vec![0.0; self.n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..self.n).map(|j| self.get(i, j) * x[j]).sum();
        }
        Vector(out)
    }

    fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                d.data[i * self.n + j] = self.get(i, j);
            }
        }
        d
    }
}

/// Offset of row `i` in row-major upper-triangular packing.
pub(crate) fn row_offset(n: usize, i: usize) -> usize {
    i * n - i * i.saturating_sub(1) / 2
}

/// Row-major dense matrix, used for eigenvector bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self.get(i, j)).collect())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition `A = Q diag(values) Q^T` of a symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSpectrum {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DenseMatrix,
}

impl SymmetricSpectrum {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Spectral radius, which equals the spectral norm for symmetric input.
    pub fn radius(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

/// Sweep budget for the cyclic Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to `||A||_F`.
pub const JACOBI_REL_TOL: f64 = 1e-14;

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
///
/// Rotations visit pairs `(p, q)` in fixed row-major order, so the result is
/// deterministic for a given input.
pub fn eigen_symmetric(a: &SymmetricMatrix) -> Result<SymmetricSpectrum> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteValue);
    }
    let mut m = a.to_dense();
    let mut q = DenseMatrix::identity(n);
    let tol = JACOBI_REL_TOL * a.frobenius_norm();

    let mut converged = false;
    let mut off = off_diagonal_norm(&m);
    for _ in 0..=JACOBI_MAX_SWEEPS {
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                rotate(&mut m, &mut q, p, r);
            }
        }
        off = off_diagonal_norm(&m);
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off_norm: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.data[row * n + col] = q.get(row, src);
        }
    }
    Ok(SymmetricSpectrum { values, vectors })
}

/// Spectral norm of a symmetric matrix, `max |lambda_i|`.
pub fn spectral_norm(a: &SymmetricMatrix) -> Result<f64> {
    Ok(eigen_symmetric(a)?.radius())
}

fn off_diagonal_norm(m: &DenseMatrix) -> f64 {
    let n = m.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m.get(i, j) * m.get(i, j);
            }
        }
    }
    s.sqrt()
}

/// Annihilates `m[p][r]` with a plane rotation and accumulates it into `q`.
fn rotate(m: &mut DenseMatrix, q: &mut DenseMatrix, p: usize, r: usize) {
    let n = m.rows;
    let apr = m.get(p, r);
    if apr == 0.0 {
        return;
    }
    let app = m.get(p, p);
    let arr = m.get(r, r);
    let theta = (arr - app) / (2.0 * apr);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + theta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;

    for k in 0..n {
        let mkp = m.get(k, p);
        let mkr = m.get(k, r);
        m.data[k * n + p] = c * mkp - s * mkr;
        m.data[k * n + r] = s * mkp + c * mkr;
    }
    for k in 0..n {
        let mpk = m.get(p, k);
        let mrk = m.get(r, k);
        m.data[p * n + k] = c * mpk - s * mrk;
        m.data[r * n + k] = s * mpk + c * mrk;
    }
    m.data[p * n + r] = 0.0;
    m.data[r * n + p] = 0.0;

    for k in 0..n {
        let qkp = q.get(k, p);
        let qkr = q.get(k, r);
        q.data[k * n + p] = c * qkp - s * qkr;
        q.data[k * n + r] = s * qkp + c * qkr;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Closed-form eigenvalues of a symmetric 3x3 matrix (trigonometric
    /// solution of the characteristic cubic), ascending.
    fn eig3_closed_form(a: &[[f64; 3]; 3]) -> [f64; 3] {
        let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
        let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut b = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
            }
        }
        let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
        let r = (det / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [lo, 3.0 * q - hi - lo, hi]
    }

    fn eig2_closed_form(a: f64, b: f64, c: f64) -> [f64; 2] {
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        [mean - rad, mean + rad]
    }

    fn line_of_saddles_hessian() -> SymmetricMatrix {
        SymmetricMatrix::from_rows(&[vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap()
    }

    fn check_invariants(a: &SymmetricMatrix, s: &SymmetricSpectrum) {
        let n = a.dim();
        for w in s.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let scale = a.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let qtq: f64 = (0..n).map(|k| s.vectors[(k, i)] * s.vectors[(k, j)]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((qtq - id).abs() <= 1e-10, "orthogonality {i},{j}: {qtq}");
                let rec: f64 = (0..n)
                    .map(|k| s.vectors[(i, k)] * s.values[k] * s.vectors[(j, k)])
                    .sum();
                assert!((rec - a.get(i, j)).abs() <= 1e-10 * scale, "reconstruction");
            }
        }
        let tr: f64 = s.values.iter().sum();
        assert!((tr - a.trace()).abs() <= 1e-10 * a.trace().abs().max(scale));
    }

    #[test]
    fn packing_is_symmetric() {
        let mut m = SymmetricMatrix::zeros(4);
        m.set(3, 1, 7.0);
        m.set(0, 2, -2.0);
        assert_eq!(m.get(1, 3), 7.0);
        assert_eq!(m.get(3, 1), 7.0);
        assert_eq!(m.get(2, 0), -2.0);
        assert_eq!(m.packed_upper().len(), 10);
        assert_eq!(row_offset(4, 0), 0);
        assert_eq!(row_offset(4, 1), 4);
        assert_eq!(row_offset(4, 2), 7);
        assert_eq!(row_offset(4, 3), 9);
    }

    #[test]
    fn line_of_saddles_spectrum() {
        let a = line_of_saddles_hessian();
        let s = eigen_symmetric(&a).unwrap();
        let r8 = 8.0_f64.sqrt();
        assert!((s.min() + r8).abs() < 1e-12);
        assert!(s.values[1].abs() < 1e-12);
        assert!((s.max() - r8).abs() < 1e-12);
        let oracle = eig3_closed_form(&[[0.0, 2.0, 2.0], [2.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        for (v, o) in s.values.iter().zip(oracle) {
            assert!((v - o).abs() < 1e-12);
        }
        check_invariants(&a, &s);
        assert!((spectral_norm(&a).unwrap() - r8).abs() < 1e-12);
    }

    #[test]
    fn identity_and_diagonal() {
        for n in 1..6 {
            let s = eigen_symmetric(&SymmetricMatrix::identity(n)).unwrap();
            assert!(s.values.iter().all(|&v| v == 1.0));
            check_invariants(&SymmetricMatrix::identity(n), &s);
        }
        let s = eigen_symmetric(&SymmetricMatrix::from_diagonal(&[1.0, -1.0])).unwrap();
        assert_eq!(s.values, vec![-1.0, 1.0]);
        assert_eq!(
            spectral_norm(&SymmetricMatrix::from_diagonal(&[1.0, 11.0])).unwrap(),
            11.0
        );
        assert_eq!(spectral_norm(&SymmetricMatrix::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(eigen_symmetric(&SymmetricMatrix::zeros(0)).is_err());
        let m = SymmetricMatrix::from_diagonal(&[f64::NAN, 1.0]);
        assert_eq!(eigen_symmetric(&m), Err(Error::NonFiniteValue));
    }

    fn symmetric_strategy() -> impl Strategy<Value = SymmetricMatrix> {
        (1usize..=10).prop_flat_map(|n| {
            prop::collection::vec(-10.0f64..10.0, n * (n + 1) / 2)
                .prop_map(move |v| SymmetricMatrix::from_packed_upper(n, v).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn random_matrices_satisfy_spectrum_invariants(a in symmetric_strategy()) {
            let s = eigen_symmetric(&a).unwrap();
            check_invariants(&a, &s);
        }

        #[test]
        fn two_by_two_matches_quadratic_formula(a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0) {
            let m = SymmetricMatrix::from_packed_upper(2, vec![a, b, c]).unwrap();
            let s = eigen_symmetric(&m).unwrap();
            let o = eig2_closed_form(a, b, c);
            prop_assert!((s.values[0] - o[0]).abs() <= 1e-12);
            prop_assert!((s.values[1] - o[1]).abs() <= 1e-12);
        }

        #[test]
        fn three_by_three_matches_closed_form(v in prop::collection::vec(-10.0f64..10.0, 6)) {
            let m = SymmetricMatrix::from_packed_upper(3, v.clone()).unwrap();
            let s = eigen_symmetric(&m).unwrap();
            let full = [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]];
            let o = eig3_closed_form(&full);
            for (x, y) in s.values.iter().zip(o) {
                prop_assert!((x - y).abs() <= 1e-9, "{:?} vs {:?}", s.values, o);
            }
        }
    }
}
