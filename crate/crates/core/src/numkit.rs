//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are small (a few hundred rows at most) and stored densely in
//! row-major order. Vectorisation of a matrix `T` is row-major as well, so
//! `vec(A T B) = kron(A, Bᵀ) vec(T)`.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Default relative tolerance shared by every check in a run.
pub const DEFAULT_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },
    #[error("ill-conditioned kernel: relative singular value {value:e} lies within a decade of tolerance {tol:e}")]
    IllConditioned { value: f64, tol: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self { rows, cols, entries }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self, NumError> {
        if entries.len() != rows * cols {
            return Err(NumError::ShapeMismatch {
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", entries.len()),
            });
        }
        let m = Self { rows, cols, entries };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, NumError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumError::ShapeMismatch {
                expected: format!("rows of length {c}"),
                got: "ragged rows".into(),
            });
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let owned: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&owned).expect("real rows are rectangular and finite")
    }

    /// Column vector from coordinates.
    pub fn column_vector(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            entries: v.to_vec(),
        }
    }

    pub fn scalar(z: C64) -> Self {
        Self::column_vector(&[z])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn check_finite(&self) -> Result<(), NumError> {
        match self.entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            Some(p) => Err(NumError::NonFinite {
                row: p / self.cols.max(1),
                col: p % self.cols.max(1),
            }),
            None => Ok(()),
        }
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entries[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.entries[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.entries[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                self.entries[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: C64) {
        assert_eq!(self.shape(), other.shape());
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Hilbert–Schmidt inner product `tr(self* other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!(self.shape(), other.shape());
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.entries)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }

    /// Stacks the given columns side by side.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        Self::from_fn(rows, columns.len(), |r, c| columns[c][r])
    }

    /// Copy of the block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.entries[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.entries[r * self.cols + c]
    }
}

/// Kronecker product; row `(i, j)` of the result is `i * rows(b) + j`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// An orthonormal family of column vectors in `C^ambient_dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalBasis {
    pub ambient_dim: usize,
    pub vectors: Vec<ComplexMatrix>,
    pub tolerance: f64,
}

impl OrthonormalBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Maximum deviation of the Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((u.hs_inner(v) - target).norm());
            }
        }
        worst
    }

    /// Reshapes each vector into a `rows x cols` matrix (row-major).
    pub fn as_matrices(&self, rows: usize, cols: usize) -> Vec<ComplexMatrix> {
        assert_eq!(rows * cols, self.ambient_dim);
        self.vectors
            .iter()
            .map(|v| ComplexMatrix::from_row_major(rows, cols, v.entries().to_vec()).expect("finite"))
            .collect()
    }
}

/// Rotates `v` so that its first coordinate of (numerically) largest modulus is
/// real and positive.
pub fn phase_fix(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .expect("a maximal entry exists");
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = C64::new(v[pivot].re, 0.0);
}

/// Orthonormal basis of the joint kernel of the given linear maps, each acting
/// on `C^ambient_dim`.
///
/// The numerical rank is decided by singular values above `tol` times the
/// largest one. A relative singular value within a decade of `tol` on either
/// side is reported as ill-conditioned instead of being silently classified.
pub fn solution_basis(
    ambient_dim: usize,
    constraints: &[ComplexMatrix],
    tol: f64,
) -> Result<OrthonormalBasis, NumError> {
    solution_basis_with_scale(ambient_dim, constraints, tol, 0.0)
}

/// Like [`solution_basis`], but singular values are measured against
/// `max(σ_max, scale)`. Constraints with a known natural scale (such as
/// `P - 1` for a projector `P`) use this so that a numerically zero
/// constraint is not mistaken for a full-rank one.
pub fn solution_basis_with_scale(
    ambient_dim: usize,
    constraints: &[ComplexMatrix],
    tol: f64,
    scale: f64,
) -> Result<OrthonormalBasis, NumError> {
    for c in constraints {
        if c.cols() != ambient_dim {
            return Err(NumError::ShapeMismatch {
                expected: format!("{ambient_dim} columns"),
                got: format!("{} columns", c.cols()),
            });
        }
        c.check_finite()?;
    }
    let total_rows: usize = constraints.iter().map(ComplexMatrix::rows).sum();
    let standard = || OrthonormalBasis {
        ambient_dim,
        vectors: (0..ambient_dim)
            .map(|i| {
                let mut e = vec![ZERO; ambient_dim];
                e[i] = ONE;
                ComplexMatrix::column_vector(&e)
            })
            .collect(),
        tolerance: tol,
    };
    if ambient_dim == 0 {
        return Ok(OrthonormalBasis {
            ambient_dim,
            vectors: vec![],
            tolerance: tol,
        });
    }
    if total_rows == 0 || constraints.iter().all(|c| c.max_abs() == 0.0) {
        return Ok(standard());
    }

    // Pad with zero rows so that the SVD yields a full right singular basis.
    let rows = total_rows.max(ambient_dim);
    let mut stacked = DMatrix::<C64>::zeros(rows, ambient_dim);
    let mut offset = 0;
    for c in constraints {
        for r in 0..c.rows() {
            for k in 0..ambient_dim {
                stacked[(offset + r, k)] = c[(r, k)];
            }
        }
        offset += c.rows();
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(scale, f64::max);

    let mut vectors = Vec::new();
    for (i, &s) in sigma.iter().enumerate() {
        let rel = s / sigma_max;
        if rel >= tol / 10.0 && rel <= tol * 10.0 {
            return Err(NumError::IllConditioned { value: rel, tol });
        }
        if rel < tol {
            let mut v: Vec<C64> = (0..ambient_dim).map(|k| v_t[(i, k)].conj()).collect();
            phase_fix(&mut v);
            vectors.push(ComplexMatrix::column_vector(&v));
        }
    }
    Ok(OrthonormalBasis {
        ambient_dim,
        vectors,
        tolerance: tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// Positive semidefiniteness test for a Hermitian matrix.
pub fn psd_check(g: &ComplexMatrix, tol: f64) -> Result<PsdReport, NumError> {
    let eig = hermitian_eigenvalues(g, tol)?;
    let min_eigenvalue = eig.first().copied().unwrap_or(0.0);
    Ok(PsdReport {
        is_psd: min_eigenvalue >= -tol,
        min_eigenvalue,
    })
}

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermitian_asymmetry(m: &ComplexMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

fn ensure_hermitian(m: &ComplexMatrix, tol: f64) -> Result<DMatrix<C64>, NumError> {
    if !m.is_square() {
        return Err(NumError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    m.check_finite()?;
    let asym = hermitian_asymmetry(m);
    if asym > tol * m.max_abs().max(1.0) {
        return Err(NumError::NotHermitian { max_asymmetry: asym });
    }
    let a = m.to_nalgebra();
    Ok((&a + a.adjoint()) * C64::new(0.5, 0.0))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix, tol: f64) -> Result<Vec<f64>, NumError> {
    let sym = ensure_hermitian(m, tol)?;
    if sym.nrows() == 0 {
        return Ok(vec![]);
    }
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &ComplexMatrix, tol: f64) -> Result<(Vec<f64>, ComplexMatrix), NumError> {
    let sym = ensure_hermitian(m, tol)?;
    let n = sym.nrows();
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Unitary factor of the polar decomposition `m = U |m|` of a square matrix.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix, NumError> {
    if !m.is_square() {
        return Err(NumError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let svd = m.to_nalgebra().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    Ok(ComplexMatrix::from_nalgebra(&(u * v_t)))
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank relative to the largest singular value.
pub fn rank(m: &ComplexMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    let max = s.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * max).count()
}

/// Deviation of `m` from being an isometry (`m* m = 1`).
pub fn isometry_residual(m: &ComplexMatrix) -> f64 {
    m.adjoint().matmul(m).max_abs_diff(&ComplexMatrix::identity(m.cols()))
}

/// Deviation of a square matrix from unitarity.
pub fn unitarity_residual(m: &ComplexMatrix) -> f64 {
    let n = m.rows();
    if m.cols() != n {
        return f64::INFINITY;
    }
    isometry_residual(m).max(m.matmul(&m.adjoint()).max_abs_diff(&ComplexMatrix::identity(n)))
}

/// Streaming SHA-256 over a canonical byte encoding of numeric data.
/// Negative zero is hashed as positive zero so that semantically equal
/// objects hash equal.
#[derive(Default)]
pub struct ContentHasher {
    inner: sha2::Sha256,
}

impl ContentHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tag(&mut self, s: &str) -> &mut Self {
        self.count(s.len());
        sha2::Digest::update(&mut self.inner, s.as_bytes());
        self
    }

    pub fn count(&mut self, n: usize) -> &mut Self {
        sha2::Digest::update(&mut self.inner, (n as u64).to_le_bytes());
        self
    }

    pub fn real(&mut self, x: f64) -> &mut Self {
        let x = if x == 0.0 { 0.0 } else { x };
        sha2::Digest::update(&mut self.inner, x.to_bits().to_le_bytes());
        self
    }

    pub fn complex(&mut self, z: C64) -> &mut Self {
        self.real(z.re).real(z.im)
    }

    pub fn matrix(&mut self, m: &ComplexMatrix) -> &mut Self {
        self.count(m.rows()).count(m.cols());
        for &z in m.entries() {
            self.complex(z);
        }
        self
    }

    pub fn finish(&self) -> String {
        hex::encode(sha2::Digest::finalize(self.inner.clone()))
    }
}
