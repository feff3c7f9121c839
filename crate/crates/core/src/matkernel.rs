//! Dense complex linear algebra for the small matrices that carry every
//! formula in this crate: products, adjoints, Kronecker products, inverses,
//! Hermitian eigendecomposition, operator norms and PSD square roots.
//!
//! Sizes here are tiny (rarely above 20×20), so the algorithms favour
//! stability and simplicity over speed. The Hermitian eigensolver is cyclic
//! Jacobi; the operator norm is the square root of the top eigenvalue of the
//! Gram matrix.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Numerical thresholds shared by the kernel and its callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed negative eigenvalue mass before a matrix is declared not PSD.
    pub psd: f64,
    /// Smallest eigenvalue accepted by an inverse square root.
    pub eig: f64,
    /// Relative asymmetry `‖H − H*‖ / ‖H‖` tolerated by the Hermitian solver.
    pub hermitian: f64,
    /// Relative off-diagonal Frobenius mass at which Jacobi sweeps stop.
    pub jacobi: f64,
    /// Relative pivot magnitude below which elimination reports singularity.
    pub pivot: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        psd: 1e-10,
        eig: 1e-12,
        hermitian: 1e-12,
        jacobi: 1e-14,
        pivot: 1e-14,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("matrix is singular or numerically singular")]
    Singular,
    #[error("expected a square matrix, got {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix data must be finite and have rows × cols entries")]
    InvalidData,
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}×{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols || data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(LinalgError::InvalidData);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
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
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Convenience constructor from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Real-entry convenience constructor, row-major.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn column_vector(entries: &[C64]) -> Self {
        Self {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}×{} · {}×{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product `self ⊗ other`, so `(A⊗B)(x⊗y) = Ax ⊗ By`.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca) = self.shape();
        let (rb, cb) = other.shape();
        Self::from_fn(ra * rb, ca * cb, |i, j| {
            self[(i / rb, j / cb)] * other[(i % rb, j % cb)]
        })
    }

    /// Block-diagonal assembly. Entries are copied, never combined.
    pub fn block_diag(blocks: &[&CMatrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Copies `self` into the top-left corner of a zero `rows × cols` matrix.
    pub fn padded(&self, rows: usize, cols: usize) -> Self {
        assert!(rows >= self.rows && cols >= self.cols);
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    /// Extracts the `rows × cols` sub-block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// `‖self − other‖` in operator norm.
    pub fn distance(&self, other: &Self) -> f64 {
        op_norm(&(self - other))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        CMatrix {
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

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        CMatrix {
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

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(-ONE)
    }
}

/// Eigendecomposition `H = V diag(values) V*` with ascending `values`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Rebuilds `V diag(f(λ)) V*`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let scaled = CMatrix::from_fn(n, n, |i, j| v[(i, j)] * f(self.values[j]));
        scaled.matmul(&v.adjoint())
    }
}

pub fn herm_eig(h: &CMatrix) -> Result<HermitianEigen, LinalgError> {
    herm_eig_with(h, &Tolerances::DEFAULT)
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// The input is symmetrized as `(H + H*)/2` before iterating; asymmetry above
/// `tol.hermitian` (relative to `‖H‖_F`) is rejected.
pub fn herm_eig_with(h: &CMatrix, tol: &Tolerances) -> Result<HermitianEigen, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare {
            rows: h.rows,
            cols: h.cols,
        });
    }
    let scale = h.frobenius_norm();
    let asym = (h - &h.adjoint()).frobenius_norm();
    if asym > tol.hermitian * scale {
        return Err(LinalgError::NotHermitian(asym / scale));
    }
    let sym = CMatrix::from_fn(h.rows, h.cols, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    Ok(jacobi(sym, tol.jacobi))
}

const MAX_SWEEPS: usize = 80;

fn off_diagonal_mass(a: &CMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(mut a: CMatrix, stop: f64) -> HermitianEigen {
    let n = a.rows;
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_mass(&a) <= stop * scale {
                break;
            }
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let phase = apq / mag;
                    let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                    let tau = (aqq - app) / (2.0 * mag);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                    let gpp = C64::new(c, 0.0);
                    let gpq = C64::new(s, 0.0);
                    let gqp = phase.conj() * (-s);
                    let gqq = phase.conj() * c;
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = akp * gpp + akq * gqp;
                        a[(k, q)] = akp * gpq + akq * gqq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                        a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                    }
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = vkp * gpp + vkq * gqp;
                        v[(k, q)] = vkp * gpq + vkq * gqq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    HermitianEigen { values, vectors }
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.rows == 0 || m.cols == 0 {
        return 0.0;
    }
    let gram = if m.rows >= m.cols {
        m.adjoint().matmul(m)
    } else {
        m.matmul(&m.adjoint())
    };
    // Gram matrices are exactly Hermitian in floating point.
    let eig = jacobi(gram, Tolerances::DEFAULT.jacobi);
    eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Top singular triple `(σ, ξ, η)` with `M ξ = σ η`, `‖ξ‖ = ‖η‖ = 1`.
///
/// Among numerically tied top singular values the lowest-index eigenvector
/// of `M*M` wins; phases are fixed so the first nonzero entry of `ξ` is real
/// and positive. When `M = 0`, `ξ` and `η` are the first standard basis
/// vectors.
pub fn top_singular_triple(m: &CMatrix) -> (f64, Vec<C64>, Vec<C64>) {
    let gram = m.adjoint().matmul(m);
    let eig = jacobi(gram, Tolerances::DEFAULT.jacobi);
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let tie = top * (1.0 - 1e-12);
    let idx = eig
        .values
        .iter()
        .position(|&l| l >= tie)
        .unwrap_or(eig.values.len() - 1);
    let mut xi = eig.vectors.column(idx);
    normalize_phase(&mut xi);
    let image = m.mul_vec(&xi);
    let sigma = vec_norm(&image);
    let eta = if sigma > 0.0 {
        image.iter().map(|z| z / sigma).collect()
    } else {
        let mut e = vec![ZERO; m.rows];
        e[0] = ONE;
        xi = vec![ZERO; m.cols];
        xi[0] = ONE;
        e
    };
    (sigma, xi, eta)
}

/// Principal Hermitian PSD square root, or its inverse.
pub fn herm_sqrt(h: &CMatrix, inverse: bool) -> Result<CMatrix, LinalgError> {
    herm_sqrt_with(h, inverse, &Tolerances::DEFAULT)
}

pub fn herm_sqrt_with(
    h: &CMatrix,
    inverse: bool,
    tol: &Tolerances,
) -> Result<CMatrix, LinalgError> {
    let eig = herm_eig_with(h, tol)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    let top = eig.values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if min < -tol.psd * top.max(1.0) {
        return Err(LinalgError::NotPsd(min));
    }
    if inverse {
        if min < tol.eig {
            return Err(LinalgError::Singular);
        }
        Ok(eig.map_values(|l| 1.0 / l.sqrt()))
    } else {
        Ok(eig.map_values(|l| l.max(0.0).sqrt()))
    }
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn inverse(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    inverse_with(m, &Tolerances::DEFAULT)
}

pub fn inverse_with(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let norm = m.frobenius_norm();
    if norm == 0.0 {
        return Err(LinalgError::Singular);
    }
    let threshold = tol.pivot * norm;
    let mut a = m.clone();
    let mut inv = CMatrix::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap();
        if a[(pivot_row, col)].norm() < threshold {
            return Err(LinalgError::Singular);
        }
        if pivot_row != col {
            for k in 0..n {
                a.data.swap(pivot_row * n + k, col * n + k);
                inv.data.swap(pivot_row * n + k, col * n + k);
            }
        }
        let p = ONE / a[(col, col)];
        for k in 0..n {
            a[(col, k)] *= p;
            inv[(col, k)] *= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[(row, col)];
            if f == ZERO {
                continue;
            }
            for k in 0..n {
                let ack = a[(col, k)];
                let ick = inv[(col, k)];
                a[(row, k)] -= f * ack;
                inv[(row, k)] -= f * ick;
            }
        }
    }
    Ok(inv)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kron(b)
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨x, y⟩ = Σ x_i conj(y_i)`, linear in the first argument.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

/// Rotates `x` so its first entry of non-negligible modulus is real and positive.
pub fn normalize_phase(x: &mut [C64]) {
    let scale = vec_norm(x);
    if let Some(first) = x.iter().copied().find(|z| z.norm() > 1e-14 * scale) {
        let ph = first.conj() / first.norm();
        for z in x.iter_mut() {
            *z *= ph;
        }
    }
}

/// Standard complex Gaussian `(X + iY)/√2`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary from Gram–Schmidt (applied twice) on a complex
/// Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = gaussian_matrix(n, n, rng);
        if let Some(q) = orthonormalize_columns(&g) {
            return q;
        }
    }
}

/// Orthonormalizes the columns of a square matrix; `None` if they are
/// numerically dependent.
pub fn orthonormalize_columns(m: &CMatrix) -> Option<CMatrix> {
    let n = m.cols;
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| m.column(j)).collect();
    for j in 0..n {
        let original = vec_norm(&cols[j]);
        for _ in 0..2 {
            for k in 0..j {
                let proj = inner(&cols[j], &cols[k]);
                let (head, tail) = cols.split_at_mut(j);
                for (x, q) in tail[0].iter_mut().zip(&head[k]) {
                    *x -= proj * q;
                }
            }
        }
        let norm = vec_norm(&cols[j]);
        if norm <= 1e-10 * original || norm == 0.0 {
            return None;
        }
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    Some(CMatrix::from_fn(m.rows, n, |i, j| cols[j][i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).max_abs() <= tol
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&CMatrix::identity(2)) - 1.0).abs() < 1e-15);
        let m = CMatrix::from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert!((op_norm(&m) - 2.0).abs() < 1e-15);
        // M*M = [[1,1],[1,2]] has eigenvalues (3 ± √5)/2, so σ_max = (1+√5)/2.
        let m = CMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((op_norm(&m) - golden).abs() <= 1e-12 * golden);
        assert_eq!(op_norm(&CMatrix::zeros(3, 2)), 0.0);
    }

    #[test]
    fn herm_eig_examples() {
        let e = herm_eig(&CMatrix::diag(&[c(3.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        assert!(e.vectors[(0, 0)].norm() < 1e-15 && e.vectors[(1, 0)].norm() > 1.0 - 1e-15);

        let e = herm_eig(&CMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);

        let e = herm_eig(&CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        assert_eq!(e.vectors, CMatrix::identity(3));
    }

    #[test]
    fn herm_eig_rejects_asymmetric() {
        let m = CMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(herm_eig(&m), Err(LinalgError::NotHermitian(_))));
        assert!(matches!(
            herm_eig(&CMatrix::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn herm_eig_complex_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 5, 8, 16] {
            let g = gaussian_matrix(n, n, &mut rng);
            let h = &g + &g.adjoint();
            let e = herm_eig(&h).unwrap();
            let lam = CMatrix::diag(&e.values.iter().map(|&l| c(l, 0.0)).collect::<Vec<_>>());
            let resid = op_norm(&(&h.matmul(&e.vectors) - &e.vectors.matmul(&lam)));
            assert!(resid <= 1e-11 * op_norm(&h), "n={n} resid={resid}");
            let orth = &e.vectors.adjoint().matmul(&e.vectors) - &CMatrix::identity(n);
            assert!(orth.max_abs() <= 1e-12, "n={n}");
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn herm_sqrt_examples() {
        let s = herm_sqrt(&CMatrix::diag(&[c(4.0, 0.0), c(9.0, 0.0)]), false).unwrap();
        assert!(close(
            &s,
            &CMatrix::diag(&[c(2.0, 0.0), c(3.0, 0.0)]),
            1e-14
        ));
        let s = herm_sqrt(&CMatrix::identity(2), true).unwrap();
        assert!(close(&s, &CMatrix::identity(2), 1e-15));
        let s = herm_sqrt(&CMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]), false).unwrap();
        let r3 = 3f64.sqrt();
        let expected = CMatrix::from_real(
            2,
            2,
            &[
                (r3 + 1.0) / 2.0,
                (r3 - 1.0) / 2.0,
                (r3 - 1.0) / 2.0,
                (r3 + 1.0) / 2.0,
            ],
        );
        assert!(close(&s, &expected, 1e-14));
    }

    #[test]
    fn herm_sqrt_errors() {
        let neg = CMatrix::diag(&[c(1.0, 0.0), c(-1e-3, 0.0)]);
        assert!(matches!(
            herm_sqrt(&neg, false),
            Err(LinalgError::NotPsd(_))
        ));
        let sing = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(herm_sqrt(&sing, false).is_ok());
        assert_eq!(herm_sqrt(&sing, true), Err(LinalgError::Singular));
    }

    #[test]
    fn inverse_examples() {
        assert!(close(
            &inverse(&CMatrix::identity(3)).unwrap(),
            &CMatrix::identity(3),
            0.0
        ));
        let d = CMatrix::diag(&[c(2.0, 0.0), c(0.0, 1.0)]);
        assert!(close(
            &inverse(&d).unwrap(),
            &CMatrix::diag(&[c(0.5, 0.0), c(0.0, -1.0)]),
            1e-16
        ));
        let m = CMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let expected = CMatrix::from_real(2, 2, &[1.0, -1.0, 0.0, 1.0]);
        assert!(close(&inverse(&m).unwrap(), &expected, 1e-16));
        let s = CMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(inverse(&s), Err(LinalgError::Singular));
    }

    #[test]
    fn kron_examples() {
        let b = CMatrix::from_rows(&[
            vec![c(1.0, 2.0), c(3.0, 0.0)],
            vec![c(0.0, -1.0), c(4.0, 0.0)],
        ]);
        let k = CMatrix::identity(2).kron(&b);
        assert_eq!(k, CMatrix::block_diag(&[&b, &b]));
        let a = CMatrix::from_real(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a.kron(&CMatrix::identity(1)), a);
        let swap = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).kron(&CMatrix::identity(2));
        let expected = CMatrix::from_real(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0,
            ],
        );
        assert_eq!(swap, expected);
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = gaussian_matrix(2, 3, &mut rng);
        let b = gaussian_matrix(3, 2, &mut rng);
        let x: Vec<C64> = (0..3).map(|_| complex_normal(&mut rng)).collect();
        let y: Vec<C64> = (0..2).map(|_| complex_normal(&mut rng)).collect();
        let xy = CMatrix::column_vector(&x).kron(&CMatrix::column_vector(&y));
        let lhs = a.kron(&b).matmul(&xy);
        let rhs =
            CMatrix::column_vector(&a.mul_vec(&x)).kron(&CMatrix::column_vector(&b.mul_vec(&y)));
        assert!(close(&lhs, &rhs, 1e-13));
    }

    #[test]
    fn top_singular_triple_attains_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = gaussian_matrix(3, 4, &mut rng);
        let (sigma, xi, eta) = top_singular_triple(&m);
        assert!((sigma - op_norm(&m)).abs() < 1e-12);
        assert!((vec_norm(&xi) - 1.0).abs() < 1e-14 && (vec_norm(&eta) - 1.0).abs() < 1e-14);
        let val = inner(&m.mul_vec(&xi), &eta);
        assert!((val.re - sigma).abs() < 1e-12 && val.im.abs() < 1e-12);
        let (s0, xi0, eta0) = top_singular_triple(&CMatrix::zeros(2, 3));
        assert_eq!(s0, 0.0);
        assert_eq!(xi0[0], ONE);
        assert_eq!(eta0[0], ONE);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..8 {
            let u = random_unitary(n, &mut rng);
            assert!((&u.adjoint().matmul(&u) - &CMatrix::identity(n)).max_abs() < 1e-12);
            assert!((&u.matmul(&u.adjoint()) - &CMatrix::identity(n)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn constructor_rejects_nan() {
        assert_eq!(
            CMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(LinalgError::InvalidData)
        );
        assert_eq!(CMatrix::new(2, 1, vec![ONE]), Err(LinalgError::InvalidData));
    }

    fn matrix_from_seed(seed: u64, rows: usize, cols: usize) -> CMatrix {
        gaussian_matrix(rows, cols, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    proptest! {
        #[test]
        fn prop_op_norm_adjoint_and_unitary_invariance(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
            let m = matrix_from_seed(seed, rows, cols);
            let n = op_norm(&m);
            prop_assert!((n - op_norm(&m.adjoint())).abs() <= 1e-11 * n.max(1.0));
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
            let u = random_unitary(rows, &mut rng);
            let v = random_unitary(cols, &mut rng);
            let rotated = u.matmul(&m).matmul(&v);
            prop_assert!((n - op_norm(&rotated)).abs() <= 1e-10 * n.max(1.0));
        }

        #[test]
        fn prop_sqrt_squares_back(seed in any::<u64>(), n in 1usize..7) {
            let g = matrix_from_seed(seed, n, n);
            let h = g.adjoint().matmul(&g);
            let s = herm_sqrt(&h, false).unwrap();
            let resid = op_norm(&(&s.matmul(&s) - &h));
            prop_assert!(resid <= 1e-10 * op_norm(&h).max(1e-300));
            let eig = herm_eig(&h).unwrap();
            prop_assert!(eig.values[0] >= -1e-12 * op_norm(&h));
        }

        #[test]
        fn prop_inverse_left_identity(seed in any::<u64>(), n in 1usize..7) {
            let m = &matrix_from_seed(seed, n, n) + &CMatrix::identity(n).scale(C64::new(3.0, 0.0));
            let inv = inverse(&m).unwrap();
            prop_assert!((&inv.matmul(&m) - &CMatrix::identity(n)).max_abs() <= 1e-10);
        }
    }
}
