//! Function-side constructions: transfer-function realizations, extremal
//! functions attaining `d_Δ`, the Harris norm identity, admissible kernels
//! and Schwarz–Pick residuals.

use rand::Rng;

use crate::distances::{d_delta, d_disk, MobiusFactors};
use crate::domains::{DeltaMap, MultiPoly, Point};
use crate::error::{Error, Result};
use crate::matkernel::{
    herm_eig, inner, inverse, op_norm, random_unitary, top_singular_triple, CMatrix, LinalgError,
    Tolerances, C64, ZERO,
};
use crate::tuples::DiagTuple;

/// Allowed `‖U*U − I‖` and `‖UU* − I‖` for a realization.
pub const UNITARY_TOL: f64 = 1e-10;
/// Required distance of `z` and `w` from the boundary of `B_Δ` for extremals.
pub const EXTREMAL_MARGIN: f64 = 1e-9;
/// Diagonal shift used when a kernel matrix is (numerically) singular.
pub const KERNEL_REGULARIZATION: f64 = 1e-12;

/// `φ(z) = D + C (I − (I_e ⊗ δ(z)) A)⁻¹ (I_e ⊗ δ(z)) B` with `[A B; C D]` unitary.
///
/// `Δ` of shape `s × r` is zero-padded to `n × n`, `n = max(s, r)`, so that
/// `U` is square of size `e·n + 1`. Padding preserves `‖Δ(z)‖`, hence the
/// domain and the Schur–Agler class.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRealization {
    pub s: usize,
    pub r: usize,
    pub n: usize,
    pub e: usize,
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: C64,
}

impl TransferRealization {
    pub fn from_unitary(s: usize, r: usize, e: usize, u: &CMatrix) -> Result<Self> {
        check_dims(s, r, e)?;
        let n = s.max(r);
        let k = e * n;
        if u.shape() != (k + 1, k + 1) {
            return Err(Error::ShapeMismatch {
                expected: (k + 1, k + 1),
                got: u.shape(),
            });
        }
        let realization = Self {
            s,
            r,
            n,
            e,
            a: u.block(0, 0, k, k),
            b: u.block(0, k, k, 1),
            c: u.block(k, 0, 1, k),
            d: u[(k, k)],
        };
        let res = realization.unitarity_residual();
        if res > UNITARY_TOL {
            return Err(Error::Validation(format!(
                "realization is not unitary (residual {res:e})"
            )));
        }
        Ok(realization)
    }

    /// The assembled colligation `[A B; C D]`.
    pub fn unitary(&self) -> CMatrix {
        let k = self.e * self.n;
        CMatrix::from_fn(k + 1, k + 1, |i, j| match (i < k, j < k) {
            (true, true) => self.a[(i, j)],
            (true, false) => self.b[(i, 0)],
            (false, true) => self.c[(0, j)],
            (false, false) => self.d,
        })
    }

    pub fn unitarity_residual(&self) -> f64 {
        let u = self.unitary();
        let id = CMatrix::identity(u.rows());
        let left = op_norm(&(&u.adjoint().matmul(&u) - &id));
        let right = op_norm(&(&u.matmul(&u.adjoint()) - &id));
        left.max(right)
    }

    pub fn eval(&self, m: &DeltaMap, z: &Point) -> Result<C64> {
        if m.shape() != (self.s, self.r) {
            return Err(Error::ShapeMismatch {
                expected: (self.s, self.r),
                got: m.shape(),
            });
        }
        let membership = m.contains(z)?;
        if !membership.inside {
            return Err(Error::OutsideDomain {
                margin: membership.margin,
            });
        }
        let delta = m.eval(z)?.padded(self.n, self.n);
        let k = CMatrix::identity(self.e).kron(&delta);
        let lhs = &CMatrix::identity(self.e * self.n) - &k.matmul(&self.a);
        let x = inverse(&lhs)?.matmul(&k.matmul(&self.b));
        Ok(self.d + self.c.matmul(&x)[(0, 0)])
    }
}

fn check_dims(s: usize, r: usize, e: usize) -> Result<()> {
    if s == 0 || r == 0 || e == 0 {
        return Err(Error::Config(format!(
            "realization dimensions must be positive (s={s}, r={r}, e={e})"
        )));
    }
    Ok(())
}

/// A realization with Haar-like random unitary colligation.
pub fn random_realization<R: Rng + ?Sized>(
    s: usize,
    r: usize,
    e: usize,
    rng: &mut R,
) -> Result<TransferRealization> {
    check_dims(s, r, e)?;
    let size = e * s.max(r) + 1;
    TransferRealization::from_unitary(s, r, e, &random_unitary(size, rng))
}

pub fn transfer_eval(realization: &TransferRealization, m: &DeltaMap, z: &Point) -> Result<C64> {
    realization.eval(m, z)
}

/// `f(ζ) = ⟨g_w(Δ(ζ)) ξ, η⟩`, where `(ξ, η)` is a top singular pair of
/// `g_w(Δ(z))`. It maps `B_Δ` into the disk, vanishes at `w` and attains
/// `|f(z)| = d_Δ(z, w)`.
#[derive(Debug, Clone)]
pub struct ExtremalFunction {
    map: DeltaMap,
    w: Point,
    xi: Vec<C64>,
    eta: Vec<C64>,
    factors: MobiusFactors,
}

fn check_margin(m: &DeltaMap, z: &Point, needed: f64) -> Result<()> {
    let membership = m.contains(z)?;
    if !membership.inside || membership.margin < needed {
        return Err(Error::OutsideDomain {
            margin: membership.margin,
        });
    }
    Ok(())
}

impl ExtremalFunction {
    pub fn new(m: &DeltaMap, z: &Point, w: &Point) -> Result<Self> {
        check_margin(m, z, EXTREMAL_MARGIN)?;
        check_margin(m, w, EXTREMAL_MARGIN)?;
        let factors = MobiusFactors::new(&m.eval(w)?)?;
        let g = factors.apply(&m.eval(z)?)?;
        let (_, xi, eta) = top_singular_triple(&g);
        Ok(Self {
            map: m.clone(),
            w: w.clone(),
            xi,
            eta,
            factors,
        })
    }

    pub fn map(&self) -> &DeltaMap {
        &self.map
    }

    pub fn center(&self) -> &Point {
        &self.w
    }

    pub fn xi(&self) -> &[C64] {
        &self.xi
    }

    pub fn eta(&self) -> &[C64] {
        &self.eta
    }

    pub fn eval(&self, zeta: &Point) -> Result<C64> {
        let membership = self.map.contains(zeta)?;
        if !membership.inside {
            return Err(Error::OutsideDomain {
                margin: membership.margin,
            });
        }
        let g = self.factors.apply(&self.map.eval(zeta)?)?;
        Ok(inner(&g.mul_vec(&self.xi), &self.eta))
    }
}

pub fn extremal_function(m: &DeltaMap, z: &Point, w: &Point) -> Result<ExtremalFunction> {
    ExtremalFunction::new(m, z, w)
}

pub fn eval_extremal(f: &ExtremalFunction, zeta: &Point) -> Result<C64> {
    f.eval(zeta)
}

/// Numerical check of `I − g(T)*g(T) = (I−W*W)^{1/2}(I−X*W)⁻¹(I−X*X)(I−W*X)⁻¹(I−W*W)^{1/2}`
/// for `X = Δ(T)`, `W = Δ(w) ⊗ I₂`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HarrisCertificate {
    /// Operator norm of the difference between the two sides.
    pub residual: f64,
    /// Smallest eigenvalue of `I − g(T)*g(T)`.
    pub min_eig: f64,
    pub g_norm: f64,
}

impl HarrisCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol && self.min_eig >= -tol && self.g_norm <= 1.0 + tol
    }
}

pub fn harris_certificate(m: &DeltaMap, t: &DiagTuple, w: &Point) -> Result<HarrisCertificate> {
    let x = t.apply_delta(m)?;
    let nx = op_norm(&x);
    if nx > 1.0 + 1e-12 {
        return Err(Error::NotStrictContraction(nx));
    }
    check_margin(m, w, 0.0)?;
    let w = m.eval(w)?.kron(&CMatrix::identity(2));
    let factors = MobiusFactors::new(&w)?;
    let g = factors.apply(&x)?;

    let cols = x.cols();
    let id = CMatrix::identity(cols);
    let lhs = &id - &g.adjoint().matmul(&g);
    let inv_right = inverse(&(&id - &w.adjoint().matmul(&x)))?;
    let inv_left = inverse(&(&id - &x.adjoint().matmul(&w)))?;
    let rhs = factors
        .right
        .matmul(&inv_left)
        .matmul(&(&id - &x.adjoint().matmul(&x)))
        .matmul(&inv_right)
        .matmul(&factors.right);
    Ok(HarrisCertificate {
        residual: op_norm(&(&lhs - &rhs)),
        min_eig: herm_eig(&lhs)?.values[0],
        g_norm: op_norm(&g),
    })
}

/// A kernel `k(z_i, z_j)` on a two-point set `{z1, z2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelData {
    pub lambda: (Point, Point),
    pub k: CMatrix,
}

impl KernelData {
    pub fn new(z1: Point, z2: Point, k: CMatrix) -> Result<Self> {
        if k.shape() != (2, 2) {
            return Err(Error::ShapeMismatch {
                expected: (2, 2),
                got: k.shape(),
            });
        }
        let eig = herm_eig(&k)?;
        let scale = eig.values[1].abs().max(1.0);
        if eig.values[0] < -Tolerances::DEFAULT.psd * scale {
            return Err(LinalgError::NotPsd(eig.values[0]).into());
        }
        Ok(Self {
            lambda: (z1, z2),
            k,
        })
    }

    /// Vectors `v1, v2` with `⟨v_i, v_j⟩ = k(z_i, z_j)`, from a Cholesky
    /// factorization of `conj(k)`; `None` when `k` is singular.
    pub fn gram_vectors(&self) -> Option<([C64; 2], [C64; 2])> {
        gram_factor(&self.k)
    }
}

fn gram_factor(k: &CMatrix) -> Option<([C64; 2], [C64; 2])> {
    let scale = k.max_abs().max(f64::MIN_POSITIVE);
    let tiny = 1e-15 * scale;
    let a11 = k[(0, 0)].re;
    if a11 <= tiny {
        return None;
    }
    let l11 = a11.sqrt();
    let off = k[(1, 0)] / l11;
    let rest = k[(1, 1)].re - off.norm_sqr();
    if rest <= tiny {
        return None;
    }
    Some((
        [C64::new(l11, 0.0), ZERO],
        [off, C64::new(rest.sqrt(), 0.0)],
    ))
}

/// Smallest eigenvalue of `I − Δ(T)*Δ(T)` for the tuple whose eigenvectors
/// realize `k` as a Gram matrix. A singular `k` is replaced by
/// `k + ε I` with `ε =` [`KERNEL_REGULARIZATION`].
pub fn admissible_min_eig(m: &DeltaMap, kd: &KernelData) -> Result<f64> {
    let (v1, v2) = match kd.gram_vectors() {
        Some(v) => v,
        None => {
            let shifted = &kd.k + &CMatrix::identity(2).scale(C64::new(KERNEL_REGULARIZATION, 0.0));
            gram_factor(&shifted).ok_or(Error::RankDeficient)?
        }
    };
    let t = match DiagTuple::new(kd.lambda.0.clone(), kd.lambda.1.clone(), v1, v2) {
        Ok(t) => t,
        Err(Error::DependentVectors(_)) => return Err(Error::RankDeficient),
        Err(e) => return Err(e),
    };
    let x = t.apply_delta(m)?;
    let defect = &CMatrix::identity(x.cols()) - &x.adjoint().matmul(&x);
    Ok(herm_eig(&defect)?.values[0])
}

/// Functions `B_Δ → D̄` accepted by [`schwarz_pick_residual`].
#[derive(Debug, Clone)]
pub enum DiskFunction {
    Extremal(ExtremalFunction),
    Realization(TransferRealization),
    /// Caller asserts `|p| ≤ 1` on `B_Δ`.
    Polynomial(MultiPoly),
    Constant(C64),
}

impl DiskFunction {
    pub fn eval(&self, m: &DeltaMap, z: &Point) -> Result<C64> {
        match self {
            DiskFunction::Extremal(f) => f.eval(z),
            DiskFunction::Realization(f) => f.eval(m, z),
            DiskFunction::Polynomial(p) => p.eval(z),
            DiskFunction::Constant(c) => Ok(*c),
        }
    }
}

/// `d_Δ(z, w) − d_D(f(z), f(w))`, nonnegative for every `f` in the class.
pub fn schwarz_pick_residual(f: &DiskFunction, m: &DeltaMap, z: &Point, w: &Point) -> Result<f64> {
    let fz = f.eval(m, z)?;
    let fw = f.eval(m, w)?;
    for v in [fz, fw] {
        if v.norm() >= 1.0 {
            return Err(Error::ModulusViolation(v.norm()));
        }
    }
    Ok(d_delta(m, z, w)? - d_disk(fz, fw)?)
}
