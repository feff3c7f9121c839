//! Pseudo-distances: the pseudo-hyperbolic distance on the disk, the matrix
//! Möbius distance of the Cartan domain, the pulled-back distance `d_Δ`, the
//! Carathéodory conversion, and closed forms for the symmetric annulus pair
//! `(√r, −√r)`.

use crate::domains::{DeltaMap, Point};
use crate::error::{Error, Result};
use crate::matkernel::{herm_sqrt, inverse, op_norm, CMatrix, C64};

/// Product terms used when callers do not choose a truncation.
pub const DEFAULT_PRODUCT_TERMS: usize = 200;

/// Distance to the boundary below which the Cartan distance swaps its
/// arguments so the better-conditioned point sits in the inverted factors.
pub const CONDITIONING_MARGIN: f64 = 1e-6;

/// `∛2 − 1`: below this radius ratio the annulus matrix distance is known to
/// be strictly smaller than the Möbius distance at `(√r, −√r)`.
pub fn annulus_strict_bound() -> f64 {
    2f64.cbrt() - 1.0
}

/// Pseudo-hyperbolic distance `|z − w| / |1 − w̄ z|` on the unit disk.
pub fn d_disk(z: C64, w: C64) -> Result<f64> {
    for p in [z, w] {
        if p.norm().is_nan() || p.norm() >= 1.0 {
            return Err(Error::OutsideDisk(p.norm()));
        }
    }
    Ok((z - w).norm() / (C64::new(1.0, 0.0) - w.conj() * z).norm())
}

/// Carathéodory distance from the Möbius distance: `atanh(d)`.
pub fn caratheodory_from_mobius(d: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&d) {
        return Err(Error::OutOfRange {
            value: d,
            range: "[0, 1)",
        });
    }
    Ok(d.atanh())
}

/// The matrix Möbius map centred at `w`, evaluated at `x`:
///
/// `(I − W W*)^{-1/2} (X − W) (I − W* X)^{-1} (I − W* W)^{1/2}`.
///
/// `w` must be a strict contraction; `x` must keep `I − W* X` invertible,
/// which holds whenever `‖X‖ ≤ 1`.
pub fn mobius_map(x: &CMatrix, w: &CMatrix) -> Result<CMatrix> {
    let factors = MobiusFactors::new(w)?;
    factors.apply(x)
}

/// Cached `w`-dependent factors of [`mobius_map`].
#[derive(Debug, Clone)]
pub struct MobiusFactors {
    pub w: CMatrix,
    /// `(I − W W*)^{-1/2}`
    pub left: CMatrix,
    /// `(I − W* W)^{1/2}`
    pub right: CMatrix,
}

impl MobiusFactors {
    pub fn new(w: &CMatrix) -> Result<Self> {
        let (s, r) = w.shape();
        let ww = w.matmul(&w.adjoint());
        let left = herm_sqrt(&(&CMatrix::identity(s) - &ww), true)?;
        let wsw = w.adjoint().matmul(w);
        let right = herm_sqrt(&(&CMatrix::identity(r) - &wsw), false)?;
        Ok(Self {
            w: w.clone(),
            left,
            right,
        })
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        let r = self.w.cols();
        let middle = inverse(&(&CMatrix::identity(r) - &self.w.adjoint().matmul(x)))?;
        Ok(self
            .left
            .matmul(&(x - &self.w))
            .matmul(&middle)
            .matmul(&self.right))
    }
}

/// Value of the Cartan distance with a flag for near-boundary evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartanDistance {
    pub value: f64,
    /// Set when the second argument was within [`CONDITIONING_MARGIN`] of the
    /// boundary; the arguments are then swapped if that improves conditioning.
    pub conditioning_warning: bool,
}

/// Möbius distance between two strict contractions in the Cartan domain.
pub fn d_cartan(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    d_cartan_detailed(a, b).map(|d| d.value)
}

pub fn d_cartan_detailed(a: &CMatrix, b: &CMatrix) -> Result<CartanDistance> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            got: b.shape(),
        });
    }
    let (na, nb) = (op_norm(a), op_norm(b));
    for n in [na, nb] {
        if n.is_nan() || n >= 1.0 {
            return Err(Error::NotStrictContraction(n));
        }
    }
    let warn = 1.0 - nb < CONDITIONING_MARGIN;
    let (x, w) = if warn && na < nb { (b, a) } else { (a, b) };
    let value = op_norm(&mobius_map(x, w)?);
    Ok(CartanDistance {
        value,
        conditioning_warning: warn,
    })
}

/// `d_Δ(z, w) = d_cartan(Δ(z), Δ(w))` for `z, w ∈ B_Δ`.
pub fn d_delta(m: &DeltaMap, z: &Point, w: &Point) -> Result<f64> {
    d_delta_detailed(m, z, w).map(|d| d.value)
}

pub fn d_delta_detailed(m: &DeltaMap, z: &Point, w: &Point) -> Result<CartanDistance> {
    let dz = m.eval(z)?;
    let dw = m.eval(w)?;
    for d in [&dz, &dw] {
        let n = op_norm(d);
        if n.is_nan() || n >= 1.0 {
            return Err(Error::OutsideDomain { margin: 1.0 - n });
        }
    }
    d_cartan_detailed(&dz, &dw)
}

fn check_annulus_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange {
            value: r,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// `d_a(√r, −√r) = 2√r / (1 + r)` for the annulus map `a(z) = diag(z, r/z)`.
pub fn annulus_matrix_distance_symmetric(r: f64) -> Result<f64> {
    check_annulus_r(r)?;
    Ok(2.0 * r.sqrt() / (1.0 + r))
}

/// Truncated infinite product with a certified error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedProduct {
    pub value: f64,
    pub n_terms: usize,
    /// Bound on `|value − limit|` from dropping factors past `n_terms`.
    pub truncation_bound: f64,
    /// Bound on accumulated floating-point error.
    pub rounding_bound: f64,
}

impl TruncatedProduct {
    pub fn tail_bound(&self) -> f64 {
        self.truncation_bound + self.rounding_bound
    }
}

/// Möbius distance of the annulus `r < |z| < 1` between `√r` and `−√r`:
///
/// `4√r · ∏_{n≥1} (1 + r^{2n})⁴ / ∏_{n≥1} (1 + r^{2n−1})⁴`,
///
/// truncated after `n_terms` factors of each product. Accumulated in log
/// space. Every dropped log-factor pair lies in `[−4 r^{2n−1}, 0]`, so the
/// dropped mass is at most `4 r^{2N+1} / (1 − r²)` and the truncated value
/// overestimates the limit by at most `value · (1 − e^{−mass})`.
pub fn annulus_mobius_distance_symmetric(r: f64, n_terms: usize) -> Result<TruncatedProduct> {
    check_annulus_r(r)?;
    if n_terms == 0 {
        return Err(Error::OutOfRange {
            value: 0.0,
            range: "n_terms >= 1",
        });
    }
    let r2 = r * r;
    let mut log = 4f64.ln() + 0.5 * r.ln();
    let mut abs_sum = log.abs();
    let mut odd = r; // r^{2n-1}
    let mut even = r2; // r^{2n}
    for _ in 0..n_terms {
        let term = 4.0 * (even.ln_1p() - odd.ln_1p());
        log += term;
        abs_sum += term.abs();
        odd *= r2;
        even *= r2;
    }
    let value = log.exp();
    let n = n_terms as f64;
    let dropped = 4.0 * r.powf(2.0 * n + 1.0) / (1.0 - r2);
    let truncation_bound = value * (-(-dropped).exp_m1());
    let rounding_bound = value * f64::EPSILON * (8.0 * (n + 2.0) + 4.0 * abs_sum);
    Ok(TruncatedProduct {
        value,
        n_terms,
        truncation_bound,
        rounding_bound,
    })
}

/// Both annulus distances at `(√r, −√r)` and their difference.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AnnulusGap {
    pub r: f64,
    pub d_matrix: f64,
    pub d_mobius: f64,
    pub gap: f64,
    pub tail_bound: f64,
}

pub fn annulus_gap(r: f64, n_terms: usize) -> Result<AnnulusGap> {
    let d_matrix = annulus_matrix_distance_symmetric(r)?;
    let prod = annulus_mobius_distance_symmetric(r, n_terms)?;
    Ok(AnnulusGap {
        r,
        d_matrix,
        d_mobius: prod.value,
        gap: prod.value - d_matrix,
        tail_bound: prod.tail_bound(),
    })
}
