//! Diagonalizable commuting `d`-tuples acting on `C²`.
//!
//! A tuple is stored by its joint eigen-data: two points `z1, z2 ∈ C^d` and
//! unit eigenvectors `v1, v2`, so that `T^r v_j = z_j^r v_j`. Every function
//! of the tuple (scalar, matrix-valued, or `Δ` itself) is then evaluated by
//! the two-point calculus `f(T) v_j = f(z_j) v_j`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::domains::{DeltaMap, MultiPoly, Point};
use crate::error::{Error, Result};
use crate::matkernel::{
    complex_normal, inner, inverse, normalize_phase, op_norm, vec_norm, CMatrix, C64, ONE, ZERO,
};

/// Joint eigenvalues closer than this (max coordinate difference) count as equal.
pub const GENERIC_SEPARATION: f64 = 1e-12;
/// Smallest accepted `|det [v1 v2]|` for unit eigenvectors.
pub const MIN_EIGVEC_DET: f64 = 1e-10;
/// Pairwise commutator norm tolerated on raw input to [`drury_perturb`].
pub const COMMUTATOR_TOL: f64 = 1e-10;

const BISECTION_STEPS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagTuple {
    z1: Point,
    z2: Point,
    v1: [C64; 2],
    v2: [C64; 2],
    p: CMatrix,
    p_inv: CMatrix,
}

fn unit(v: [C64; 2]) -> Option<[C64; 2]> {
    let n = vec_norm(&v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    let mut u = [v[0] / n, v[1] / n];
    normalize_phase(&mut u);
    Some(u)
}

impl DiagTuple {
    /// Builds the tuple from joint eigenvalues and eigenvectors.
    ///
    /// Eigenvectors are scaled to unit length with the first nonzero entry
    /// real and positive.
    pub fn new(z1: Point, z2: Point, v1: [C64; 2], v2: [C64; 2]) -> Result<Self> {
        if z1.dim() != z2.dim() {
            return Err(Error::DimMismatch {
                expected: z1.dim(),
                got: z2.dim(),
            });
        }
        let (v1, v2) = match (unit(v1), unit(v2)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::DependentVectors(0.0)),
        };
        let p = CMatrix::from_rows(&[vec![v1[0], v2[0]], vec![v1[1], v2[1]]]);
        let det = (v1[0] * v2[1] - v2[0] * v1[1]).norm();
        if det < MIN_EIGVEC_DET {
            return Err(Error::DependentVectors(det));
        }
        let p_inv = inverse(&p).map_err(|_| Error::DependentVectors(det))?;
        Ok(Self {
            z1,
            z2,
            v1,
            v2,
            p,
            p_inv,
        })
    }

    pub fn d(&self) -> usize {
        self.z1.dim()
    }

    pub fn z1(&self) -> &Point {
        &self.z1
    }

    pub fn z2(&self) -> &Point {
        &self.z2
    }

    pub fn v1(&self) -> [C64; 2] {
        self.v1
    }

    pub fn v2(&self) -> [C64; 2] {
        self.v2
    }

    /// `P = [v1 v2]`.
    pub fn eigenvector_matrix(&self) -> &CMatrix {
        &self.p
    }

    /// Spectral idempotents `P E_jj P⁻¹`.
    pub fn idempotents(&self) -> (CMatrix, CMatrix) {
        let e = |j: usize| CMatrix::from_fn(2, 2, |a, b| self.p[(a, j)] * self.p_inv[(j, b)]);
        (e(0), e(1))
    }

    /// `f(T) = P diag(f(z1), f(z2)) P⁻¹`, exactly linear in the two values.
    pub fn apply_scalar(&self, fz1: C64, fz2: C64) -> CMatrix {
        CMatrix::from_fn(2, 2, |a, b| {
            self.p[(a, 0)] * fz1 * self.p_inv[(0, b)] + self.p[(a, 1)] * fz2 * self.p_inv[(1, b)]
        })
    }

    /// Matrix-valued calculus: `F(T) = F(z1) ⊗ E₁ + F(z2) ⊗ E₂` on `C^r ⊗ C²`
    /// in the standard product basis (index `i·2 + j`).
    pub fn apply_matrix(&self, f1: &CMatrix, f2: &CMatrix) -> CMatrix {
        assert_eq!(f1.shape(), f2.shape(), "matrix values must share a shape");
        let (e1, e2) = self.idempotents();
        &f1.kron(&e1) + &f2.kron(&e2)
    }

    /// `T^r = P diag(z1^r, z2^r) P⁻¹`.
    pub fn coordinate(&self, r: usize) -> CMatrix {
        self.apply_scalar(self.z1.0[r], self.z2.0[r])
    }

    pub fn coordinates(&self) -> Vec<CMatrix> {
        (0..self.d()).map(|r| self.coordinate(r)).collect()
    }

    /// `Δ(T)`, the operator `e_i ⊗ v_j ↦ Δ(z_j) e_i ⊗ v_j`.
    pub fn apply_delta(&self, m: &DeltaMap) -> Result<CMatrix> {
        if m.dim() != self.d() {
            return Err(Error::DimMismatch {
                expected: m.dim(),
                got: self.d(),
            });
        }
        Ok(self.apply_matrix(&m.eval(&self.z1)?, &m.eval(&self.z2)?))
    }

    pub fn is_generic(&self) -> bool {
        self.z1.max_separation(&self.z2) > GENERIC_SEPARATION
    }

    /// Sine of the angle between the two eigenvector lines.
    pub fn sin_theta(&self) -> f64 {
        let cos = inner(&self.v1, &self.v2).norm().min(1.0);
        (1.0 - cos * cos).max(0.0).sqrt()
    }

    /// Largest pairwise commutator norm among the coordinate matrices.
    pub fn commutator_residual(&self) -> f64 {
        max_commutator(&self.coordinates())
    }
}

pub fn make_tuple(z1: Point, z2: Point, v1: [C64; 2], v2: [C64; 2]) -> Result<DiagTuple> {
    DiagTuple::new(z1, z2, v1, v2)
}

pub fn is_generic(t: &DiagTuple) -> bool {
    t.is_generic()
}

pub fn apply_scalar(t: &DiagTuple, fz1: C64, fz2: C64) -> CMatrix {
    t.apply_scalar(fz1, fz2)
}

pub fn apply_delta(t: &DiagTuple, m: &DeltaMap) -> Result<CMatrix> {
    t.apply_delta(m)
}

pub fn sin_theta(t: &DiagTuple) -> f64 {
    t.sin_theta()
}

fn max_commutator(mats: &[CMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            let c = &mats[i].matmul(&mats[j]) - &mats[j].matmul(&mats[i]);
            worst = worst.max(op_norm(&c));
        }
    }
    worst
}

/// `p(T¹, …, T^d)` by direct matrix substitution.
pub fn poly_of_matrices(p: &MultiPoly, mats: &[CMatrix]) -> CMatrix {
    assert_eq!(p.dim(), mats.len());
    let n = mats.first().map_or(0, CMatrix::rows);
    let mut out = CMatrix::zeros(n, n);
    for (exp, c) in p.terms() {
        let mut term = CMatrix::identity(n).scale(c);
        for (m, &e) in mats.iter().zip(exp) {
            for _ in 0..e {
                term = term.matmul(m);
            }
        }
        out = &out + &term;
    }
    out
}

fn random_unit2<R: Rng + ?Sized>(rng: &mut R) -> [C64; 2] {
    loop {
        let v = [complex_normal(rng), complex_normal(rng)];
        let n = vec_norm(&v);
        if n > 1e-8 {
            return [v[0] / n, v[1] / n];
        }
    }
}

/// Samples a generic tuple with `σ(T) ⊂ B_Δ` and `‖Δ(T)‖ ≤ 1`.
///
/// Eigenvalues come from the domain sampler. The eigenvector angle `θ` is
/// drawn uniformly in `(0, π/2)`; if the norm condition fails there, the
/// angle is bisected towards `π/2`, where the eigenvectors are orthogonal and
/// `‖Δ(T)‖ = max ‖Δ(z_j)‖ < 1`. The returned tuple sits on the admissible
/// side of the bisection, usually close to `‖Δ(T)‖ = 1`.
pub fn sample_contractive_tuple<R: Rng + ?Sized>(m: &DeltaMap, rng: &mut R) -> Result<DiagTuple> {
    let z1 = m.sample_interior(rng)?;
    let mut z2 = m.sample_interior(rng)?;
    let mut tries = 0;
    while z1.max_separation(&z2) <= 1e-9 {
        tries += 1;
        if tries > 100 {
            return Err(Error::Exhausted(tries));
        }
        z2 = m.sample_interior(rng)?;
    }
    let v1 = random_unit2(rng);
    let perp = [-v1[1].conj(), v1[0].conj()];
    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let theta0 = rng.random_range(0.0..FRAC_PI_2);
    contractive_at_angle(m, z1, z2, v1, perp, phase, theta0)
}

fn contractive_at_angle(
    m: &DeltaMap,
    z1: Point,
    z2: Point,
    v1: [C64; 2],
    perp: [C64; 2],
    phase: C64,
    theta0: f64,
) -> Result<DiagTuple> {
    let build = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let v2 = [
            v1[0] * phase * c + perp[0] * s,
            v1[1] * phase * c + perp[1] * s,
        ];
        DiagTuple::new(z1.clone(), z2.clone(), v1, v2)
    };
    let admissible = |theta: f64| -> Result<Option<DiagTuple>> {
        match build(theta) {
            Ok(t) => {
                let n = op_norm(&t.apply_delta(m)?);
                Ok((n <= 1.0).then_some(t))
            }
            Err(Error::DependentVectors(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    if let Some(t) = admissible(theta0)? {
        return Ok(t);
    }
    let mut good = admissible(FRAC_PI_2)?.ok_or(Error::Exhausted(0))?;
    let (mut lo, mut hi) = (theta0, FRAC_PI_2);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        match admissible(mid)? {
            Some(t) => {
                hi = mid;
                good = t;
            }
            None => lo = mid,
        }
    }
    Ok(good)
}

/// Replaces a commuting tuple of 2×2 matrices by a nearby diagonalizable one.
///
/// The family is unitarily triangularized on a common eigenvector `u`:
/// `Q* T^r Q = [[a_r, b_r], [0, c_r]]`. Commutation forces
/// `a_r − c_r = μ b_r` for a single `μ`. If the tuple is already
/// diagonalizable with distinct joint eigenvalues it is returned as is.
/// Otherwise every `c_r` is replaced by `a_r − λ b_r` with
/// `|λ − μ| · max|b_r| = eps`, which keeps the family commuting, moves each
/// coordinate by at most `eps`, and makes `(1, −λ)` a second joint
/// eigenvector. Scalar tuples are diagonalizable already; with
/// `require_generic` their first coordinate is split by `eps`.
pub fn drury_perturb(raw: &[CMatrix], eps: f64, require_generic: bool) -> Result<DiagTuple> {
    if raw.is_empty() || raw.iter().any(|m| m.shape() != (2, 2)) {
        return Err(Error::Config(
            "drury_perturb needs a nonempty list of 2×2 matrices".into(),
        ));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange {
            value: eps,
            range: "eps >= 0",
        });
    }
    let comm = max_commutator(raw);
    if comm > COMMUTATOR_TOL {
        return Err(Error::NotCommuting(comm));
    }
    let scale = raw
        .iter()
        .map(CMatrix::max_abs)
        .fold(0.0, f64::max)
        .max(1e-300);
    let half = C64::new(0.5, 0.0);
    let nonscalar = |m: &CMatrix| {
        let t = m.trace() * half;
        (m - &CMatrix::identity(2).scale(t)).max_abs()
    };
    let (ref_idx, ref_dev) = raw
        .iter()
        .map(nonscalar)
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();

    let e1 = [ONE, ZERO];
    let e2 = [ZERO, ONE];
    if ref_dev <= 1e-14 * scale {
        let z: Vec<C64> = raw.iter().map(|m| m.trace() * half).collect();
        let mut z2 = z.clone();
        if require_generic {
            z2[0] += eps;
        }
        return DiagTuple::new(Point(z), Point(z2), e1, e2);
    }

    let u = common_eigenvector(&raw[ref_idx]);
    let perp = [-u[1].conj(), u[0].conj()];
    let q = CMatrix::from_rows(&[vec![u[0], perp[0]], vec![u[1], perp[1]]]);
    let tri: Vec<CMatrix> = raw
        .iter()
        .map(|m| q.adjoint().matmul(m).matmul(&q))
        .collect();
    let a: Vec<C64> = tri.iter().map(|t| t[(0, 0)]).collect();
    let b: Vec<C64> = tri.iter().map(|t| t[(0, 1)]).collect();
    let c: Vec<C64> = tri.iter().map(|t| t[(1, 1)]).collect();

    let (j, bmax) = b
        .iter()
        .map(|x| x.norm())
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    let frame_vec = |lambda: C64| {
        // Q (1, −λ): the second joint eigenvector of [[a, b], [0, a − λ b]].
        [u[0] - perp[0] * lambda, u[1] - perp[1] * lambda]
    };

    if bmax <= 1e-14 * scale {
        // Already diagonal in the frame, distinct since not scalar.
        return DiagTuple::new(Point(a), Point(c), u, perp);
    }
    let mu = (a[j] - c[j]) / b[j];
    let sin_of = |lambda: C64| lambda.norm() / (1.0 + lambda.norm_sqr()).sqrt();
    if sin_of(mu) >= 1e-8 {
        return DiagTuple::new(Point(a), Point(c), u, frame_vec(mu));
    }
    let direction = if mu.norm() > 0.0 { mu / mu.norm() } else { ONE };
    let lambda = mu + direction * (eps / bmax);
    let c_new: Vec<C64> = a
        .iter()
        .zip(&b)
        .map(|(&ar, &br)| ar - lambda * br)
        .collect();
    DiagTuple::new(Point(a), Point(c_new), u, frame_vec(lambda))
}

/// A unit eigenvector of a non-scalar 2×2 matrix (shared by everything that
/// commutes with it).
fn common_eigenvector(m: &CMatrix) -> [C64; 2] {
    let half = C64::new(0.5, 0.0);
    let tr = m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr * half * half - det).sqrt();
    let mu = tr * half + disc;
    let rows = [[m[(0, 0)] - mu, m[(0, 1)]], [m[(1, 0)], m[(1, 1)] - mu]];
    let row = if vec_norm(&rows[0]) >= vec_norm(&rows[1]) {
        rows[0]
    } else {
        rows[1]
    };
    let v = [row[1], -row[0]];
    unit(v).unwrap_or([ONE, ZERO])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distances::d_delta;
    use crate::matkernel::gaussian_matrix;
    use crate::rng_from_seed;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    fn s2() -> f64 {
        std::f64::consts::FRAC_1_SQRT_2
    }

    #[test]
    fn make_tuple_examples() {
        let z1 = Point(vec![c(0.1, 0.2), c(-0.3, 0.0)]);
        let z2 = Point(vec![c(0.4, 0.0), c(0.0, 0.5)]);
        let t = DiagTuple::new(z1.clone(), z2.clone(), [ONE, ZERO], [ZERO, ONE]).unwrap();
        for r in 0..2 {
            assert!(close(
                &t.coordinate(r),
                &CMatrix::diag(&[z1.0[r], z2.0[r]]),
                0.0
            ));
        }

        let t = DiagTuple::new(
            Point::from_real(&[0.0]),
            Point::from_real(&[0.5]),
            [ONE, ZERO],
            [c(s2(), 0.0), c(s2(), 0.0)],
        )
        .unwrap();
        let expected = CMatrix::from_real(2, 2, &[0.0, 0.5, 0.0, 0.5]);
        assert!(close(&t.coordinate(0), &expected, 1e-15));

        let z = Point(vec![c(0.2, -0.1), c(0.3, 0.3)]);
        let t = DiagTuple::new(
            z.clone(),
            z.clone(),
            [c(1.0, 0.0), c(0.3, 0.1)],
            [c(0.2, 0.0), c(1.0, -0.5)],
        )
        .unwrap();
        for r in 0..2 {
            assert!(close(
                &t.coordinate(r),
                &CMatrix::identity(2).scale(z.0[r]),
                1e-15
            ));
        }
    }

    #[test]
    fn make_tuple_normalizes_and_rejects() {
        let t = DiagTuple::new(
            Point::from_real(&[0.0]),
            Point::from_real(&[0.5]),
            [c(0.0, 3.0), ZERO],
            [c(0.0, -2.0), c(0.0, 2.0)],
        )
        .unwrap();
        assert_eq!(t.v1(), [ONE, ZERO]);
        assert!((t.v2()[0] - c(s2(), 0.0)).norm() < 1e-15);
        assert!((t.v2()[1] + c(s2(), 0.0)).norm() < 1e-15);
        assert!(matches!(
            DiagTuple::new(
                Point::from_real(&[0.0]),
                Point::from_real(&[0.5]),
                [ONE, ONE],
                [c(2.0, 0.0), c(2.0, 0.0)]
            ),
            Err(Error::DependentVectors(_))
        ));
        assert!(matches!(
            DiagTuple::new(
                Point::from_real(&[0.0]),
                Point::from_real(&[0.5, 0.1]),
                [ONE, ZERO],
                [ZERO, ONE]
            ),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn genericity_threshold() {
        let mk = |a: &[f64], b: &[f64]| {
            DiagTuple::new(
                Point::from_real(a),
                Point::from_real(b),
                [ONE, ZERO],
                [ZERO, ONE],
            )
            .unwrap()
        };
        assert!(mk(&[0.0], &[0.5]).is_generic());
        assert!(!mk(&[0.1, 0.2], &[0.1, 0.2]).is_generic());
        assert!(mk(&[0.1, 0.2], &[0.1, 0.2 + 1e-9]).is_generic());
    }

    #[test]
    fn apply_scalar_examples() {
        let t = DiagTuple::new(
            Point::from_real(&[0.0]),
            Point::from_real(&[0.5]),
            [ONE, ZERO],
            [c(s2(), 0.0), c(s2(), 0.0)],
        )
        .unwrap();
        let k = c(0.3, -0.7);
        assert!(close(
            &t.apply_scalar(k, k),
            &CMatrix::identity(2).scale(k),
            1e-15
        ));
        assert!(close(
            &t.apply_scalar(c(0.0, 0.0), c(0.5, 0.0)),
            &t.coordinate(0),
            0.0
        ));

        let o = DiagTuple::new(
            Point::from_real(&[0.0]),
            Point::from_real(&[0.5]),
            [ONE, ZERO],
            [ZERO, ONE],
        )
        .unwrap();
        let (a, b) = (c(0.1, 0.2), c(-0.4, 0.3));
        assert!(close(&o.apply_scalar(a, b), &CMatrix::diag(&[a, b]), 0.0));
    }

    #[test]
    fn apply_delta_matches_defining_action() {
        let mut rng = rng_from_seed(21);
        let m = DeltaMap::cartan(2, 3);
        for _ in 0..10 {
            let t = sample_contractive_tuple(&m, &mut rng).unwrap();
            let dt = t.apply_delta(&m).unwrap();
            for (z, v) in [(t.z1(), t.v1()), (t.z2(), t.v2())] {
                let dz = m.eval(z).unwrap();
                for i in 0..3 {
                    let mut e = vec![ZERO; 3];
                    e[i] = ONE;
                    let x = CMatrix::column_vector(&e).kron(&CMatrix::column_vector(&v));
                    let lhs = dt.matmul(&x);
                    let rhs =
                        CMatrix::column_vector(&dz.mul_vec(&e)).kron(&CMatrix::column_vector(&v));
                    assert!(close(&lhs, &rhs, 1e-11));
                }
            }
            // The conjugation formula (I_s⊗P)[Δ(z1)⊗E11 + Δ(z2)⊗E22](I_r⊗P)⁻¹.
            let p = t.eigenvector_matrix();
            let e11 = CMatrix::diag(&[ONE, ZERO]);
            let e22 = CMatrix::diag(&[ZERO, ONE]);
            let mid = &m.eval(t.z1()).unwrap().kron(&e11) + &m.eval(t.z2()).unwrap().kron(&e22);
            let right = inverse(&CMatrix::identity(3).kron(p)).unwrap();
            let formula = CMatrix::identity(2).kron(p).matmul(&mid).matmul(&right);
            assert!(close(&dt, &formula, 1e-11));
        }
    }

    #[test]
    fn apply_delta_examples() {
        let m = DeltaMap::polydisc(2);
        let z1 = Point(vec![c(0.3, 0.0), c(0.0, 0.2)]);
        let z2 = Point(vec![c(-0.5, 0.1), c(0.6, 0.0)]);
        let t = DiagTuple::new(z1.clone(), z2.clone(), [ONE, ZERO], [ZERO, ONE]).unwrap();
        let dt = t.apply_delta(&m).unwrap();
        let n = op_norm(&m.eval(&z1).unwrap()).max(op_norm(&m.eval(&z2).unwrap()));
        assert!((op_norm(&dt) - n).abs() < 1e-14);

        let line = DeltaMap::polydisc(1);
        let t = DiagTuple::new(
            Point::from_real(&[0.1]),
            Point::from_real(&[-0.4]),
            [ONE, c(0.2, 0.0)],
            [c(0.5, 0.0), ONE],
        )
        .unwrap();
        assert!(close(
            &t.apply_delta(&line).unwrap(),
            &t.coordinate(0),
            1e-15
        ));

        let z = Point(vec![c(0.2, 0.1), c(-0.3, 0.2)]);
        let scalar = DiagTuple::new(
            z.clone(),
            z.clone(),
            [ONE, ZERO],
            [c(0.6, 0.0), c(0.8, 0.0)],
        )
        .unwrap();
        let ball = DeltaMap::ball(2);
        let dt = scalar.apply_delta(&ball).unwrap();
        assert!(close(
            &dt,
            &ball.eval(&z).unwrap().kron(&CMatrix::identity(2)),
            1e-15
        ));
        assert!((op_norm(&dt) - op_norm(&ball.eval(&z).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn apply_delta_respects_direct_sums() {
        let parts = [DeltaMap::ball(2), DeltaMap::annulus(0.3).unwrap()];
        let sum = DeltaMap::direct_sum(parts.to_vec()).unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..10 {
            let t = sample_contractive_tuple(&sum, &mut rng).unwrap();
            let full = t.apply_delta(&sum).unwrap();
            let z1s = sum.split_point(t.z1()).unwrap();
            let z2s = sum.split_point(t.z2()).unwrap();
            let mut r0 = 0;
            let mut c0 = 0;
            for (k, part) in parts.iter().enumerate() {
                let sub = DiagTuple::new(z1s[k].clone(), z2s[k].clone(), t.v1(), t.v2()).unwrap();
                let block = sub.apply_delta(part).unwrap();
                let (s, r) = part.shape();
                // In the product basis the part occupies rows 2·r0.., columns 2·c0...
                assert!(close(
                    &full.block(2 * r0, 2 * c0, 2 * s, 2 * r),
                    &block,
                    1e-14
                ));
                r0 += s;
                c0 += r;
            }
        }
    }

    #[test]
    fn sin_theta_examples() {
        let mk = |v2: [C64; 2]| {
            DiagTuple::new(
                Point::from_real(&[0.0]),
                Point::from_real(&[0.5]),
                [ONE, ZERO],
                v2,
            )
            .unwrap()
        };
        assert!((mk([ZERO, ONE]).sin_theta() - 1.0).abs() < 1e-15);
        assert!((mk([c(1.0, 0.0), c(1.0, 0.0)]).sin_theta() - s2()).abs() < 1e-15);
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        let rotated = [v[0] * c(0.0, 1.0), v[1] * c(0.0, 1.0)];
        assert!(matches!(
            DiagTuple::new(
                Point::from_real(&[0.0]),
                Point::from_real(&[0.5]),
                v,
                rotated
            ),
            Err(Error::DependentVectors(_))
        ));
    }

    #[test]
    fn scalar_family_norm_law() {
        // z1 = 0, z2 = a, v1 = e1, v2 = (cos θ, sin θ): ‖T‖ = |a| / sin θ.
        for (a, theta) in [
            (c(0.5, 0.0), 0.3_f64),
            (c(-0.2, 0.4), 1.1),
            (c(0.0, 0.9), 0.05),
        ] {
            let t = DiagTuple::new(
                Point::from_real(&[0.0]),
                Point(vec![a]),
                [ONE, ZERO],
                [c(theta.cos(), 0.0), c(theta.sin(), 0.0)],
            )
            .unwrap();
            let norm = op_norm(&t.coordinate(0));
            assert!((norm * t.sin_theta() - a.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_tuples_are_admissible() {
        let m = DeltaMap::annulus(0.1).unwrap();
        let mut rng = rng_from_seed(8);
        for _ in 0..30 {
            let t = sample_contractive_tuple(&m, &mut rng).unwrap();
            assert!(t.is_generic());
            assert!(op_norm(&t.apply_delta(&m).unwrap()) <= 1.0);
            assert!(m.contains(t.z1()).unwrap().inside && m.contains(t.z2()).unwrap().inside);
        }
    }

    #[test]
    fn orthogonal_anchor_always_admissible() {
        let m = DeltaMap::ball(3);
        let mut rng = rng_from_seed(2);
        for _ in 0..10 {
            let z1 = m.sample_interior(&mut rng).unwrap();
            let z2 = m.sample_interior(&mut rng).unwrap();
            let t = DiagTuple::new(z1.clone(), z2.clone(), [ONE, ZERO], [ZERO, ONE]).unwrap();
            let n = op_norm(&t.apply_delta(&m).unwrap());
            let expected = op_norm(&m.eval(&z1).unwrap()).max(op_norm(&m.eval(&z2).unwrap()));
            assert!((n - expected).abs() < 1e-14 && n < 1.0);
        }
    }

    #[test]
    fn annulus_symmetric_pair_threshold() {
        // Eigenvalues ±√r: a(T) has norm ‖T‖, and ‖T‖ ≤ 1 exactly when sin θ ≥ 2√r/(1+r).
        let r: f64 = 0.1;
        let m = DeltaMap::annulus(r).unwrap();
        let da = 2.0 * r.sqrt() / (1.0 + r);
        for (sin, ok) in [(da * 1.01, true), (da * 0.99, false), (1.0, true)] {
            let theta = f64::asin(sin);
            let t = DiagTuple::new(
                Point::from_real(&[r.sqrt()]),
                Point::from_real(&[-r.sqrt()]),
                [ONE, ZERO],
                [c(theta.cos(), 0.0), c(theta.sin(), 0.0)],
            )
            .unwrap();
            let n = op_norm(&t.apply_delta(&m).unwrap());
            assert_eq!(n <= 1.0, ok, "sin={sin} norm={n}");
        }
    }

    #[test]
    fn angle_criterion_holds_on_samples() {
        let mut rng = rng_from_seed(12);
        for m in [
            DeltaMap::polydisc(2),
            DeltaMap::cartan(2, 2),
            DeltaMap::annulus(0.4).unwrap(),
        ] {
            for _ in 0..20 {
                let t = sample_contractive_tuple(&m, &mut rng).unwrap();
                let d = d_delta(&m, t.z1(), t.z2()).unwrap();
                assert!(d <= t.sin_theta() + 1e-9);
            }
        }
    }

    #[test]
    fn polynomial_calculus_matches_substitution() {
        let p = MultiPoly::zero(2)
            .with_term(vec![0, 0], c(0.5, 0.1))
            .with_term(vec![2, 1], c(-1.0, 0.3))
            .with_term(vec![0, 3], c(0.2, 0.0));
        let mut rng = rng_from_seed(31);
        for _ in 0..10 {
            let t = sample_contractive_tuple(&DeltaMap::polydisc(2), &mut rng).unwrap();
            let via_calculus = t.apply_scalar(p.eval(t.z1()).unwrap(), p.eval(t.z2()).unwrap());
            let via_matrices = poly_of_matrices(&p, &t.coordinates());
            assert!(close(&via_calculus, &via_matrices, 1e-10));
        }
    }

    #[test]
    fn drury_leaves_diagonalizable_tuples_alone() {
        let raw = vec![
            CMatrix::diag(&[c(0.1, 0.0), c(0.4, 0.0)]),
            CMatrix::diag(&[c(0.0, 0.2), c(0.3, 0.0)]),
        ];
        let t = drury_perturb(&raw, 0.0, false).unwrap();
        assert!(t.is_generic());
        for (r, m) in raw.iter().enumerate() {
            assert!(close(&t.coordinate(r), m, 1e-15));
        }
    }

    #[test]
    fn drury_splits_jordan_block() {
        let eps = 1e-3;
        let jordan = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let t = drury_perturb(std::slice::from_ref(&jordan), eps, false).unwrap();
        assert!(t.is_generic());
        assert!(op_norm(&(&t.coordinate(0) - &jordan)) <= eps * (1.0 + 1e-9));

        // A commuting pair built from the same nilpotent: T² = 2I + 3N.
        let second = &CMatrix::identity(2).scale(c(2.0, 0.0)) + &jordan.scale(c(3.0, 0.0));
        let raw = vec![jordan, second];
        let t = drury_perturb(&raw, eps, false).unwrap();
        assert!(t.is_generic());
        assert!(t.commutator_residual() < 1e-10);
        for (r, m) in raw.iter().enumerate() {
            assert!(
                op_norm(&(&t.coordinate(r) - m)) <= eps * (1.0 + 1e-9),
                "coordinate {r}"
            );
        }
    }

    #[test]
    fn drury_scalar_policy() {
        let raw = vec![
            CMatrix::identity(2).scale(c(0.3, 0.1)),
            CMatrix::identity(2).scale(c(-0.2, 0.0)),
        ];
        let t = drury_perturb(&raw, 1e-4, false).unwrap();
        assert!(!t.is_generic());
        let g = drury_perturb(&raw, 1e-4, true).unwrap();
        assert!(g.is_generic());
        assert!(op_norm(&(&g.coordinate(0) - &raw[0])) <= 1e-4 * (1.0 + 1e-12));
        assert!(close(&g.coordinate(1), &raw[1], 1e-15));
    }

    #[test]
    fn drury_rejects_noncommuting() {
        let a = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = CMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            drury_perturb(&[a, b], 1e-3, false),
            Err(Error::NotCommuting(_))
        ));
    }

    proptest! {
        #[test]
        fn prop_calculus_is_a_homomorphism(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let t = sample_contractive_tuple(&DeltaMap::polydisc(2), &mut rng).unwrap();
            let f: Vec<C64> = (0..2).map(|_| complex_normal(&mut rng)).collect();
            let g: Vec<C64> = (0..2).map(|_| complex_normal(&mut rng)).collect();
            let ft = t.apply_scalar(f[0], f[1]);
            let gt = t.apply_scalar(g[0], g[1]);
            let prod = t.apply_scalar(f[0] * g[0], f[1] * g[1]);
            let scale = 1.0 + op_norm(&ft) * op_norm(&gt);
            prop_assert!((&prod - &ft.matmul(&gt)).max_abs() <= 1e-11 * scale);
            let sum = t.apply_scalar(f[0] + g[0], f[1] + g[1]);
            prop_assert!((&sum - &(&ft + &gt)).max_abs() <= 1e-11 * scale);
            prop_assert!(t.commutator_residual() <= 1e-11 * scale);
        }

        #[test]
        fn prop_drury_recovers_diagonalizable(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let g = gaussian_matrix(2, 2, &mut rng);
            let v1 = [g[(0, 0)], g[(1, 0)]];
            let v2 = [g[(0, 1)], g[(1, 1)]];
            let z1 = Point((0..3).map(|_| complex_normal(&mut rng)).collect());
            let z2 = Point((0..3).map(|_| complex_normal(&mut rng)).collect());
            if let Ok(t) = DiagTuple::new(z1, z2, v1, v2) {
                prop_assume!(t.sin_theta() > 1e-3);
                let raw = t.coordinates();
                prop_assume!(max_commutator(&raw) <= COMMUTATOR_TOL);
                let back = drury_perturb(&raw, 0.0, false).unwrap();
                for (r, m) in raw.iter().enumerate() {
                    prop_assert!((&back.coordinate(r) - m).max_abs() <= 1e-8 * (1.0 + m.max_abs()));
                }
            }
        }
    }
}
