//! Matrices of holomorphic functions `Δ` and the domains `B_Δ = {z : ‖Δ(z)‖ < 1}`
//! they cut out of `C^d`.
//!
//! Built-in kinds cover the polydisc (diagonal coordinates), the Euclidean
//! ball (a single row of coordinates), the annulus `diag(z, r/z)`, the Cartan
//! domain of `s × r` matrices, arbitrary polynomial matrices, and direct sums
//! of any of these. Domains can be read from and written to a small JSON
//! format (see [`DomainSpec`]).

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{complex_normal, gaussian_matrix, op_norm, vec_norm, CMatrix, C64, ZERO};

/// Rejections allowed before a sampler gives up.
pub const MAX_REJECTIONS: usize = 10_000;
/// Every sampled interior point satisfies `1 − ‖Δ(z)‖ ≥ SAMPLE_MARGIN`.
pub const SAMPLE_MARGIN: f64 = 1e-6;
/// Points with modulus at or below this are treated as the annulus origin.
pub const ANNULUS_ORIGIN: f64 = 1e-13;

/// A point of `C^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<C64>);

impl Point {
    pub fn new(coords: Vec<C64>) -> Self {
        Point(coords)
    }

    pub fn from_real(coords: &[f64]) -> Self {
        Point(coords.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn concat(parts: &[&Point]) -> Point {
        Point(parts.iter().flat_map(|p| p.0.iter().copied()).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest coordinate-wise modulus of `self − other`.
    pub fn max_separation(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Sparse multivariate polynomial with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, C64>,
}

impl MultiPoly {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: C64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate function `z ↦ z^i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut exp = vec![0; dim];
        exp[i] = 1;
        let mut p = Self::zero(dim);
        p.add_term(exp, C64::new(1.0, 0.0));
        p
    }

    /// Adds `c · z^exp`, merging with an existing term and dropping zeros.
    pub fn add_term(&mut self, exp: Vec<u32>, c: C64) {
        assert_eq!(exp.len(), self.dim, "exponent length must equal dim");
        let merged = self.terms.get(&exp).copied().unwrap_or(ZERO) + c;
        if merged == ZERO {
            self.terms.remove(&exp);
        } else {
            self.terms.insert(exp, merged);
        }
    }

    pub fn with_term(mut self, exp: Vec<u32>, c: C64) -> Self {
        self.add_term(exp, c);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], C64)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, z: &Point) -> Result<C64> {
        if z.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                got: z.dim(),
            });
        }
        Ok(self.eval_coords(z.coords()))
    }

    /// Evaluation without the dimension check; powers of each coordinate are
    /// tabulated once per call.
    pub(crate) fn eval_coords(&self, z: &[C64]) -> C64 {
        if self.terms.is_empty() {
            return ZERO;
        }
        let mut max_exp = vec![0u32; self.dim];
        for exp in self.terms.keys() {
            for (m, &e) in max_exp.iter_mut().zip(exp) {
                *m = (*m).max(e);
            }
        }
        let powers: Vec<Vec<C64>> = max_exp
            .iter()
            .zip(z)
            .map(|(&m, &zi)| {
                let mut row = Vec::with_capacity(m as usize + 1);
                let mut acc = C64::new(1.0, 0.0);
                row.push(acc);
                for _ in 0..m {
                    acc *= zi;
                    row.push(acc);
                }
                row
            })
            .collect();
        self.terms
            .iter()
            .map(|(exp, &c)| {
                exp.iter()
                    .enumerate()
                    .fold(c, |acc, (i, &e)| acc * powers[i][e as usize])
            })
            .sum()
    }
}

/// A matrix-valued map `z ↦ Δ(z)` defining `B_Δ`.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaMap {
    /// `s × r` grid of polynomials (row-major), with an optional per-coordinate
    /// bounding radius used by the sampler.
    PolyMatrix {
        dim: usize,
        shape: (usize, usize),
        entries: Vec<MultiPoly>,
        bbox: Option<Vec<f64>>,
    },
    /// `diag(z¹, …, z^d)`: the polydisc.
    PolydiscDiag(usize),
    /// `[z¹ ⋯ z^d]`: the Euclidean unit ball.
    BallRow(usize),
    /// `diag(z, r/z)`: the annulus `r < |z| < 1`.
    Annulus(f64),
    /// Coordinates reshaped row-major into an `s × r` matrix: the Cartan
    /// domain of type I.
    CartanIdentity(usize, usize),
    /// Block-diagonal sum on concatenated coordinates.
    DirectSum(Vec<DeltaMap>),
}

/// Result of a membership test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub inside: bool,
    /// `1 − ‖Δ(z)‖`.
    pub margin: f64,
}

impl DeltaMap {
    pub fn polydisc(d: usize) -> Self {
        DeltaMap::PolydiscDiag(d)
    }

    pub fn ball(d: usize) -> Self {
        DeltaMap::BallRow(d)
    }

    pub fn annulus(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Validation(format!(
                "annulus parameter r = {r} must lie in (0, 1)"
            )));
        }
        Ok(DeltaMap::Annulus(r))
    }

    pub fn cartan(s: usize, r: usize) -> Self {
        DeltaMap::CartanIdentity(s, r)
    }

    pub fn poly_matrix(
        dim: usize,
        shape: (usize, usize),
        entries: Vec<MultiPoly>,
        bbox: Option<Vec<f64>>,
    ) -> Result<Self> {
        if dim == 0 || shape.0 == 0 || shape.1 == 0 {
            return Err(Error::Validation("poly_matrix needs d, s, r ≥ 1".into()));
        }
        if entries.len() != shape.0 * shape.1 {
            return Err(Error::Validation(format!(
                "poly_matrix expects {} entries, got {}",
                shape.0 * shape.1,
                entries.len()
            )));
        }
        if entries.iter().any(|p| p.dim() != dim) {
            return Err(Error::Validation(
                "polynomial dimension differs from d".into(),
            ));
        }
        if let Some(b) = &bbox {
            if b.len() != dim || b.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return Err(Error::Validation(
                    "bbox must hold d positive finite radii".into(),
                ));
            }
        }
        Ok(DeltaMap::PolyMatrix {
            dim,
            shape,
            entries,
            bbox,
        })
    }

    /// Direct sum of the parts; a single part is returned unwrapped.
    pub fn direct_sum(mut parts: Vec<DeltaMap>) -> Result<Self> {
        match parts.len() {
            0 => Err(Error::Validation(
                "direct sum needs at least one part".into(),
            )),
            1 => Ok(parts.pop().unwrap()),
            _ => Ok(DeltaMap::DirectSum(parts)),
        }
    }

    /// Ambient variable count `d`.
    pub fn dim(&self) -> usize {
        match self {
            DeltaMap::PolyMatrix { dim, .. } => *dim,
            DeltaMap::PolydiscDiag(d) | DeltaMap::BallRow(d) => *d,
            DeltaMap::Annulus(_) => 1,
            DeltaMap::CartanIdentity(s, r) => s * r,
            DeltaMap::DirectSum(parts) => parts.iter().map(DeltaMap::dim).sum(),
        }
    }

    /// `(s, r)`: `Δ(z)` is an `s × r` matrix.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            DeltaMap::PolyMatrix { shape, .. } => *shape,
            DeltaMap::PolydiscDiag(d) => (*d, *d),
            DeltaMap::BallRow(d) => (1, *d),
            DeltaMap::Annulus(_) => (2, 2),
            DeltaMap::CartanIdentity(s, r) => (*s, *r),
            DeltaMap::DirectSum(parts) => parts.iter().fold((0, 0), |(s, r), p| {
                let (ps, pr) = p.shape();
                (s + ps, r + pr)
            }),
        }
    }

    /// Whether `B_Δ` is known to be 2-bounding. Every built-in geometric kind
    /// is; polynomial matrices are not classified.
    pub fn is_two_bounding(&self) -> Option<bool> {
        match self {
            DeltaMap::PolyMatrix { .. } => None,
            DeltaMap::DirectSum(parts) => parts
                .iter()
                .map(DeltaMap::is_two_bounding)
                .try_fold(true, |acc, p| p.map(|b| acc && b)),
            _ => Some(true),
        }
    }

    fn check_dim(&self, z: &Point) -> Result<()> {
        if z.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: z.dim(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, z: &Point) -> Result<CMatrix> {
        self.check_dim(z)?;
        self.eval_coords(z.coords())
    }

    fn eval_coords(&self, z: &[C64]) -> Result<CMatrix> {
        Ok(match self {
            DeltaMap::PolyMatrix { shape, entries, .. } => {
                CMatrix::from_fn(shape.0, shape.1, |i, j| {
                    entries[i * shape.1 + j].eval_coords(z)
                })
            }
            DeltaMap::PolydiscDiag(_) => CMatrix::diag(z),
            DeltaMap::BallRow(d) => CMatrix::from_fn(1, *d, |_, j| z[j]),
            DeltaMap::Annulus(r) => {
                let w = z[0];
                if w.norm() <= ANNULUS_ORIGIN {
                    return Err(Error::AnnulusOrigin);
                }
                CMatrix::diag(&[w, C64::new(*r, 0.0) / w])
            }
            DeltaMap::CartanIdentity(s, r) => CMatrix::from_fn(*s, *r, |i, j| z[i * r + j]),
            DeltaMap::DirectSum(parts) => {
                let mut offset = 0;
                let mut blocks = Vec::with_capacity(parts.len());
                for p in parts {
                    let d = p.dim();
                    blocks.push(p.eval_coords(&z[offset..offset + d])?);
                    offset += d;
                }
                let refs: Vec<&CMatrix> = blocks.iter().collect();
                CMatrix::block_diag(&refs)
            }
        })
    }

    pub fn contains(&self, z: &Point) -> Result<Membership> {
        let norm = op_norm(&self.eval(z)?);
        Ok(Membership {
            inside: norm < 1.0,
            margin: 1.0 - norm,
        })
    }

    /// Splits a point of the direct sum into its per-part coordinates.
    pub fn split_point(&self, z: &Point) -> Result<Vec<Point>> {
        self.check_dim(z)?;
        match self {
            DeltaMap::DirectSum(parts) => {
                let mut offset = 0;
                Ok(parts
                    .iter()
                    .map(|p| {
                        let d = p.dim();
                        let out = Point(z.0[offset..offset + d].to_vec());
                        offset += d;
                        out
                    })
                    .collect())
            }
            _ => Ok(vec![z.clone()]),
        }
    }

    /// Draws a point with `‖Δ(z)‖ ≤ 1 − SAMPLE_MARGIN`.
    ///
    /// The distribution is not uniform but has full support on the interior.
    /// Polynomial matrices need a bounding box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        if let DeltaMap::DirectSum(parts) = self {
            let pieces = parts
                .iter()
                .map(|p| p.sample_interior(rng))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Point> = pieces.iter().collect();
            return Ok(Point::concat(&refs));
        }
        if let DeltaMap::PolyMatrix { bbox: None, .. } = self {
            return Err(Error::Unsupported(
                "sampling a poly_matrix domain requires a bbox".into(),
            ));
        }
        for _ in 0..MAX_REJECTIONS {
            let z = self.propose(rng);
            match self.contains(&z) {
                Ok(m) if m.margin >= SAMPLE_MARGIN => return Ok(z),
                Ok(_) | Err(Error::AnnulusOrigin) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Exhausted(MAX_REJECTIONS))
    }

    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            DeltaMap::PolydiscDiag(d) => Point((0..*d).map(|_| disk_point(rng, 0.999)).collect()),
            DeltaMap::BallRow(d) => {
                let dir: Vec<C64> = (0..*d).map(|_| complex_normal(rng)).collect();
                let n = vec_norm(&dir);
                let radius = 0.999 * rng.random::<f64>().powf(1.0 / (2.0 * *d as f64));
                Point(dir.iter().map(|z| z * (radius / n)).collect())
            }
            DeltaMap::Annulus(r) => {
                let eps = 1e-3 * (1.0 - r);
                let modulus = rng.random_range((r + eps)..(1.0 - eps));
                let phase = rng.random_range(0.0..TAU);
                Point(vec![C64::from_polar(modulus, phase)])
            }
            DeltaMap::CartanIdentity(s, r) => {
                let g = gaussian_matrix(*s, *r, rng);
                let target = rng.random::<f64>() * (1.0 - 1e-3);
                let scale = target / op_norm(&g);
                Point(g.data().iter().map(|z| z * scale).collect())
            }
            DeltaMap::PolyMatrix { bbox, .. } => {
                let radii = bbox.as_ref().expect("checked by caller");
                Point(radii.iter().map(|&rad| disk_point(rng, rad)).collect())
            }
            DeltaMap::DirectSum(_) => unreachable!("handled by sample_interior"),
        }
    }
}

/// Uniform point on the disk of the given radius.
fn disk_point<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> C64 {
    let rho = radius * rng.random::<f64>().sqrt();
    C64::from_polar(rho, rng.random_range(0.0..TAU))
}

pub fn poly_eval(p: &MultiPoly, z: &Point) -> Result<C64> {
    p.eval(z)
}

pub fn delta_eval(m: &DeltaMap, z: &Point) -> Result<CMatrix> {
    m.eval(z)
}

pub fn contains(m: &DeltaMap, z: &Point) -> Result<Membership> {
    m.contains(z)
}

pub fn direct_sum(parts: Vec<DeltaMap>) -> Result<DeltaMap> {
    DeltaMap::direct_sum(parts)
}

// ---------------------------------------------------------------------------
// JSON domain specs

/// One polynomial term `(re + i·im) · z^exp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub exp: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Wire format of a domain. Serialization emits the `type` tag first and the
/// remaining keys in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Polydisc {
        d: usize,
    },
    Ball {
        d: usize,
    },
    Annulus {
        r: f64,
    },
    Cartan {
        shape: [usize; 2],
    },
    PolyMatrix {
        d: usize,
        shape: [usize; 2],
        entries: Vec<Vec<Vec<TermSpec>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bbox: Option<Vec<f64>>,
    },
    DirectSum {
        parts: Vec<DomainSpec>,
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<DeltaMap> {
        match self {
            DomainSpec::Polydisc { d } | DomainSpec::Ball { d } if *d == 0 => {
                Err(Error::Validation("d must be at least 1".into()))
            }
            DomainSpec::Polydisc { d } => Ok(DeltaMap::PolydiscDiag(*d)),
            DomainSpec::Ball { d } => Ok(DeltaMap::BallRow(*d)),
            DomainSpec::Annulus { r } => DeltaMap::annulus(*r),
            DomainSpec::Cartan { shape: [s, r] } => {
                if *s == 0 || *r == 0 {
                    return Err(Error::Validation("cartan shape must be positive".into()));
                }
                Ok(DeltaMap::CartanIdentity(*s, *r))
            }
            DomainSpec::PolyMatrix {
                d,
                shape,
                entries,
                bbox,
            } => {
                let [s, r] = *shape;
                if entries.len() != s || entries.iter().any(|row| row.len() != r) {
                    return Err(Error::Validation(format!(
                        "entries must be a {s}×{r} grid of term lists"
                    )));
                }
                let mut polys = Vec::with_capacity(s * r);
                for (i, row) in entries.iter().enumerate() {
                    for (j, terms) in row.iter().enumerate() {
                        let mut p = MultiPoly::zero(*d);
                        for t in terms {
                            if t.exp.len() != *d {
                                return Err(Error::Validation(format!(
                                    "entries[{i}][{j}]: exponent {:?} does not have length {d}",
                                    t.exp
                                )));
                            }
                            if !(t.re.is_finite() && t.im.is_finite()) {
                                return Err(Error::Validation(format!(
                                    "entries[{i}][{j}]: non-finite coefficient"
                                )));
                            }
                            p.add_term(t.exp.clone(), C64::new(t.re, t.im));
                        }
                        polys.push(p);
                    }
                }
                DeltaMap::poly_matrix(*d, (s, r), polys, bbox.clone())
            }
            DomainSpec::DirectSum { parts } => {
                let built = parts
                    .iter()
                    .map(DomainSpec::build)
                    .collect::<Result<Vec<_>>>()?;
                if built.is_empty() {
                    return Err(Error::Validation(
                        "direct_sum needs at least one part".into(),
                    ));
                }
                Ok(DeltaMap::DirectSum(built))
            }
        }
    }

    pub fn from_map(m: &DeltaMap) -> Self {
        match m {
            DeltaMap::PolydiscDiag(d) => DomainSpec::Polydisc { d: *d },
            DeltaMap::BallRow(d) => DomainSpec::Ball { d: *d },
            DeltaMap::Annulus(r) => DomainSpec::Annulus { r: *r },
            DeltaMap::CartanIdentity(s, r) => DomainSpec::Cartan { shape: [*s, *r] },
            DeltaMap::PolyMatrix {
                dim,
                shape,
                entries,
                bbox,
            } => DomainSpec::PolyMatrix {
                d: *dim,
                shape: [shape.0, shape.1],
                entries: (0..shape.0)
                    .map(|i| {
                        (0..shape.1)
                            .map(|j| {
                                entries[i * shape.1 + j]
                                    .terms()
                                    .map(|(exp, c)| TermSpec {
                                        exp: exp.to_vec(),
                                        re: c.re,
                                        im: c.im,
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect(),
                bbox: bbox.clone(),
            },
            DeltaMap::DirectSum(parts) => DomainSpec::DirectSum {
                parts: parts.iter().map(DomainSpec::from_map).collect(),
            },
        }
    }
}

pub fn parse_domain_spec(text: &[u8]) -> Result<DeltaMap> {
    let spec: DomainSpec = serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.build()
}

/// Canonical single-line JSON for a domain.
pub fn domain_to_json(m: &DeltaMap) -> String {
    serde_json::to_string(&DomainSpec::from_map(m)).expect("domain specs always serialize")
}
