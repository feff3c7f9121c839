//! Seeded verification sweeps, analytic certificates and reports.
//!
//! Every sweep draws sample `i` from its own generator seeded with
//! `seed ^ i`, evaluates the samples in parallel and assembles the report in
//! index order, so a given configuration always serializes to the same bytes.
//! A recorded violation can be reproduced with [`replay_sample`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::distances::{
    annulus_gap, annulus_matrix_distance_symmetric, annulus_mobius_distance_symmetric,
    annulus_strict_bound, d_delta, d_disk,
};
use crate::domains::{domain_to_json, DeltaMap, MultiPoly, Point};
use crate::error::{Error, Result};
use crate::matkernel::{complex_normal, op_norm, vec_norm, CMatrix, C64, ONE, ZERO};
use crate::schuragler::{extremal_function, harris_certificate, random_realization, DiskFunction};
use crate::tuples::{sample_contractive_tuple, DiagTuple};
use crate::{rng_from_seed, SweepRng};

pub const SCHEMA_VERSION: u32 = 1;
/// Default tolerance for inequality checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Default tolerance for the metric-axiom sweep.
pub const METRIC_TOLERANCE: f64 = 1e-10;
/// Relative slack on sampled sup estimates.
pub const SUP_RELATIVE_SLACK: f64 = 1e-6;
/// At most this many violation records are stored; all are counted.
pub const MAX_RECORDED_VIOLATIONS: usize = 100;
/// Points closer than this are not used for positivity checks.
pub const POSITIVITY_SEPARATION: f64 = 1e-6;

/// Options specific to the polyball sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyballOptions {
    /// Ball dimensions `n_1, …, n_k`; the domain is the product of the balls.
    pub dims: Vec<usize>,
    /// Maximum total degree of the random polynomials.
    pub degree: u32,
    /// Polynomials tested per sampled tuple.
    pub polys: usize,
    /// Initial sup-estimation points per polynomial.
    pub sup_points: usize,
    /// Extra estimation rounds spent before a case counts as a violation.
    pub refine_rounds: usize,
}

impl Default for PolyballOptions {
    fn default() -> Self {
        Self {
            dims: vec![2, 2],
            degree: 3,
            polys: 20,
            sup_points: 256,
            refine_rounds: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub domain: DeltaMap,
    pub samples: usize,
    pub seed: u64,
    /// Overrides the sweep's default tolerance.
    pub tolerance: Option<f64>,
    /// Auxiliary dimension `e` of random realizations.
    pub realization_dim: usize,
    pub polyball: PolyballOptions,
}

impl SweepConfig {
    pub fn new(domain: DeltaMap, samples: usize, seed: u64) -> Self {
        Self {
            domain,
            samples,
            seed,
            tolerance: None,
            realization_dim: 2,
            polyball: PolyballOptions::default(),
        }
    }

    /// Configuration for the polyball sweep; the domain is the product of balls.
    pub fn polyball(options: PolyballOptions, samples: usize, seed: u64) -> Result<Self> {
        let domain = polyball_domain(&options.dims)?;
        Ok(Self {
            polyball: options,
            ..Self::new(domain, samples, seed)
        })
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.realization_dim == 0 {
            return Err(Error::Config(
                "realization dimension must be at least 1".into(),
            ));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "tolerance {t} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

fn polyball_domain(dims: &[usize]) -> Result<DeltaMap> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Config(
            "ball dimensions must be a nonempty list of positive integers".into(),
        ));
    }
    DeltaMap::direct_sum(dims.iter().map(|&n| DeltaMap::ball(n)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepKind {
    SchwarzPick,
    VonNeumann,
    Polyball,
    Metric,
    Angle,
    Harris,
    Extremal,
}

impl SweepKind {
    pub const ALL: [SweepKind; 7] = [
        SweepKind::SchwarzPick,
        SweepKind::VonNeumann,
        SweepKind::Polyball,
        SweepKind::Metric,
        SweepKind::Angle,
        SweepKind::Harris,
        SweepKind::Extremal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::SchwarzPick => "schwarz-pick",
            SweepKind::VonNeumann => "von-neumann",
            SweepKind::Polyball => "polyball",
            SweepKind::Metric => "metric",
            SweepKind::Angle => "angle",
            SweepKind::Harris => "harris",
            SweepKind::Extremal => "extremal",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            SweepKind::Metric => METRIC_TOLERANCE,
            _ => DEFAULT_TOLERANCE,
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep '{s}'")))
    }
}

/// One inequality evaluated on one sample.
///
/// `residual` is signed so that negative values point towards a violation;
/// what it measures is given by `check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub residual: f64,
    pub violated: bool,
    pub inputs: Value,
}

impl Check {
    fn new(check: &str, residual: f64, violated: bool, inputs: Value) -> Self {
        Self {
            check: check.to_string(),
            residual,
            violated,
            inputs,
        }
    }

    /// Violation when `residual < −tol`.
    fn lower(check: &str, residual: f64, tol: f64, inputs: Value) -> Self {
        Self::new(check, residual, residual.is_nan() || residual < -tol, inputs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub index: usize,
    pub sample_seed: u64,
    pub check: String,
    pub residual: f64,
    pub inputs: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleError {
    pub index: usize,
    pub sample_seed: u64,
    pub message: String,
}

/// Summary of one sweep. Serializes deterministically; wall-clock time is
/// deliberately left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub sweep: String,
    pub crate_version: String,
    pub domain: Value,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub checks: usize,
    /// Smallest residual per check name.
    pub worst_by_check: BTreeMap<String, f64>,
    pub worst_residual: f64,
    pub worst_index: usize,
    pub violation_count: usize,
    pub violations: Vec<ViolationRecord>,
    pub errors: Vec<SampleError>,
    pub pass: bool,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn sample_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Re-evaluates sample `index` of a sweep exactly as the sweep did.
pub fn replay_sample(kind: SweepKind, cfg: &SweepConfig, index: usize) -> Result<Vec<Check>> {
    cfg.validate()?;
    let tol = cfg.tolerance.unwrap_or(kind.default_tolerance());
    let mut rng = rng_from_seed(sample_seed(cfg.seed, index));
    let m = &cfg.domain;
    match kind {
        SweepKind::SchwarzPick => schwarz_pick_sample(cfg, m, tol, &mut rng),
        SweepKind::VonNeumann => von_neumann_sample(cfg, m, tol, &mut rng),
        SweepKind::Polyball => polyball_sample(cfg, m, &mut rng),
        SweepKind::Metric => metric_sample(m, tol, &mut rng),
        SweepKind::Angle => angle_sample(m, tol, &mut rng),
        SweepKind::Harris => harris_sample(m, tol, &mut rng),
        SweepKind::Extremal => extremal_sample(m, tol, &mut rng),
    }
}

pub fn run_sweep(kind: SweepKind, cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    if kind == SweepKind::Polyball {
        let expected = polyball_domain(&cfg.polyball.dims)?;
        if expected != cfg.domain {
            return Err(Error::Config(
                "polyball sweeps run on the product of the configured balls".into(),
            ));
        }
        if cfg.polyball.polys == 0 || cfg.polyball.sup_points == 0 {
            return Err(Error::Config(
                "polyball needs polys >= 1 and sup_points >= 1".into(),
            ));
        }
    }
    let tol = cfg.tolerance.unwrap_or(kind.default_tolerance());
    let outcomes: Vec<Result<Vec<Check>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| replay_sample(kind, cfg, i))
        .collect();

    let mut report = SweepReport {
        schema_version: SCHEMA_VERSION,
        sweep: kind.name().to_string(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        domain: serde_json::from_str(&domain_to_json(&cfg.domain)).expect("domain JSON is valid"),
        seed: cfg.seed,
        samples: cfg.samples,
        tolerance: tol,
        checks: 0,
        worst_by_check: BTreeMap::new(),
        worst_residual: f64::INFINITY,
        worst_index: 0,
        violation_count: 0,
        violations: Vec::new(),
        errors: Vec::new(),
        pass: true,
    };
    for (index, outcome) in outcomes.into_iter().enumerate() {
        let sample_seed = sample_seed(cfg.seed, index);
        let checks = match outcome {
            Ok(c) => c,
            Err(e) => {
                report.errors.push(SampleError {
                    index,
                    sample_seed,
                    message: e.to_string(),
                });
                continue;
            }
        };
        for c in checks {
            report.checks += 1;
            let worst = report
                .worst_by_check
                .entry(c.check.clone())
                .or_insert(f64::INFINITY);
            *worst = worst.min(c.residual);
            if c.residual < report.worst_residual {
                report.worst_residual = c.residual;
                report.worst_index = index;
            }
            if c.violated {
                report.violation_count += 1;
                if report.violations.len() < MAX_RECORDED_VIOLATIONS {
                    report.violations.push(ViolationRecord {
                        index,
                        sample_seed,
                        check: c.check,
                        residual: c.residual,
                        inputs: c.inputs,
                    });
                }
            }
        }
    }
    report.pass = report.violation_count == 0 && report.errors.is_empty();
    Ok(report)
}

/// Schwarz–Pick residuals `d_Δ(z, w) − d_D(f(z), f(w))` for a random
/// realization, for an extremal function centred elsewhere, and the equality
/// case of the extremal function for `(z, w)` itself.
pub fn sweep_schwarz_pick(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(SweepKind::SchwarzPick, cfg)
}

/// `1 − ‖f(T)‖` for random realizations `f` and admissible tuples `T`.
pub fn sweep_von_neumann(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(SweepKind::VonNeumann, cfg)
}

/// `ŝ − ‖p(T)‖` with `ŝ` a sampled sup of `‖p‖` over the product of balls.
pub fn sweep_polyball_dilation(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(SweepKind::Polyball, cfg)
}

/// Symmetry, triangle inequality and (for 2-bounding domains) positivity.
pub fn sweep_metric_axioms(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(SweepKind::Metric, cfg)
}

/// `sin θ_T − d_Δ(z1, z2)` on admissible tuples.
pub fn sweep_angle_criterion(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(SweepKind::Angle, cfg)
}

pub fn sweep_harris(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(SweepKind::Harris, cfg)
}

/// `−|d_Δ(z, w) − d_D(f(z), f(w))|` for the extremal function of `(z, w)`.
pub fn sweep_extremal(cfg: &SweepConfig) -> Result<SweepReport> {
    run_sweep(SweepKind::Extremal, cfg)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

fn tuple_json(t: &DiagTuple) -> Value {
    json!({
        "z1": to_value(t.z1()),
        "z2": to_value(t.z2()),
        "v1": to_value(&t.v1()),
        "v2": to_value(&t.v2()),
    })
}

fn schwarz_pick_sample(
    cfg: &SweepConfig,
    m: &DeltaMap,
    tol: f64,
    rng: &mut SweepRng,
) -> Result<Vec<Check>> {
    let z = m.sample_interior(rng)?;
    let w = m.sample_interior(rng)?;
    let (s, r) = m.shape();
    let phi = random_realization(s, r, cfg.realization_dim, rng)?;
    let za = m.sample_interior(rng)?;
    let wa = m.sample_interior(rng)?;
    let inputs = json!({ "z": to_value(&z), "w": to_value(&w) });

    let realization = DiskFunction::Realization(phi);
    let elsewhere = DiskFunction::Extremal(extremal_function(m, &za, &wa)?);
    let own = DiskFunction::Extremal(extremal_function(m, &z, &w)?);
    let d = d_delta(m, &z, &w)?;
    let residual =
        |f: &DiskFunction| -> Result<f64> { Ok(d - d_disk(f.eval(m, &z)?, f.eval(m, &w)?)?) };

    let own_residual = residual(&own)?;
    Ok(vec![
        Check::lower("realization", residual(&realization)?, tol, inputs.clone()),
        Check::lower(
            "extremal_elsewhere",
            residual(&elsewhere)?,
            tol,
            json!({ "z": to_value(&z), "w": to_value(&w), "center_z": to_value(&za), "center_w": to_value(&wa) }),
        ),
        Check::new(
            "extremal_equality",
            -own_residual.abs(),
            own_residual.abs() > tol,
            inputs,
        ),
    ])
}

fn von_neumann_sample(
    cfg: &SweepConfig,
    m: &DeltaMap,
    tol: f64,
    rng: &mut SweepRng,
) -> Result<Vec<Check>> {
    let t = sample_contractive_tuple(m, rng)?;
    let (s, r) = m.shape();
    let phi = random_realization(s, r, cfg.realization_dim, rng)?;
    let ft = t.apply_scalar(phi.eval(m, t.z1())?, phi.eval(m, t.z2())?);
    Ok(vec![Check::lower(
        "realization",
        1.0 - op_norm(&ft),
        tol,
        tuple_json(&t),
    )])
}

fn metric_sample(m: &DeltaMap, tol: f64, rng: &mut SweepRng) -> Result<Vec<Check>> {
    let x = m.sample_interior(rng)?;
    let y = m.sample_interior(rng)?;
    let z = m.sample_interior(rng)?;
    let inputs = json!({ "x": to_value(&x), "y": to_value(&y), "z": to_value(&z) });
    let dxy = d_delta(m, &x, &y)?;
    let dyx = d_delta(m, &y, &x)?;
    let dxz = d_delta(m, &x, &z)?;
    let dzy = d_delta(m, &z, &y)?;
    let sym = (dxy - dyx).abs();
    let mut checks = vec![
        Check::new("symmetry", -sym, sym > tol, inputs.clone()),
        Check::lower("triangle", dxz + dzy - dxy, tol, inputs.clone()),
    ];
    if m.is_two_bounding() == Some(true) && x.max_separation(&y) >= POSITIVITY_SEPARATION {
        checks.push(Check::new("positivity", dxy, dxy.is_nan() || dxy <= 0.0, inputs));
    }
    Ok(checks)
}

fn angle_sample(m: &DeltaMap, tol: f64, rng: &mut SweepRng) -> Result<Vec<Check>> {
    let t = sample_contractive_tuple(m, rng)?;
    let d = d_delta(m, t.z1(), t.z2())?;
    Ok(vec![Check::lower(
        "angle",
        t.sin_theta() - d,
        tol,
        tuple_json(&t),
    )])
}

fn harris_sample(m: &DeltaMap, tol: f64, rng: &mut SweepRng) -> Result<Vec<Check>> {
    let t = sample_contractive_tuple(m, rng)?;
    let w = m.sample_interior(rng)?;
    let cert = harris_certificate(m, &t, &w)?;
    let mut inputs = tuple_json(&t);
    inputs["w"] = to_value(&w);
    Ok(vec![
        Check::new(
            "identity",
            -cert.residual,
            cert.residual > tol,
            inputs.clone(),
        ),
        Check::lower("min_eig", cert.min_eig, tol, inputs.clone()),
        Check::lower("g_norm", 1.0 - cert.g_norm, tol, inputs),
    ])
}

fn extremal_sample(m: &DeltaMap, tol: f64, rng: &mut SweepRng) -> Result<Vec<Check>> {
    let z = m.sample_interior(rng)?;
    let w = m.sample_interior(rng)?;
    let f = extremal_function(m, &z, &w)?;
    let gap = (d_delta(m, &z, &w)? - d_disk(f.eval(&z)?, f.eval(&w)?)?).abs();
    Ok(vec![Check::new(
        "sharpness",
        -gap,
        gap > tol,
        json!({ "z": to_value(&z), "w": to_value(&w) }),
    )])
}

// ---------------------------------------------------------------------------
// Polyball

/// A matrix of polynomials, `p(z) = Σ_α A_α z^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPoly {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub entries: Vec<MultiPoly>,
}

impl MatrixPoly {
    pub fn scalar(p: MultiPoly) -> Self {
        Self {
            rows: 1,
            cols: 1,
            entries: vec![p],
        }
    }

    pub fn eval(&self, z: &Point) -> Result<CMatrix> {
        let vals = self
            .entries
            .iter()
            .map(|p| p.eval(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            vals[i * self.cols + j]
        }))
    }

    /// `p(T) = Σ_j p(z_j) ⊗ E_j`.
    pub fn of_tuple(&self, t: &DiagTuple) -> Result<CMatrix> {
        Ok(t.apply_matrix(&self.eval(t.z1())?, &self.eval(t.z2())?))
    }

    fn to_json(&self) -> Value {
        let entry = |p: &MultiPoly| -> Value {
            p.terms()
                .map(|(exp, c)| json!({ "exp": exp, "re": c.re, "im": c.im }))
                .collect()
        };
        json!({
            "shape": [self.rows, self.cols],
            "entries": self.entries.iter().map(entry).collect::<Vec<_>>(),
        })
    }
}

fn exponents_up_to(d: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for e in 0..=(degree - used) {
                let mut v = prefix.clone();
                v.push(e);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Random polynomial in `d` variables of total degree at most `degree`, each
/// monomial kept with probability 1/2 and given a complex Gaussian coefficient.
pub fn random_poly<R: Rng + ?Sized>(d: usize, degree: u32, rng: &mut R) -> MultiPoly {
    let monomials = exponents_up_to(d, degree);
    let mut p = MultiPoly::zero(d);
    while p.is_zero() {
        for exp in &monomials {
            if rng.random_bool(0.5) {
                p.add_term(exp.clone(), complex_normal(rng));
            }
        }
    }
    p
}

pub fn random_matrix_poly<R: Rng + ?Sized>(
    size: usize,
    d: usize,
    degree: u32,
    rng: &mut R,
) -> MatrixPoly {
    MatrixPoly {
        rows: size,
        cols: size,
        entries: (0..size * size)
            .map(|_| random_poly(d, degree, rng))
            .collect(),
    }
}

fn sphere_point<R: Rng + ?Sized>(dims: &[usize], interior: bool, rng: &mut R) -> Point {
    let mut coords = Vec::with_capacity(dims.iter().sum());
    for &n in dims {
        let v: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
        let norm = vec_norm(&v).max(f64::MIN_POSITIVE);
        let radius = if interior {
            rng.random::<f64>().powf(1.0 / (2.0 * n as f64))
        } else {
            1.0
        };
        coords.extend(v.iter().map(|x| x * (radius / norm)));
    }
    Point(coords)
}

/// Projects each ball block of `z` onto its unit sphere.
fn project_to_spheres(dims: &[usize], z: &mut [C64]) {
    let mut offset = 0;
    for &n in dims {
        let block = &mut z[offset..offset + n];
        let norm = vec_norm(block);
        if norm > 0.0 {
            for x in block.iter_mut() {
                *x /= norm;
            }
        } else {
            block[0] = ONE;
        }
        offset += n;
    }
}

/// Lower estimate of `sup ‖p‖` over the closed product of unit balls.
///
/// Random points on the product of spheres (where the sup is attained) and in
/// the interior, followed by a shrinking-step hill climb on the spheres from
/// the best `climbs` points.
pub fn estimate_polyball_sup<R: Rng + ?Sized>(
    p: &MatrixPoly,
    dims: &[usize],
    points: usize,
    climbs: usize,
    extra: &[Point],
    rng: &mut R,
) -> Result<f64> {
    let value = |z: &Point| -> Result<f64> { Ok(op_norm(&p.eval(z)?)) };
    let mut scored: Vec<(f64, Point)> = Vec::with_capacity(points + extra.len());
    for z in extra {
        scored.push((value(z)?, z.clone()));
    }
    for k in 0..points {
        let z = sphere_point(dims, k % 4 == 3, rng);
        scored.push((value(&z)?, z));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0].0;
    for (start_value, start) in scored.into_iter().take(climbs) {
        let mut current = start;
        let mut current_value = start_value;
        project_to_spheres(dims, &mut current.0);
        current_value = current_value.max(value(&current)?);
        let mut step = 0.3;
        let mut misses = 0;
        while step > 1e-7 {
            let mut trial = current.clone();
            for x in trial.0.iter_mut() {
                *x += complex_normal(rng) * step;
            }
            project_to_spheres(dims, &mut trial.0);
            let v = value(&trial)?;
            if v > current_value {
                current = trial;
                current_value = v;
                misses = 0;
            } else {
                misses += 1;
                if misses >= 12 {
                    step *= 0.5;
                    misses = 0;
                }
            }
        }
        best = best.max(current_value);
    }
    Ok(best)
}

fn polyball_sample(cfg: &SweepConfig, m: &DeltaMap, rng: &mut SweepRng) -> Result<Vec<Check>> {
    let opts = &cfg.polyball;
    let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let t = sample_contractive_tuple(m, rng)?;
    let d = m.dim();
    let extra = [t.z1().clone(), t.z2().clone()];
    let mut checks = Vec::with_capacity(opts.polys);
    for j in 0..opts.polys {
        let p = if j % 2 == 0 {
            MatrixPoly::scalar(random_poly(d, opts.degree, rng))
        } else {
            random_matrix_poly(2, d, opts.degree, rng)
        };
        let norm = op_norm(&p.of_tuple(&t)?);
        // Cheap sampled estimate first; climbing only when it is not enough.
        let mut est = estimate_polyball_sup(&p, &opts.dims, opts.sup_points, 0, &extra, rng)?;
        let bound = |est: f64| est * (1.0 + SUP_RELATIVE_SLACK) + tol;
        let mut rounds = 0;
        while norm > bound(est) && rounds < opts.refine_rounds {
            rounds += 1;
            let more = estimate_polyball_sup(&p, &opts.dims, opts.sup_points * 4, 4, &extra, rng)?;
            est = est.max(more);
        }
        let mut inputs = tuple_json(&t);
        inputs["poly"] = p.to_json();
        inputs["sup_estimate"] = json!(est);
        inputs["norm"] = json!(norm);
        checks.push(Check::new(
            if p.rows == 1 {
                "scalar_poly"
            } else {
                "matrix_poly"
            },
            est - norm,
            norm > bound(est),
            inputs,
        ));
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// Annulus

/// Records the strict chain `d_a ≤ sin θ_T < d_A` for a tuple with
/// eigenvalues `±√r` whose annulus calculus `a(T)` is contractive.
///
/// Any `f` holomorphic on the annulus with `|f| ≤ 1` satisfies
/// `d_D(f(√r), f(−√r)) ≤ sin θ_T` once the annulus is a spectral domain for
/// `T`; since the Möbius distance of the two points is `d_A > sin θ_T`, the
/// annulus is not a spectral domain for this `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonSpectralCertificate {
    pub r: f64,
    pub n_terms: usize,
    pub z1: Point,
    pub z2: Point,
    pub v1: [C64; 2],
    pub v2: [C64; 2],
    pub sin_theta: f64,
    pub d_a: f64,
    #[serde(rename = "d_A")]
    pub d_big_a: f64,
    /// Certified bound on `|d_A − truncated product|`.
    pub tail_bound: f64,
    /// `‖a(T)‖` with `a(z) = diag(z, r/z)`.
    pub norm_a_t: f64,
    /// `d_A − tail_bound − sin θ_T`, positive for a valid certificate.
    pub strict_gap: f64,
    pub valid: bool,
}

impl NonSpectralCertificate {
    pub fn tuple(&self) -> Result<DiagTuple> {
        DiagTuple::new(self.z1.clone(), self.z2.clone(), self.v1, self.v2)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificates serialize");
        s.push('\n');
        s
    }
}

/// Tuple with eigenvalues `±√r`, `v1 = e1` and `sin θ` at the midpoint of
/// `(d_a, d_A)`.
pub fn non_spectral_witness(r: f64, n_terms: usize) -> Result<NonSpectralCertificate> {
    let limit = annulus_strict_bound() - 1e-6;
    if !(r > 0.0 && r < limit) {
        return Err(Error::OutOfRange {
            value: r,
            range: "0 < r < cbrt(2) - 1 - 1e-6",
        });
    }
    let d_a = annulus_matrix_distance_symmetric(r)?;
    let product = annulus_mobius_distance_symmetric(r, n_terms)?;
    let tail = product.tail_bound();
    let d_big_a = product.value;
    let sin = 0.5 * (d_a + d_big_a);
    let cos = (1.0 - sin * sin).sqrt();
    let z1 = Point::from_real(&[r.sqrt()]);
    let z2 = Point::from_real(&[-r.sqrt()]);
    let t = DiagTuple::new(
        z1.clone(),
        z2.clone(),
        [ONE, ZERO],
        [C64::new(cos, 0.0), C64::new(sin, 0.0)],
    )?;
    let norm_a_t = op_norm(&t.apply_delta(&DeltaMap::annulus(r)?)?);
    let sin_theta = t.sin_theta();
    let strict_gap = d_big_a - tail - sin_theta;
    let valid = norm_a_t <= 1.0 + 1e-10 && d_a <= sin_theta && strict_gap > 0.0;
    if !valid {
        return Err(Error::BisectionFailed(format!(
            "no certificate at r = {r}: norm {norm_a_t}, d_a {d_a}, sin {sin_theta}, d_A {d_big_a} ± {tail}"
        )));
    }
    Ok(NonSpectralCertificate {
        r,
        n_terms,
        z1,
        z2,
        v1: t.v1(),
        v2: t.v2(),
        sin_theta,
        d_a,
        d_big_a,
        tail_bound: tail,
        norm_a_t,
        strict_gap,
        valid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusScanRow {
    pub r: f64,
    pub d_a: f64,
    #[serde(rename = "d_A")]
    pub d_big_a: f64,
    pub gap: f64,
    pub tail_bound: f64,
    /// Whether `gap > tail_bound` is asserted (only for `r < ∛2 − 1`).
    pub asserted: bool,
    pub strict: bool,
}

impl AnnulusScanRow {
    /// Asserted rows must be strict.
    pub fn ok(&self) -> bool {
        !self.asserted || self.strict
    }
}

pub fn annulus_scan(r_grid: &[f64], n_terms: usize) -> Result<Vec<AnnulusScanRow>> {
    let bound = annulus_strict_bound();
    r_grid
        .iter()
        .map(|&r| {
            let g = annulus_gap(r, n_terms)?;
            Ok(AnnulusScanRow {
                r,
                d_a: g.d_matrix,
                d_big_a: g.d_mobius,
                gap: g.gap,
                tail_bound: g.tail_bound,
                asserted: r < bound,
                strict: g.gap > g.tail_bound,
            })
        })
        .collect()
}

pub const ANNULUS_CSV_HEADER: &str = "r,d_a,d_A,gap,tail_bound,asserted,strict";

pub fn annulus_csv(rows: &[AnnulusScanRow]) -> String {
    let mut out = String::from(ANNULUS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:e},{},{}",
            row.r, row.d_a, row.d_big_a, row.gap, row.tail_bound, row.asserted, row.strict
        );
    }
    out
}

// ---------------------------------------------------------------------------
// 2-bounding diagnostic

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub schema_version: u32,
    pub domain: Value,
    pub seed: u64,
    pub samples: usize,
    /// Largest `max_r ‖T^r‖` seen; a lower bound on the sup over admissible tuples.
    pub estimate: f64,
    pub worst_index: usize,
    pub errors: usize,
}

/// Max over sampled admissible generic tuples of `max_r ‖T^r‖`.
pub fn bounded_estimate(m: &DeltaMap, samples: usize, seed: u64) -> Result<BoundEstimate> {
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    // Surface unsupported samplers as configuration errors up front.
    m.sample_interior(&mut rng_from_seed(seed))?;
    let values: Vec<Option<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(sample_seed(seed, i));
            let t = sample_contractive_tuple(m, &mut rng).ok()?;
            Some(t.coordinates().iter().map(op_norm).fold(0.0, f64::max))
        })
        .collect();
    let mut estimate = 0.0;
    let mut worst_index = 0;
    let mut errors = 0;
    for (i, v) in values.into_iter().enumerate() {
        match v {
            Some(v) if v > estimate => {
                estimate = v;
                worst_index = i;
            }
            Some(_) => {}
            None => errors += 1,
        }
    }
    Ok(BoundEstimate {
        schema_version: SCHEMA_VERSION,
        domain: serde_json::from_str(&domain_to_json(m)).expect("domain JSON is valid"),
        seed,
        samples,
        estimate,
        worst_index,
        errors,
    })
}
