//! `pseudodist` command-line interface.
//!
//! Exit codes: 0 pass, 1 violation found, 2 usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pseudodist::distances::{
    caratheodory_from_mobius, d_delta_detailed, d_disk, DEFAULT_PRODUCT_TERMS,
};
use pseudodist::domains::{parse_domain_spec, DeltaMap, Point};
use pseudodist::harness::{
    annulus_csv, annulus_scan, bounded_estimate, non_spectral_witness, run_sweep, PolyballOptions,
    SweepConfig, SweepKind,
};
use pseudodist::schuragler::extremal_function;
use pseudodist::C64;

#[derive(Parser)]
#[command(
    name = "pseudodist",
    version,
    about = "Möbius pseudo-distances on matrix-defined domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// d_Δ(z, w), its Carathéodory value and the membership margins.
    Dist {
        #[arg(long)]
        domain: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
    },
    /// Extremal function for (z, w): equality residual and singular vectors.
    Extremal {
        #[arg(long)]
        domain: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        /// File with one point per line at which to evaluate the function.
        #[arg(long)]
        eval: Option<PathBuf>,
        /// Write the evaluations as CSV (index,re,im,abs).
        #[arg(long, requires = "eval")]
        csv: Option<PathBuf>,
    },
    /// Annulus scan table (CSV) or non-spectral witness certificates (JSON).
    Annulus {
        /// A value, a comma list, or start:stop:step.
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = DEFAULT_PRODUCT_TERMS)]
        terms: usize,
        #[arg(long)]
        witness: bool,
    },
    /// Seeded randomized sweep; writes a JSON report.
    Fuzz {
        kind: FuzzKind,
        /// Required except for polyball, whose domain is given by --dims.
        #[arg(long)]
        domain: Option<String>,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Auxiliary dimension of random realizations.
        #[arg(long, default_value_t = 2)]
        aux: usize,
        /// Ball dimensions for polyball, e.g. 2,2.
        #[arg(long, default_value = "2,2")]
        dims: String,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, default_value_t = 20)]
        polys: usize,
        #[arg(long, default_value_t = 256)]
        sup_points: usize,
    },
    /// Lower estimate of sup max_r ‖T^r‖ over admissible tuples.
    Bound {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FuzzKind {
    SchwarzPick,
    VonNeumann,
    Polyball,
    Metric,
    Angle,
    Harris,
    Extremal,
}

impl From<FuzzKind> for SweepKind {
    fn from(k: FuzzKind) -> Self {
        match k {
            FuzzKind::SchwarzPick => SweepKind::SchwarzPick,
            FuzzKind::VonNeumann => SweepKind::VonNeumann,
            FuzzKind::Polyball => SweepKind::Polyball,
            FuzzKind::Metric => SweepKind::Metric,
            FuzzKind::Angle => SweepKind::Angle,
            FuzzKind::Harris => SweepKind::Harris,
            FuzzKind::Extremal => SweepKind::Extremal,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
fn load_domain(arg: &str) -> Result<DeltaMap> {
    let text = if arg.trim_start().starts_with('{') {
        arg.as_bytes().to_vec()
    } else {
        std::fs::read(arg).with_context(|| format!("reading domain file {arg}"))?
    };
    Ok(parse_domain_spec(&text)?)
}

fn parse_point(s: &str) -> Result<Point> {
    let coords = s
        .split(',')
        .map(|t| {
            let t = t.trim();
            C64::from_str(t).map_err(|_| anyhow::anyhow!("invalid complex number '{t}'"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Point(coords))
}

fn parse_points_file(path: &Path) -> Result<Vec<Point>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_point)
        .collect()
}

fn parse_r_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .with_context(|| format!("invalid number '{t}'"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop.is_nan() || stop < start {
                bail!("grid start:stop:step needs step > 0 and stop >= start");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| start + k as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => bail!("expected a value, a comma list or start:stop:step"),
    }
}

fn c_json(z: C64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn print_json(v: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("JSON values serialize")
    );
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Dist { domain, z, w } => {
            let m = load_domain(&domain)?;
            let (z, w) = (parse_point(&z)?, parse_point(&w)?);
            let mz = m.contains(&z)?;
            let mw = m.contains(&w)?;
            let d = d_delta_detailed(&m, &z, &w)?;
            print_json(&json!({
                "d_delta": d.value,
                "caratheodory": caratheodory_from_mobius(d.value)?,
                "margin_z": mz.margin,
                "margin_w": mw.margin,
                "conditioning_warning": d.conditioning_warning,
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Extremal {
            domain,
            z,
            w,
            eval,
            csv,
        } => {
            let m = load_domain(&domain)?;
            let (z, w) = (parse_point(&z)?, parse_point(&w)?);
            let f = extremal_function(&m, &z, &w)?;
            let d = d_delta_detailed(&m, &z, &w)?.value;
            let (fz, fw) = (f.eval(&z)?, f.eval(&w)?);
            let residual = d - d_disk(fz, fw)?;
            let mut out = json!({
                "d_delta": d,
                "f_z": c_json(fz),
                "f_w": c_json(fw),
                "equality_residual": residual,
                "xi": f.xi().iter().copied().map(c_json).collect::<Vec<_>>(),
                "eta": f.eta().iter().copied().map(c_json).collect::<Vec<_>>(),
            });
            if let Some(path) = eval {
                let points = parse_points_file(&path)?;
                let values = points
                    .iter()
                    .map(|p| f.eval(p))
                    .collect::<pseudodist::Result<Vec<_>>>()?;
                out["evaluations"] = values.iter().map(|&v| c_json(v)).collect();
                if let Some(csv_path) = csv {
                    let mut text = String::from("index,re,im,abs\n");
                    for (i, v) in values.iter().enumerate() {
                        text.push_str(&format!("{i},{},{},{}\n", v.re, v.im, v.norm()));
                    }
                    std::fs::write(&csv_path, text)
                        .with_context(|| format!("writing {}", csv_path.display()))?;
                }
            }
            print_json(&out);
            Ok(if residual.abs() <= 1e-9 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Annulus { r, terms, witness } => {
            let grid = parse_r_grid(&r)?;
            if witness {
                let certs = grid
                    .iter()
                    .map(|&r| non_spectral_witness(r, terms))
                    .collect::<pseudodist::Result<Vec<_>>>()?;
                let value = if certs.len() == 1 {
                    serde_json::to_value(&certs[0])?
                } else {
                    serde_json::to_value(&certs)?
                };
                print_json(&value);
                return Ok(ExitCode::SUCCESS);
            }
            let rows = annulus_scan(&grid, terms)?;
            print!("{}", annulus_csv(&rows));
            Ok(if rows.iter().all(|row| row.ok()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Fuzz {
            kind,
            domain,
            samples,
            seed,
            out,
            tolerance,
            aux,
            dims,
            degree,
            polys,
            sup_points,
        } => {
            let kind = SweepKind::from(kind);
            let mut cfg = if kind == SweepKind::Polyball {
                let dims = dims
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .with_context(|| format!("invalid dimension '{t}'"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let opts = PolyballOptions {
                    dims,
                    degree,
                    polys,
                    sup_points,
                    ..PolyballOptions::default()
                };
                SweepConfig::polyball(opts, samples, seed)?
            } else {
                let domain = domain.context("--domain is required for this sweep")?;
                SweepConfig::new(load_domain(&domain)?, samples, seed)
            };
            cfg.tolerance = tolerance;
            cfg.realization_dim = aux;
            let started = Instant::now();
            let report = run_sweep(kind, &cfg)?;
            let text = report.to_json();
            match out {
                Some(path) => std::fs::write(&path, &text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            eprintln!(
                "{}: {} samples, {} checks, {} violations, {} errors, worst residual {:e}, {:.2} s",
                report.sweep,
                report.samples,
                report.checks,
                report.violation_count,
                report.errors.len(),
                report.worst_residual,
                started.elapsed().as_secs_f64()
            );
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Bound {
            domain,
            samples,
            seed,
        } => {
            let m = load_domain(&domain)?;
            let est = bounded_estimate(&m, samples, seed)?;
            print_json(&serde_json::to_value(&est)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
