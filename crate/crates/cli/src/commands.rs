use std::fmt::Write as _;
use std::path::Path;

use futaki_core::deligne_norms::{
    calibrate, default_suite, log_norm_a, log_norm_m, verify_theorem6, CalibrationCase, CalibrationRecord,
    WeightVariant,
};
use futaki_core::functionals::{
    aubin_yau_shifted, futaki_functional_shifted, mabuchi_shifted, orbit_sweep, FunctionalReport,
};
use futaki_core::futaki_exact::futaki_of_field;
use futaki_core::poly_core::{CompleteIntersection, Convention, GroupElement};
use futaki_core::variety_numerics::MCEstimate;
use num_traits::ToPrimitive;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::input::{load_sigma, load_variety, parse_field};
use crate::table::{Cell, Table};

/// Convention and weight variant in force for a run, and where they came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub convention: Convention,
    pub variant: WeightVariant,
    pub source: CalibrationSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationSource {
    Config,
    File,
    Default,
}

/// Config keys first, then the calibration file; `None` if neither fixes both.
pub fn resolve_calibration(cfg: &RunConfig, file: &Path) -> CliResult<Option<Calibration>> {
    if let (Some(convention), Some(variant)) = (cfg.convention, cfg.variant) {
        return Ok(Some(Calibration {
            convention,
            variant,
            source: CalibrationSource::Config,
        }));
    }
    if !file.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(file)?;
    let rec = CalibrationRecord::parse(&text)?;
    Ok(Some(Calibration {
        convention: cfg.convention.unwrap_or(rec.convention),
        variant: cfg.variant.unwrap_or(rec.variant),
        source: CalibrationSource::File,
    }))
}

/// As [`resolve_calibration`], but a missing calibration is an input error.
pub fn require_calibration(cfg: &RunConfig, file: &Path) -> CliResult<Calibration> {
    resolve_calibration(cfg, file)?.ok_or_else(|| {
        CliError::Input(format!(
            "no calibration at {}; run `futaki calibrate` first or set convention and variant in the config",
            file.display()
        ))
    })
}

/// As [`resolve_calibration`], falling back to `(ComposeInverse, Derivation)`.
pub fn calibration_or_default(cfg: &RunConfig, file: &Path) -> CliResult<Calibration> {
    Ok(resolve_calibration(cfg, file)?.unwrap_or(Calibration {
        convention: cfg.convention.unwrap_or(Convention::ComposeInverse),
        variant: cfg.variant.unwrap_or(WeightVariant::Derivation),
        source: CalibrationSource::Default,
    }))
}

pub fn cmd_futaki(variety: &str, weights: &str) -> CliResult<String> {
    let ci = load_variety(variety)?;
    let x = parse_field(weights, ci.num_vars())?;
    let rep = futaki_of_field(&ci, &x)?;
    let dec = |r: &num_rational::BigRational| r.to_f64().unwrap_or(f64::NAN);
    let mut out = String::new();
    let _ = writeln!(out, "variety: {} (N={}, degrees {:?}, m={})", ci.name(), ci.ambient_dim(), ci.degrees(), ci.m());
    for (i, k) in rep.kappa.iter().enumerate() {
        let _ = writeln!(out, "kappa_{} = {k} ({:.16e})", i + 1, dec(k));
    }
    for (i, a) in rep.weights.a.iter().enumerate() {
        let _ = writeln!(out, "a_{} = {a} ({:.16e})", i + 1, dec(a));
    }
    let _ = writeln!(out, "F(X) = {} ({:.16e})", rep.value, dec(&rep.value));
    Ok(out)
}

const ENERGY_HEADER: [&str; 10] =
    ["record", "name", "variety", "sigma", "shift", "value", "stderr", "seed", "samples", "rejected"];

/// `seed` is the run seed; the estimate's own seed is a derived substream.
fn push_estimate(t: &mut Table, seed: u64, record: &str, name: &str, ci: &str, sigma: &str, shift: f64, e: &MCEstimate) {
    t.push(&[
        Cell::Text(record),
        Cell::Text(name),
        Cell::Text(ci),
        Cell::Text(sigma),
        Cell::Num(shift),
        Cell::Num(e.value),
        Cell::Num(e.stderr),
        Cell::Int(seed),
        Cell::Int(e.samples as u64),
        Cell::Int(e.rejected),
    ]);
}

fn push_report(t: &mut Table, seed: u64, rep: &FunctionalReport) {
    let name = rep.functional.name();
    push_estimate(t, seed, "functional", name, &rep.variety, &rep.sigma, rep.shift, &rep.value);
    for term in &rep.terms {
        let label = format!("{name}:{}", term.name);
        push_estimate(t, seed, "term", &label, &rep.variety, &rep.sigma, rep.shift, &term.estimate);
    }
    let label = format!("{name}:shift_response");
    push_estimate(t, seed, "shift_response", &label, &rep.variety, &rep.sigma, rep.shift, &rep.shift_response);
}

pub fn cmd_energy(cfg: &RunConfig, variety: &str, sigma: &str, shift: f64) -> CliResult<String> {
    let ci = load_variety(variety)?;
    let sigma = load_sigma(sigma, ci.num_vars())?;
    let q = cfg.quadrature()?;
    let mut t = Table::new(&ENERGY_HEADER);
    push_report(&mut t, q.seed, &aubin_yau_shifted(&ci, &sigma, shift, &q)?);
    push_report(&mut t, q.seed, &futaki_functional_shifted(&ci, &sigma, shift, &q)?);
    match mabuchi_shifted(&ci, &sigma, shift, &q) {
        Ok(rep) => push_report(&mut t, q.seed, &rep),
        Err(futaki_core::error::Error::NonPositiveDensity) => {
            return Err(CliError::Numerical("K-energy: non-positive volume density".into()))
        }
        Err(e) => return Err(e.into()),
    }
    Ok(t.to_csv())
}

const NORMS_HEADER: [&str; 9] = ["norm", "system", "variety", "sigma", "variant", "value", "stderr", "seed", "samples"];

pub fn cmd_norms(cfg: &RunConfig, calibration: &Calibration, variety: &str, sigma: Option<&str>) -> CliResult<String> {
    let ci = load_variety(variety)?;
    let q = cfg.quadrature()?;
    let mut systems: Vec<(String, String, CompleteIntersection)> = vec![("F".into(), "identity".into(), ci.clone())];
    if let Some(spec) = sigma {
        let s = load_sigma(spec, ci.num_vars())?;
        systems.push(("F^sigma".into(), s.to_string(), ci.transform(&s, calibration.convention)?));
    }
    let variant = calibration.variant;
    let mut t = Table::new(&NORMS_HEADER);
    for (label, sig, sys) in &systems {
        let a = log_norm_a(sys, &q, variant)?;
        let m = log_norm_m(sys, &q, variant);
        let mut row = |norm: &str, e: &MCEstimate| {
            t.push(&[
                Cell::Text(norm),
                Cell::Text(label),
                Cell::Text(ci.name()),
                Cell::Text(sig),
                Cell::Text(variant.name()),
                Cell::Num(e.value),
                Cell::Num(e.stderr),
                Cell::Int(q.seed),
                Cell::Int(q.samples as u64),
            ]);
        };
        row("log_norm_A", &a.log_norm);
        match m {
            Ok(m) => row("log_norm_M", &m.log_norm),
            Err(futaki_core::error::Error::LiteralDomainDegenerate(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(t.to_csv())
}

const ORBIT_HEADER: [&str; 11] = [
    "t",
    "ay",
    "ay_stderr",
    "nu",
    "nu_stderr",
    "norm_side",
    "norm_side_stderr",
    "variety",
    "weights",
    "seed",
    "samples",
];

/// `(t, AY, ν, Theorem 6 right side)` along `exp(tX)`.
pub fn cmd_orbit(
    cfg: &RunConfig,
    calibration: &Calibration,
    variety: &str,
    weights: &str,
    grid: &[f64],
) -> CliResult<String> {
    let ci = load_variety(variety)?;
    let x = parse_field(weights, ci.num_vars())?;
    let q = cfg.quadrature()?;
    let points = orbit_sweep(&ci, &x, grid, &q)?;
    let mut t = Table::new(&ORBIT_HEADER);
    for p in &points {
        let sigma: GroupElement = x.exp(p.t);
        let norm = verify_theorem6(&ci, &sigma, &q, calibration.convention, calibration.variant)?.rhs;
        t.push(&[
            Cell::Num(p.t),
            Cell::Num(p.aubin_yau.value),
            Cell::Num(p.aubin_yau.stderr),
            Cell::Num(p.mabuchi.value),
            Cell::Num(p.mabuchi.stderr),
            Cell::Num(norm.value),
            Cell::Num(norm.stderr),
            Cell::Text(ci.name()),
            Cell::Text(weights),
            Cell::Int(q.seed),
            Cell::Int(q.samples as u64),
        ]);
    }
    Ok(t.to_csv())
}

/// Suite file: one case per line, `<variety> <sigma spec>`.
pub fn parse_suite(text: &str) -> CliResult<Vec<CalibrationCase>> {
    let mut cases = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(v), Some(s), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(CliError::Input(format!("suite line {}: expected `<variety> <sigma>`", i + 1)));
        };
        let ci = load_variety(v)?;
        let sigma = load_sigma(s, ci.num_vars())?;
        cases.push(CalibrationCase { ci, sigma });
    }
    Ok(cases)
}

pub fn cmd_calibrate(cfg: &RunConfig, suite: Option<&Path>) -> CliResult<String> {
    let cases = match suite {
        Some(p) => parse_suite(
            &std::fs::read_to_string(p)
                .map_err(|e| CliError::Input(format!("cannot read suite {}: {e}", p.display())))?,
        )?,
        None => default_suite(),
    };
    let rec = calibrate(&cases, &cfg.quadrature()?)?;
    Ok(rec.to_text())
}
