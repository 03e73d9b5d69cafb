//! Orbit identities between the functionals and the norm ratios, and the
//! calibration that fixes the transform convention and weight variant.

use std::fmt::Write as _;

use super::{adjunction_samples, level_samples, WeightVariant};
use crate::error::{Error, Result};
use crate::functionals::{aubin_yau, mabuchi};
use crate::poly_core::{catalog_entry, CompleteIntersection, Convention, GroupElement};
use crate::variety_numerics::{MCEstimate, Quadrature};

pub const THEOREM5_REL_TOL: f64 = 0.02;
pub const THEOREM6_REL_TOL: f64 = 0.03;
/// Residuals within this many standard errors pass regardless of scale.
const STDERR_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// `AY_ω(φ_σ) = (1/D) log(‖F^σ‖²_A / ‖F‖²_A)`.
    AubinYau,
    /// `ν_ω(φ_σ) = log(‖F^σ‖²_M / ‖F‖²_M)` on `SL(N+1)`.
    Mabuchi,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::AubinYau => 5,
            Theorem::Mabuchi => 6,
        }
    }

    fn rel_tol(self) -> f64 {
        match self {
            Theorem::AubinYau => THEOREM5_REL_TOL,
            Theorem::Mabuchi => THEOREM6_REL_TOL,
        }
    }
}

/// Residual `lhs − rhs` of one identity, with `lhs` the functional and `rhs`
/// the norm side.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub theorem: Theorem,
    pub variety: String,
    pub sigma: String,
    pub convention: Convention,
    pub variant: WeightVariant,
    pub lhs: MCEstimate,
    pub rhs: MCEstimate,
    pub residual: MCEstimate,
    /// `max(3·stderr, rel·max(|lhs|, |rhs|))`.
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityCheck {
    fn new(
        theorem: Theorem,
        ci: &CompleteIntersection,
        sigma: &GroupElement,
        convention: Convention,
        variant: WeightVariant,
        lhs: MCEstimate,
        rhs: MCEstimate,
    ) -> Self {
        let residual = MCEstimate::combine_independent(&[(1.0, lhs), (-1.0, rhs)]);
        let scale = lhs.value.abs().max(rhs.value.abs());
        let tolerance = (STDERR_MULTIPLIER * residual.stderr).max(theorem.rel_tol() * scale);
        Self {
            theorem,
            variety: ci.name().to_string(),
            sigma: sigma.to_string(),
            convention,
            variant,
            lhs,
            rhs,
            residual,
            tolerance,
            pass: residual.value.abs() <= tolerance,
        }
    }
}

/// Differences `F^σ` minus `F` of the raw norm integrals.
struct NormDiff {
    /// `Δ ∫_{X_{k−1}} log(|F_k|²/|z|^{2d_k}) ω^{N−k+1}`, `k = 1..=s`.
    levels: Vec<MCEstimate>,
    /// `Δ Σ_i ∫_M log ad_i ω^n`.
    adjunction: Option<MCEstimate>,
}

fn norm_diff(
    ci: &CompleteIntersection,
    sigma: &GroupElement,
    convention: Convention,
    q: &Quadrature,
    with_adjunction: bool,
) -> Result<NormDiff> {
    let moved = ci.transform(sigma, convention)?;
    let s = ci.codim();
    let levels = (1..=s)
        .map(|k| Ok(level_samples(&[ci, &moved], k, q)?.combination(&[-1.0, 0.0, 1.0, 0.0])))
        .collect::<Result<Vec<_>>>()?;
    let adjunction = if with_adjunction {
        let set = adjunction_samples(&[ci, &moved], q)?;
        let mut c = vec![0.0; 2 * (s + 1)];
        for i in 0..s {
            c[i] = -1.0;
            c[s + 1 + i] = 1.0;
        }
        Some(set.combination(&c))
    } else {
        None
    };
    Ok(NormDiff { levels, adjunction })
}

fn rhs_theorem5(ci: &CompleteIntersection, diff: &NormDiff, variant: WeightVariant) -> MCEstimate {
    let d = ci.degree() as f64;
    let parts: Vec<(f64, MCEstimate)> = diff
        .levels
        .iter()
        .enumerate()
        .map(|(i, e)| (variant.weight(ci, i + 1) / d, *e))
        .collect();
    MCEstimate::combine_independent(&parts)
}

fn rhs_theorem6(ci: &CompleteIntersection, diff: &NormDiff, variant: WeightVariant) -> Result<MCEstimate> {
    if variant == WeightVariant::Literal {
        return Err(Error::LiteralDomainDegenerate(1));
    }
    let d = ci.degree() as f64;
    let c = -(ci.m() as f64) / ((ci.dim() + 1) as f64 * d);
    let mut parts: Vec<(f64, MCEstimate)> = diff
        .levels
        .iter()
        .enumerate()
        .map(|(i, e)| (c * variant.weight(ci, i + 1), *e))
        .collect();
    let adj = diff.adjunction.expect("adjunction integrals requested");
    parts.push((1.0 / d, adj));
    Ok(MCEstimate::combine_independent(&parts))
}

fn exact_zero_check(
    theorem: Theorem,
    ci: &CompleteIntersection,
    sigma: &GroupElement,
    convention: Convention,
    variant: WeightVariant,
) -> IdentityCheck {
    IdentityCheck::new(
        theorem,
        ci,
        sigma,
        convention,
        variant,
        MCEstimate::exact(0.0),
        MCEstimate::exact(0.0),
    )
}

/// Residual of `AY_ω(φ_σ) = (1/D) log(‖F^σ‖²_A/‖F‖²_A)`.
pub fn verify_theorem5(
    ci: &CompleteIntersection,
    sigma: &GroupElement,
    q: &Quadrature,
    convention: Convention,
    variant: WeightVariant,
) -> Result<IdentityCheck> {
    q.validate()?;
    if sigma.is_identity() {
        return Ok(exact_zero_check(Theorem::AubinYau, ci, sigma, convention, variant));
    }
    let lhs = aubin_yau(ci, sigma, q)?.value;
    let diff = norm_diff(ci, sigma, convention, q, false)?;
    let rhs = rhs_theorem5(ci, &diff, variant);
    Ok(IdentityCheck::new(Theorem::AubinYau, ci, sigma, convention, variant, lhs, rhs))
}

/// Residual of `ν_ω(φ_σ) = log(‖F^σ‖²_M/‖F‖²_M)`, defined for `det σ = 1`.
pub fn verify_theorem6(
    ci: &CompleteIntersection,
    sigma: &GroupElement,
    q: &Quadrature,
    convention: Convention,
    variant: WeightVariant,
) -> Result<IdentityCheck> {
    q.validate()?;
    if !sigma.sl_flag() {
        return Err(Error::NotSpecialLinear(format!("{}", sigma.det())));
    }
    if variant == WeightVariant::Literal {
        return Err(Error::LiteralDomainDegenerate(1));
    }
    if sigma.is_identity() {
        return Ok(exact_zero_check(Theorem::Mabuchi, ci, sigma, convention, variant));
    }
    let lhs = mabuchi(ci, sigma, q)?.value;
    let diff = norm_diff(ci, sigma, convention, q, true)?;
    let rhs = rhs_theorem6(ci, &diff, variant)?;
    Ok(IdentityCheck::new(Theorem::Mabuchi, ci, sigma, convention, variant, lhs, rhs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCase {
    pub ci: CompleteIntersection,
    pub sigma: GroupElement,
}

/// Two smooth varieties with special linear, non-unitary σ that move them.
///
/// The conic σ's do not preserve `z1² − z0z2`, and the quadric σ has
/// log-weights whose negatives are not a permutation of themselves, so the
/// two transform conventions produce different norm ratios.
pub fn default_suite() -> Vec<CalibrationCase> {
    let case = |name: &str, logs: &[f64]| CalibrationCase {
        ci: catalog_entry(name).expect("catalog entry"),
        sigma: GroupElement::exp_diagonal(logs).expect("finite exponents"),
    };
    vec![
        case("conic_p2", &[0.3, -0.1, -0.2]),
        case("conic_p2", &[-0.2, 0.25, -0.05]),
        case("fermat_quadric_p3", &[0.2, -0.05, -0.1, -0.05]),
    ]
}

/// One line of the calibration evidence table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceRow {
    pub theorem: u8,
    pub variety: String,
    pub sigma: String,
    pub convention: Convention,
    pub variant: WeightVariant,
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub residual: f64,
    pub stderr: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

impl EvidenceRow {
    fn from_check(c: &IdentityCheck) -> Self {
        Self {
            theorem: c.theorem.number(),
            variety: c.variety.clone(),
            sigma: c.sigma.clone(),
            convention: c.convention,
            variant: c.variant,
            lhs: c.lhs.value,
            lhs_stderr: c.lhs.stderr,
            rhs: c.rhs.value,
            rhs_stderr: c.rhs.stderr,
            residual: c.residual.value,
            stderr: c.residual.stderr,
            tolerance: c.tolerance,
            pass: c.pass,
            note: String::new(),
        }
    }

    fn failed(theorem: Theorem, case: &CalibrationCase, convention: Convention, variant: WeightVariant, e: &Error) -> Self {
        Self {
            theorem: theorem.number(),
            variety: case.ci.name().to_string(),
            sigma: case.sigma.to_string(),
            convention,
            variant,
            lhs: f64::NAN,
            lhs_stderr: f64::NAN,
            rhs: f64::NAN,
            rhs_stderr: f64::NAN,
            residual: f64::NAN,
            stderr: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            note: e.to_string(),
        }
    }
}

/// Evaluates both identities for every case under every
/// `(convention, variant)`; theorem 6 is skipped for `det σ ≠ 1`.
///
/// The functionals do not depend on the pair and the norm differences depend
/// only on the convention, so each is computed once per case.
pub fn calibration_evidence(suite: &[CalibrationCase], q: &Quadrature) -> Result<Vec<EvidenceRow>> {
    q.validate()?;
    let mut rows = Vec::new();
    for case in suite {
        let (ci, sigma) = (&case.ci, &case.sigma);
        let sl = sigma.sl_flag();
        let identity = sigma.is_identity();
        let ay = if identity { MCEstimate::exact(0.0) } else { aubin_yau(ci, sigma, q)?.value };
        let nu = if identity || !sl {
            MCEstimate::exact(0.0)
        } else {
            mabuchi(ci, sigma, q)?.value
        };
        for convention in Convention::ALL {
            let diff = if identity {
                NormDiff {
                    levels: vec![MCEstimate::exact(0.0); ci.codim()],
                    adjunction: Some(MCEstimate::exact(0.0)),
                }
            } else {
                norm_diff(ci, sigma, convention, q, sl)?
            };
            for variant in WeightVariant::ALL {
                let rhs5 = rhs_theorem5(ci, &diff, variant);
                let c5 = IdentityCheck::new(Theorem::AubinYau, ci, sigma, convention, variant, ay, rhs5);
                rows.push(EvidenceRow::from_check(&c5));
                if sl {
                    match rhs_theorem6(ci, &diff, variant) {
                        Ok(rhs6) => {
                            let c6 = IdentityCheck::new(Theorem::Mabuchi, ci, sigma, convention, variant, nu, rhs6);
                            rows.push(EvidenceRow::from_check(&c6));
                        }
                        Err(e) => rows.push(EvidenceRow::failed(Theorem::Mabuchi, case, convention, variant, &e)),
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// The persisted outcome of a calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    pub convention: Convention,
    pub variant: WeightVariant,
    pub seed: u64,
    pub samples: usize,
    pub evidence: Vec<EvidenceRow>,
}

const EVIDENCE_HEADER: &str =
    "theorem|variety|sigma|convention|variant|lhs|lhs_stderr|rhs|rhs_stderr|residual|stderr|tolerance|pass|note";

impl CalibrationRecord {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# transform convention and weight variant selected by calibration\n");
        let _ = writeln!(out, "convention={}", self.convention.name());
        let _ = writeln!(out, "variant={}", self.variant.name());
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "samples={}", self.samples);
        out.push_str("[evidence]\n");
        out.push_str(EVIDENCE_HEADER);
        out.push('\n');
        for r in &self.evidence {
            let _ = writeln!(
                out,
                "{}|{}|{}|{}|{}|{:.16e}|{:.16e}|{:.16e}|{:.16e}|{:.16e}|{:.16e}|{:.16e}|{}|{}",
                r.theorem,
                r.variety,
                r.sigma,
                r.convention.name(),
                r.variant.name(),
                r.lhs,
                r.lhs_stderr,
                r.rhs,
                r.rhs_stderr,
                r.residual,
                r.stderr,
                r.tolerance,
                if r.pass { "pass" } else { "fail" },
                r.note.replace(['|', '\n'], " "),
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidConfig(format!("calibration record: {msg}"));
        let mut convention = None;
        let mut variant = None;
        let mut seed = None;
        let mut samples = None;
        let mut evidence = Vec::new();
        let mut in_evidence = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "[evidence]" {
                in_evidence = true;
                continue;
            }
            if in_evidence {
                if line == EVIDENCE_HEADER {
                    continue;
                }
                evidence.push(parse_row(line).ok_or_else(|| bad(format!("bad evidence row `{line}`")))?);
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{line}`")))?;
            let v = v.trim();
            match k.trim() {
                "convention" => convention = Convention::from_name(v),
                "variant" => variant = WeightVariant::from_name(v),
                "seed" => seed = v.parse().ok(),
                "samples" => samples = v.parse().ok(),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(Self {
            convention: convention.ok_or_else(|| bad("missing or invalid convention".into()))?,
            variant: variant.ok_or_else(|| bad("missing or invalid variant".into()))?,
            seed: seed.ok_or_else(|| bad("missing or invalid seed".into()))?,
            samples: samples.ok_or_else(|| bad("missing or invalid samples".into()))?,
            evidence,
        })
    }
}

fn parse_row(line: &str) -> Option<EvidenceRow> {
    let f: Vec<&str> = line.split('|').collect();
    if f.len() != 14 {
        return None;
    }
    let num = |i: usize| f[i].trim().parse::<f64>().ok();
    Some(EvidenceRow {
        theorem: f[0].trim().parse().ok()?,
        variety: f[1].to_string(),
        sigma: f[2].to_string(),
        convention: Convention::from_name(f[3])?,
        variant: WeightVariant::from_name(f[4])?,
        lhs: num(5)?,
        lhs_stderr: num(6)?,
        rhs: num(7)?,
        rhs_stderr: num(8)?,
        residual: num(9)?,
        stderr: num(10)?,
        tolerance: num(11)?,
        pass: match f[12] {
            "pass" => true,
            "fail" => false,
            _ => return None,
        },
        note: f[13].to_string(),
    })
}

/// Least-squares `c` in `lhs ≈ c·rhs` over the finite rows.
fn best_fit_multiplier(rows: &[&EvidenceRow]) -> f64 {
    let (num, den) = rows
        .iter()
        .filter(|r| r.lhs.is_finite() && r.rhs.is_finite())
        .fold((0.0, 0.0), |(n, d), r| (n + r.lhs * r.rhs, d + r.rhs * r.rhs));
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

/// Picks the unique `(convention, variant)` under which every evidence row
/// passes.
pub fn select_calibration(suite: &[CalibrationCase], evidence: &[EvidenceRow]) -> Result<(Convention, WeightVariant)> {
    let mut passing = Vec::new();
    let mut fits = Vec::new();
    for convention in Convention::ALL {
        for variant in WeightVariant::ALL {
            let rows: Vec<&EvidenceRow> = evidence
                .iter()
                .filter(|r| r.convention == convention && r.variant == variant)
                .collect();
            if !rows.is_empty() && rows.iter().all(|r| r.pass) {
                passing.push((convention, variant));
            }
            fits.push(format!(
                "{}/{}: best-fit multiplier {:.4}",
                convention.name(),
                variant.name(),
                best_fit_multiplier(&rows)
            ));
        }
    }
    let moving = suite.iter().filter(|c| !c.sigma.is_unitary(1e-12)).count();
    let mut varieties: Vec<&str> = suite.iter().map(|c| c.ci.name()).collect();
    varieties.sort_unstable();
    varieties.dedup();
    match passing.as_slice() {
        [] => Err(Error::CalibrationFailed(format!("no combination passes ({})", fits.join("; ")))),
        [one] if moving >= 2 && varieties.len() >= 2 => Ok(*one),
        [_] => Err(Error::CalibrationAmbiguous(format!(
            "suite has {} varieties and {moving} non-unitary σ; at least 2 of each are needed",
            varieties.len()
        ))),
        many => Err(Error::CalibrationAmbiguous(format!(
            "{} combinations pass: {}",
            many.len(),
            many.iter()
                .map(|(c, v)| format!("{}/{}", c.name(), v.name()))
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

/// Runs the suite and returns the record of the unique passing combination.
pub fn calibrate(suite: &[CalibrationCase], q: &Quadrature) -> Result<CalibrationRecord> {
    if suite.is_empty() {
        return Err(Error::CalibrationFailed("empty suite".into()));
    }
    let evidence = calibration_evidence(suite, q)?;
    let (convention, variant) = select_calibration(suite, &evidence)?;
    Ok(CalibrationRecord {
        convention,
        variant,
        seed: q.seed,
        samples: q.samples,
        evidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn quick(samples: usize) -> Quadrature {
        Quadrature::default().with_samples(samples).with_seed(8)
    }

    #[test]
    fn identity_is_exact() {
        let c = catalog_entry("conic_p2").unwrap();
        let id = GroupElement::identity(3);
        for conv in Convention::ALL {
            let r = verify_theorem5(&c, &id, &quick(10), conv, WeightVariant::Literal).unwrap();
            assert_eq!(r.residual.value, 0.0);
            assert!(r.pass);
            let r = verify_theorem6(&c, &id, &quick(10), conv, WeightVariant::Derivation).unwrap();
            assert_eq!(r.residual.value, 0.0);
        }
    }

    #[test]
    fn theorem6_requires_special_linear() {
        let c = catalog_entry("conic_p2").unwrap();
        let s = GroupElement::exp_diagonal(&[0.1, 0.1, 0.1]).unwrap();
        let e = verify_theorem6(&c, &s, &quick(10), Convention::Compose, WeightVariant::Derivation).unwrap_err();
        assert!(matches!(e, Error::NotSpecialLinear(_)));
    }

    #[test]
    fn theorem5_on_the_conic() {
        let c = catalog_entry("conic_p2").unwrap();
        let s = GroupElement::exp_diagonal(&[0.3, -0.1, -0.2]).unwrap();
        let r = verify_theorem5(&c, &s, &quick(4000), Convention::ComposeInverse, WeightVariant::Derivation).unwrap();
        assert!(r.pass, "{r:?}");
        let wrong = verify_theorem5(&c, &s, &quick(4000), Convention::Compose, WeightVariant::Derivation).unwrap();
        assert!(!wrong.pass, "{wrong:?}");
    }

    #[test]
    fn empty_and_unitary_suites() {
        assert!(matches!(calibrate(&[], &quick(10)), Err(Error::CalibrationFailed(_))));
        let u = GroupElement::diagonal(&[
            Complex64::from_polar(1.0, 0.3),
            Complex64::from_polar(1.0, -0.3),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let suite = vec![
            CalibrationCase {
                ci: catalog_entry("conic_p2").unwrap(),
                sigma: u.clone(),
            },
            CalibrationCase {
                ci: catalog_entry("hyperplane_p2").unwrap(),
                sigma: u,
            },
        ];
        assert!(matches!(calibrate(&suite, &quick(300)), Err(Error::CalibrationAmbiguous(_))));
    }

    #[test]
    fn record_round_trip() {
        let rec = CalibrationRecord {
            convention: Convention::ComposeInverse,
            variant: WeightVariant::Derivation,
            seed: 4,
            samples: 1000,
            evidence: vec![EvidenceRow {
                theorem: 5,
                variety: "conic_p2".into(),
                sigma: "diag(1,2,0.5)".into(),
                convention: Convention::Compose,
                variant: WeightVariant::Literal,
                lhs: 0.1,
                lhs_stderr: 0.01,
                rhs: 0.2,
                rhs_stderr: 0.02,
                residual: -0.1,
                stderr: 0.03,
                tolerance: 0.09,
                pass: false,
                note: String::new(),
            }],
        };
        let text = rec.to_text();
        assert_eq!(CalibrationRecord::parse(&text).unwrap(), rec);
        assert!(CalibrationRecord::parse("convention=Nope\n").is_err());
    }
}
