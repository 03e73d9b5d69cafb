//! Energy functionals at the orbit potentials `φ_σ = log(|σz|²/|z|²)`.
//!
//! Every functional is a linear combination of integrals of the form
//! `(1/D)∫_M g·α_1∧…∧α_n`. One Monte-Carlo pass fills a row per sample with
//! all of them, so the reported value, its terms and the constant-shift
//! response share samples and get correlation-aware errors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::futaki_exact::{eigenweights, futaki_of_field};
use crate::poly_core::{phi_sigma, CompleteIntersection, DiagonalField, GroupElement};
use crate::variety_numerics::{
    integrate_samples, make_frame, metric_at, mixed_det, mixed_det_powers, ricci_matrices, volume_density,
    BranchPoint, ChartFrame, MCEstimate, Quadrature, SampleSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    AubinYau,
    Futaki,
    Mabuchi,
}

impl Functional {
    pub const ALL: [Functional; 3] = [Functional::AubinYau, Functional::Futaki, Functional::Mabuchi];

    pub fn name(self) -> &'static str {
        match self {
            Functional::AubinYau => "aubin_yau",
            Functional::Futaki => "futaki",
            Functional::Mabuchi => "mabuchi",
        }
    }
}

impl std::fmt::Display for Functional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One named contribution; the report value is `Σ coeff·estimate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub coeff: f64,
    pub estimate: MCEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalReport {
    pub functional: Functional,
    pub value: MCEstimate,
    pub terms: Vec<Term>,
    /// `∂value/∂c` for the potential `φ_σ + c`, from the same samples.
    pub shift_response: MCEstimate,
    pub variety: String,
    pub sigma: String,
    pub shift: f64,
    pub quadrature: Quadrature,
}

impl FunctionalReport {
    /// `|value − Σ coeff·term|`, zero up to round-off.
    pub fn bookkeeping_gap(&self) -> f64 {
        let sum: f64 = self.terms.iter().map(|t| t.coeff * t.estimate.value).sum();
        (self.value.value - sum).abs()
    }
}

/// Column layout of one functional: named groups of columns that make up the
/// value, plus the columns of the shift response.
struct Layout {
    width: usize,
    terms: Vec<(String, f64, Vec<usize>)>,
    shift: Vec<(f64, Vec<usize>)>,
}

impl Layout {
    fn coeffs(&self, groups: &[(f64, Vec<usize>)]) -> Vec<f64> {
        let mut c = vec![0.0; self.width];
        for (w, cols) in groups {
            for &j in cols {
                c[j] += w;
            }
        }
        c
    }

    fn report(&self, set: &SampleSet, functional: Functional, ctx: &Context) -> FunctionalReport {
        let value_groups: Vec<(f64, Vec<usize>)> = self.terms.iter().map(|(_, w, c)| (*w, c.clone())).collect();
        let terms = self
            .terms
            .iter()
            .map(|(name, w, cols)| Term {
                name: name.clone(),
                coeff: *w,
                estimate: set.combination(&self.coeffs(&[(1.0, cols.clone())])),
            })
            .collect();
        FunctionalReport {
            functional,
            value: set.combination(&self.coeffs(&value_groups)),
            terms,
            shift_response: set.combination(&self.coeffs(&self.shift)),
            variety: ctx.ci.name().to_string(),
            sigma: ctx.sigma.to_string(),
            shift: ctx.shift,
            quadrature: ctx.q.clone(),
        }
    }
}

struct Context<'a> {
    ci: &'a CompleteIntersection,
    sigma: &'a GroupElement,
    shift: f64,
    q: &'a Quadrature,
}

impl Context<'_> {
    fn check(&self) -> Result<()> {
        if self.sigma.dim() != self.ci.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.ci.num_vars(),
                found: self.sigma.dim(),
            });
        }
        self.q.validate()
    }

    /// The exact report at `σ = id`, `c = 0`, where `φ ≡ 0`.
    fn trivial(&self, functional: Functional, term_names: Vec<(String, f64)>, response: f64) -> FunctionalReport {
        FunctionalReport {
            functional,
            value: MCEstimate::exact(0.0),
            terms: term_names
                .into_iter()
                .map(|(name, coeff)| Term {
                    name,
                    coeff,
                    estimate: MCEstimate::exact(0.0),
                })
                .collect(),
            shift_response: MCEstimate::exact(response),
            variety: self.ci.name().to_string(),
            sigma: self.sigma.to_string(),
            shift: self.shift,
            quadrature: self.q.clone(),
        }
    }

    fn short_circuits(&self) -> bool {
        self.sigma.is_identity() && self.shift == 0.0
    }

    fn potential(&self, bp: &BranchPoint) -> Result<f64> {
        Ok(phi_sigma(self.sigma, &bp.z)? + self.shift)
    }
}

fn power_terms(n: usize, lhs: &str, rhs: &str) -> Vec<(String, f64)> {
    (0..=n).map(|k| (format!("phi*{lhs}^{}*{rhs}^{k}", n - k), 1.0)).collect()
}

/// Layout shared by the two power-sum functionals: columns `0..=n` hold
/// `φ·MD(P^{n−k}, Q^k)` and `n+1..` the same without `φ`.
fn power_layout(n: usize, lhs: &str, rhs: &str) -> Layout {
    Layout {
        width: 2 * (n + 1),
        terms: power_terms(n, lhs, rhs)
            .into_iter()
            .enumerate()
            .map(|(k, (name, w))| (name, w, vec![k]))
            .collect(),
        shift: vec![(1.0, (n + 1..2 * (n + 1)).collect())],
    }
}

fn fill_powers(out: &mut [f64], phi: f64, powers: &[f64], weight: f64) {
    let n1 = powers.len();
    for (k, p) in powers.iter().enumerate() {
        out[k] = phi * p * weight;
        out[n1 + k] = p * weight;
    }
}

fn positive_det(a: &DMatrix<Complex64>) -> Result<f64> {
    let d = mixed_det(&vec![a; a.nrows()])?;
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::NonPositiveDensity)
    }
}

/// `AY_ω(φ_σ) = (1/D) Σ_{k=0}^n ∫_M φ_σ ω^{n−k} ∧ ω_φ^k`.
pub fn aubin_yau(ci: &CompleteIntersection, sigma: &GroupElement, q: &Quadrature) -> Result<FunctionalReport> {
    aubin_yau_shifted(ci, sigma, 0.0, q)
}

/// [`aubin_yau`] at the potential `φ_σ + c`.
pub fn aubin_yau_shifted(
    ci: &CompleteIntersection,
    sigma: &GroupElement,
    shift: f64,
    q: &Quadrature,
) -> Result<FunctionalReport> {
    let ctx = Context { ci, sigma, shift, q };
    ctx.check()?;
    let n = ci.dim();
    if ctx.short_circuits() {
        return Ok(ctx.trivial(Functional::AubinYau, power_terms(n, "omega", "omega_phi"), (n + 1) as f64));
    }
    let frame = make_frame(ci, q.seed)?;
    aubin_yau_on(&frame, &ctx)
}

fn aubin_yau_on(frame: &ChartFrame, ctx: &Context) -> Result<FunctionalReport> {
    let n = ctx.ci.dim();
    let inv_d = 1.0 / ctx.ci.degree() as f64;
    let layout = power_layout(n, "omega", "omega_phi");
    let set = integrate_samples(frame, ctx.q, layout.width, |bp, out| {
        let a = metric_at(bp, None);
        let b = metric_at(bp, Some(ctx.sigma));
        fill_powers(out, ctx.potential(bp)?, &mixed_det_powers(&a, &b), inv_d / bp.base_det);
        Ok(())
    })?;
    Ok(layout.report(&set, Functional::AubinYau, ctx))
}

/// `Fut_ω(φ_σ) = (1/D) Σ_{k=0}^n ∫_M φ_σ Ric(ω)^{n−k} ∧ Ric(ω_φ)^k`.
pub fn futaki_functional(ci: &CompleteIntersection, sigma: &GroupElement, q: &Quadrature) -> Result<FunctionalReport> {
    futaki_functional_shifted(ci, sigma, 0.0, q)
}

/// [`futaki_functional`] at the potential `φ_σ + c`.
pub fn futaki_functional_shifted(
    ci: &CompleteIntersection,
    sigma: &GroupElement,
    shift: f64,
    q: &Quadrature,
) -> Result<FunctionalReport> {
    let ctx = Context { ci, sigma, shift, q };
    ctx.check()?;
    let n = ci.dim();
    if ctx.short_circuits() {
        // Σ_k ∫ Ric^{n−k} Ric_φ^k = (n+1)·m^n·D in cohomology.
        let response = (n + 1) as f64 * (ci.m() as f64).powi(n as i32);
        return Ok(ctx.trivial(Functional::Futaki, power_terms(n, "ric", "ric_phi"), response));
    }
    let frame = make_frame(ci, q.seed)?;
    let inv_d = 1.0 / ci.degree() as f64;
    let layout = power_layout(n, "ric", "ric_phi");
    let set = integrate_samples(&frame, q, layout.width, |bp, out| {
        let r = ricci_matrices(&frame, bp, &[None, Some(sigma)], q.fd_step, q.richardson, q.cond_limit)?;
        let powers = mixed_det_powers(r[0].matrix(), r[1].matrix());
        fill_powers(out, ctx.potential(bp)?, &powers, inv_d / bp.base_det);
        Ok(())
    })?;
    Ok(layout.report(&set, Functional::Futaki, &ctx))
}

fn mabuchi_terms(n: usize, m: i64) -> Vec<(String, f64)> {
    vec![
        ("entropy".to_string(), 1.0),
        ("ricci".to_string(), -1.0),
        ("constant".to_string(), n as f64 * m as f64 / (n + 1) as f64),
    ]
}

/// `ν_ω(φ_σ) = (1/D)[∫ log(ω_φ^n/ω^n) ω_φ^n − Σ_{i<n} ∫ φ Ric(ω) ω_φ^i ω^{n−1−i}
/// + (nm/(n+1)) Σ_{i≤n} ∫ φ ω_φ^i ω^{n−i}]`.
pub fn mabuchi(ci: &CompleteIntersection, sigma: &GroupElement, q: &Quadrature) -> Result<FunctionalReport> {
    mabuchi_shifted(ci, sigma, 0.0, q)
}

/// [`mabuchi`] at the potential `φ_σ + c`.
pub fn mabuchi_shifted(
    ci: &CompleteIntersection,
    sigma: &GroupElement,
    shift: f64,
    q: &Quadrature,
) -> Result<FunctionalReport> {
    let ctx = Context { ci, sigma, shift, q };
    ctx.check()?;
    let n = ci.dim();
    if ctx.short_circuits() {
        return Ok(ctx.trivial(Functional::Mabuchi, mabuchi_terms(n, ci.m()), 0.0));
    }
    let frame = make_frame(ci, q.seed)?;
    mabuchi_on(&frame, &ctx)
}

fn mabuchi_on(frame: &ChartFrame, ctx: &Context) -> Result<FunctionalReport> {
    let n = ctx.ci.dim();
    let names = mabuchi_terms(n, ctx.ci.m());
    let c_const = names[2].1;
    // columns: entropy | φ·ricci_i (n) | φ·const_i (n+1) | ricci_i (n) | const_i (n+1)
    let ricci: Vec<usize> = (1..=n).collect();
    let constant: Vec<usize> = (n + 1..2 * n + 2).collect();
    let ricci_mass: Vec<usize> = (2 * n + 2..3 * n + 2).collect();
    let const_mass: Vec<usize> = (3 * n + 2..4 * n + 3).collect();
    let layout = Layout {
        width: 4 * n + 3,
        terms: vec![
            (names[0].0.clone(), 1.0, vec![0]),
            (names[1].0.clone(), -1.0, ricci),
            (names[2].0.clone(), c_const, constant),
        ],
        shift: vec![(-1.0, ricci_mass), (c_const, const_mass)],
    };
    let inv_d = 1.0 / ctx.ci.degree() as f64;
    let q = ctx.q;
    let set = integrate_samples(frame, q, layout.width, |bp, out| {
        let a = metric_at(bp, None);
        let b = metric_at(bp, Some(ctx.sigma));
        let det_a = positive_det(&a)?;
        let det_b = positive_det(&b)?;
        let w = inv_d / bp.base_det;
        let phi = ctx.potential(bp)?;
        out[0] = (det_b / det_a).ln() * det_b * w;
        let r = ricci_matrices(frame, bp, &[None], q.fd_step, q.richardson, q.cond_limit)?.remove(0);
        for i in 0..n {
            let mut args: Vec<&DMatrix<Complex64>> = vec![r.matrix()];
            args.extend(std::iter::repeat_n(&b, i));
            args.extend(std::iter::repeat_n(&a, n - 1 - i));
            let md = mixed_det(&args)?;
            out[1 + i] = phi * md * w;
            out[2 * n + 2 + i] = md * w;
        }
        for (i, p) in mixed_det_powers(&a, &b).iter().enumerate() {
            // mixed_det_powers indexes by the power of b
            out[n + 1 + i] = phi * p * w;
            out[3 * n + 2 + i] = p * w;
        }
        Ok(())
    })?;
    Ok(layout.report(&set, Functional::Mabuchi, ctx))
}

/// The §2.4 integral `m^{n+1}∫_M θ_X ω^n` with `θ_X = 2 Re(z†Âz)/|z|²`,
/// alongside the lift that includes the eigenvalues of the defining
/// polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct FutakiNumeric {
    /// `m^{n+1}∫_M θ_X ω^n`.
    pub numeric: MCEstimate,
    /// `−((n+1)/2)·m^n·∫_M (m·θ_X + 2Σκ_i) ω^n`, the derivative for the
    /// action of `X` on `K^{-1}|_M` rather than on `O(m)|_M`.
    pub lifted: MCEstimate,
    /// `F(X)` from the exact formula.
    pub exact: f64,
    /// `Σκ_i`.
    pub kappa_sum: f64,
}

impl FutakiNumeric {
    pub fn ratio(&self) -> f64 {
        self.numeric.value / self.exact
    }

    pub fn lifted_ratio(&self) -> f64 {
        self.lifted.value / self.exact
    }
}

/// `m^{n+1}∫_M θ_X ω^n`, to be compared with the exact Futaki invariant.
pub fn futaki_numeric(ci: &CompleteIntersection, x: &DiagonalField, q: &Quadrature) -> Result<MCEstimate> {
    Ok(futaki_numeric_report(ci, x, q)?.numeric)
}

pub fn futaki_numeric_report(ci: &CompleteIntersection, x: &DiagonalField, q: &Quadrature) -> Result<FutakiNumeric> {
    let kappa = eigenweights(ci, x)?;
    let m = ci.m();
    if m <= 0 {
        return Err(Error::NonFano(m));
    }
    q.validate()?;
    let exact = futaki_of_field(ci, x)?.value.to_f64().unwrap_or(f64::NAN);
    let kappa_sum: f64 = kappa.iter().map(|k| k.to_f64().unwrap_or(f64::NAN)).sum();
    let a = x.weights_f64();
    let frame = make_frame(ci, q.seed)?;
    let set = integrate_samples(&frame, q, 2, |bp, out| {
        let r2: f64 = bp.z.iter().map(|v| v.norm_sqr()).sum();
        let theta = 2.0 * bp.z.iter().zip(&a).map(|(v, w)| w * v.norm_sqr()).sum::<f64>() / r2;
        let vol = volume_density(bp);
        out[0] = theta * vol;
        out[1] = vol;
        Ok(())
    })?;
    let n = ci.dim() as i32;
    let mf = m as f64;
    let numeric = set.combination(&[mf.powi(n + 1), 0.0]);
    let c = -0.5 * (n + 1) as f64 * mf.powi(n);
    let lifted = set.combination(&[c * mf, c * 2.0 * kappa_sum]);
    Ok(FutakiNumeric {
        numeric,
        lifted,
        exact,
        kappa_sum,
    })
}

/// One point of an orbit sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPoint {
    pub t: f64,
    pub aubin_yau: MCEstimate,
    pub mabuchi: MCEstimate,
}

/// `AY` and `ν` along `σ_t = exp(t·diag(a))`, on one frame and one seed for
/// all `t` so that the curves are sample-correlated.
pub fn orbit_sweep(
    ci: &CompleteIntersection,
    x: &DiagonalField,
    t_grid: &[f64],
    q: &Quadrature,
) -> Result<Vec<OrbitPoint>> {
    eigenweights(ci, x)?;
    if let Some(t) = t_grid.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidConfig(format!("non-finite orbit parameter {t}")));
    }
    q.validate()?;
    let frame = make_frame(ci, q.seed)?;
    t_grid
        .iter()
        .map(|&t| {
            let sigma = x.exp(t);
            let ctx = Context {
                ci,
                sigma: &sigma,
                shift: 0.0,
                q,
            };
            let (ay, nu) = if ctx.short_circuits() {
                (MCEstimate::exact(0.0), MCEstimate::exact(0.0))
            } else {
                (aubin_yau_on(&frame, &ctx)?.value, mabuchi_on(&frame, &ctx)?.value)
            };
            Ok(OrbitPoint {
                t,
                aubin_yau: ay,
                mabuchi: nu,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::catalog_entry;

    fn quick(samples: usize) -> Quadrature {
        Quadrature::default().with_samples(samples).with_seed(5)
    }

    #[test]
    fn identity_short_circuits() {
        let c = catalog_entry("conic_p2").unwrap();
        let id = GroupElement::identity(3);
        for r in [
            aubin_yau(&c, &id, &quick(10)).unwrap(),
            futaki_functional(&c, &id, &quick(10)).unwrap(),
            mabuchi(&c, &id, &quick(10)).unwrap(),
        ] {
            assert_eq!(r.value.value, 0.0);
            assert_eq!(r.value.stderr, 0.0);
            assert_eq!(r.value.samples, 0);
        }
    }

    #[test]
    fn hyperplane_futaki_is_twice_aubin_yau() {
        // On M ≅ P¹ both Ricci forms are twice their metrics.
        let h = catalog_entry("hyperplane_p2").unwrap();
        let s = GroupElement::exp_diagonal(&[0.25, -0.05, -0.2]).unwrap();
        let q = quick(2000);
        let ay = aubin_yau(&h, &s, &q).unwrap();
        let fut = futaki_functional(&h, &s, &q).unwrap();
        assert!((fut.value.value - 2.0 * ay.value.value).abs() < 1e-5 * ay.value.value.abs().max(1.0));
        assert!(fut.bookkeeping_gap() < 1e-12);
    }

    #[test]
    fn aubin_yau_on_p1_matches_quadrature() {
        // hyperplane z0 = 0 is the line P¹ in (z1, z2); σ = diag(1, e^a, e^{-a})
        // gives φ = log((e^{2a}|z1|² + e^{-2a}|z2|²)/|z|²), radial in |z2/z1|².
        let h = catalog_entry("hyperplane_p2").unwrap();
        let a: f64 = 0.3;
        let s = GroupElement::exp_diagonal(&[0.0, a, -a]).unwrap();
        let ay = aubin_yau(&h, &s, &quick(20000)).unwrap();
        // With x = |z2/z1|², ω = dx/(1+x)² and ω_φ = σ*ω, so ∫φ ω_φ = ∫φ(e^{4a}x) ω.
        let phi = |x: f64| ((2.0 * a).exp() + (-2.0 * a).exp() * x).ln() - (1.0 + x).ln();
        let simpson = |f: &dyn Fn(f64) -> f64| {
            // x = tan²(θ) maps [0, π/2) to [0, ∞) with dx/(1+x)² = sin(2θ) dθ
            let m = 20000;
            let hstep = std::f64::consts::FRAC_PI_2 / m as f64;
            (0..=m)
                .map(|i| {
                    let th = i as f64 * hstep;
                    let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    let x = th.tan().powi(2);
                    let v = if i == m { 0.0 } else { f(x) * (2.0 * th).sin() };
                    w * v
                })
                .sum::<f64>()
                * hstep
                / 3.0
        };
        let with_omega = simpson(&|x| phi(x));
        let with_pushed = simpson(&|x| phi(x * (4.0 * a).exp()));
        let expected = with_omega + with_pushed;
        assert!(
            ay.value.within(expected, 4.0),
            "{} vs {expected} ± {}",
            ay.value.value,
            ay.value.stderr
        );
    }

    #[test]
    fn shift_responses() {
        let c = catalog_entry("conic_p2").unwrap();
        let s = GroupElement::exp_diagonal(&[0.3, -0.1, -0.2]).unwrap();
        let q = quick(3000);
        let ay0 = aubin_yau(&c, &s, &q).unwrap();
        let ay1 = aubin_yau_shifted(&c, &s, 0.5, &q).unwrap();
        assert!(ay0.shift_response.within(2.0, 3.0));
        let diff = ay1.value.value - ay0.value.value;
        assert!((diff - 0.5 * ay0.shift_response.value).abs() < 1e-12);
        let nu0 = mabuchi(&c, &s, &q).unwrap();
        let nu1 = mabuchi_shifted(&c, &s, 0.5, &q).unwrap();
        assert!(nu0.shift_response.within(0.0, 3.0));
        assert!((nu1.value.value - nu0.value.value - 0.5 * nu0.shift_response.value).abs() < 1e-10);
        assert!(nu0.bookkeeping_gap() < 1e-12);
    }

    #[test]
    fn unitary_sigma_gives_zero() {
        let c = catalog_entry("conic_p2").unwrap();
        let u = GroupElement::diagonal(&[
            Complex64::from_polar(1.0, 0.4),
            Complex64::from_polar(1.0, -1.1),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let q = quick(200);
        for r in [aubin_yau(&c, &u, &q).unwrap(), mabuchi(&c, &u, &q).unwrap()] {
            assert!(r.value.value.abs() < 1e-12, "{}: {}", r.functional, r.value.value);
        }
    }

    #[test]
    fn futaki_numeric_requires_eigen_fano() {
        let cubic = catalog_entry("cubic_curve_p2").unwrap();
        let x = DiagonalField::from_integers(&[0, 0, 0]).unwrap();
        assert_eq!(futaki_numeric(&cubic, &x, &quick(10)), Err(Error::NonFano(0)));
        let conic = catalog_entry("conic_p2").unwrap();
        let bad = DiagonalField::from_integers(&[1, 0, -1]).unwrap();
        // z1² − z0z2 is an eigenvector of (1, 0, −1): weights 0 and 0.
        assert!(futaki_numeric(&conic, &bad, &quick(10)).is_ok());
        let worse = DiagonalField::from_integers(&[2, -1, -1]).unwrap();
        assert!(matches!(
            futaki_numeric(&conic, &worse, &quick(10)),
            Err(Error::NotEigenvector { .. })
        ));
    }

    #[test]
    fn orbit_sweep_zero_row() {
        let c = catalog_entry("conic_p2").unwrap();
        let x = DiagonalField::from_integers(&[1, 0, -1]).unwrap();
        let pts = orbit_sweep(&c, &x, &[-0.2, 0.0, 0.2], &quick(300)).unwrap();
        assert_eq!(pts[1].aubin_yau, MCEstimate::exact(0.0));
        assert_eq!(pts[1].mabuchi, MCEstimate::exact(0.0));
        assert!(pts[0].aubin_yau.value.is_finite());
    }
}
