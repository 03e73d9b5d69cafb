use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use super::group::GroupElement;
use super::parse_rational;
use crate::error::{Error, Result};

/// A homogeneous polynomial in `num_vars` variables with complex coefficients.
///
/// Terms are kept in a `BTreeMap` keyed by exponent vector so iteration order,
/// and therefore every floating-point reduction over terms, is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPolynomial {
    num_vars: usize,
    degree: u32,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

/// Which linear substitution [`HomogeneousPolynomial::transform`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Convention {
    /// `z ↦ F(σz)`
    Compose,
    /// `z ↦ F(σ⁻¹z)`
    ComposeInverse,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::Compose, Convention::ComposeInverse];

    pub fn name(self) -> &'static str {
        match self {
            Convention::Compose => "Compose",
            Convention::ComposeInverse => "ComposeInverse",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl HomogeneousPolynomial {
    /// Builds a polynomial from `(exponent, coefficient)` pairs, merging equal
    /// exponents and dropping coefficients that cancel to zero.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Complex64)>,
    {
        let mut map: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        let mut degree = None;
        for (i, (exp, c)) in terms.into_iter().enumerate() {
            if exp.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    found: exp.len(),
                });
            }
            let d: u32 = exp.iter().sum();
            match degree {
                None => degree = Some(d),
                Some(expected) if expected != d => {
                    return Err(Error::MixedDegree {
                        line: i + 1,
                        expected,
                        found: d,
                    })
                }
                _ => {}
            }
            *map.entry(exp).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        let degree = degree.ok_or(Error::EmptyPolynomial)?;
        if map.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        if degree == 0 {
            return Err(Error::InvalidDimensions("polynomial degree must be at least 1".into()));
        }
        Ok(Self {
            num_vars,
            degree,
            terms: map,
        })
    }

    /// The coordinate function `z_index`.
    pub fn coordinate(num_vars: usize, index: usize) -> Self {
        let mut exp = vec![0; num_vars];
        exp[index] = 1;
        Self::from_terms(num_vars, [(exp, Complex64::new(1.0, 0.0))]).expect("valid monomial")
    }

    /// Parses the term-per-line text format `<re> <im> | <e0> ... <eN>`.
    ///
    /// `#` starts a comment; blank lines are ignored. Coefficients may be
    /// decimals or exact fractions `p/q`.
    pub fn parse(text: &str, num_vars: usize) -> Result<Self> {
        Self::parse_with_offset(text, num_vars, 0)
    }

    pub(crate) fn parse_with_offset(text: &str, num_vars: usize, line_offset: usize) -> Result<Self> {
        let mut terms = Vec::new();
        let mut degree: Option<(u32, usize)> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1 + line_offset;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: &str| Error::MalformedLine {
                line: line_no,
                reason: reason.to_string(),
            };
            let (coef, exps) = line
                .split_once('|')
                .ok_or_else(|| malformed("missing '|' separator"))?;
            let coef: Vec<&str> = coef.split_whitespace().collect();
            if coef.len() != 2 {
                return Err(malformed("expected '<re> <im>' before '|'"));
            }
            let re = parse_real(coef[0]).ok_or_else(|| malformed("bad real part"))?;
            let im = parse_real(coef[1]).ok_or_else(|| malformed("bad imaginary part"))?;
            let exp: Vec<u32> = exps
                .split_whitespace()
                .map(|e| e.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| malformed("exponents must be non-negative integers"))?;
            if exp.len() != num_vars {
                return Err(malformed(&format!(
                    "expected {num_vars} exponents, found {}",
                    exp.len()
                )));
            }
            let d: u32 = exp.iter().sum();
            match degree {
                None => degree = Some((d, line_no)),
                Some((expected, _)) if expected != d => {
                    return Err(Error::MixedDegree {
                        line: line_no,
                        expected,
                        found: d,
                    })
                }
                _ => {}
            }
            terms.push((exp, Complex64::new(re, im)));
        }
        if terms.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        Self::from_terms(num_vars, terms)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Complex64)> + '_ {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of the monomial with exponent `exp` (zero if absent).
    pub fn coefficient(&self, exp: &[u32]) -> Complex64 {
        self.terms.get(exp).copied().unwrap_or_default()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, lambda: Complex64) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c * lambda));
        Self::from_terms(self.num_vars, terms).expect("scaling by nonzero keeps terms")
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        self.check_len(z)?;
        let pows = self.powers(z);
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| c * monomial(&pows, e, self.degree as usize + 1))
            .sum())
    }

    /// `Σ |c_α| |z^α|`, the natural magnitude against which residuals are judged.
    pub fn abs_eval(&self, z: &[Complex64]) -> f64 {
        let a: Vec<Complex64> = z.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect();
        let pows = self.powers(&a);
        self.terms
            .iter()
            .map(|(e, c)| c.norm() * monomial(&pows, e, self.degree as usize + 1).re)
            .sum()
    }

    /// Value and holomorphic gradient `(∂F/∂z_j)_j` at `z`.
    pub fn eval_and_gradient(&self, z: &[Complex64]) -> Result<(Complex64, Vec<Complex64>)> {
        self.check_len(z)?;
        let mut grad = vec![Complex64::default(); self.num_vars];
        let v = self.eval_grad_into(z, &mut grad);
        Ok((v, grad))
    }

    /// Unchecked hot-path variant of [`eval_and_gradient`](Self::eval_and_gradient).
    pub(crate) fn eval_grad_into(&self, z: &[Complex64], grad: &mut [Complex64]) -> Complex64 {
        let stride = self.degree as usize + 1;
        let pows = self.powers(z);
        grad.iter_mut().for_each(|g| *g = Complex64::default());
        let mut value = Complex64::default();
        for (e, c) in &self.terms {
            value += c * monomial(&pows, e, stride);
            for j in 0..self.num_vars {
                if e[j] == 0 {
                    continue;
                }
                let mut t = *c * e[j] as f64;
                for (k, &ek) in e.iter().enumerate() {
                    let p = if k == j { ek - 1 } else { ek };
                    t *= pows[k * stride + p as usize];
                }
                grad[j] += t;
            }
        }
        value
    }

    /// Polynomial after the linear substitution selected by `convention`.
    pub fn transform(&self, sigma: &GroupElement, convention: Convention) -> Result<Self> {
        if sigma.dim() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: sigma.dim(),
            });
        }
        let m = match convention {
            Convention::Compose => sigma.matrix(),
            Convention::ComposeInverse => sigma.inverse(),
        };
        let nv = self.num_vars;
        // (Mz)_j as a linear form, and its powers on demand.
        let rows: Vec<BTreeMap<Vec<u32>, Complex64>> = (0..nv)
            .map(|j| {
                let mut f = BTreeMap::new();
                for k in 0..nv {
                    let c = m[(j, k)];
                    if c != Complex64::default() {
                        let mut e = vec![0; nv];
                        e[k] = 1;
                        f.insert(e, c);
                    }
                }
                f
            })
            .collect();
        let mut power_cache: BTreeMap<(usize, u32), BTreeMap<Vec<u32>, Complex64>> = BTreeMap::new();
        let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut acc: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
            acc.insert(vec![0; nv], *c);
            for (j, &ej) in e.iter().enumerate() {
                if ej == 0 {
                    continue;
                }
                let p = power_cache
                    .entry((j, ej))
                    .or_insert_with(|| sparse_pow(&rows[j], ej, nv))
                    .clone();
                acc = sparse_mul(&acc, &p);
            }
            for (k, v) in acc {
                *out.entry(k).or_default() += v;
            }
        }
        out.retain(|_, c| *c != Complex64::default());
        if out.is_empty() {
            return Err(Error::SingularMatrix(0.0));
        }
        Ok(Self {
            num_vars: nv,
            degree: self.degree,
            terms: out,
        })
    }

    /// Writes the polynomial in the term-per-line text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (e, c) in &self.terms {
            let exps: Vec<String> = e.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("{:e} {:e} | {}\n", c.re, c.im, exps.join(" ")));
        }
        s
    }

    fn check_len(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: z.len(),
            });
        }
        Ok(())
    }

    fn powers(&self, z: &[Complex64]) -> Vec<Complex64> {
        let stride = self.degree as usize + 1;
        let mut pows = vec![Complex64::new(1.0, 0.0); self.num_vars * stride];
        for (j, zj) in z.iter().enumerate() {
            for p in 1..stride {
                pows[j * stride + p] = pows[j * stride + p - 1] * zj;
            }
        }
        pows
    }
}

fn monomial(pows: &[Complex64], e: &[u32], stride: usize) -> Complex64 {
    e.iter()
        .enumerate()
        .fold(Complex64::new(1.0, 0.0), |acc, (j, &p)| acc * pows[j * stride + p as usize])
}

fn sparse_mul(
    a: &BTreeMap<Vec<u32>, Complex64>,
    b: &BTreeMap<Vec<u32>, Complex64>,
) -> BTreeMap<Vec<u32>, Complex64> {
    let mut out = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert(Complex64::default()) += ca * cb;
        }
    }
    out
}

fn sparse_pow(f: &BTreeMap<Vec<u32>, Complex64>, p: u32, nv: usize) -> BTreeMap<Vec<u32>, Complex64> {
    let mut acc = BTreeMap::new();
    acc.insert(vec![0; nv], Complex64::new(1.0, 0.0));
    for _ in 0..p {
        acc = sparse_mul(&acc, f);
    }
    acc
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().or_else(|| {
        let r = parse_rational(s)?;
        num_traits::ToPrimitive::to_f64(&r)
    })
}

impl fmt::Display for HomogeneousPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            for (j, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "·z{j}")?,
                    _ => write!(f, "·z{j}^{p}")?,
                }
            }
        }
        Ok(())
    }
}
