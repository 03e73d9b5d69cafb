use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::polynomial::HomogeneousPolynomial;
use super::{format_rational, parse_rational_list};
use crate::error::{Error, Result};

const MIN_RCOND: f64 = 1e-14;
const SL_TOL: f64 = 1e-12;

/// An invertible linear map of `C^{N+1}`, with determinant and inverse cached.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: DMatrix<Complex64>,
    inverse: DMatrix<Complex64>,
    det: Complex64,
    sl_flag: bool,
}

impl GroupElement {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidDimensions(format!(
                "group element must be a nonempty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let sv = matrix.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
        if !(rcond >= MIN_RCOND) {
            return Err(Error::SingularMatrix(rcond));
        }
        let det = matrix.clone().lu().determinant();
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or(Error::SingularMatrix(rcond))?;
        Ok(Self {
            sl_flag: (det - Complex64::new(1.0, 0.0)).norm() <= SL_TOL,
            matrix,
            inverse,
            det,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is invertible")
    }

    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// `diag(e^{t_0}, …, e^{t_N})`.
    pub fn exp_diagonal(log_entries: &[f64]) -> Result<Self> {
        let d: Vec<Complex64> = log_entries.iter().map(|t| Complex64::new(t.exp(), 0.0)).collect();
        Self::diagonal(&d)
    }

    /// Parses `diag:a,b,c` (real decimal or rational entries) or `expdiag:t0,t1,...`.
    pub fn parse_diag_spec(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse sigma spec '{spec}'"));
        let (kind, list) = spec.split_once(':').ok_or_else(bad)?;
        let vals: Vec<f64> = parse_rational_list(list)
            .map(|v| v.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect())
            .or_else(|| list.split(',').map(|x| x.trim().parse::<f64>().ok()).collect())
            .ok_or_else(bad)?;
        match kind.trim() {
            "diag" => Self::diagonal(&vals.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>()),
            "expdiag" => Self::exp_diagonal(&vals),
            _ => Err(bad()),
        }
    }

    /// Parses a matrix file: one row per line, each row `re im re im ...`.
    pub fn parse_matrix(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::MalformedLine {
                    line: i + 1,
                    reason: "matrix entries must be real numbers".into(),
                })?;
            if nums.len() % 2 != 0 {
                return Err(Error::MalformedLine {
                    line: i + 1,
                    reason: "each entry needs a real and an imaginary part".into(),
                });
            }
            rows.push(nums.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDimensions("matrix file must describe a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<Complex64> {
        &self.inverse
    }

    pub fn inverse_element(&self) -> Self {
        Self::new(self.inverse.clone()).expect("inverse of an invertible matrix")
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }

    pub fn sl_flag(&self) -> bool {
        self.sl_flag
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == DMatrix::identity(self.dim(), self.dim())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let g = self.matrix.adjoint() * &self.matrix - DMatrix::identity(self.dim(), self.dim());
        g.iter().all(|x| x.norm() <= tol)
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Self::new(&self.matrix * &other.matrix)
    }

    /// `σz`.
    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * z[j]).sum())
            .collect()
    }

    /// `max_i |log|σ_ii||`, or `None` when σ is not diagonal.
    pub fn diagonal_log_norm(&self) -> Option<f64> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.matrix[(i, j)] != Complex64::zero() {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.matrix[(i, i)].norm().ln().abs()).fold(0.0, f64::max))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.diagonal_log_norm().is_some() {
            let d: Vec<String> = (0..self.dim())
                .map(|i| {
                    let c = self.matrix[(i, i)];
                    if c.im == 0.0 {
                        format!("{}", c.re)
                    } else {
                        format!("{}{:+}i", c.re, c.im)
                    }
                })
                .collect();
            write!(f, "diag({})", d.join(","))
        } else {
            write!(f, "matrix{}x{}", self.dim(), self.dim())
        }
    }
}

/// `log(|σz|² / |z|²)`.
pub fn phi_sigma(sigma: &GroupElement, z: &[Complex64]) -> Result<f64> {
    if z.len() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: z.len(),
        });
    }
    let nz: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    if nz == 0.0 {
        return Err(Error::ZeroVector);
    }
    let ns: f64 = sigma.apply(z).iter().map(|x| x.norm_sqr()).sum();
    Ok((ns / nz).ln())
}

/// A diagonal holomorphic vector field `Σ a_i z_i ∂/∂z_i` with trace zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalField {
    weights: Vec<BigRational>,
}

impl DiagonalField {
    pub fn new(weights: Vec<BigRational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDimensions("vector field needs at least one weight".into()));
        }
        let sum: BigRational = weights.iter().sum();
        if !sum.is_zero() {
            return Err(Error::TraceNotZero(format_rational(&sum)));
        }
        Ok(Self { weights })
    }

    pub fn from_integers(weights: &[i64]) -> Result<Self> {
        Self::new(weights.iter().map(|&w| BigRational::from_integer(w.into())).collect())
    }

    /// Parses `1,1,1,-3` or `1/2,-1/2`.
    pub fn parse(s: &str) -> Result<Self> {
        let w = parse_rational_list(s)
            .ok_or_else(|| Error::InvalidConfig(format!("cannot parse weights '{s}'")))?;
        Self::new(w)
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// The real one-parameter subgroup element `exp(t·diag(a))`.
    pub fn exp(&self, t: f64) -> GroupElement {
        let logs: Vec<f64> = self.weights_f64().iter().map(|a| a * t).collect();
        GroupElement::exp_diagonal(&logs).expect("exponential is invertible")
    }

    /// The eigenvalue κ with `X F = κ F`.
    pub fn eigenweight(&self, f: &HomogeneousPolynomial) -> Result<BigRational> {
        self.eigenweight_in(f, "")
    }

    pub(crate) fn eigenweight_in(&self, f: &HomogeneousPolynomial, context: &str) -> Result<BigRational> {
        if f.num_vars() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.num_vars(),
            });
        }
        let weight = |e: &[u32]| -> BigRational {
            e.iter()
                .zip(&self.weights)
                .map(|(&p, a)| a * BigRational::from_integer(p.into()))
                .sum()
        };
        let mut terms = f.terms();
        let (first, _) = terms.next().ok_or(Error::EmptyPolynomial)?;
        let kappa = weight(first);
        for (e, _) in terms {
            let w = weight(e);
            if w != kappa {
                return Err(Error::NotEigenvector {
                    context: context.to_string(),
                    first_monomial: first.to_vec(),
                    first_weight: format_rational(&kappa),
                    second_monomial: e.to_vec(),
                    second_weight: format_rational(&w),
                });
            }
        }
        Ok(kappa)
    }
}

impl fmt::Display for DiagonalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: Vec<String> = self.weights.iter().map(format_rational).collect();
        write!(f, "{}", w.join(","))
    }
}

impl std::str::FromStr for DiagonalField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::test_support::{random_group, random_unitary_group, random_vec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn q(p: i64) -> BigRational {
        BigRational::from_integer(p.into())
    }

    #[test]
    fn rejects_singular_and_flags_sl() {
        assert!(matches!(
            GroupElement::diagonal(&[c(1.0), c(0.0)]),
            Err(Error::SingularMatrix(_))
        ));
        assert!(GroupElement::identity(3).sl_flag());
        assert!(!GroupElement::diagonal(&[c(2.0), c(1.0)]).unwrap().sl_flag());
        assert!(GroupElement::exp_diagonal(&[0.2, 0.0, -0.2]).unwrap().sl_flag());
    }

    #[test]
    fn phi_sigma_examples() {
        let z = [c(0.3), Complex64::new(0.1, 2.0), c(-1.0)];
        assert_eq!(phi_sigma(&GroupElement::identity(3), &z).unwrap(), 0.0);
        let s = GroupElement::diagonal(&[c(2.0), c(1.0), c(1.0)]).unwrap();
        assert!((phi_sigma(&s, &[c(1.0), c(0.0), c(0.0)]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(phi_sigma(&s, &[c(0.0); 3]), Err(Error::ZeroVector));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary_group(&mut rng, 3);
        for _ in 0..100 {
            let z = random_vec(&mut rng, 3);
            assert!(phi_sigma(&u, &z).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn phi_sigma_is_scale_invariant_and_a_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let s = random_group(&mut rng, 4, 0.5);
            let t = random_group(&mut rng, 4, 0.5);
            let z = random_vec(&mut rng, 4);
            let lz: Vec<Complex64> = z.iter().map(|x| x * Complex64::new(-2.0, 0.5)).collect();
            assert!((phi_sigma(&s, &z).unwrap() - phi_sigma(&s, &lz).unwrap()).abs() < 1e-12);
            let st = s.compose(&t).unwrap();
            let lhs = phi_sigma(&st, &z).unwrap();
            let rhs = phi_sigma(&s, &t.apply(&z)).unwrap() + phi_sigma(&t, &z).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenweight_examples() {
        let x = DiagonalField::from_integers(&[1, 1, -1, -1]).unwrap();
        let f = HomogeneousPolynomial::parse("1 0 | 2 0 0 1\n1 0 | 0 2 1 0", 4).unwrap();
        assert_eq!(x.eigenweight(&f).unwrap(), q(1));

        let x = DiagonalField::from_integers(&[1, 0, -1]).unwrap();
        let conic = HomogeneousPolynomial::parse("1 0 | 0 2 0\n-1 0 | 1 0 1", 3).unwrap();
        assert_eq!(x.eigenweight(&conic).unwrap(), q(0));

        let g = HomogeneousPolynomial::parse("1 0 | 2 0 0\n1 0 | 0 2 0", 3).unwrap();
        match x.eigenweight(&g).unwrap_err() {
            Error::NotEigenvector {
                first_weight,
                second_weight,
                ..
            } => {
                let mut w = [first_weight, second_weight];
                w.sort();
                assert_eq!(w, ["0".to_string(), "2".to_string()]);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn trace_must_vanish() {
        assert!(matches!(DiagonalField::parse("1,1,1"), Err(Error::TraceNotZero(_))));
        assert_eq!(DiagonalField::parse("1/2,-1/2").unwrap().dim(), 2);
        assert!(DiagonalField::parse("1,x").is_err());
    }

    #[test]
    fn sigma_specs_and_matrix_files() {
        let s = GroupElement::parse_diag_spec("diag:2,1,1/2").unwrap();
        assert!(s.sl_flag());
        let e = GroupElement::parse_diag_spec("expdiag:0.1,-0.1").unwrap();
        assert!((e.matrix()[(0, 0)].re - 0.1f64.exp()).abs() < 1e-15);
        let m = GroupElement::parse_matrix("# rotation\n0 0 1 0\n1 0 0 0\n").unwrap();
        assert!(m.is_unitary(1e-15));
        assert!((m.det() + c(1.0)).norm() < 1e-15);
        assert!(GroupElement::parse_matrix("1 0 0\n").is_err());
        assert!(GroupElement::parse_diag_spec("rot:1").is_err());
    }

    #[test]
    fn exp_of_field_is_special_linear() {
        let x = DiagonalField::from_integers(&[1, 1, 1, -3]).unwrap();
        let s = x.exp(0.37);
        assert!(s.sl_flag());
        assert_eq!(s.diagonal_log_norm().map(|v| (v - 1.11).abs() < 1e-12), Some(true));
    }
}
