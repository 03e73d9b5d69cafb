//! Exact Futaki invariants of complete intersections.
//!
//! Everything here is arbitrary-precision rational arithmetic; these values
//! are the oracles the numerical modules are checked against.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly_core::{CompleteIntersection, DiagonalField};

/// Chow-weight data of a complete intersection of multidegree `(d_1, …, d_s)` in `P^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChowWeights {
    pub ambient_dim: usize,
    pub degrees: Vec<u32>,
    /// `n = N − s`.
    pub dim: usize,
    /// `m = N + 1 − Σ d_i`.
    pub m: i64,
    /// `F(X) = Σ a_i κ_i`.
    pub a: Vec<BigRational>,
    /// Exponents `q_k = 1 − m / (d_k (n+1))`.
    pub q: Vec<BigRational>,
    /// `V_k = d_1 ⋯ d_k`.
    pub v: Vec<BigInt>,
    /// `n m / (n+1)`.
    pub kenergy_constant: BigRational,
    /// `D = d_1 ⋯ d_s`.
    pub degree: BigInt,
    /// `∫_M c_1(M) ∧ ω^{n−1} = m D`.
    pub c1_pairing: BigInt,
    /// `m ≤ 0`.
    pub non_fano: bool,
}

fn int(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

fn validate(ambient_dim: usize, degrees: &[u32]) -> Result<()> {
    let s = degrees.len();
    if ambient_dim == 0 || s == 0 || s > ambient_dim {
        return Err(Error::InvalidDimensions(format!(
            "need 1 <= s <= N, got N={ambient_dim}, s={s}"
        )));
    }
    if degrees.iter().any(|&d| d == 0) {
        return Err(Error::InvalidDimensions("degrees must be at least 1".into()));
    }
    Ok(())
}

fn m_of(ambient_dim: usize, degrees: &[u32]) -> i64 {
    ambient_dim as i64 + 1 - degrees.iter().map(|&d| d as i64).sum::<i64>()
}

fn degree_of(degrees: &[u32]) -> BigInt {
    degrees.iter().map(|&d| BigInt::from(d)).product()
}

pub fn chow_weights(ambient_dim: usize, degrees: &[u32]) -> Result<ChowWeights> {
    validate(ambient_dim, degrees)?;
    let s = degrees.len();
    let n = ambient_dim - s;
    let m = m_of(ambient_dim, degrees);
    let big_d = degree_of(degrees);
    let mq = int(m);
    let mn = num_traits::pow(mq.clone(), n);
    let mn1 = &mn * &mq;
    let np1 = int(n as i64 + 1);
    let d = int(big_d.clone());
    let a = degrees
        .iter()
        .map(|&di| -(&np1 * &mn * &d) + &mn1 * &d / int(di))
        .collect();
    let q = degrees
        .iter()
        .map(|&di| BigRational::one() - &mq / (int(di) * &np1))
        .collect();
    let v = (1..=s).map(|k| degree_of(&degrees[..k])).collect();
    Ok(ChowWeights {
        ambient_dim,
        degrees: degrees.to_vec(),
        dim: n,
        m,
        a,
        q,
        v,
        kenergy_constant: int(n as i64) * &mq / &np1,
        c1_pairing: BigInt::from(m) * &big_d,
        degree: big_d,
        non_fano: m <= 0,
    })
}

/// `(n+1) m^n D (−Σ κ_i + (m/(n+1)) Σ κ_i/d_i)`.
pub fn futaki_lu(ambient_dim: usize, degrees: &[u32], kappa: &[BigRational]) -> Result<BigRational> {
    validate(ambient_dim, degrees)?;
    if kappa.len() != degrees.len() {
        return Err(Error::InvalidDimensions(format!(
            "{} eigenweights for {} polynomials",
            kappa.len(),
            degrees.len()
        )));
    }
    let n = ambient_dim - degrees.len();
    let m = int(m_of(ambient_dim, degrees));
    let np1 = int(n as i64 + 1);
    let sum_k: BigRational = kappa.iter().sum();
    let sum_kd: BigRational = kappa.iter().zip(degrees).map(|(k, &d)| k / int(d)).sum();
    let bracket = -sum_k + &m / &np1 * sum_kd;
    Ok(np1 * num_traits::pow(m, n) * int(degree_of(degrees)) * bracket)
}

/// `Σ a_i κ_i`.
pub fn futaki_via_weights(cw: &ChowWeights, kappa: &[BigRational]) -> Result<BigRational> {
    if kappa.len() != cw.a.len() {
        return Err(Error::LengthMismatch {
            expected: cw.a.len(),
            found: kappa.len(),
        });
    }
    Ok(cw.a.iter().zip(kappa).map(|(a, k)| a * k).sum())
}

/// Exact Futaki invariant of a diagonal field together with the data that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FutakiReport {
    pub kappa: Vec<BigRational>,
    pub weights: ChowWeights,
    pub value: BigRational,
}

pub fn futaki_of_field(ci: &CompleteIntersection, x: &DiagonalField) -> Result<FutakiReport> {
    let kappa = eigenweights(ci, x)?;
    let weights = chow_weights(ci.ambient_dim(), &ci.degrees())?;
    let value = futaki_lu(ci.ambient_dim(), &ci.degrees(), &kappa)?;
    let check = futaki_via_weights(&weights, &kappa)?;
    assert_eq!(value, check, "the two exact Futaki expressions disagree");
    Ok(FutakiReport { kappa, weights, value })
}

/// `κ_i` with `X F_i = κ_i F_i`, one per defining polynomial.
pub fn eigenweights(ci: &CompleteIntersection, x: &DiagonalField) -> Result<Vec<BigRational>> {
    ci.polys()
        .iter()
        .enumerate()
        .map(|(i, f)| x.eigenweight_in(f, &format!("F_{}: ", i + 1)))
        .collect()
}

/// True when `q_k = 0` for every k.
pub fn all_q_vanish(cw: &ChowWeights) -> bool {
    cw.q.iter().all(Zero::is_zero)
}

/// True when every `q_k ≥ 0`.
pub fn q_nonnegative(cw: &ChowWeights) -> bool {
    cw.q.iter().all(|q| !q.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::catalog_entry;

    fn q(p: i64) -> BigRational {
        int(p)
    }

    #[test]
    fn worked_weights() {
        assert_eq!(chow_weights(3, &[2]).unwrap().a, vec![q(-16)]);
        assert_eq!(chow_weights(3, &[3]).unwrap().a, vec![q(-8)]);
        assert_eq!(chow_weights(4, &[2, 2]).unwrap().a, vec![q(-10), q(-10)]);
        assert_eq!(chow_weights(1, &[1]).unwrap().a, vec![q(0)]);
    }

    #[test]
    fn worked_invariants() {
        assert_eq!(futaki_lu(3, &[3], &[q(1)]).unwrap(), q(-8));
        assert_eq!(futaki_lu(4, &[2, 2], &[q(1), q(-1)]).unwrap(), q(0));
        assert_eq!(futaki_lu(3, &[2], &[q(2)]).unwrap(), q(-32));
        let cw = chow_weights(3, &[2]).unwrap();
        assert_eq!(futaki_via_weights(&cw, &[q(2)]).unwrap(), q(-32));
        let cw = chow_weights(3, &[3]).unwrap();
        assert_eq!(futaki_via_weights(&cw, &[q(3)]).unwrap(), q(-24));
        assert_eq!(futaki_via_weights(&cw, &[q(0)]).unwrap(), q(0));
        assert_eq!(
            futaki_via_weights(&cw, &[q(0), q(1)]),
            Err(Error::LengthMismatch { expected: 1, found: 2 })
        );
    }

    #[test]
    fn derived_constants() {
        let cw = chow_weights(4, &[2, 2]).unwrap();
        assert_eq!(cw.v, vec![BigInt::from(2), BigInt::from(4)]);
        assert_eq!(cw.degree, BigInt::from(4));
        assert_eq!(cw.c1_pairing, BigInt::from(4));
        assert_eq!(cw.kenergy_constant, BigRational::new(2.into(), 3.into()));
        assert_eq!(cw.q, vec![BigRational::new(5.into(), 6.into()); 2]);
        assert!(!cw.non_fano);
        let cubic = chow_weights(2, &[3]).unwrap();
        assert!(cubic.non_fano);
        assert_eq!(cubic.c1_pairing, BigInt::from(0));
        assert!(all_q_vanish(&chow_weights(3, &[1, 1]).unwrap()));
        assert!(matches!(chow_weights(2, &[]), Err(Error::InvalidDimensions(_))));
        assert!(matches!(chow_weights(1, &[1, 1]), Err(Error::InvalidDimensions(_))));
        assert!(matches!(chow_weights(2, &[0]), Err(Error::InvalidDimensions(_))));
    }

    #[test]
    fn fields_on_catalog_cones() {
        let cone = catalog_entry("quadric_cone_p3").unwrap();
        let r = futaki_of_field(&cone, &DiagonalField::from_integers(&[1, 1, 1, -3]).unwrap()).unwrap();
        assert_eq!((r.kappa.clone(), r.value), (vec![q(2)], q(-32)));

        let cubic = catalog_entry("cubic_cone_p3").unwrap();
        let r = futaki_of_field(&cubic, &DiagonalField::from_integers(&[-3, 1, 1, 1]).unwrap()).unwrap();
        assert_eq!((r.kappa.clone(), r.value), (vec![q(3)], q(-24)));

        let fermat = catalog_entry("fermat_quadric_p3").unwrap();
        let err = futaki_of_field(&fermat, &DiagonalField::from_integers(&[1, 1, -1, -1]).unwrap()).unwrap_err();
        match err {
            Error::NotEigenvector { context, .. } => assert_eq!(context, "F_1: "),
            e => panic!("unexpected {e:?}"),
        }
    }
}
