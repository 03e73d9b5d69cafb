//! Homogeneous polynomials, complete intersections, group elements and
//! diagonal vector fields.

mod group;
mod polynomial;
mod variety;

#[cfg(test)]
pub(crate) mod test_support;

pub use group::{phi_sigma, DiagonalField, GroupElement};
pub use polynomial::{Convention, HomogeneousPolynomial};
pub use variety::{catalog, catalog_entry, catalog_text, CompleteIntersection, CATALOG_NAMES};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Parses an exact rational from `p`, `p/q` or a finite decimal such as `-0.125`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

/// Parses a comma-separated list of rationals, e.g. `1,1,1,-3` or `1/2, -1/2`.
pub fn parse_rational_list(s: &str) -> Option<Vec<BigRational>> {
    s.split(',').map(parse_rational).collect()
}

/// Renders a rational as `p` or `p/q`.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
