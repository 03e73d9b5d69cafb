use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{GroupElement, HomogeneousPolynomial};

pub fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

/// Dense random polynomial of the given degree.
pub fn random_poly(rng: &mut impl Rng, num_vars: usize, degree: u32) -> HomogeneousPolynomial {
    let terms: Vec<_> = exponents(num_vars, degree)
        .into_iter()
        .map(|e| (e, gaussian(rng)))
        .collect();
    HomogeneousPolynomial::from_terms(num_vars, terms).unwrap()
}

pub fn exponents(num_vars: usize, degree: u32) -> Vec<Vec<u32>> {
    if num_vars == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for p in 0..=degree {
        for mut rest in exponents(num_vars - 1, degree - p) {
            rest.insert(0, p);
            out.push(rest);
        }
    }
    out
}

/// `I + scale·G` with `G` complex Gaussian.
pub fn random_group(rng: &mut impl Rng, n: usize, scale: f64) -> GroupElement {
    let m = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) + gaussian(rng) * scale
    });
    GroupElement::new(m).unwrap()
}

pub fn random_unitary_group(rng: &mut impl Rng, n: usize) -> GroupElement {
    GroupElement::new(crate::variety_numerics::haar_unitary(rng, n)).unwrap()
}
