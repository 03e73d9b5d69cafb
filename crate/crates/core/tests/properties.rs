use futaki_core::functionals::{aubin_yau, mabuchi};
use futaki_core::futaki_exact::{chow_weights, futaki_lu, futaki_of_field, futaki_via_weights};
use futaki_core::poly_core::{
    catalog_entry, phi_sigma, CompleteIntersection, Convention, DiagonalField, GroupElement, HomogeneousPolynomial,
};
use futaki_core::variety_numerics::{mixed_det, Quadrature};
use futaki_core::Complex64;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn vector(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(), n).prop_filter("nonzero", |z| z.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-3)
}

fn exponents(num_vars: usize, degree: u32) -> Vec<Vec<u32>> {
    if num_vars == 1 {
        return vec![vec![degree]];
    }
    (0..=degree)
        .flat_map(|p| {
            exponents(num_vars - 1, degree - p).into_iter().map(move |mut rest| {
                rest.insert(0, p);
                rest
            })
        })
        .collect()
}

/// Dense polynomial with every coefficient bounded away from zero.
fn polynomial(num_vars: usize, degree: u32) -> impl Strategy<Value = HomogeneousPolynomial> {
    let exps = exponents(num_vars, degree);
    prop::collection::vec((0.2f64..1.0, 0.0f64..std::f64::consts::TAU), exps.len()).prop_map(move |cs| {
        let terms = exps.iter().cloned().zip(cs.into_iter().map(|(r, t)| Complex64::from_polar(r, t)));
        HomogeneousPolynomial::from_terms(num_vars, terms).unwrap()
    })
}

/// `I + G/2` with `‖G‖` small enough to stay well conditioned.
fn group(n: usize) -> impl Strategy<Value = GroupElement> {
    prop::collection::vec(complex(), n * n).prop_map(move |g| {
        let m = DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::zero() };
            id + g[i * n + j] * (0.5 / n as f64)
        });
        GroupElement::new(m).unwrap()
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec(complex(), n * n).prop_map(move |g| {
        let g = DMatrix::from_vec(n, n, g);
        (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
    })
}

fn rel_gap(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn max_coeff_gap(f: &HomogeneousPolynomial, g: &HomogeneousPolynomial) -> f64 {
    let scale = f.coefficient_norm().max(g.coefficient_norm());
    f.terms()
        .chain(g.terms())
        .map(|(e, _)| (f.coefficient(e) - g.coefficient(e)).norm())
        .fold(0.0, f64::max)
        / scale
}

fn rational(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_is_homogeneous(f in polynomial(3, 3), z in vector(3), lambda in complex()) {
        prop_assume!(lambda.norm() > 0.1);
        let scaled: Vec<_> = z.iter().map(|c| c * lambda).collect();
        let lhs = f.eval(&scaled).unwrap();
        let rhs = f.eval(&z).unwrap() * lambda.powu(3);
        prop_assume!(rhs.norm() > 1e-8);
        prop_assert!(rel_gap(lhs, rhs) < 1e-12);
    }

    #[test]
    fn euler_identity_holds(f in polynomial(4, 2), z in vector(4)) {
        let (v, grad) = f.eval_and_gradient(&z).unwrap();
        let euler: Complex64 = z.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let scale = grad.iter().zip(&z).map(|(g, a)| (g * a).norm()).sum::<f64>().max(1e-12);
        prop_assert!((euler - v * 2.0).norm() / scale < 1e-12);
    }

    #[test]
    fn compose_round_trip_recovers_polynomial(f in polynomial(3, 2), sigma in group(3)) {
        let there = f.transform(&sigma, Convention::Compose).unwrap();
        let back = there.transform(&sigma.inverse_element(), Convention::Compose).unwrap();
        prop_assert!(max_coeff_gap(&f, &back) < 1e-10);
    }

    #[test]
    fn compose_inverse_is_compose_with_inverse(f in polynomial(3, 2), sigma in group(3)) {
        let a = f.transform(&sigma, Convention::ComposeInverse).unwrap();
        let b = f.transform(&sigma.inverse_element(), Convention::Compose).unwrap();
        prop_assert!(max_coeff_gap(&a, &b) < 1e-10);
    }

    #[test]
    fn compose_substitutes_linearly(f in polynomial(3, 3), sigma in group(3), z in vector(3)) {
        let g = f.transform(&sigma, Convention::Compose).unwrap();
        let lhs = g.eval(&z).unwrap();
        let rhs = f.eval(&sigma.apply(&z)).unwrap();
        prop_assume!(rhs.norm() > 1e-6);
        prop_assert!(rel_gap(lhs, rhs) < 1e-10);
    }

    #[test]
    fn eigenweight_ignores_scaling(
        weights in prop::collection::vec(-5i64..=5, 3),
        exp in prop::sample::select(exponents(4, 3)),
        lambda in complex(),
    ) {
        prop_assume!(lambda.norm() > 1e-3);
        let mut w: Vec<BigRational> = weights.iter().map(|&a| rational(a)).collect();
        w.push(-w.iter().sum::<BigRational>());
        let x = DiagonalField::new(w).unwrap();
        let f = HomogeneousPolynomial::from_terms(4, [(exp, Complex64::new(1.0, 0.0))]).unwrap();
        prop_assert_eq!(x.eigenweight(&f).unwrap(), x.eigenweight(&f.scaled(lambda)).unwrap());
    }

    #[test]
    fn phi_is_a_cocycle(sigma in group(3), tau in group(3), z in vector(3)) {
        let st = sigma.compose(&tau).unwrap();
        let lhs = phi_sigma(&st, &z).unwrap();
        let rhs = phi_sigma(&sigma, &tau.apply(&z)).unwrap() + phi_sigma(&tau, &z).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn phi_is_scale_invariant(sigma in group(4), z in vector(4), lambda in complex()) {
        prop_assume!(lambda.norm() > 1e-2);
        let scaled: Vec<_> = z.iter().map(|c| c * lambda).collect();
        prop_assert!((phi_sigma(&sigma, &z).unwrap() - phi_sigma(&sigma, &scaled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mixed_det_is_symmetric(a in hermitian(3), b in hermitian(3), c in hermitian(3)) {
        let abc = mixed_det(&[&a, &b, &c]).unwrap();
        for perm in [[&b, &a, &c], [&c, &b, &a], [&a, &c, &b], [&b, &c, &a]] {
            prop_assert!((abc - mixed_det(&perm).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_det_is_multilinear(a in hermitian(2), b in hermitian(2), c in hermitian(2), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let combo = &a * Complex64::new(s, 0.0) + &b * Complex64::new(t, 0.0);
        let lhs = mixed_det(&[&combo, &c]).unwrap();
        let rhs = s * mixed_det(&[&a, &c]).unwrap() + t * mixed_det(&[&b, &c]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn mixed_det_of_equal_forms_is_det(a in hermitian(3)) {
        let det = a.determinant().re;
        prop_assert!((mixed_det(&[&a, &a, &a]).unwrap() - det).abs() < 1e-12);
    }
}

/// Degrees with `1 <= s <= N <= 8` and `d_i <= 5`.
fn dimensions() -> impl Strategy<Value = (usize, Vec<u32>)> {
    (1usize..=8).prop_flat_map(|n| (Just(n), prop::collection::vec(1u32..=5, 1..=n.min(3))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lu_formula_matches_chow_weights((n, degrees) in dimensions(), kappa in prop::collection::vec(-7i64..=7, 3)) {
        let kappa: Vec<BigRational> = kappa[..degrees.len()].iter().map(|&k| rational(k)).collect();
        let cw = chow_weights(n, &degrees).unwrap();
        prop_assert_eq!(futaki_lu(n, &degrees, &kappa).unwrap(), futaki_via_weights(&cw, &kappa).unwrap());
    }

    #[test]
    fn chow_weight_invariants((n, degrees) in dimensions()) {
        let cw = chow_weights(n, &degrees).unwrap();
        let dim = n - degrees.len();
        let m = rational(cw.m);
        let deg = BigRational::from_integer(cw.degree.clone());
        prop_assert_eq!(cw.v.last().unwrap(), &cw.degree);
        for (k, &d) in degrees.iter().enumerate() {
            let mp = num_traits::pow(m.clone(), dim);
            let a = -rational(dim as i64 + 1) * &mp * &deg + &mp * &m * &deg / rational(d as i64);
            prop_assert_eq!(&cw.a[k], &a);
            if cw.m > 0 {
                prop_assert!(!cw.q[k].is_negative());
            }
        }
    }

    #[test]
    fn futaki_of_monomial_system_matches_lu(
        weights in prop::collection::vec(-4i64..=4, 3),
        picks in prop::collection::vec(0usize..1000, 2),
        degrees in prop::collection::vec(1u32..=3, 2),
    ) {
        let mut w: Vec<BigRational> = weights.iter().map(|&a| rational(a)).collect();
        w.push(-w.iter().sum::<BigRational>());
        let x = DiagonalField::new(w).unwrap();
        let polys: Vec<_> = degrees
            .iter()
            .zip(&picks)
            .map(|(&d, &p)| {
                let exps = exponents(4, d);
                HomogeneousPolynomial::from_terms(4, [(exps[p % exps.len()].clone(), Complex64::new(1.0, 0.0))]).unwrap()
            })
            .collect();
        let ci = CompleteIntersection::new(3, polys).unwrap();
        let rep = futaki_of_field(&ci, &x).unwrap();
        prop_assert_eq!(rep.value, futaki_lu(3, &degrees, &rep.kappa).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn functional_values_equal_their_term_sums(logs in prop::collection::vec(-0.3f64..0.3, 3), seed in any::<u64>()) {
        let ci = catalog_entry("conic_p2").unwrap();
        let sigma = GroupElement::exp_diagonal(&logs).unwrap();
        let q = Quadrature::default().with_samples(1000).with_seed(seed);
        prop_assert!(aubin_yau(&ci, &sigma, &q).unwrap().bookkeeping_gap() < 1e-12);
        prop_assert!(mabuchi(&ci, &sigma, &q).unwrap().bookkeeping_gap() < 1e-12);
    }

    #[test]
    fn rescaling_sigma_shifts_aubin_yau(logs in prop::collection::vec(-0.3f64..0.3, 3), c in 0.5f64..2.0, seed in any::<u64>()) {
        // cσ has potential φ_σ + 2 log c and the same pushed metric
        let ci = catalog_entry("conic_p2").unwrap();
        let sigma = GroupElement::exp_diagonal(&logs).unwrap();
        let shifted: Vec<f64> = logs.iter().map(|l| l + c.ln()).collect();
        let scaled = GroupElement::exp_diagonal(&shifted).unwrap();
        let q = Quadrature::default().with_samples(2000).with_seed(seed);
        let a = aubin_yau(&ci, &sigma, &q).unwrap().value;
        let b = aubin_yau(&ci, &scaled, &q).unwrap().value;
        let expected = 2.0 * 2.0 * c.ln();
        prop_assert!((b.value - a.value - expected).abs() <= 4.0 * (a.stderr + b.stderr) + 1e-12);
    }
}
