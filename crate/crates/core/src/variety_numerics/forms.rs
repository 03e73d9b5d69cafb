use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly_core::GroupElement;

/// Coefficient matrix `A` of a real (1,1)-form `(i/2π) Σ A_jk du_j ∧ dū_k`.
///
/// With `μ = ∏ dx_j dy_j / π`, `α_1 ∧ … ∧ α_n = n!·MixedDet(A_1, …, A_n)·μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormMatrix {
    a: DMatrix<Complex64>,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl FormMatrix {
    pub fn new(a: DMatrix<Complex64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let scale = a.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let n = a.nrows();
        for i in 0..n {
            for j in 0..=i {
                if (a[(i, j)] - a[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::InvalidDimensions(format!(
                        "form matrix is not Hermitian at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { a })
    }

    /// Wraps a matrix known to be Hermitian up to round-off, symmetrizing it.
    pub(crate) fn hermitian_part(a: DMatrix<Complex64>) -> Self {
        let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        Self { a: h }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn det(&self) -> f64 {
        det_real(&self.a)
    }
}

fn norm_sqr(z: &[Complex64]) -> f64 {
    z.iter().map(|x| x.norm_sqr()).sum()
}

/// `(|z|² I − z z†) / |z|⁴`.
pub fn fs_ambient(z: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let r2 = norm_sqr(z);
    if r2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let n = z.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { r2 } else { 0.0 };
        (Complex64::new(id, 0.0) - z[i] * z[j].conj()) / (r2 * r2)
    }))
}

/// `σ† fs_ambient(σz) σ`.
pub fn fs_pushed(sigma: &GroupElement, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let sz = sigma.apply(z);
    let a = fs_ambient(&sz)?;
    Ok(sigma.matrix().adjoint() * a * sigma.matrix())
}

/// `L† A L`.
pub fn pullback_form(z: &[Complex64], lift: &DMatrix<Complex64>, ambient: &DMatrix<Complex64>) -> Result<FormMatrix> {
    let n1 = z.len();
    if lift.nrows() != n1 {
        return Err(Error::DimensionMismatch {
            expected: n1,
            found: lift.nrows(),
        });
    }
    if ambient.nrows() != n1 || ambient.ncols() != n1 {
        return Err(Error::DimensionMismatch {
            expected: n1,
            found: ambient.nrows(),
        });
    }
    Ok(FormMatrix::hermitian_part(lift.adjoint() * ambient * lift))
}

/// `L† fs_ambient(z) L` without forming the ambient matrix.
///
/// Uses `fs_ambient(z) = P/|z|²` with `P` the projector onto `z^⊥`, so the
/// result is the Gram matrix of `PL` and stays positive semidefinite.
pub(crate) fn fs_pullback(z: &[Complex64], lift: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let r2 = norm_sqr(z);
    let (rows, n) = lift.shape();
    let mut pl = lift.clone();
    for a in 0..n {
        let c: Complex64 = (0..rows).map(|j| z[j].conj() * lift[(j, a)]).sum::<Complex64>() / r2;
        for j in 0..rows {
            pl[(j, a)] -= z[j] * c;
        }
    }
    pl.adjoint() * pl / Complex64::new(r2, 0.0)
}

/// `L† σ† fs_ambient(σz) σ L`.
pub(crate) fn fs_pullback_pushed(sigma: &GroupElement, z: &[Complex64], lift: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let sz = sigma.apply(z);
    let sl = sigma.matrix() * lift;
    fs_pullback(&sz, &sl)
}

/// Real part of the determinant; the inputs are Hermitian so the imaginary
/// part is round-off.
pub(crate) fn det_real(a: &DMatrix<Complex64>) -> f64 {
    match a.nrows() {
        0 => 1.0,
        1 => a[(0, 0)].re,
        2 => (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).re,
        _ => a.clone().lu().determinant().re,
    }
}

type SignedPerms = Vec<(Vec<usize>, f64)>;

const CACHED_PERM_ORDER: usize = 6;

fn cached_permutations(n: usize) -> std::borrow::Cow<'static, SignedPerms> {
    static CACHE: std::sync::OnceLock<Vec<SignedPerms>> = std::sync::OnceLock::new();
    if n > CACHED_PERM_ORDER {
        return std::borrow::Cow::Owned(signed_permutations(n));
    }
    let all = CACHE.get_or_init(|| (0..=CACHED_PERM_ORDER).map(signed_permutations).collect());
    std::borrow::Cow::Borrowed(&all[n])
}

/// All permutations of `0..n` with their signs.
fn signed_permutations(n: usize) -> SignedPerms {
    if n == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let mut out = Vec::new();
    for (p, s) in signed_permutations(n - 1) {
        // insert n-1 at every position; moving it left past k entries flips sign k times
        for pos in (0..=p.len()).rev() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            let flips = p.len() - pos;
            out.push((q, if flips % 2 == 0 { s } else { -s }));
        }
    }
    out
}

/// Mixed determinant, the symmetric multilinear form with `MixedDet(A,…,A) = det A`.
///
/// Evaluated as `(1/n!) Σ_σ sgn σ · det M_σ` where row `k` of `M_σ` is row
/// `σ(k)` of `A_k`.
pub fn mixed_det(forms: &[&DMatrix<Complex64>]) -> Result<f64> {
    let n = forms.len();
    for a in forms {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.nrows(),
            });
        }
    }
    if n == 0 {
        return Ok(1.0);
    }
    if forms.iter().all(|a| std::ptr::eq(*a, forms[0])) {
        return Ok(det_real(forms[0]));
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut fact = 1.0;
    let mut m = DMatrix::zeros(n, n);
    for (perm, sign) in cached_permutations(n).iter() {
        for k in 0..n {
            for j in 0..n {
                m[(k, j)] = forms[k][(perm[k], j)];
            }
        }
        let d = match n {
            1 => m[(0, 0)],
            2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
            _ => m.clone().lu().determinant(),
        };
        total += d * *sign;
    }
    for k in 2..=n {
        fact *= k as f64;
    }
    let value = total / fact;
    let scale: f64 = forms
        .iter()
        .map(|a| a.iter().map(|x| x.norm()).fold(0.0, f64::max))
        .product::<f64>()
        .max(f64::MIN_POSITIVE);
    debug_assert!(value.im.abs() <= 1e-9 * scale.max(value.re.abs()), "mixed determinant not real: {value}");
    Ok(value.re)
}

/// `MixedDet(A^{n−k}, B^k)` for `k = 0..=n`.
pub(crate) fn mixed_det_powers(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    (0..=n)
        .map(|k| {
            let args: Vec<&DMatrix<Complex64>> = (0..n).map(|i| if i < n - k { a } else { b }).collect();
            mixed_det(&args).expect("square forms of equal size")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variety_numerics::rng::{complex_gaussian, haar_unitary, substream};

    fn random_hermitian(rng: &mut impl rand::Rng, n: usize) -> DMatrix<Complex64> {
        let g = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
        (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
    }

    fn diag(d: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(d.len(), d.len(), |i, j| Complex64::new(if i == j { d[i] } else { 0.0 }, 0.0))
    }

    #[test]
    fn mixed_det_examples() {
        let i2 = DMatrix::identity(2, 2);
        assert_eq!(mixed_det(&[&i2, &i2]).unwrap(), 1.0);
        let a = diag(&[1.0, 2.0]);
        let b = diag(&[3.0, 4.0]);
        assert!((mixed_det(&[&a, &b]).unwrap() - 5.0).abs() < 1e-15);
        assert!(matches!(mixed_det(&[&a]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mixed_det_of_equal_arguments_is_det() {
        let mut rng = substream(11, 0);
        for n in 1..=4 {
            for _ in 0..25 {
                let a = random_hermitian(&mut rng, n);
                let b = a.clone();
                let args: Vec<&DMatrix<Complex64>> = (0..n).map(|i| if i == 0 { &b } else { &a }).collect();
                let det = a.clone().lu().determinant().re;
                assert!((mixed_det(&args).unwrap() - det).abs() <= 1e-12 * det.abs().max(1.0));
            }
        }
    }

    #[test]
    fn mixed_det_symmetric_and_multilinear() {
        let mut rng = substream(12, 0);
        for n in 2..=4 {
            let ms: Vec<_> = (0..n).map(|_| random_hermitian(&mut rng, n)).collect();
            let args: Vec<&DMatrix<Complex64>> = ms.iter().collect();
            let base = mixed_det(&args).unwrap();
            let mut rev = args.clone();
            rev.reverse();
            assert!((mixed_det(&rev).unwrap() - base).abs() < 1e-12 * base.abs().max(1.0));

            let extra = random_hermitian(&mut rng, n);
            let sum = &ms[0] * Complex64::new(2.0, 0.0) + &extra;
            let mut a1 = args.clone();
            a1[0] = &sum;
            let mut a2 = args.clone();
            a2[0] = &extra;
            let lhs = mixed_det(&a1).unwrap();
            let rhs = 2.0 * base + mixed_det(&a2).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn permutation_signs() {
        let perms = signed_permutations(3);
        assert_eq!(perms.len(), 6);
        let total: f64 = perms.iter().map(|p| p.1).sum();
        assert_eq!(total, 0.0);
        for (p, s) in perms {
            let inversions = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            assert_eq!(s, if inversions % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn fs_examples() {
        let z = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let a = fs_ambient(&z).unwrap();
        assert_eq!(a, diag(&[0.0, 1.0]));
        assert_eq!(fs_ambient(&[Complex64::new(0.0, 0.0); 2]), Err(Error::ZeroVector));

        let mut rng = substream(13, 0);
        let u = GroupElement::new(haar_unitary(&mut rng, 3)).unwrap();
        for _ in 0..20 {
            let z: Vec<Complex64> = (0..3).map(|_| complex_gaussian(&mut rng)).collect();
            let d = fs_pushed(&u, &z).unwrap() - fs_ambient(&z).unwrap();
            assert!(d.iter().all(|x| x.norm() < 1e-12));
        }
    }

    #[test]
    fn pullback_congruence_and_fast_path() {
        let mut rng = substream(14, 0);
        let z: Vec<Complex64> = (0..4).map(|_| complex_gaussian(&mut rng)).collect();
        let l = DMatrix::from_fn(4, 2, |_, _| complex_gaussian(&mut rng));
        let b = DMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng));
        let amb = fs_ambient(&z).unwrap();
        let a = pullback_form(&z, &l, &amb).unwrap();
        let ab = pullback_form(&z, &(&l * &b), &amb).unwrap();
        let expect = b.adjoint() * a.matrix() * &b;
        assert!((ab.matrix() - expect).iter().all(|x| x.norm() < 1e-12));
        let fast = fs_pullback(&z, &l);
        assert!((fast - a.matrix()).iter().all(|x| x.norm() < 1e-12));
        let zero = pullback_form(&z, &l, &DMatrix::zeros(4, 4)).unwrap();
        assert!(zero.matrix().iter().all(|x| x.norm() == 0.0));
        assert!(pullback_form(&z[..3], &l, &amb).is_err());
    }
}
