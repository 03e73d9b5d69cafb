use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fiber::BranchPoint;
use super::forms::{det_real, fs_pullback, fs_pullback_pushed, FormMatrix};
use super::frame::ChartFrame;
use crate::error::{Error, Result};
use crate::poly_core::GroupElement;

/// Pulled-back metric matrix of `ω` (`None`) or of `ω_σ` at a branch point.
pub(crate) fn metric_at(bp: &BranchPoint, sigma: Option<&GroupElement>) -> DMatrix<Complex64> {
    match sigma {
        None => fs_pullback(&bp.z, &bp.lift),
        Some(s) => fs_pullback_pushed(s, &bp.z, &bp.lift),
    }
}

fn metric_det(bp: &BranchPoint, sigma: Option<&GroupElement>) -> Result<f64> {
    let d = det_real(&metric_at(bp, sigma));
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::StencilIllConditioned(format!("metric determinant {d:e} at a stencil point")))
    }
}

/// Complex Hessians `K_ab = ∂_a ∂̄_b log det A_σ` at step `h`, one per σ;
/// `center` holds `det A_σ` at `bp`.
///
/// Each diagonal entry and each polarization `e_a + e_b`, `e_a + i e_b` uses
/// the 5-point Laplacian along the complex line through `u`.
fn complex_hessians(
    frame: &ChartFrame,
    bp: &BranchPoint,
    sigmas: &[Option<&GroupElement>],
    h: f64,
    center: &[f64],
    cond_limit: f64,
) -> Result<Vec<DMatrix<Complex64>>> {
    let n = bp.u.len();
    let rho = [
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
    ];
    let laplacian = |dir: &[Complex64]| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; sigmas.len()];
        for r in rho {
            let u: Vec<Complex64> = bp.u.iter().zip(dir).map(|(u, d)| u + d * r * h).collect();
            let moved = frame.continue_branch(bp, &u, cond_limit)?;
            for (k, s) in sigmas.iter().enumerate() {
                // log of the ratio to the center value keeps the stencil differences exact to ~ε
                acc[k] += (metric_det(&moved, *s)? / center[k]).ln();
            }
        }
        Ok(acc.iter().map(|a| a / (4.0 * h * h)).collect())
    };
    let mut out = vec![DMatrix::zeros(n, n); sigmas.len()];
    let mut diag = vec![vec![0.0; n]; sigmas.len()];
    let unit = |a: usize, c: Complex64| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[a] = c;
        v
    };
    for a in 0..n {
        let q = laplacian(&unit(a, Complex64::new(1.0, 0.0)))?;
        for k in 0..sigmas.len() {
            diag[k][a] = q[k];
            out[k][(a, a)] = Complex64::new(q[k], 0.0);
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            let mut v1 = unit(a, Complex64::new(1.0, 0.0));
            v1[b] = Complex64::new(1.0, 0.0);
            let mut v2 = unit(a, Complex64::new(1.0, 0.0));
            v2[b] = Complex64::new(0.0, 1.0);
            let q1 = laplacian(&v1)?;
            let q2 = laplacian(&v2)?;
            for k in 0..sigmas.len() {
                let base = diag[k][a] + diag[k][b];
                let kab = Complex64::new((q1[k] - base) / 2.0, (q2[k] - base) / 2.0);
                out[k][(a, b)] = kab;
                out[k][(b, a)] = kab.conj();
            }
        }
    }
    Ok(out)
}

/// Largest accepted gap between the `h` and `2h` Hessians, relative to the
/// size of the Hessian plus the metric.
const STEP_CONTROL_TOL: f64 = 1e-2;
/// Step halvings allowed before the stencil is declared ill-conditioned.
const MAX_HALVINGS: usize = 12;

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Ricci forms at `bp` of `ω|_M` (entry `None`) and of `ω_σ|_M` (entry `Some(σ)`),
/// all from one shared finite-difference stencil.
///
/// `h` is relative: the starting stencil radius is `h·(1+|u|²)`, the radial
/// length scale of the Fubini-Study chart at `u`. The `h` and
/// `2h` stencils are compared and the radius halved until they agree, which
/// keeps the stencil inside the neighbourhood where the branch is smooth.
/// With `richardson` the pair is combined to cancel the leading error term.
pub fn ricci_matrices(
    frame: &ChartFrame,
    bp: &BranchPoint,
    sigmas: &[Option<&GroupElement>],
    h: f64,
    richardson: bool,
    cond_limit: f64,
) -> Result<Vec<FormMatrix>> {
    let u2 = bp.u.iter().map(|x| x.norm_sqr()).sum::<f64>();
    let mut step = h * (1.0 + u2);
    let center = sigmas.iter().map(|s| metric_det(bp, *s)).collect::<Result<Vec<_>>>()?;
    let metric_scale: Vec<f64> = sigmas.iter().map(|s| max_abs(&metric_at(bp, *s))).collect();
    let mut coarse = complex_hessians(frame, bp, sigmas, 2.0 * step, &center, cond_limit)?;
    let mut halvings = 0;
    let hess = loop {
        let fine = complex_hessians(frame, bp, sigmas, step, &center, cond_limit)?;
        let settled = fine
            .iter()
            .zip(&coarse)
            .zip(&metric_scale)
            .all(|((f, c), m)| max_abs(&(f - c)) <= STEP_CONTROL_TOL * (max_abs(f) + m));
        if settled {
            break if richardson {
                fine.into_iter()
                    .zip(coarse)
                    .map(|(f, c)| (f * Complex64::new(4.0, 0.0) - c) / Complex64::new(3.0, 0.0))
                    .collect::<Vec<_>>()
            } else {
                fine
            };
        }
        halvings += 1;
        if halvings > MAX_HALVINGS {
            return Err(Error::StencilIllConditioned(format!(
                "finite differences did not settle down to radius {step:e}"
            )));
        }
        coarse = fine;
        step *= 0.5;
    };
    // Metric matrices are the conjugates of ∂∂̄-coefficient matrices, and Ric = −∂∂̄ log det.
    Ok(hess
        .into_iter()
        .map(|k| FormMatrix::hermitian_part(-k.map(|x| x.conj())))
        .collect())
}

/// Single-form variant of [`ricci_matrices`].
pub fn ricci_matrix(
    frame: &ChartFrame,
    bp: &BranchPoint,
    sigma: Option<&GroupElement>,
    h: f64,
    richardson: bool,
    cond_limit: f64,
) -> Result<FormMatrix> {
    Ok(ricci_matrices(frame, bp, &[sigma], h, richardson, cond_limit)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::{catalog_entry, CompleteIntersection};
    use crate::variety_numerics::frame::make_frame;
    use crate::variety_numerics::rng::{sample_base, substream};

    fn rel_err(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
        (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn hyperplane_ricci_is_twice_the_metric() {
        let h = catalog_entry("hyperplane_p2").unwrap();
        let frame = make_frame(&h, 2).unwrap();
        let mut rng = substream(2, 0);
        for _ in 0..20 {
            let u = sample_base(1, &mut rng);
            for bp in frame.solve_fiber(&u, 1e8).unwrap() {
                let r = ricci_matrix(&frame, &bp, None, 1e-4, true, 1e8).unwrap();
                let a = metric_at(&bp, None);
                let e = rel_err(r.matrix(), &(a * Complex64::new(2.0, 0.0)));
                assert!(e < 1e-6, "relative error {e}");
            }
        }
    }

    #[test]
    fn projective_plane_ricci_is_three_times_the_metric() {
        let p = CompleteIntersection::projective_space(2);
        let frame = make_frame(&p, 3).unwrap();
        let mut rng = substream(3, 0);
        for _ in 0..10 {
            let u = sample_base(2, &mut rng);
            let bp = &frame.solve_fiber(&u, 1e8).unwrap()[0];
            let r = ricci_matrix(&frame, bp, None, 1e-4, true, 1e8).unwrap();
            let a = metric_at(bp, None);
            assert!(rel_err(r.matrix(), &(a * Complex64::new(3.0, 0.0))) < 1e-6);
        }
    }

    #[test]
    fn pushed_forms_share_the_stencil() {
        // ω_σ on P¹ ≅ hyperplane is again Fubini-Study, so Ric(ω_σ) = 2ω_σ.
        let h = catalog_entry("hyperplane_p2").unwrap();
        let frame = make_frame(&h, 4).unwrap();
        let sigma = GroupElement::exp_diagonal(&[0.2, -0.1, -0.1]).unwrap();
        let u = [Complex64::new(0.3, -0.4)];
        let bp = &frame.solve_fiber(&u, 1e8).unwrap()[0];
        let rs = ricci_matrices(&frame, bp, &[None, Some(&sigma)], 1e-4, true, 1e8).unwrap();
        let a = metric_at(bp, Some(&sigma));
        assert!(rel_err(rs[1].matrix(), &(a * Complex64::new(2.0, 0.0))) < 1e-6);
    }
}
