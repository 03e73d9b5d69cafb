//! Integration over complete intersections through a branched cover of `P^n`.
//!
//! A [`ChartFrame`] presents `M` over the chart `(1, u)` of `P^n`; every base
//! point carries `D` [`BranchPoint`]s with their lift Jacobians. Top-degree
//! forms become densities `n!·MixedDet(…)·μ` and are integrated against the
//! Fubini-Study measure of the base by Monte Carlo.

mod fiber;
mod forms;
mod frame;
mod integrate;
mod ricci;
mod rng;

pub use fiber::{solve_fiber, BranchPoint};
pub use forms::{fs_ambient, fs_pushed, mixed_det, pullback_form, FormMatrix};
pub use frame::{make_frame, ChartFrame, MAX_FRAME_ATTEMPTS, MIN_GENERICITY};
pub use integrate::{integrate, integrate_joint, integrate_samples, pairwise_sum, MCEstimate, Quadrature, SampleSet};
pub use ricci::{ricci_matrices, ricci_matrix};
pub use rng::{complex_gaussian, derive_seed, haar_unitary, sample_base, substream};

pub(crate) use forms::{det_real, mixed_det_powers};
pub(crate) use ricci::metric_at;

use crate::error::Result;
use crate::poly_core::CompleteIntersection;

/// `ω^n`-density of `M` relative to the base measure at `bp`.
pub fn volume_density(bp: &BranchPoint) -> f64 {
    det_real(&metric_at(bp, None)) / bp.base_det
}

/// `∫_M ω^n`, which equals the degree `D`.
pub fn volume(ci: &CompleteIntersection, q: &Quadrature) -> Result<MCEstimate> {
    let frame = make_frame(ci, q.seed)?;
    integrate(&frame, |bp| Ok(volume_density(bp)), q)
}

/// `∫_M Ric(ω) ∧ ω^{n−1}`, which equals `c₁(M)·[ω]^{n−1} = m·D`.
pub fn ricci_pairing(ci: &CompleteIntersection, q: &Quadrature) -> Result<MCEstimate> {
    let frame = make_frame(ci, q.seed)?;
    integrate(
        &frame,
        |bp| {
            let a = metric_at(bp, None);
            let r = ricci_matrix(&frame, bp, None, q.fd_step, q.richardson, q.cond_limit)?;
            let mut args = vec![&a; a.nrows()];
            args[0] = r.matrix();
            Ok(mixed_det(&args)? / bp.base_det)
        },
        q,
    )
}

/// Smallest normalized Jacobian singular value of `(F_1, …, F_s)` over
/// `samples` random points of `M`; zero (up to round-off) signals a singular
/// point. Probabilistic: a finite singular locus is missed almost surely.
pub fn jacobian_rank_margin(ci: &CompleteIntersection, samples: usize, seed: u64) -> Result<f64> {
    use nalgebra::DMatrix;
    let frame = make_frame(ci, seed)?;
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        let mut rng = substream(seed, i as u64);
        let u = sample_base(ci.dim(), &mut rng);
        let bps = match frame.solve_fiber(&u, f64::INFINITY) {
            Ok(b) => b,
            Err(e) if e.is_sample_rejection() => continue,
            Err(e) => return Err(e),
        };
        for bp in bps {
            let zn = bp.z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let z: Vec<_> = bp.z.iter().map(|x| x / zn).collect();
            let mut jac = DMatrix::zeros(ci.codim(), ci.num_vars());
            for (r, f) in ci.polys().iter().enumerate() {
                let (_, g) = f.eval_and_gradient(&z)?;
                let scale = f.coefficient_norm();
                for (c, v) in g.iter().enumerate() {
                    jac[(r, c)] = v / scale;
                }
            }
            let m = if ci.codim() == 0 { 1.0 } else { jac.singular_values().min() };
            worst = worst.min(m);
        }
    }
    Ok(worst)
}
