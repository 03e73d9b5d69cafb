use rayon::prelude::*;

use super::fiber::BranchPoint;
use super::frame::ChartFrame;
use super::rng::{sample_base, substream};
use crate::error::{Error, Result};

/// Redraws allowed for a single sample index before the run is abandoned.
const MAX_ATTEMPTS: u32 = 16;

/// Monte-Carlo settings shared by every integral in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub samples: usize,
    pub seed: u64,
    /// Relative finite-difference step: `h = fd_step · (1 + |u|²)`.
    pub fd_step: f64,
    pub richardson: bool,
    /// Branch points with condition number at or above this are redrawn.
    pub cond_limit: f64,
    /// Largest tolerated fraction of redrawn samples.
    pub reject_limit: f64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            samples: 200_000,
            seed: 0,
            fd_step: 1e-4,
            richardson: true,
            cond_limit: 1e8,
            reject_limit: 0.01,
            workers: None,
        }
    }
}

impl Quadrature {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidConfig("samples must be at least 2".into()));
        }
        if !(1e-6..=1e-2).contains(&self.fd_step) {
            return Err(Error::InvalidConfig(format!("fd_step {} outside [1e-6, 1e-2]", self.fd_step)));
        }
        if !(self.cond_limit > 1.0) {
            return Err(Error::InvalidConfig("cond_limit must exceed 1".into()));
        }
        if !(0.0..1.0).contains(&self.reject_limit) {
            return Err(Error::InvalidConfig("reject_limit must lie in [0, 1)".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        Ok(())
    }
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub rejected: u64,
    /// Set when the rejected fraction reaches half the rejection limit.
    pub warning: bool,
}

impl MCEstimate {
    /// A value known without sampling.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            samples: 0,
            seed: 0,
            rejected: 0,
            warning: false,
        }
    }

    /// `Σ c_i X_i` for independent estimates, errors added in quadrature.
    pub fn combine_independent(parts: &[(f64, MCEstimate)]) -> Self {
        let value = parts.iter().map(|(c, e)| c * e.value).sum();
        let var: f64 = parts.iter().map(|(c, e)| (c * e.stderr).powi(2)).sum();
        let first = parts.iter().map(|p| p.1).find(|e| e.samples > 0).unwrap_or(Self::exact(0.0));
        Self {
            value,
            stderr: var.sqrt(),
            samples: first.samples,
            seed: first.seed,
            rejected: parts.iter().map(|p| p.1.rejected).sum(),
            warning: parts.iter().any(|p| p.1.warning),
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            value: c * self.value,
            stderr: c.abs() * self.stderr,
            ..self
        }
    }

    /// `|value − target| ≤ k · stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

/// Per-sample rows of a vector-valued integrand, kept so that linear
/// combinations get correlation-aware standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    width: usize,
    values: Vec<f64>,
    samples: usize,
    seed: u64,
    rejected: u64,
    reject_limit: f64,
}

impl SampleSet {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Estimate of component `j`.
    pub fn estimate(&self, j: usize) -> MCEstimate {
        let mut coeffs = vec![0.0; self.width];
        coeffs[j] = 1.0;
        self.combination(&coeffs)
    }

    pub fn estimates(&self) -> Vec<MCEstimate> {
        (0..self.width).map(|j| self.estimate(j)).collect()
    }

    /// Estimate of `Σ_j c_j X_j` evaluated sample by sample.
    pub fn combination(&self, coeffs: &[f64]) -> MCEstimate {
        assert_eq!(coeffs.len(), self.width, "coefficient count");
        let column: Vec<f64> = self
            .values
            .chunks_exact(self.width)
            .map(|row| row.iter().zip(coeffs).map(|(v, c)| v * c).sum())
            .collect();
        let n = self.samples as f64;
        let mean = pairwise_sum(&column) / n;
        let dev: Vec<f64> = column.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1.0).max(1.0);
        let frac = self.rejected as f64 / n;
        MCEstimate {
            value: mean,
            stderr: (var / n).sqrt(),
            samples: self.samples,
            seed: self.seed,
            rejected: self.rejected,
            warning: frac >= 0.5 * self.reject_limit,
        }
    }
}

/// Fixed-shape pairwise summation; the tree depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Integrates a vector-valued function over the variety of `frame`.
///
/// For each base sample `u` the row is `Σ_b f(b)` over the fiber, where `f`
/// writes `width` values for branch `b`. The caller folds the density ratio
/// `det A_b / det A_base(u)` into `f`. Draws that fail with a sample-local
/// error are redrawn on the same stream and counted.
pub fn integrate_samples<F>(frame: &ChartFrame, q: &Quadrature, width: usize, integrand: F) -> Result<SampleSet>
where
    F: Fn(&BranchPoint, &mut [f64]) -> Result<()> + Sync,
{
    integrate_joint(&[frame], q, width, |_, bp, out| integrand(bp, out))
}

/// Integrates over several varieties of the same dimension at shared base
/// points, so that differences between them keep their correlation.
///
/// `integrand(j, b, row)` adds the contribution of branch `b` of `frames[j]`
/// into the shared row; a draw is redrawn if any frame fails on it.
pub fn integrate_joint<F>(frames: &[&ChartFrame], q: &Quadrature, width: usize, integrand: F) -> Result<SampleSet>
where
    F: Fn(usize, &BranchPoint, &mut [f64]) -> Result<()> + Sync,
{
    q.validate()?;
    let n = match frames.first() {
        Some(f) => f.ci().dim(),
        None => return Err(Error::InvalidConfig("no frames to integrate over".into())),
    };
    if let Some(f) = frames.iter().find(|f| f.ci().dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.ci().dim(),
        });
    }
    let run_one = |i: usize| -> Result<(Vec<f64>, u32)> {
        let mut rng = substream(q.seed, i as u64);
        let mut row = vec![0.0; width];
        let mut scratch = vec![0.0; width];
        for attempt in 0..MAX_ATTEMPTS {
            let u = sample_base(n, &mut rng);
            row.iter_mut().for_each(|v| *v = 0.0);
            let outcome = frames.iter().enumerate().try_for_each(|(j, frame)| -> Result<()> {
                for bp in &frame.solve_fiber(&u, q.cond_limit)? {
                    scratch.iter_mut().for_each(|v| *v = 0.0);
                    integrand(j, bp, &mut scratch)?;
                    for (r, s) in row.iter_mut().zip(&scratch) {
                        *r += s;
                    }
                }
                Ok(())
            });
            match outcome {
                Ok(()) if row.iter().all(|v| v.is_finite()) => return Ok((row, attempt)),
                Ok(()) => continue,
                Err(e) if e.is_sample_rejection() => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::TooManyRejections {
            rejected: MAX_ATTEMPTS as u64,
            samples: 1,
        })
    };
    let rows: Vec<Result<(Vec<f64>, u32)>> = match q.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| (0..q.samples).into_par_iter().map(run_one).collect()),
        None => (0..q.samples).into_par_iter().map(run_one).collect(),
    };
    let mut values = Vec::with_capacity(q.samples * width);
    let mut rejected = 0u64;
    for r in rows {
        match r {
            Ok((row, rej)) => {
                values.extend_from_slice(&row);
                rejected += rej as u64;
            }
            Err(Error::TooManyRejections { .. }) => {
                return Err(Error::TooManyRejections {
                    rejected: rejected + MAX_ATTEMPTS as u64,
                    samples: q.samples,
                })
            }
            Err(e) => return Err(e),
        }
    }
    if rejected as f64 > q.reject_limit * q.samples as f64 {
        return Err(Error::TooManyRejections {
            rejected,
            samples: q.samples,
        });
    }
    Ok(SampleSet {
        width,
        values,
        samples: q.samples,
        seed: q.seed,
        rejected,
        reject_limit: q.reject_limit,
    })
}

/// Scalar form of [`integrate_samples`]: `integrand(b)` already carries the
/// density ratio for branch `b`.
pub fn integrate<F>(frame: &ChartFrame, integrand: F, q: &Quadrature) -> Result<MCEstimate>
where
    F: Fn(&BranchPoint) -> Result<f64> + Sync,
{
    let set = integrate_samples(frame, q, 1, |bp, out| {
        out[0] = integrand(bp)?;
        Ok(())
    })?;
    Ok(set.estimate(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::CompleteIntersection;
    use crate::variety_numerics::frame::make_frame;

    #[test]
    fn pairwise_sum_matches_naive_on_small_data() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn constant_integrand_on_projective_space() {
        let p = CompleteIntersection::projective_space(2);
        let frame = make_frame(&p, 0).unwrap();
        let q = Quadrature::default().with_samples(1000);
        let e = integrate(&frame, |_| Ok(1.0), &q).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.rejected, 0);
    }

    #[test]
    fn combinations_track_correlation() {
        let p = CompleteIntersection::projective_space(1);
        let frame = make_frame(&p, 0).unwrap();
        let q = Quadrature::default().with_samples(2000);
        let set = integrate_samples(&frame, &q, 2, |bp, out| {
            let r = bp.u[0].norm();
            out[0] = r;
            out[1] = r + 1.0;
            Ok(())
        })
        .unwrap();
        let diff = set.combination(&[-1.0, 1.0]);
        assert!((diff.value - 1.0).abs() < 1e-12);
        assert!(diff.stderr < 1e-12);
    }

    #[test]
    fn invalid_settings_rejected() {
        let p = CompleteIntersection::projective_space(1);
        let frame = make_frame(&p, 0).unwrap();
        let mut q = Quadrature::default().with_samples(10);
        q.fd_step = 1.0;
        assert!(matches!(integrate(&frame, |_| Ok(1.0), &q), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn persistent_failures_surface_as_too_many_rejections() {
        let p = CompleteIntersection::projective_space(1);
        let frame = make_frame(&p, 0).unwrap();
        let q = Quadrature::default().with_samples(100);
        let e = integrate(&frame, |_| Err(Error::ExactZero), &q).unwrap_err();
        assert!(matches!(e, Error::TooManyRejections { .. }));
        let e = integrate(&frame, |_| Err(Error::ZeroVector), &q).unwrap_err();
        assert_eq!(e, Error::ZeroVector);
    }
}
