use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::rng::{complex_gaussian, frame_stream, haar_unitary};
use crate::error::{Error, Result};
use crate::poly_core::{CompleteIntersection, Convention, GroupElement, HomogeneousPolynomial};

pub const MAX_FRAME_ATTEMPTS: usize = 100;
pub const MIN_GENERICITY: f64 = 1e-8;
const PROBES: usize = 32;

/// A coordinate system `z = U w` in which `M` is presented as a branched
/// cover of `P^n` through the first `n+1` coordinates of `w`.
///
/// On the chart `w = (1, u, y)` the base point is `u ∈ C^n` and the fiber
/// coordinates `y ∈ C^s` solve `G_i(1, u, y) = 0` with `G_i = F_i ∘ U`.
#[derive(Debug, Clone)]
pub struct ChartFrame {
    ci: CompleteIntersection,
    u: DMatrix<Complex64>,
    rotated: Vec<HomogeneousPolynomial>,
    /// Each rotated polynomial divided by its coefficient norm.
    normalized: Vec<HomogeneousPolynomial>,
    genericity_score: f64,
    attempts: usize,
    /// Homotopy constants: `γ_0` multiplies the start system, `γ_i` are its roots' targets.
    gamma: Vec<Complex64>,
}

impl ChartFrame {
    /// Wraps an explicit invertible frame matrix, rejecting it if the fiber
    /// system loses degree at infinity.
    pub fn with_matrix(ci: &CompleteIntersection, u: DMatrix<Complex64>, seed: u64) -> Result<Self> {
        let mut rng = frame_stream(seed);
        let frame = Self::build(ci, u, &mut rng, 1)?;
        if frame.genericity_score > MIN_GENERICITY {
            Ok(frame)
        } else {
            Err(Error::InvalidConfig(format!(
                "frame is not generic (score {:e})",
                frame.genericity_score
            )))
        }
    }

    fn build(ci: &CompleteIntersection, u: DMatrix<Complex64>, rng: &mut impl Rng, attempts: usize) -> Result<Self> {
        let g = GroupElement::new(u.clone())?;
        if g.dim() != ci.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: ci.num_vars(),
                found: g.dim(),
            });
        }
        let rotated = ci
            .polys()
            .iter()
            .map(|f| f.transform(&g, Convention::Compose))
            .collect::<Result<Vec<_>>>()?;
        let normalized: Vec<HomogeneousPolynomial> = rotated
            .iter()
            .map(|f| f.scaled(Complex64::new(1.0 / f.coefficient_norm(), 0.0)))
            .collect();
        let s = ci.codim();
        let n = ci.dim();
        let mut score = f64::INFINITY;
        if s == 0 {
            score = 1.0;
        }
        let mut w = vec![Complex64::new(0.0, 0.0); ci.num_vars()];
        for _ in 0..PROBES {
            if s == 0 {
                break;
            }
            let y: Vec<Complex64> = (0..s).map(|_| complex_gaussian(rng)).collect();
            let ny = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for (k, v) in y.iter().enumerate() {
                w[n + 1 + k] = v / ny;
            }
            let lead = normalized
                .iter()
                .map(|f| f.eval(&w).expect("matching length").norm())
                .fold(0.0, f64::max);
            score = score.min(lead);
        }
        let gamma = (0..=s)
            .map(|_| {
                let g = complex_gaussian(rng);
                g / g.norm()
            })
            .collect();
        Ok(Self {
            ci: ci.clone(),
            u,
            rotated,
            normalized,
            genericity_score: score,
            attempts,
            gamma,
        })
    }

    pub fn ci(&self) -> &CompleteIntersection {
        &self.ci
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn genericity_score(&self) -> f64 {
        self.genericity_score
    }

    pub fn attempts(&self) -> usize {
        self.attempts
    }

    /// Indices `0..=n` of the base chart in rotated coordinates.
    pub fn base_indices(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.ci.dim()
    }

    /// Indices `n+1..=N` of the fiber coordinates.
    pub fn fiber_indices(&self) -> std::ops::RangeInclusive<usize> {
        self.ci.dim() + 1..=self.ci.ambient_dim()
    }

    pub fn rotated(&self) -> &[HomogeneousPolynomial] {
        &self.rotated
    }

    pub(crate) fn normalized(&self) -> &[HomogeneousPolynomial] {
        &self.normalized
    }

    pub(crate) fn gamma(&self) -> &[Complex64] {
        &self.gamma
    }
}

/// Draws Haar frames until one passes the leading-coefficient probe.
pub fn make_frame(ci: &CompleteIntersection, seed: u64) -> Result<ChartFrame> {
    let mut rng = frame_stream(seed);
    for attempt in 1..=MAX_FRAME_ATTEMPTS {
        let u = haar_unitary(&mut rng, ci.num_vars());
        let frame = ChartFrame::build(ci, u, &mut rng, attempt)?;
        if frame.genericity_score > MIN_GENERICITY {
            return Ok(frame);
        }
    }
    Err(Error::FrameSearchExhausted(MAX_FRAME_ATTEMPTS))
}
