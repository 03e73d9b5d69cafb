//! Norms on defining polynomials whose log-ratios reproduce the energy
//! functionals along `GL(N+1)`-orbits.
//!
//! Both norms are sums of level integrals over the chain
//! `P^N = X_0 ⊇ X_1 ⊇ … ⊇ X_s = M`, `X_k = {F_1 = … = F_k = 0}`; the second
//! also integrates the adjunction densities over `M`.

mod identities;

pub use identities::{
    calibrate, calibration_evidence, default_suite, select_calibration, verify_theorem5, verify_theorem6, CalibrationCase, CalibrationRecord, EvidenceRow,
    IdentityCheck, Theorem, THEOREM5_REL_TOL, THEOREM6_REL_TOL,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly_core::{CompleteIntersection, HomogeneousPolynomial};
use crate::variety_numerics::{
    derive_seed, integrate_joint, make_frame, mixed_det, volume_density, BranchPoint, MCEstimate, Quadrature,
};

/// Seed tag of the adjunction integrals over `M`; level `k` uses tag `k`.
const ADJUNCTION_TAG: u64 = 0x4144_4a55;

/// Weight attached to the level-`k` integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightVariant {
    /// `p_k / V_k`, with the second norm's first sum over `X_k`.
    Literal,
    /// `d_{k+1}···d_s`, every first sum over `X_{k−1}`.
    Derivation,
}

impl WeightVariant {
    pub const ALL: [WeightVariant; 2] = [WeightVariant::Literal, WeightVariant::Derivation];

    pub fn name(self) -> &'static str {
        match self {
            WeightVariant::Literal => "Literal",
            WeightVariant::Derivation => "Derivation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(s.trim()))
    }

    /// Weight of level `k` (1-based) for `ci`.
    pub fn weight(self, ci: &CompleteIntersection, k: usize) -> f64 {
        let d = ci.degrees();
        match self {
            WeightVariant::Literal => ci.p(k) as f64 / d[..k].iter().map(|&x| x as f64).product::<f64>(),
            WeightVariant::Derivation => d[k..].iter().map(|&x| x as f64).product(),
        }
    }
}

impl std::fmt::Display for WeightVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A norm value with the contributions it is summed from.
#[derive(Debug, Clone, PartialEq)]
pub struct NormBreakdown {
    pub log_norm: MCEstimate,
    /// Weighted level contributions, `k = 1..=s`.
    pub per_level_terms: Vec<MCEstimate>,
    /// `∫_{X_{k−1}} ω^{N−k+1}` from the same samples as each level term.
    pub level_masses: Vec<MCEstimate>,
    pub level_weights: Vec<f64>,
    /// Weighted adjunction contributions `(1/D)∫_M log ad_i ω^n`, `i = 1..=s`.
    pub adjunction_terms: Vec<MCEstimate>,
    /// `∫_M ω^n` from the adjunction samples.
    pub adjunction_mass: Option<MCEstimate>,
    pub weight_variant: WeightVariant,
    pub variety: String,
}

impl NormBreakdown {
    /// `|log_norm − Σ terms|`, zero up to round-off.
    pub fn bookkeeping_gap(&self) -> f64 {
        let sum: f64 = self.per_level_terms.iter().chain(&self.adjunction_terms).map(|t| t.value).sum();
        (self.log_norm.value - sum).abs()
    }
}

/// `log(|F(z)|²/|z|^{2d})`; a sample exactly on `{F = 0}` is rejected.
fn log_ratio_sq(f: &HomogeneousPolynomial, z: &[Complex64]) -> Result<f64> {
    let v = f.eval(z)?.norm_sqr();
    if v == 0.0 {
        return Err(Error::ExactZero);
    }
    let r2: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    Ok(v.ln() - f.degree() as f64 * r2.ln())
}

/// Level-`k` integrals `∫_{X_{k−1}} log(|F_k|²/|z|^{2d_k}) ω^{N−k+1}` for
/// each system in `systems`, at shared base points.
///
/// Returns one `(value, mass)` column pair per system; the systems must agree
/// in degrees.
pub(crate) fn level_samples(
    systems: &[&CompleteIntersection],
    k: usize,
    q: &Quadrature,
) -> Result<crate::variety_numerics::SampleSet> {
    let q = q.clone().with_seed(derive_seed(q.seed, k as u64));
    let levels: Vec<CompleteIntersection> = systems.iter().map(|c| c.leading(k - 1)).collect();
    let frames = levels.iter().map(|c| make_frame(c, q.seed)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = frames.iter().collect();
    integrate_joint(&refs, &q, 2 * systems.len(), |j, bp, out| {
        let vol = volume_density(bp);
        out[2 * j] = log_ratio_sq(&systems[j].polys()[k - 1], &bp.z)? * vol;
        out[2 * j + 1] = vol;
        Ok(())
    })
}

/// Adjunction integrals `∫_M log ad_i ω^n` for `i = 1..=s` and each system,
/// at shared base points; columns `(s values, mass)` per system.
pub(crate) fn adjunction_samples(
    systems: &[&CompleteIntersection],
    q: &Quadrature,
) -> Result<crate::variety_numerics::SampleSet> {
    let q = q.clone().with_seed(derive_seed(q.seed, ADJUNCTION_TAG));
    let frames = systems.iter().map(|c| make_frame(c, q.seed)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<_> = frames.iter().collect();
    let s = systems[0].codim();
    integrate_joint(&refs, &q, (s + 1) * systems.len(), |j, bp, out| {
        let vol = volume_density(bp);
        let base = (s + 1) * j;
        for i in 1..=s {
            out[base + i - 1] = adjunction_density(systems[j], i, bp)?.ln() * vol;
        }
        out[base + s] = vol;
        Ok(())
    })
}

fn unit(width: usize, j: usize, c: f64) -> Vec<f64> {
    let mut v = vec![0.0; width];
    v[j] = c;
    v
}

/// `log‖F‖_A = Σ_k W_k ∫_{X_{k−1}} log(|F_k|/|z|^{d_k}) ω^{N−k+1}`.
pub fn log_norm_a(ci: &CompleteIntersection, q: &Quadrature, variant: WeightVariant) -> Result<NormBreakdown> {
    q.validate()?;
    let mut terms = Vec::new();
    let mut masses = Vec::new();
    let mut weights = Vec::new();
    for k in 1..=ci.codim() {
        let set = level_samples(&[ci], k, q)?;
        let w = variant.weight(ci, k);
        // the integrand carries log|·|², the norm log|·|
        terms.push(set.combination(&[0.5 * w, 0.0]));
        masses.push(set.estimate(1));
        weights.push(w);
    }
    let log_norm = MCEstimate::combine_independent(&terms.iter().map(|t| (1.0, *t)).collect::<Vec<_>>());
    Ok(NormBreakdown {
        log_norm,
        per_level_terms: terms,
        level_masses: masses,
        level_weights: weights,
        adjunction_terms: Vec::new(),
        adjunction_mass: None,
        weight_variant: variant,
        variety: ci.name().to_string(),
    })
}

/// `log‖F‖²_M = −(m/((n+1)D)) Σ_k W_k ∫ log(|F_k|²/|z|^{2d_k}) ω^{N−k+1}
/// + (1/D) Σ_i ∫_M log ad_i ω^n`.
///
/// The literal domain `X_k` of the first sum lies inside `{F_k = 0}`, so that
/// variant is rejected rather than integrated.
pub fn log_norm_m(ci: &CompleteIntersection, q: &Quadrature, variant: WeightVariant) -> Result<NormBreakdown> {
    q.validate()?;
    let s = ci.codim();
    if variant == WeightVariant::Literal && s > 0 {
        return Err(Error::LiteralDomainDegenerate(1));
    }
    let d = ci.degree() as f64;
    let c = -(ci.m() as f64) / ((ci.dim() + 1) as f64 * d);
    let mut terms = Vec::new();
    let mut masses = Vec::new();
    let mut weights = Vec::new();
    for k in 1..=s {
        let set = level_samples(&[ci], k, q)?;
        let w = variant.weight(ci, k);
        terms.push(set.combination(&[c * w, 0.0]));
        masses.push(set.estimate(1));
        weights.push(w);
    }
    let adj = adjunction_samples(&[ci], q)?;
    let adjunction_terms: Vec<MCEstimate> = (0..s).map(|i| adj.combination(&unit(s + 1, i, 1.0 / d))).collect();
    let level_total = MCEstimate::combine_independent(&terms.iter().map(|t| (1.0, *t)).collect::<Vec<_>>());
    let mut all = vec![1.0 / d; s + 1];
    all[s] = 0.0;
    let adj_total = adj.combination(&all);
    let log_norm = MCEstimate::combine_independent(&[(1.0, level_total), (1.0, adj_total)]);
    Ok(NormBreakdown {
        log_norm,
        per_level_terms: terms,
        level_masses: masses,
        level_weights: weights,
        adjunction_terms,
        adjunction_mass: Some(adj.estimate(s)),
        weight_variant: variant,
        variety: ci.name().to_string(),
    })
}

/// Orthogonal projection of `c` onto the complement of `span(basis)`.
fn project_out(c: &[Complex64], basis: &[Vec<Complex64>]) -> Vec<Complex64> {
    // modified Gram-Schmidt on the basis, applied twice for stability
    let dot = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>();
    let mut ortho: Vec<Vec<Complex64>> = Vec::new();
    for v in basis {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &ortho {
                let p = dot(e, &w);
                w.iter_mut().zip(e).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = dot(&w, &w).re.sqrt();
        let scale = dot(v, v).re.sqrt();
        if norm > 1e-12 * scale {
            ortho.push(w.iter().map(|x| x / norm).collect());
        }
    }
    let mut out = c.to_vec();
    for _ in 0..2 {
        for e in &ortho {
            let p = dot(e, &out);
            out.iter_mut().zip(e).for_each(|(x, y)| *x -= p * y);
        }
    }
    out
}

/// Adjunction density of `X_i ⊂ X_{i−1}` at a point `z` of `X_i`:
/// `ω^{r−1} ∧ (i/2π)∂∂̄(|F_i|²/|z|^{2d_i}) / ω^r` on `X_{i−1}`, `r = N−i+1`.
///
/// At `F_i(z) = 0` the Hessian is `w w†` with `w = ∇F_i/|z|^{d_i}`, so the
/// value is `(1/r)·|z|²·|P_H w̄|²` where `H` is the tangent space of the cone
/// over `X_{i−1}` orthogonal to `z`.
pub fn adjunction_density(ci: &CompleteIntersection, i: usize, bp: &BranchPoint) -> Result<f64> {
    adjunction_density_at(ci, i, &bp.z)
}

pub fn adjunction_density_at(ci: &CompleteIntersection, i: usize, z: &[Complex64]) -> Result<f64> {
    if i == 0 || i > ci.codim() {
        return Err(Error::InvalidConfig(format!("adjunction level {i} outside 1..={}", ci.codim())));
    }
    if z.len() != ci.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: ci.num_vars(),
            found: z.len(),
        });
    }
    let r2: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let mut normals = vec![z.to_vec()];
    for f in &ci.polys()[..i - 1] {
        let (_, g) = f.eval_and_gradient(z)?;
        normals.push(g.iter().map(|x| x.conj()).collect());
    }
    let fi = &ci.polys()[i - 1];
    let (_, g) = fi.eval_and_gradient(z)?;
    let c: Vec<Complex64> = g.iter().map(|x| x.conj()).collect();
    let full: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    let proj: f64 = project_out(&c, &normals).iter().map(|x| x.norm_sqr()).sum();
    if !(proj > 1e-24 * full) {
        return Err(Error::ZeroGradientOnVariety);
    }
    let rank = (ci.ambient_dim() + 1 - i) as f64;
    Ok(r2 * proj / (rank * r2.powi(fi.degree() as i32)))
}

/// Finite-difference oracle for [`adjunction_density_at`] with `i = 1`.
///
/// On the affine chart of `P^N` where the largest coordinate of `z` is 1,
/// both `∂∂̄ log|Z|²` and `∂∂̄(|F_1|²/|Z|^{2d})` are taken by 5-point
/// Laplacians with polarization and Richardson extrapolation over `h, 2h`,
/// then combined as `MixedDet(G^{N−1}, H)/det G`.
pub fn adjunction_density_fd(ci: &CompleteIntersection, z: &[Complex64], h: f64) -> Result<f64> {
    if ci.codim() == 0 {
        return Err(Error::InvalidConfig("no polynomial to take the adjunction density of".into()));
    }
    let nv = ci.num_vars();
    if z.len() != nv {
        return Err(Error::DimensionMismatch {
            expected: nv,
            found: z.len(),
        });
    }
    let (pivot, _) = z
        .iter()
        .enumerate()
        .map(|(j, x)| (j, x.norm()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let z0: Vec<Complex64> = z.iter().map(|x| x / z[pivot]).collect();
    let free: Vec<usize> = (0..nv).filter(|&j| j != pivot).collect();
    let f = &ci.polys()[0];
    let d = f.degree() as i32;
    let point = |w: &[Complex64]| -> Vec<Complex64> {
        let mut p = z0.clone();
        for (a, &j) in free.iter().enumerate() {
            p[j] += w[a];
        }
        p
    };
    let potential = |w: &[Complex64]| -> Result<f64> { Ok(point(w).iter().map(|x| x.norm_sqr()).sum::<f64>().ln()) };
    let target = |w: &[Complex64]| -> Result<f64> {
        let p = point(w);
        let r2: f64 = p.iter().map(|x| x.norm_sqr()).sum();
        Ok(f.eval(&p)?.norm_sqr() / r2.powi(d))
    };
    let hess = |g: &dyn Fn(&[Complex64]) -> Result<f64>| -> Result<DMatrix<Complex64>> {
        let fine = fd_complex_hessian(g, free.len(), h)?;
        let coarse = fd_complex_hessian(g, free.len(), 2.0 * h)?;
        Ok((fine * Complex64::new(4.0, 0.0) - coarse) / Complex64::new(3.0, 0.0))
    };
    let g = hess(&potential)?;
    let t = hess(&target)?;
    let n = free.len();
    let mut args: Vec<&DMatrix<Complex64>> = vec![&g; n];
    let det_g = mixed_det(&args)?;
    args[0] = &t;
    Ok(mixed_det(&args)? / det_g)
}

/// `K_ab = ∂_a∂̄_b g` at the origin of `C^n` by directional 5-point
/// Laplacians; off-diagonal entries by polarization along `e_a + e_b` and
/// `e_a + i e_b`.
fn fd_complex_hessian(g: &dyn Fn(&[Complex64]) -> Result<f64>, n: usize, h: f64) -> Result<DMatrix<Complex64>> {
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let g0 = g(&zero)?;
    let rho = [
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
    ];
    let lap = |dir: &[Complex64]| -> Result<f64> {
        let mut acc = 0.0;
        for r in rho {
            let w: Vec<Complex64> = dir.iter().map(|d| d * r * h).collect();
            acc += g(&w)? - g0;
        }
        Ok(acc / (4.0 * h * h))
    };
    let e = |a: usize, c: Complex64| {
        let mut v = zero.clone();
        v[a] = c;
        v
    };
    let one = Complex64::new(1.0, 0.0);
    let mut k = DMatrix::zeros(n, n);
    let diag = (0..n).map(|a| lap(&e(a, one))).collect::<Result<Vec<_>>>()?;
    for a in 0..n {
        k[(a, a)] = Complex64::new(diag[a], 0.0);
        for b in a + 1..n {
            let mut v1 = e(a, one);
            v1[b] = one;
            let mut v2 = e(a, one);
            v2[b] = Complex64::new(0.0, 1.0);
            let base = diag[a] + diag[b];
            let kab = Complex64::new((lap(&v1)? - base) / 2.0, (lap(&v2)? - base) / 2.0);
            k[(a, b)] = kab;
            k[(b, a)] = kab.conj();
        }
    }
    Ok(k)
}
