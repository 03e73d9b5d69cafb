use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::frame::ChartFrame;
use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-10;
const MERGE_TOL: f64 = 1e-8;
const DIVERGENCE: f64 = 1e7;

/// A point of `M` seen as one branch of the projection to `P^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    /// Affine base coordinates; the chart point is `w = (1, u, y)`.
    pub u: Vec<Complex64>,
    /// Fiber coordinates.
    pub y: Vec<Complex64>,
    /// Ambient representative `z = U w` in the original coordinates.
    pub z: Vec<Complex64>,
    /// `∂z/∂u`, an `(N+1)×n` matrix.
    pub lift: DMatrix<Complex64>,
    /// `∂y/∂u = −(∂G/∂y)⁻¹ ∂G/∂u`.
    pub dy_du: DMatrix<Complex64>,
    /// `σ_max([∂G/∂u ∂G/∂y]) / σ_min(∂G/∂y)`.
    pub cond: f64,
    /// Determinant of the Fubini-Study matrix of `P^n` at `u`: `(1+|u|²)^{−(n+1)}`.
    pub base_det: f64,
}

/// `G_i(1, u, y)` with `u` substituted, as polynomials in `y` alone.
struct FiberPolys {
    s: usize,
    degree: usize,
    // per polynomial: flattened exponents (s per term) and coefficients
    exps: Vec<Vec<u32>>,
    coeffs: Vec<Vec<Complex64>>,
    pows: Vec<Complex64>,
}

impl FiberPolys {
    fn new(frame: &ChartFrame, u: &[Complex64]) -> Self {
        let n = u.len();
        let polys = frame.normalized();
        let s = polys.len();
        let degree = polys.iter().map(|g| g.degree() as usize).max().unwrap_or(0);
        let mut exps = Vec::with_capacity(s);
        let mut coeffs = Vec::with_capacity(s);
        for g in polys {
            let mut acc: std::collections::BTreeMap<&[u32], Complex64> = std::collections::BTreeMap::new();
            for (e, c) in g.terms() {
                let mut t = c;
                for j in 0..n {
                    for _ in 0..e[1 + j] {
                        t *= u[j];
                    }
                }
                *acc.entry(&e[n + 1..]).or_default() += t;
            }
            exps.push(acc.keys().flat_map(|e| e.iter().copied()).collect());
            coeffs.push(acc.into_values().collect());
        }
        Self {
            s,
            degree,
            exps,
            coeffs,
            pows: vec![Complex64::new(1.0, 0.0); s * (degree + 1)],
        }
    }

    /// Values into `vals` and `∂G/∂y` row-major into `jy`.
    fn eval_into(&mut self, y: &[Complex64], vals: &mut [Complex64], jy: &mut [Complex64]) {
        let (s, stride) = (self.s, self.degree + 1);
        for (k, yk) in y.iter().enumerate() {
            for p in 1..stride {
                self.pows[k * stride + p] = self.pows[k * stride + p - 1] * yk;
            }
        }
        vals.fill(Complex64::new(0.0, 0.0));
        jy.fill(Complex64::new(0.0, 0.0));
        for i in 0..s {
            for (e, &c) in self.exps[i].chunks_exact(s).zip(&self.coeffs[i]) {
                let mut m = c;
                for (k, &ek) in e.iter().enumerate() {
                    m *= self.pows[k * stride + ek as usize];
                }
                vals[i] += m;
                for (k, &ek) in e.iter().enumerate() {
                    if ek == 0 {
                        continue;
                    }
                    let mut t = c * ek as f64;
                    for (l, &el) in e.iter().enumerate() {
                        let p = if l == k { el - 1 } else { el };
                        t *= self.pows[l * stride + p as usize];
                    }
                    jy[i * s + k] += t;
                }
            }
        }
    }
}

/// Scratch space for evaluating the chart system `G(1, u, y)`.
struct ChartSystem<'a> {
    frame: &'a ChartFrame,
    n: usize,
    s: usize,
    w: Vec<Complex64>,
    grad: Vec<Complex64>,
    fiber: FiberPolys,
}

impl<'a> ChartSystem<'a> {
    fn new(frame: &'a ChartFrame, u: &[Complex64]) -> Self {
        let ci = frame.ci();
        let mut w = vec![Complex64::new(0.0, 0.0); ci.num_vars()];
        w[0] = Complex64::new(1.0, 0.0);
        w[1..=u.len()].copy_from_slice(u);
        Self {
            frame,
            n: ci.dim(),
            s: ci.codim(),
            grad: vec![Complex64::new(0.0, 0.0); ci.num_vars()],
            w,
            fiber: FiberPolys::new(frame, u),
        }
    }

    fn set_y(&mut self, y: &[Complex64]) {
        self.w[self.n + 1..].copy_from_slice(y);
    }

    /// Values and full Jacobian (rows i, columns over all of `w`).
    fn eval_full(&mut self, y: &[Complex64]) -> (Vec<Complex64>, DMatrix<Complex64>) {
        self.set_y(y);
        let nv = self.w.len();
        let mut vals = Vec::with_capacity(self.s);
        let mut jac = DMatrix::zeros(self.s, nv);
        for (i, g) in self.frame.normalized().iter().enumerate() {
            vals.push(g.eval_grad_into(&self.w, &mut self.grad));
            for j in 0..nv {
                jac[(i, j)] = self.grad[j];
            }
        }
        (vals, jac)
    }

    /// Values and the fiber block `∂G/∂y`.
    fn eval_fiber(&mut self, y: &[Complex64]) -> (Vec<Complex64>, DMatrix<Complex64>) {
        let s = self.s;
        let mut vals = vec![Complex64::new(0.0, 0.0); s];
        let mut jy = vec![Complex64::new(0.0, 0.0); s * s];
        self.fiber.eval_into(y, &mut vals, &mut jy);
        (vals, DMatrix::from_row_slice(s, s, &jy))
    }

    fn residual_ok(&mut self, y: &[Complex64]) -> bool {
        self.set_y(y);
        self.frame.normalized().iter().all(|g| {
            let v = g.eval(&self.w).expect("matching length");
            v.norm() <= RESIDUAL_TOL * g.abs_eval(&self.w).max(f64::MIN_POSITIVE)
        })
    }

    /// Newton iteration on `y`; `None` if it fails to converge.
    fn newton(&mut self, mut y: Vec<Complex64>, max_iter: usize, tol: f64) -> Option<Vec<Complex64>> {
        for _ in 0..max_iter {
            let (vals, jy) = self.eval_fiber(&y);
            let step = solve(jy, &vals)?;
            let mut size = 0.0f64;
            for k in 0..self.s {
                y[k] -= step[k];
                size = size.max(step[k].norm());
            }
            if !size.is_finite() {
                return None;
            }
            if size <= tol * (1.0 + inf_norm(&y)) {
                return Some(y);
            }
        }
        if self.residual_ok(&y) {
            Some(y)
        } else {
            None
        }
    }
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Solves `A x = b` for small dense systems.
fn solve(a: DMatrix<Complex64>, b: &[Complex64]) -> Option<Vec<Complex64>> {
    if a.nrows() == 1 {
        let d = a[(0, 0)];
        return if d.norm() > 0.0 { Some(vec![b[0] / d]) } else { None };
    }
    let x = a.lu().solve(&DVector::from_column_slice(b))?;
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Some(x.as_slice().to_vec())
    } else {
        None
    }
}

fn base_det(u: &[Complex64]) -> f64 {
    let r2: f64 = u.iter().map(|x| x.norm_sqr()).sum();
    (1.0 + r2).powi(-(u.len() as i32 + 1))
}

impl ChartFrame {
    /// All `D` points of `M` over the base point `u`.
    pub fn solve_fiber(&self, u: &[Complex64], cond_limit: f64) -> Result<Vec<BranchPoint>> {
        let ci = self.ci();
        if u.len() != ci.dim() {
            return Err(Error::DimensionMismatch {
                expected: ci.dim(),
                found: u.len(),
            });
        }
        let mut sys = ChartSystem::new(self, u);
        let roots = match ci.codim() {
            0 => vec![Vec::new()],
            1 => univariate_roots(&mut sys, u)?,
            _ => homotopy_roots(&mut sys)?,
        };
        let expected = ci.degree() as usize;
        if roots.len() < expected {
            return Err(Error::DegreeDeficit {
                found: roots.len(),
                expected,
            });
        }
        for a in 0..roots.len() {
            for b in 0..a {
                let d = roots[a].iter().zip(&roots[b]).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                if d <= MERGE_TOL * (1.0 + inf_norm(&roots[a])) {
                    return Err(Error::PathFailure("two fiber roots coincide".into()));
                }
            }
        }
        roots
            .into_iter()
            .map(|y| {
                let bp = self.branch_point(&mut sys, u, y)?;
                if bp.cond >= cond_limit {
                    Err(Error::IllConditioned(bp.cond))
                } else {
                    Ok(bp)
                }
            })
            .collect()
    }

    /// Moves `bp` to the nearby base point `u_new` along its own branch.
    pub fn continue_branch(&self, bp: &BranchPoint, u_new: &[Complex64], cond_limit: f64) -> Result<BranchPoint> {
        let s = bp.y.len();
        let du: Vec<Complex64> = u_new.iter().zip(&bp.u).map(|(a, b)| a - b).collect();
        let mut pred = bp.y.clone();
        for k in 0..s {
            for (j, d) in du.iter().enumerate() {
                pred[k] += bp.dy_du[(k, j)] * d;
            }
        }
        let mut sys = ChartSystem::new(self, u_new);
        let y = if s == 0 {
            Vec::new()
        } else {
            sys.newton(pred, 8, 1e-14).ok_or(Error::BranchJump)?
        };
        let step = inf_norm(&du);
        let jump = y.iter().zip(&bp.y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let lnorm = bp.lift.iter().map(|x| x.norm()).fold(1.0, f64::max);
        if jump > 10.0 * step * lnorm + 1e-12 * (1.0 + inf_norm(&bp.y)) {
            return Err(Error::BranchJump);
        }
        let out = self.branch_point(&mut sys, u_new, y)?;
        if out.cond >= cond_limit {
            return Err(Error::StencilIllConditioned(format!("condition {:e}", out.cond)));
        }
        Ok(out)
    }

    fn branch_point(&self, sys: &mut ChartSystem<'_>, u: &[Complex64], y: Vec<Complex64>) -> Result<BranchPoint> {
        let ci = self.ci();
        let (n, s, nv) = (ci.dim(), ci.codim(), ci.num_vars());
        let mut w = vec![Complex64::new(1.0, 0.0); nv];
        w[1..=n].copy_from_slice(u);
        w[n + 1..].copy_from_slice(&y);
        let (dy_du, cond) = if s == 0 {
            (DMatrix::zeros(0, n), 1.0)
        } else {
            let (_, jac) = sys.eval_full(&y);
            let ju = jac.columns(1, n).into_owned();
            let jy = jac.columns(n + 1, s).into_owned();
            let (smax, smin) = if s == 1 {
                let row: f64 = (1..nv).map(|j| jac[(0, j)].norm_sqr()).sum::<f64>().sqrt();
                (row, jy[(0, 0)].norm())
            } else {
                let big = jac.columns(1, nv - 1).into_owned().singular_values().max();
                (big, jy.clone().singular_values().min())
            };
            let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            if !cond.is_finite() {
                return Err(Error::IllConditioned(cond));
            }
            let d = match jy.lu().solve(&ju) {
                Some(x) => -x,
                None => return Err(Error::IllConditioned(f64::INFINITY)),
            };
            (d, cond)
        };
        let um = self.matrix();
        let z: Vec<Complex64> = (0..nv).map(|i| (0..nv).map(|j| um[(i, j)] * w[j]).sum()).collect();
        let lift = DMatrix::from_fn(nv, n, |i, a| {
            let mut v = um[(i, 1 + a)];
            for k in 0..s {
                v += um[(i, n + 1 + k)] * dy_du[(k, a)];
            }
            v
        });
        Ok(BranchPoint {
            u: u.to_vec(),
            y,
            z,
            lift,
            dy_du,
            cond,
            base_det: base_det(u),
        })
    }
}

/// Roots of the univariate fiber polynomial `G(1, u, y)`.
fn univariate_roots(sys: &mut ChartSystem<'_>, u: &[Complex64]) -> Result<Vec<Vec<Complex64>>> {
    let g = &sys.frame.normalized()[0];
    let d = g.degree() as usize;
    let n = u.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); d + 1];
    for (e, c) in g.terms() {
        let mut t = c;
        for j in 0..n {
            for _ in 0..e[1 + j] {
                t *= u[j];
            }
        }
        coeffs[e[n + 1] as usize] += t;
    }
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if coeffs[d].norm() <= 1e-12 * scale {
        let found = (0..d).rev().find(|&k| coeffs[k].norm() > 1e-12 * scale).unwrap_or(0);
        return Err(Error::DegreeDeficit { found, expected: d });
    }
    let raw: Vec<Complex64> = match d {
        1 => vec![-coeffs[0] / coeffs[1]],
        2 => {
            let (a, b, c) = (coeffs[2], coeffs[1], coeffs[0]);
            let sq = (b * b - a * c * 4.0).sqrt();
            // pick the sign that avoids cancellation
            let q = if (b.conj() * sq).re >= 0.0 { -(b + sq) * 0.5 } else { -(b - sq) * 0.5 };
            if q.norm() == 0.0 {
                vec![Complex64::new(0.0, 0.0); 2]
            } else {
                vec![q / a, c / q]
            }
        }
        _ => {
            let lead = coeffs[d];
            let comp = DMatrix::from_fn(d, d, |i, j| {
                if i == 0 {
                    -coeffs[d - 1 - j] / lead
                } else if i == j + 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let schur = nalgebra::linalg::Schur::try_new(comp, 1e-15, 10_000)
                .ok_or_else(|| Error::PathFailure("companion eigenvalue iteration failed".into()))?;
            let (_, t) = schur.unpack();
            (0..d).map(|i| t[(i, i)]).collect()
        }
    };
    raw.into_iter()
        .map(|y0| {
            let polished = sys.newton(vec![y0], 8, 1e-14).unwrap_or_else(|| vec![y0]);
            if sys.residual_ok(&polished) {
                Ok(polished)
            } else {
                Err(Error::PathFailure("fiber root failed the residual check".into()))
            }
        })
        .collect()
}

/// All isolated solutions of the fiber system by total-degree homotopy.
fn homotopy_roots(sys: &mut ChartSystem<'_>) -> Result<Vec<Vec<Complex64>>> {
    let degrees: Vec<u32> = sys.frame.normalized().iter().map(|g| g.degree()).collect();
    let s = degrees.len();
    let gamma = sys.frame.gamma().to_vec();
    let total: usize = degrees.iter().map(|&d| d as usize).product();
    let mut finite = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut start = Vec::with_capacity(s);
        for (i, &d) in degrees.iter().enumerate() {
            let k = rem % d as usize;
            rem /= d as usize;
            let root = gamma[i + 1].powf(1.0 / d as f64)
                * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
            start.push(root);
        }
        match track_path(sys, &degrees, &gamma, start)? {
            Some(y) => finite.push(y),
            None => continue,
        }
    }
    Ok(finite)
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting;
/// `a` is row-major `s×s` and is destroyed, `b` becomes `x`.
fn solve_in_place(a: &mut [Complex64], b: &mut [Complex64]) -> bool {
    let s = b.len();
    for col in 0..s {
        let piv = (col..s)
            .max_by(|&i, &j| a[i * s + col].norm_sqr().total_cmp(&a[j * s + col].norm_sqr()))
            .expect("nonempty");
        if a[piv * s + col].norm_sqr() == 0.0 {
            return false;
        }
        if piv != col {
            for j in 0..s {
                a.swap(piv * s + j, col * s + j);
            }
            b.swap(piv, col);
        }
        let inv = a[col * s + col].inv();
        for r in col + 1..s {
            let f = a[r * s + col] * inv;
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in col..s {
                let v = a[col * s + j];
                a[r * s + j] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    for r in (0..s).rev() {
        let mut v = b[r];
        for j in r + 1..s {
            v -= a[r * s + j] * b[j];
        }
        b[r] = v / a[r * s + r];
    }
    b.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

/// Homotopy `H(y,t) = γ_0(1−t)S(y) + t P(y)` with `S_i(y) = y_i^{d_i} − γ_i`.
struct Homotopy<'s, 'a> {
    sys: &'s mut ChartSystem<'a>,
    degrees: &'s [u32],
    gamma: &'s [Complex64],
    p: Vec<Complex64>,
    hy: Vec<Complex64>,
}

impl Homotopy<'_, '_> {
    /// Leaves `H_y` in `self.hy`; writes `H` into `h` and `H_t` into `ht`.
    fn eval(&mut self, y: &[Complex64], t: f64, h: &mut [Complex64], ht: &mut [Complex64]) {
        let s = y.len();
        let g0 = self.gamma[0];
        self.sys.fiber.eval_into(y, &mut self.p, &mut self.hy);
        self.hy.iter_mut().for_each(|v| *v *= t);
        for i in 0..s {
            let d = self.degrees[i] as i32;
            let si = y[i].powi(d) - self.gamma[i + 1];
            h[i] = g0 * si * (1.0 - t) + self.p[i] * t;
            ht[i] = self.p[i] - g0 * si;
            self.hy[i * s + i] += g0 * (1.0 - t) * y[i].powi(d - 1) * d as f64;
        }
    }

    /// `dy/dt = −H_y⁻¹ H_t` into `out`.
    fn tangent(&mut self, y: &[Complex64], t: f64, out: &mut [Complex64], scratch: &mut [Complex64]) -> Result<()> {
        self.eval(y, t, scratch, out);
        if !solve_in_place(&mut self.hy, out) {
            return Err(Error::PathFailure("singular homotopy Jacobian".into()));
        }
        out.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    }

    /// Newton correction at fixed `t`; returns the step size, `None` if singular.
    fn correct(&mut self, y: &mut [Complex64], t: f64, h: &mut [Complex64], scratch: &mut [Complex64]) -> Option<f64> {
        self.eval(y, t, h, scratch);
        if !solve_in_place(&mut self.hy, h) {
            return None;
        }
        for (a, b) in y.iter_mut().zip(h.iter()) {
            *a -= b;
        }
        Some(inf_norm(h))
    }
}

/// Tracks one homotopy path from `t = 0` to `t = 1` with an RK4 predictor and
/// Newton corrector. Returns `None` for a diverging path.
fn track_path(
    sys: &mut ChartSystem<'_>,
    degrees: &[u32],
    gamma: &[Complex64],
    mut y: Vec<Complex64>,
) -> Result<Option<Vec<Complex64>>> {
    let s = degrees.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut hom = Homotopy {
        sys,
        degrees,
        gamma,
        p: vec![zero; s],
        hy: vec![zero; s * s],
    };
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; s], vec![zero; s], vec![zero; s], vec![zero; s]);
    let (mut tmp, mut scratch, mut y1) = (vec![zero; s], vec![zero; s], vec![zero; s]);
    let axpy = |out: &mut [Complex64], y: &[Complex64], v: &[Complex64], h: f64| {
        for k in 0..out.len() {
            out[k] = y[k] + v[k] * h;
        }
    };
    let mut t = 0.0f64;
    let mut dt = 0.1f64;
    let mut streak = 0;
    while t < 1.0 {
        dt = dt.min(1.0 - t);
        let t1 = if 1.0 - t - dt < 1e-14 { 1.0 } else { t + dt };
        let h = t1 - t;
        hom.tangent(&y, t, &mut k1, &mut scratch)?;
        axpy(&mut tmp, &y, &k1, 0.5 * h);
        hom.tangent(&tmp, t + 0.5 * h, &mut k2, &mut scratch)?;
        axpy(&mut tmp, &y, &k2, 0.5 * h);
        hom.tangent(&tmp, t + 0.5 * h, &mut k3, &mut scratch)?;
        axpy(&mut tmp, &y, &k3, h);
        hom.tangent(&tmp, t1, &mut k4, &mut scratch)?;
        for k in 0..s {
            y1[k] = y[k] + (k1[k] + (k2[k] + k3[k]) * 2.0 + k4[k]) * (h / 6.0);
        }
        let scale = 1.0 + inf_norm(&y);
        let mut converged = false;
        for it in 0..3 {
            let Some(size) = hom.correct(&mut y1, t1, &mut tmp, &mut scratch) else { break };
            // a large first correction means the predictor left the basin
            if it == 0 && size > 0.01 * scale {
                break;
            }
            if size <= 1e-9 * (1.0 + inf_norm(&y1)) {
                converged = true;
                break;
            }
        }
        if converged {
            y.copy_from_slice(&y1);
            t = t1;
            streak += 1;
            if streak >= 2 {
                dt = (dt * 2.0).min(0.5);
                streak = 0;
            }
            if inf_norm(&y) > DIVERGENCE {
                return Ok(None);
            }
        } else {
            dt *= 0.5;
            streak = 0;
            if dt < 1e-10 {
                if inf_norm(&y) > DIVERGENCE.sqrt() {
                    return Ok(None);
                }
                return Err(Error::PathFailure(format!("step size underflow at t = {t}")));
            }
        }
    }
    let y = hom
        .sys
        .newton(y, 10, 1e-12)
        .ok_or_else(|| Error::PathFailure("endgame Newton did not converge".into()))?;
    if !hom.sys.residual_ok(&y) {
        return Err(Error::PathFailure("endpoint failed the residual check".into()));
    }
    Ok(Some(y))
}

/// [`ChartFrame::solve_fiber`] with the frame checked against `ci`.
pub fn solve_fiber(
    ci: &crate::poly_core::CompleteIntersection,
    frame: &ChartFrame,
    u: &[Complex64],
    cond_limit: f64,
) -> Result<Vec<BranchPoint>> {
    if frame.ci().polys() != ci.polys() {
        return Err(Error::InvalidConfig("frame was built for a different variety".into()));
    }
    frame.solve_fiber(u, cond_limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::{catalog_entry, CompleteIntersection};
    use crate::variety_numerics::frame::make_frame;
    use crate::variety_numerics::rng::{sample_base, substream};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn explicit_quadratic_fiber() {
        let ci = CompleteIntersection::parse("N=3 s=1\n1 0 | 0 0 0 2\n-1 0 | 2 0 0 0\n").unwrap();
        let frame = ChartFrame::with_matrix(&ci, DMatrix::identity(4, 4), 0).unwrap();
        let bps = frame.solve_fiber(&[c(0.3, 0.1), c(-2.0, 1.0)], 1e8).unwrap();
        let mut ys: Vec<f64> = bps.iter().map(|b| b.y[0].re).collect();
        ys.sort_by(f64::total_cmp);
        assert!((ys[0] + 1.0).abs() < 1e-14 && (ys[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fermat_quadric_principal_pair() {
        let ci = catalog_entry("fermat_quadric_p3").unwrap();
        let frame = ChartFrame::with_matrix(&ci, DMatrix::identity(4, 4), 0).unwrap();
        let u = [c(0.4, -0.2), c(1.1, 0.3)];
        let bps = frame.solve_fiber(&u, 1e8).unwrap();
        let root = c(0.0, 1.0) * (c(1.0, 0.0) + u[0] * u[0] + u[1] * u[1]).sqrt();
        for bp in &bps {
            assert!((bp.y[0] - root).norm() < 1e-12 || (bp.y[0] + root).norm() < 1e-12);
            let v = ci.polys()[0].eval(&bp.z).unwrap();
            assert!(v.norm() < 1e-10 * ci.polys()[0].abs_eval(&bp.z));
        }
    }

    #[test]
    fn cubic_companion_roots() {
        let ci = catalog_entry("cubic_curve_p2").unwrap();
        let frame = make_frame(&ci, 4).unwrap();
        let mut rng = substream(4, 0);
        for _ in 0..50 {
            let u = sample_base(1, &mut rng);
            let bps = frame.solve_fiber(&u, 1e8).unwrap();
            assert_eq!(bps.len(), 3);
        }
    }

    #[test]
    fn two_quadrics_have_four_points_over_every_base_point() {
        let ci = catalog_entry("ci22_p4").unwrap();
        let frame = make_frame(&ci, 5).unwrap();
        let mut rng = substream(5, 0);
        for _ in 0..100 {
            let u = sample_base(2, &mut rng);
            let bps = frame.solve_fiber(&u, 1e8).unwrap();
            assert_eq!(bps.len(), 4);
            for bp in &bps {
                for f in ci.polys() {
                    assert!(f.eval(&bp.z).unwrap().norm() <= 1e-10 * f.abs_eval(&bp.z));
                }
            }
        }
    }

    #[test]
    fn lift_is_tangent_and_matches_finite_differences() {
        let ci = catalog_entry("ci22_p4").unwrap();
        let frame = make_frame(&ci, 6).unwrap();
        let u = [c(0.2, 0.1), c(-0.3, 0.4)];
        let bps = frame.solve_fiber(&u, 1e8).unwrap();
        let h = 1e-6;
        for bp in &bps {
            let moved = frame.continue_branch(bp, &[u[0] + h, u[1]], 1e8).unwrap();
            for i in 0..5 {
                let fd = (moved.z[i] - bp.z[i]) / h;
                assert!((fd - bp.lift[(i, 0)]).norm() < 1e-4 * (1.0 + bp.lift[(i, 0)].norm()));
            }
        }
    }

    #[test]
    fn projective_space_has_a_single_trivial_branch() {
        let p = CompleteIntersection::projective_space(2);
        let frame = make_frame(&p, 1).unwrap();
        let bps = frame.solve_fiber(&[c(0.5, 0.0), c(0.0, 1.0)], 1e8).unwrap();
        assert_eq!(bps.len(), 1);
        assert_eq!(bps[0].lift.shape(), (3, 2));
        assert!((bps[0].base_det - 2.25f64.powi(-3)).abs() < 1e-15);
    }
}

