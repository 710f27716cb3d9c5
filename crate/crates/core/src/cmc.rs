//! Constant-norm mean curvature surfaces in a null cone, the Liouville
//! equation on S², Möbius conformal factors, and the conformal scalar
//! curvature identities behind the Obata argument.
//!
//! In `u = 1/r` variables the squared norm quantity of a surface in the cone is
//! `E(u) = (n-1)u²f²(1/u) - (n-1)|∇̃u|² + 2uΔ̃u`. For Minkowski space with
//! `n = 3` this is twice the Liouville expression `u² + uΔ̃u - |∇̃u|²`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel_map;
use crate::spacetime::WarpingModel;
use crate::sphere::{SphCoeffs, SphereField, SphereGrid};
use crate::surface::{fit_boosted_sphere, BoostFit};
use crate::zonal::ZonalField;

/// Newton stops once the largest nodal residual drops below this.
pub const NEWTON_TOL: f64 = 1e-10;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
/// Relative singular-value floor below which the Jacobian counts as singular.
pub const JACOBIAN_RANK_TOL: f64 = 1e-10;
/// Regularization used when the pinned system is still ill-conditioned.
pub const FALLBACK_LM_LAMBDA: f64 = 1e-8;
/// Largest Liouville residual accepted by [`max_principle_functional`].
pub const SOLUTION_TOL: f64 = 1e-8;
/// Default tolerance of [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Gauge {
    None,
    /// Pins the coefficients `a₀₀, a₁₋₁, a₁₀, a₁₁` to the given values.
    FixLowModes {
        values: [f64; 4],
    },
    /// Damped least squares with `λ` relative to `σ_max²`.
    LevenbergMarquardt {
        lambda: f64,
    },
}

/// `E(u) = target` on the round sphere, for a four-dimensional model.
#[derive(Debug, Clone)]
pub struct CmcProblem {
    model: WarpingModel,
    target: f64,
    bandlimit: usize,
    gauge: Gauge,
    grid: Arc<SphereGrid>,
    basis: Vec<BasisSamples>,
    sqrt_w: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BasisSamples {
    value: Vec<f64>,
    th: Vec<f64>,
    ph: Vec<f64>,
    lap_factor: f64,
}

/// Outcome of [`newton_solve`].
#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub u: SphCoeffs,
    pub iterations: usize,
    pub converged: bool,
    /// Largest nodal residual before each step and after the last one.
    pub residual_history: Vec<f64>,
    /// Whether the damped fallback was used for a pinned system.
    pub lm_fallback: bool,
}

/// Values, gradient components and Laplacian at the grid nodes.
type NodeSamples = (Vec<f64>, [Vec<f64>; 2], Vec<f64>);

impl CmcProblem {
    pub fn new(model: &WarpingModel, target: f64, bandlimit: usize, gauge: Gauge) -> Result<Self> {
        if model.n() != 3 {
            return Err(Error::Unsupported(format!("the full-sphere solver needs n = 3, got {}", model.n())));
        }
        if !(target > 0.0) {
            return Err(Error::InvalidModel(format!("target must be positive, got {target}")));
        }
        if let Gauge::LevenbergMarquardt { lambda } = gauge {
            if !(lambda > 0.0) {
                return Err(Error::InvalidModel(format!("damping must be positive, got {lambda}")));
            }
        }
        let grid = SphereGrid::dealiased(bandlimit.max(1), 2);
        let ncoef = (bandlimit + 1) * (bandlimit + 1);
        let basis = parallel_map(ncoef, |j| {
            let mut c = SphCoeffs::zeros(bandlimit);
            c.as_mut_slice()[j] = 1.0;
            let l = (j as f64).sqrt().floor();
            let c = c.resized(grid.lmax());
            let g = grid.gradient(&c);
            BasisSamples { value: grid.synthesize(&c), th: g.th, ph: g.ph, lap_factor: -l * (l + 1.0) }
        });
        let sqrt_w = (0..grid.len()).map(|k| grid.weight(k).sqrt()).collect();
        Ok(Self { model: model.clone(), target, bandlimit, gauge, grid, basis, sqrt_w })
    }

    pub fn model(&self) -> &WarpingModel {
        &self.model
    }
    pub fn target(&self) -> f64 {
        self.target
    }
    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }
    pub fn gauge(&self) -> Gauge {
        self.gauge
    }
    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    /// `u`, `∇̃u` and `Δ̃u` at the nodes, after the admissibility checks.
    fn samples(&self, u: &SphCoeffs) -> Result<NodeSamples> {
        if u.lmax() > self.grid.lmax() {
            return Err(Error::Aliasing { grid: self.grid.lmax(), required: u.lmax() });
        }
        let c = u.resized(self.grid.lmax());
        let v = self.grid.synthesize(&c);
        let bad: Vec<usize> = (0..v.len()).filter(|&k| !(v[k] > 0.0)).collect();
        if let Some(&first) = bad.first() {
            return Err(Error::NotPositive { count: bad.len(), first });
        }
        for &x in &v {
            self.model.check(1.0 / x)?;
        }
        let g = self.grid.gradient(&c);
        let lap = self.grid.synthesize(&c.laplacian());
        Ok((v, [g.th, g.ph], lap))
    }

    /// `E(u) - target` at the grid nodes.
    pub fn hsq_residual(&self, u: &SphCoeffs) -> Result<SphereField> {
        let (v, g, lap) = self.samples(u)?;
        let n1 = self.model.n() as f64 - 1.0;
        let vals = (0..v.len())
            .map(|k| {
                let g2 = g[0][k] * g[0][k] + g[1][k] * g[1][k];
                n1 * v[k] * v[k] * self.model.fsq(1.0 / v[k]) - n1 * g2 + 2.0 * v[k] * lap[k] - self.target
            })
            .collect();
        SphereField::new(self.grid.clone(), vals)
    }

    /// `J[h] = (n-1)(2u f² - (f²)')h - 2(n-1)∇̃u·∇̃h + 2hΔ̃u + 2uΔ̃h`, with `f²`
    /// and `(f²)'` evaluated at `1/u`.
    pub fn jacobian_apply(&self, u: &SphCoeffs, h: &SphCoeffs) -> Result<SphereField> {
        let (v, g, lap) = self.samples(u)?;
        let hc = h.resized(self.grid.lmax());
        let hv = self.grid.synthesize(&hc);
        let hg = self.grid.gradient(&hc);
        let hl = self.grid.synthesize(&hc.laplacian());
        let vals = (0..v.len())
            .map(|k| self.jacobian_entry(v[k], [g[0][k], g[1][k]], lap[k], hv[k], [hg.th[k], hg.ph[k]], hl[k]))
            .collect();
        SphereField::new(self.grid.clone(), vals)
    }

    fn jacobian_entry(&self, u: f64, gu: [f64; 2], lap: f64, h: f64, gh: [f64; 2], lh: f64) -> f64 {
        let n1 = self.model.n() as f64 - 1.0;
        let r = 1.0 / u;
        let a = n1 * (2.0 * u * self.model.fsq(r) - self.model.dfsq(r));
        a * h - 2.0 * n1 * (gu[0] * gh[0] + gu[1] * gh[1]) + 2.0 * h * lap + 2.0 * u * lh
    }

    /// Quadrature-weighted Jacobian matrix on the free coefficients.
    fn jacobian_matrix(&self, u: &SphCoeffs, free: &[usize]) -> Result<DMatrix<f64>> {
        let (v, g, lap) = self.samples(u)?;
        let len = v.len();
        let mut m = DMatrix::zeros(len, free.len());
        for (col, &j) in free.iter().enumerate() {
            let b = &self.basis[j];
            for k in 0..len {
                let e = self.jacobian_entry(
                    v[k],
                    [g[0][k], g[1][k]],
                    lap[k],
                    b.value[k],
                    [b.th[k], b.ph[k]],
                    b.lap_factor * b.value[k],
                );
                m[(k, col)] = self.sqrt_w[k] * e;
            }
        }
        Ok(m)
    }

    /// Largest relative deviation between `J[h]` and a Richardson-extrapolated
    /// centered difference of the residual along `h`.
    pub fn jacobian_check(&self, u: &SphCoeffs, h: &SphCoeffs) -> Result<f64> {
        let exact = self.jacobian_apply(u, h)?;
        let scale_u = u.norm_sq().sqrt().max(f64::MIN_POSITIVE);
        let eps = 1e-4 * scale_u / h.norm_sq().sqrt().max(f64::MIN_POSITIVE);
        let shifted = |s: f64| -> Result<SphereField> {
            let mut c = u.resized(u.lmax().max(h.lmax()));
            let hh = h.resized(c.lmax());
            for (a, b) in c.as_mut_slice().iter_mut().zip(hh.as_slice()) {
                *a += s * b;
            }
            self.hsq_residual(&c)
        };
        let cd = |e: f64| -> Result<Vec<f64>> {
            let (p, m) = (shifted(e)?, shifted(-e)?);
            Ok(p.values().iter().zip(m.values()).map(|(a, b)| (a - b) / (2.0 * e)).collect())
        };
        let (d1, d2) = (cd(eps)?, cd(0.5 * eps)?);
        let fd: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        let scale = exact.max_abs().max(f64::MIN_POSITIVE);
        Ok(exact.values().iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// Gauss-Newton iteration in coefficient space with the gauge of the problem.
pub fn newton_solve(problem: &CmcProblem, u0: &SphCoeffs) -> Result<NewtonResult> {
    let l = problem.bandlimit;
    let mut u = u0.resized(l);
    let mut free: Vec<usize> = (0..(l + 1) * (l + 1)).collect();
    let mut lambda = 0.0;
    match problem.gauge {
        Gauge::None => {}
        Gauge::FixLowModes { values } => {
            if l < 1 {
                return Err(Error::Unsupported("pinning ℓ≤1 modes needs bandlimit ≥ 1".into()));
            }
            u.as_mut_slice()[..4].copy_from_slice(&values);
            free.retain(|&j| j >= 4);
        }
        Gauge::LevenbergMarquardt { lambda: lm } => lambda = lm,
    }
    let sqrt_w = &problem.sqrt_w;
    let merit = |r: &SphereField| -> f64 { r.values().iter().zip(sqrt_w).map(|(a, w)| (a * w).powi(2)).sum() };
    let mut res = problem.hsq_residual(&u)?;
    let mut history = vec![res.max_abs()];
    let mut lm_fallback = false;
    let mut iterations = 0;
    while history.last().copied().unwrap_or(f64::INFINITY) >= NEWTON_TOL && iterations < MAX_NEWTON_ITERATIONS {
        iterations += 1;
        let jm = problem.jacobian_matrix(&u, &free)?;
        let svd = jm.svd(true, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let smin = sv.min();
        let mut lam = lambda;
        if lam == 0.0 && smin < JACOBIAN_RANK_TOL * smax {
            match problem.gauge {
                Gauge::FixLowModes { .. } => {
                    lm_fallback = true;
                    lam = FALLBACK_LM_LAMBDA;
                }
                _ => {
                    let mut s: Vec<f64> = sv.iter().map(|v| v / smax).collect();
                    s.sort_by(f64::total_cmp);
                    s.truncate(6);
                    return Err(Error::SingularJacobian(s));
                }
            }
        }
        let rhs = DVector::from_iterator(res.values().len(), res.values().iter().zip(sqrt_w).map(|(a, w)| a * w));
        let (uu, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
        let proj = uu.transpose() * &rhs;
        let mut coef = DVector::zeros(sv.len());
        for i in 0..sv.len() {
            let s = sv[i];
            let filt = s / (s * s + lam * smax * smax);
            coef[i] = if filt.is_finite() { filt * proj[i] } else { 0.0 };
        }
        let step = vt.transpose() * coef;
        let m0 = merit(&res);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut trial = u.clone();
            for (i, &j) in free.iter().enumerate() {
                trial.as_mut_slice()[j] -= t * step[i];
            }
            match problem.hsq_residual(&trial) {
                Ok(r) => {
                    let decrease = merit(&r) < m0;
                    if decrease || t < 1.0 / 1024.0 {
                        accepted = Some((trial, r));
                        break;
                    }
                }
                Err(Error::NotPositive { .. }) | Err(Error::Domain { .. }) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
        }
        let (nu, nr) = accepted.ok_or(Error::StepFailure)?;
        u = nu;
        res = nr;
        history.push(res.max_abs());
    }
    let converged = history.last().copied().unwrap_or(f64::INFINITY) < NEWTON_TOL;
    Ok(NewtonResult { u, iterations, converged, residual_history: history, lm_fallback })
}

/// `u² + uΔ̃u - |∇̃u|² - E` on the grid of `u`.
pub fn liouville_residual(u: &SphereField, e: f64) -> SphereField {
    let g = u.gradient().norm_sq();
    let lap = u.laplacian();
    let vals = (0..u.values().len()).map(|k| u.values()[k] * (u.values()[k] + lap.values()[k]) - g[k] - e).collect();
    SphereField::new(u.grid().clone(), vals).unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    SphereOfSymmetry { r0: f64 },
    LowModeBoost { r0: f64, beta: f64, axis: Option<[f64; 3]> },
    NonRigid { distance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub low_mode_distance: f64,
    /// Set when a model without boosts produced a boosted profile.
    pub rigidity_violation: bool,
}

/// Sorts a positive profile into spheres of symmetry, boosted spheres and the
/// rest; `tol` applies to the relative energy outside the modes in question.
pub fn classify(u: &SphCoeffs, model: &WarpingModel, tol: f64) -> Result<Classification> {
    let total = u.norm_sq().sqrt();
    let nonconstant = if total > 0.0 { (u.norm_sq() - u.get(0, 0).powi(2)).max(0.0).sqrt() / total } else { 0.0 };
    let low_mode_distance = u.low_mode_distance();
    let (a, _) = u.low_mode_parts();
    if nonconstant < tol {
        if !(a > 0.0) {
            return Err(Error::NotPositive { count: 1, first: 0 });
        }
        return Ok(Classification {
            verdict: Verdict::SphereOfSymmetry { r0: 1.0 / a },
            low_mode_distance,
            rigidity_violation: false,
        });
    }
    match fit_boosted_sphere(u, tol)? {
        BoostFit::Boosted { r0, beta, axis } => Ok(Classification {
            verdict: Verdict::LowModeBoost { r0, beta, axis },
            low_mode_distance,
            rigidity_violation: !model.kind().is_space_form(),
        }),
        BoostFit::NotLowMode { distance } => {
            Ok(Classification { verdict: Verdict::NonRigid { distance }, low_mode_distance, rigidity_violation: false })
        }
    }
}

/// Both sides of a pointwise identity and their largest relative gap.
#[derive(Debug, Clone)]
pub struct FieldIdentity {
    pub lhs: SphereField,
    pub rhs: SphereField,
    pub gap: f64,
}

fn require_grid(grid: &SphereGrid, need: usize) -> Result<()> {
    if grid.lmax() < need {
        return Err(Error::Aliasing { grid: grid.lmax(), required: need });
    }
    Ok(())
}

/// `Δ̃(u² + uΔ̃u - |∇̃u|²)` against `2uΔ̃u + (Δ̃u)² + uΔ̃²u - 2|∇̃²u|²` on S².
/// The grid must resolve products, i.e. twice the bandlimit of `u`; the gap
/// is measured against the largest individual term.
pub fn laplacian_bochner_identity(u: &SphCoeffs, grid: &Arc<SphereGrid>) -> Result<FieldIdentity> {
    require_grid(grid, 2 * u.lmax())?;
    let c = u.resized(grid.lmax());
    let uf = SphereField::from_coeffs(grid, &c);
    let lap_c = c.laplacian();
    let lap = grid.synthesize(&lap_c);
    let lap2 = grid.synthesize(&lap_c.laplacian());
    let g2 = grid.gradient(&c).norm_sq();
    let h2 = grid.hessian(&c).norm_sq();
    let inner = uf.zip_map(&SphereField::new(grid.clone(), lap.clone())?, |a, b| a * a + a * b);
    let inner = SphereField::new(grid.clone(), inner.values().iter().zip(&g2).map(|(a, b)| a - b).collect())?;
    let lhs = inner.laplacian();
    let u = uf.values();
    let rhs_vals = (0..u.len()).map(|k| 2.0 * u[k] * lap[k] + lap[k] * lap[k] + u[k] * lap2[k] - 2.0 * h2[k]).collect();
    let rhs = SphereField::new(grid.clone(), rhs_vals)?;
    let terms = (0..u.len())
        .map(|k| (2.0 * u[k] * lap[k]).abs() + lap[k] * lap[k] + (u[k] * lap2[k]).abs() + 2.0 * h2[k])
        .fold(0.0, f64::max);
    let gap = relative_field_gap(&lhs, &rhs, terms);
    Ok(FieldIdentity { lhs, rhs, gap })
}

/// Largest pointwise difference relative to the larger field or `floor`.
fn relative_field_gap(a: &SphereField, b: &SphereField, floor: f64) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(floor);
    let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `(Δ̃ + 2)u` for a Liouville solution, with its spread and the pointwise
/// identity `uΔ̃(Δ̃+2)u = 2|∇̃²u - (Δ̃u/2)σ̃|²`.
#[derive(Debug, Clone)]
pub struct MaxPrinciple {
    pub field: SphereField,
    /// Standard deviation over mean of `(Δ̃+2)u`.
    pub spread: f64,
    pub identity_gap: f64,
    /// The constant the solution satisfies the Liouville equation with.
    pub e: f64,
}

pub fn max_principle_functional(u: &SphereField) -> Result<MaxPrinciple> {
    let expr = liouville_residual(u, 0.0);
    let e = expr.integrate() / (4.0 * std::f64::consts::PI);
    let worst = max_abs(&expr.values().iter().map(|v| v - e).collect::<Vec<_>>());
    if worst > SOLUTION_TOL * e.abs().max(1.0) {
        return Err(Error::NotASolution(worst));
    }
    let c = u.coeffs();
    let field = SphereField::from_coeffs(u.grid(), &c.scale_by_degree(|l| 2.0 - (l * (l + 1)) as f64));
    let area = 4.0 * std::f64::consts::PI;
    let mean = field.integrate() / area;
    let var = field.map(|v| (v - mean).powi(2)).integrate() / area;
    let spread = var.max(0.0).sqrt() / mean.abs();
    let lap_field = SphereField::from_coeffs(
        u.grid(),
        &c.scale_by_degree(|l| {
            let ll = (l * (l + 1)) as f64;
            -ll * (2.0 - ll)
        }),
    );
    let tl = u.traceless_hessian_normsq(2);
    let lhs = u.zip_map(&lap_field, |a, b| a * b);
    let rhs = tl.map(|v| 2.0 * v);
    let identity_gap = {
        let scale = u.max_abs() * u.max_abs();
        let diff = lhs.values().iter().zip(rhs.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        diff / scale.max(f64::MIN_POSITIVE)
    };
    Ok(MaxPrinciple { field, spread, identity_gap, e })
}

/// Stereographic coordinate of a point of S² from the north pole.
pub fn stereographic(p: [f64; 3]) -> Complex64 {
    Complex64::new(p[0], p[1]) / (1.0 - p[2])
}

/// ℓ≤1 coefficients `u = a + b·X̃` of a Möbius conformal factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowModeCoeffs {
    pub a: f64,
    pub b: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct MobiusFactor {
    /// `u = 1/r` with `w*σ̃ = r²σ̃`.
    pub u: SphereField,
    pub low_mode_distance: f64,
    pub fitted: LowModeCoeffs,
    /// Expansion as printed in the source, without the `|ad - bc|` scaling.
    pub printed: LowModeCoeffs,
    /// Expansion with the factor ½ and the `|ad - bc|` scaling restored.
    pub corrected: LowModeCoeffs,
}

/// Conformal factor of `w = (az + b)/(cz + d)` from
/// `r = |dw/dz|(1 + |z|²)/(1 + |w|²)`.
pub fn mobius_conformal_factor(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
    grid: &Arc<SphereGrid>,
) -> Result<MobiusFactor> {
    let det = a * d - b * c;
    let scale = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
    if !(det.norm() > 1e-14 * scale) {
        return Err(Error::DegenerateMap);
    }
    let u = SphereField::from_xyz(grid, |p| {
        let z = stereographic(p);
        let den = c * z + d;
        let num = a * z + b;
        let z2 = 1.0 + z.norm_sqr();
        if den.norm() > 1e-8 * num.norm().max(1.0) {
            let w = num / den;
            let dw = det.norm() / den.norm_sqr();
            (1.0 + w.norm_sqr()) / (dw * z2)
        } else {
            (den.norm_sqr() + num.norm_sqr()) / (det.norm() * z2)
        }
    });
    let coeffs = u.coeffs();
    let (fa, fb) = coeffs.low_mode_parts();
    let q = a * b.conj() + c * d.conj();
    let printed =
        LowModeCoeffs { a: scale, b: [q.re, -q.im, a.norm_sqr() + c.norm_sqr() - b.norm_sqr() - d.norm_sqr()] };
    let k = det.norm();
    let corrected = LowModeCoeffs {
        a: 0.5 * scale / k,
        b: [q.re / k, -q.im / k, 0.5 * (a.norm_sqr() + c.norm_sqr() - b.norm_sqr() - d.norm_sqr()) / k],
    };
    Ok(MobiusFactor {
        low_mode_distance: coeffs.low_mode_distance(),
        u,
        fitted: LowModeCoeffs { a: fa, b: fb },
        printed,
        corrected,
    })
}

/// A function on the round sphere: the full S² or an axisymmetric one on S^d.
#[derive(Debug, Clone, Copy)]
pub enum SphereFunction<'a> {
    Full(&'a SphereField),
    Zonal(&'a ZonalField),
}

impl SphereFunction<'_> {
    pub fn dim(&self) -> usize {
        match self {
            SphereFunction::Full(_) => 2,
            SphereFunction::Zonal(z) => z.grid().dim(),
        }
    }

    /// `(u, |∇u|², Δu, ∇u·∇Δu, Δ²u, |∇²u|², |∇²u - (Δu/n)σ|²)` at the nodes,
    /// plus quadrature weights.
    fn pointwise(&self) -> Pointwise {
        match self {
            SphereFunction::Full(u) => {
                let lap = u.laplacian();
                let g = u.gradient();
                let gl = lap.gradient();
                let h = u.hessian();
                let grid = u.grid();
                Pointwise {
                    u: u.values().to_vec(),
                    g2: g.norm_sq(),
                    lap: lap.values().to_vec(),
                    g_glap: g.dot(&gl),
                    lap2: lap.laplacian().values().to_vec(),
                    h2: h.norm_sq(),
                    tl: u.traceless_hessian_normsq(2).values().to_vec(),
                    w: (0..grid.len()).map(|k| grid.weight(k)).collect(),
                }
            }
            SphereFunction::Zonal(u) => {
                let lap = u.laplacian();
                Pointwise {
                    u: u.values().to_vec(),
                    g2: u.grad_sq().values().to_vec(),
                    lap: lap.values().to_vec(),
                    g_glap: u.grad_dot(&lap).values().to_vec(),
                    lap2: lap.laplacian().values().to_vec(),
                    h2: u.hessian_normsq().values().to_vec(),
                    tl: u.traceless_hessian_normsq().values().to_vec(),
                    w: u.grid().weights().to_vec(),
                }
            }
        }
    }
}

struct Pointwise {
    u: Vec<f64>,
    g2: Vec<f64>,
    lap: Vec<f64>,
    g_glap: Vec<f64>,
    lap2: Vec<f64>,
    h2: Vec<f64>,
    tl: Vec<f64>,
    w: Vec<f64>,
}

fn check_dim(f: &SphereFunction, n: usize) -> Result<()> {
    if f.dim() != n || n < 2 {
        return Err(Error::Unsupported(format!("base sphere of dimension {} given for n = {n}", f.dim())));
    }
    Ok(())
}

/// `R̄/(n-1) = (nc/(n-1))u² + 2uΔu - n|∇u|²` for `ḡ = u⁻²σ` on S^n with
/// `Ric = cσ`.
pub fn conformal_scalar_curvature(u: SphereFunction, n: usize, c: f64) -> Result<Vec<f64>> {
    check_dim(&u, n)?;
    let p = u.pointwise();
    let nf = n as f64;
    Ok((0..p.u.len()).map(|k| nf * c / (nf - 1.0) * p.u[k] * p.u[k] + 2.0 * p.u[k] * p.lap[k] - nf * p.g2[k]).collect())
}

/// Integrals of the weighted Obata argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObataIdentity {
    /// `∫ u^{1-n}[(2-n)∇u·∇Δu + uΔ²u + (nc/(n-1))(uΔu + (2-n)|∇u|²)]`, zero for all u.
    pub lhs: f64,
    /// `-n ∫ u^{1-n}|∇²u - (Δu/n)σ|²`.
    pub traceless_term: f64,
    /// `∫ u^{1-n} G(u)` with `G` the Bochner-expanded Laplacian of the scalar curvature.
    pub weighted_g: f64,
    /// `|lhs|` and `|∫u^{1-n}G - traceless_term|` relative to the term magnitudes.
    pub gap: f64,
    /// Largest relative gap between `G` and `½Δ(R̄/(n-1))` computed spectrally.
    pub bochner_gap: f64,
}

pub fn obata_weighted_identity(u: SphereFunction, n: usize, c: f64) -> Result<ObataIdentity> {
    check_dim(&u, n)?;
    let p = u.pointwise();
    let bad: Vec<usize> = (0..p.u.len()).filter(|&k| !(p.u[k] > 0.0)).collect();
    if let Some(&first) = bad.first() {
        return Err(Error::NotPositive { count: bad.len(), first });
    }
    let nf = n as f64;
    let kappa = nf * c / (nf - 1.0);
    let (mut lhs, mut tl, mut wg, mut scale) = (0.0, 0.0, 0.0, 0.0);
    let mut g_vals = Vec::with_capacity(p.u.len());
    for k in 0..p.u.len() {
        let wt = p.w[k] * p.u[k].powf(1.0 - nf);
        let terms =
            [(2.0 - nf) * p.g_glap[k], p.u[k] * p.lap2[k], kappa * p.u[k] * p.lap[k], kappa * (2.0 - nf) * p.g2[k]];
        let bracket: f64 = terms.iter().sum();
        let trace_part = -nf * (p.h2[k] - p.lap[k] * p.lap[k] / nf);
        let g = trace_part + bracket;
        g_vals.push(g);
        lhs += wt * bracket;
        tl += -nf * wt * p.tl[k];
        wg += wt * g;
        scale += wt * (terms.iter().map(|t| t.abs()).sum::<f64>() + nf * p.tl[k]);
    }
    let gap = if scale > 0.0 { lhs.abs().max((wg - tl).abs()) / scale } else { 0.0 };
    let rbar = conformal_scalar_curvature(u, n, c)?;
    let half_lap: Vec<f64> = match u {
        SphereFunction::Full(f) => {
            SphereField::new(f.grid().clone(), rbar)?.laplacian().values().iter().map(|v| 0.5 * v).collect()
        }
        SphereFunction::Zonal(f) => {
            ZonalField::new(f.grid().clone(), rbar)?.laplacian().values().iter().map(|v| 0.5 * v).collect()
        }
    };
    let gs = max_abs(&g_vals).max(max_abs(&half_lap));
    let bochner_gap =
        g_vals.iter().zip(&half_lap).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / gs.max(f64::MIN_POSITIVE);
    Ok(ObataIdentity { lhs, traceless_term: tl, weighted_g: wg, gap, bochner_gap })
}
