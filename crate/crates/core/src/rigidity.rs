//! Linearized constant-null-normal operator on a null-cone surface
//!
//! `T_a(u) = (n-1)(f²/r - ff')∇̃_a u + ∇̃_a(Δ̃u/r) + (n-1)∇̃_a∇̃_b u ∇̃^b r / r²`,
//!
//! its dense discretization in spherical-harmonic coefficients, the SVD
//! kernel, and the integration-by-parts identity behind its rigidity.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel_map;
use crate::spacetime::WarpingModel;
use crate::sphere::{SphCoeffs, SphereField, SphereGrid};
use crate::surface::{NullConeSurface, OneForm, ZonalSurface};
use crate::zonal::{ZonalField, ZonalGrid};

/// Largest operator bandlimit accepted by [`assemble`].
pub const MAX_OPERATOR_BANDLIMIT: usize = 64;
/// Kernel cut relative to the largest singular value.
pub const DEFAULT_KERNEL_THRESHOLD: f64 = 1e-7;
/// Minimum separation demanded of the kernel cut.
pub const MIN_GAP: f64 = 1e2;

/// `f² - 1 - r ff'`, the coefficient of `|∇̃u|²` in the quadratic identity.
pub fn radial_coefficient(model: &WarpingModel, r: f64) -> f64 {
    model.fsq(r) - 1.0 - 0.5 * r * model.dfsq(r)
}

/// `T(u)` in the round orthonormal frame at the surface grid nodes.
pub fn linearized_residual(surface: &NullConeSurface, u: &SphCoeffs) -> Result<OneForm> {
    let grid = surface.grid();
    if u.lmax() > grid.lmax() {
        return Err(Error::Aliasing { grid: grid.lmax(), required: u.lmax() });
    }
    let c = u.resized(grid.lmax());
    let n1 = surface.model().n() as f64 - 1.0;
    let grad = grid.gradient(&c);
    let hess = grid.hessian(&c);
    let lap_c = c.laplacian();
    let lap = grid.synthesize(&lap_c);
    let grad_lap = grid.gradient(&lap_c);
    let (r, gr) = (surface.radius_values(), surface.grad_r());
    let model = surface.model();
    let len = grid.len();
    let mut out = OneForm { th: vec![0.0; len], ph: vec![0.0; len] };
    for k in 0..len {
        let rk = r[k];
        let a = n1 * (model.fsq(rk) / rk - 0.5 * model.dfsq(rk));
        let hr = hess.apply(k, [gr.th[k], gr.ph[k]]);
        let r2 = rk * rk;
        out.th[k] = a * grad.th[k] + grad_lap.th[k] / rk - lap[k] * gr.th[k] / r2 + n1 * hr[0] / r2;
        out.ph[k] = a * grad.ph[k] + grad_lap.ph[k] / rk - lap[k] * gr.ph[k] / r2 + n1 * hr[1] / r2;
    }
    Ok(out)
}

/// Singular spectrum and kernel of a discretized operator.
#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub dimension: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    /// Smallest retained singular value over the largest rejected one, the
    /// latter floored at `ε·σ_max`.
    pub gap: f64,
    /// Dimension suggested by the largest consecutive ratio, when it differs
    /// or the gap is below [`MIN_GAP`].
    pub candidate_dimension: Option<usize>,
    pub warning: Option<String>,
    /// Kernel basis as coefficient vectors.
    pub basis: Vec<Vec<f64>>,
}

fn kernel_from_svd(singular: &DVector<f64>, v_t: &DMatrix<f64>, threshold: f64) -> KernelReport {
    let mut order: Vec<usize> = (0..singular.len()).collect();
    order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]));
    let sv: Vec<f64> = order.iter().map(|&i| singular[i]).collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = threshold * smax;
    let kept = sv.iter().filter(|&&s| s >= cut).count();
    let dimension = sv.len() - kept;
    let gap = match (kept, dimension) {
        (0, _) | (_, 0) => f64::INFINITY,
        _ => sv[kept - 1] / sv[kept].max(f64::EPSILON * smax),
    };
    let (mut best, mut best_ratio) = (0usize, 0.0f64);
    for i in 0..sv.len().saturating_sub(1) {
        let ratio = sv[i] / sv[i + 1].max(f64::EPSILON * smax);
        if ratio > best_ratio {
            best_ratio = ratio;
            best = sv.len() - i - 1;
        }
    }
    let (candidate_dimension, warning) = if gap < MIN_GAP {
        (
            Some(best),
            Some(format!(
                "ill-separated spectrum: gap {gap:.3e} at dimension {dimension}, largest ratio {best_ratio:.3e} at dimension {best}"
            )),
        )
    } else {
        (None, None)
    };
    let basis = order[kept..].iter().map(|&i| v_t.row(i).iter().copied().collect()).collect();
    KernelReport { dimension, singular_values: sv, threshold, gap, candidate_dimension, warning, basis }
}

/// Singular values and right singular vectors of a tall matrix, via a QR
/// factorization followed by the SVD of the square factor.
fn tall_svd(m: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let r = if m.nrows() > m.ncols() { m.qr().r() } else { m };
    let svd = r.try_svd(false, true, f64::EPSILON, 0).ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    Ok((svd.singular_values, svd.v_t.expect("requested")))
}

/// Dense linearized operator on the full sphere.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    bandlimit: usize,
    surface: NullConeSurface,
    row_weights: Vec<f64>,
    matrix: DMatrix<f64>,
    singular_values: DVector<f64>,
    v_t: DMatrix<f64>,
}

/// Assembles the operator on coefficients of degree `≤ bandlimit`, sampled on a
/// grid of bandlimit `bandlimit + 8` with rows weighted by `√w`.
pub fn assemble(surface: &NullConeSurface, bandlimit: usize) -> Result<LinearizedOperator> {
    if bandlimit > MAX_OPERATOR_BANDLIMIT {
        return Err(Error::BandlimitTooLarge(bandlimit));
    }
    let grid = SphereGrid::new((bandlimit + 8).max(surface.u_coeffs().lmax()));
    let s = NullConeSurface::with_grid(surface.model(), surface.w0(), surface.u_coeffs().clone(), grid.clone())?;
    let ncol = (bandlimit + 1) * (bandlimit + 1);
    let len = grid.len();
    let row_weights: Vec<f64> = (0..len).map(|k| grid.weight(k).sqrt()).collect();
    let cols = parallel_map(ncol, |j| {
        let mut c = SphCoeffs::zeros(bandlimit);
        c.as_mut_slice()[j] = 1.0;
        linearized_residual(&s, &c)
    });
    let mut matrix = DMatrix::zeros(2 * len, ncol);
    for (j, col) in cols.into_iter().enumerate() {
        let t = col?;
        for k in 0..len {
            matrix[(k, j)] = row_weights[k] * t.th[k];
            matrix[(len + k, j)] = row_weights[k] * t.ph[k];
        }
    }
    let (singular_values, v_t) = tall_svd(matrix.clone())?;
    Ok(LinearizedOperator { bandlimit, surface: s, row_weights, matrix, singular_values, v_t })
}

impl LinearizedOperator {
    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }
    pub fn surface(&self) -> &NullConeSurface {
        &self.surface
    }
    pub fn grid(&self) -> &Arc<SphereGrid> {
        self.surface.grid()
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// Weighted samples of `T(u)`, stacked `θ` then `φ`.
    pub fn apply(&self, u: &SphCoeffs) -> Vec<f64> {
        let c = u.resized(self.bandlimit);
        let x = DVector::from_column_slice(c.as_slice());
        (&self.matrix * x).iter().copied().collect()
    }

    /// [`linearized_residual`] weighted and stacked like [`Self::apply`].
    pub fn weighted_samples(&self, u: &SphCoeffs) -> Result<Vec<f64>> {
        let t = linearized_residual(&self.surface, u)?;
        let w = &self.row_weights;
        Ok(t.th.iter().zip(w).map(|(a, w)| a * w).chain(t.ph.iter().zip(w).map(|(a, w)| a * w)).collect())
    }

    pub fn kernel(&self, threshold: f64) -> KernelReport {
        kernel_from_svd(&self.singular_values, &self.v_t, threshold)
    }

    /// Kernel basis synthesized on the operator grid.
    pub fn kernel_fields(&self, report: &KernelReport) -> Vec<SphereField> {
        report
            .basis
            .iter()
            .map(|b| SphereField::from_coeffs(self.grid(), &SphCoeffs::from_vec(self.bandlimit, b.clone()).unwrap()))
            .collect()
    }

    /// Largest `low_mode_distance` over the kernel basis.
    pub fn kernel_low_mode_distance(&self, report: &KernelReport) -> f64 {
        report
            .basis
            .iter()
            .map(|b| SphCoeffs::from_vec(self.bandlimit, b.clone()).unwrap().low_mode_distance())
            .fold(0.0, f64::max)
    }
}

/// Both sides of the integration-by-parts identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_gap: f64,
}

impl QuadraticIdentity {
    fn new(lhs: f64, rhs: f64, scale: f64) -> Self {
        let den = lhs.abs().max(rhs.abs()).max(scale);
        let relative_gap = if den > 0.0 { (lhs - rhs).abs() / den } else { 0.0 };
        Self { lhs, rhs, relative_gap }
    }
}

/// `lhs = ∫ r^{n-1}∇̃u·T(u)`,
/// `rhs = ∫ (n-1)r^{n-2}(f²-1-rff')|∇̃u|² - ((n-1)/(n-2)) r^{n-2}|∇̃²u - (Δ̃u/(n-1))σ̃|²`.
///
/// The surface grid must resolve three times the bandlimit of `u`.
pub fn quadratic_form_identity(surface: &NullConeSurface, u: &SphCoeffs) -> Result<QuadraticIdentity> {
    let grid = surface.grid();
    let need = 3 * u.lmax().max(surface.u_coeffs().lmax());
    if grid.lmax() < need {
        return Err(Error::Aliasing { grid: grid.lmax(), required: need });
    }
    let n = surface.model().n() as f64;
    let t = linearized_residual(surface, u)?;
    let c = u.resized(grid.lmax());
    let grad = grid.gradient(&c);
    let uf = SphereField::from_coeffs(grid, &c);
    let tl = uf.traceless_hessian_normsq(surface.model().n() - 1);
    let r = surface.radius_values();
    let model = surface.model();
    let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
    for k in 0..grid.len() {
        let w = grid.weight(k);
        let rn2 = r[k].powf(n - 2.0);
        lhs += w * rn2 * r[k] * (grad.th[k] * t.th[k] + grad.ph[k] * t.ph[k]);
        let g2 = grad.th[k].powi(2) + grad.ph[k].powi(2);
        let a = (n - 1.0) * rn2 * radial_coefficient(model, r[k]) * g2;
        let b = (n - 1.0) / (n - 2.0) * rn2 * tl.values()[k];
        rhs += w * (a - b);
        scale += w * (a.abs() + b.abs());
    }
    Ok(QuadraticIdentity::new(lhs, rhs, scale))
}

/// `T(u)` for an axisymmetric surface in an (n+1)-dimensional model; only the
/// `e_θ` component is nonzero.
pub fn zonal_linearized_residual(surface: &ZonalSurface, u: &ZonalField) -> Result<Vec<f64>> {
    if !Arc::ptr_eq(u.grid(), surface.u().grid()) {
        return Err(Error::SizeMismatch { expected: surface.u().grid().len(), got: u.grid().len() });
    }
    let model = surface.model();
    let n1 = model.n() as f64 - 1.0;
    let du = u.derivs();
    let lap = u.laplacian();
    let dlap = lap.derivs();
    let d0 = surface.u().derivs();
    let u0 = surface.u().values();
    Ok((0..u0.len())
        .map(|i| {
            let r = 1.0 / u0[i];
            let r_th = -d0.u_theta[i] / (u0[i] * u0[i]);
            let a = n1 * (model.fsq(r) / r - 0.5 * model.dfsq(r));
            a * du.u_theta[i] + dlap.u_theta[i] / r - lap.values()[i] * r_th / (r * r)
                + n1 * du.h_radial[i] * r_th / (r * r)
        })
        .collect())
}

/// Dense operator on zonal coefficients of degree `≤ bandlimit`.
#[derive(Debug, Clone)]
pub struct ZonalOperator {
    bandlimit: usize,
    matrix: DMatrix<f64>,
    singular_values: DVector<f64>,
    v_t: DMatrix<f64>,
}

/// Assembles the zonal operator on a grid of `bandlimit + 8` nodes.
pub fn assemble_zonal(surface: &ZonalSurface, bandlimit: usize) -> Result<ZonalOperator> {
    if bandlimit > MAX_OPERATOR_BANDLIMIT {
        return Err(Error::BandlimitTooLarge(bandlimit));
    }
    let old = surface.u().grid();
    let grid = ZonalGrid::new(old.dim(), (bandlimit + 8).max(old.lmax()))?;
    let u0 = ZonalField::from_coeffs(&grid, &surface.u().coeffs());
    let s = ZonalSurface::new(surface.model(), u0)?;
    let w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let mut matrix = DMatrix::zeros(grid.len(), bandlimit + 1);
    for j in 0..=bandlimit {
        let mut a = vec![0.0; bandlimit + 1];
        a[j] = 1.0;
        let t = zonal_linearized_residual(&s, &ZonalField::from_coeffs(&grid, &a))?;
        for i in 0..grid.len() {
            matrix[(i, j)] = w[i] * t[i];
        }
    }
    let (singular_values, v_t) = tall_svd(matrix.clone())?;
    Ok(ZonalOperator { bandlimit, matrix, singular_values, v_t })
}

impl ZonalOperator {
    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
    pub fn kernel(&self, threshold: f64) -> KernelReport {
        kernel_from_svd(&self.singular_values, &self.v_t, threshold)
    }

    /// Largest relative energy in degrees `≥ 2` over the kernel basis.
    pub fn kernel_low_mode_distance(&self, report: &KernelReport) -> f64 {
        report
            .basis
            .iter()
            .map(|b| {
                let total: f64 = b.iter().map(|v| v * v).sum();
                (b.iter().skip(2).map(|v| v * v).sum::<f64>() / total).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Zonal form of [`quadratic_form_identity`].
pub fn zonal_quadratic_form_identity(surface: &ZonalSurface, u: &ZonalField) -> Result<QuadraticIdentity> {
    let model = surface.model();
    let n = model.n() as f64;
    if model.n() < 3 {
        return Err(Error::Unsupported("the identity needs n ≥ 3".into()));
    }
    let t = zonal_linearized_residual(surface, u)?;
    let du = u.derivs();
    let tl = u.traceless_hessian_normsq();
    let w = u.grid().weights();
    let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
    for (i, &u0) in surface.u().values().iter().enumerate() {
        let r = 1.0 / u0;
        let rn2 = r.powf(n - 2.0);
        lhs += w[i] * rn2 * r * du.u_theta[i] * t[i];
        let a = (n - 1.0) * rn2 * radial_coefficient(model, r) * du.u_theta[i].powi(2);
        let b = (n - 1.0) / (n - 2.0) * rn2 * tl.values()[i];
        rhs += w[i] * (a - b);
        scale += w[i] * (a.abs() + b.abs());
    }
    Ok(QuadraticIdentity::new(lhs, rhs, scale))
}
