//! Zonal (axisymmetric) calculus on the round sphere S^d.
//!
//! A zonal function depends only on `x = cos θ`. The basis is the
//! orthonormal polynomial family for the weight `(1 - x²)^((d-2)/2)`,
//! rescaled so that `∫_{S^d} Z_l Z_k dμ̃ = δ_lk`. For `d = 2` this is `Y_l0`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_gegenbauer, orthonormal_poly_table};

/// Area of the unit sphere `S^k`.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * sphere_area(k - 2) / (k as f64 - 1.0),
    }
}

#[derive(Debug)]
pub struct ZonalGrid {
    d: usize,
    lmax: usize,
    x: Vec<f64>,
    w: Vec<f64>,
    z: Vec<f64>,
    dz: Vec<f64>,
    d2z: Vec<f64>,
}

impl ZonalGrid {
    /// Grid on `S^d` exact for analysis up to degree `lmax` of fields of
    /// degree `≤ lmax + 1`.
    pub fn new(d: usize, lmax: usize) -> Result<Arc<Self>> {
        if d < 2 {
            return Err(Error::Unsupported(format!("zonal calculus on S^{d}")));
        }
        let alpha = (d as f64 - 2.0) / 2.0;
        let n = lmax + 1;
        let (x, w) = gauss_gegenbauer(alpha, n);
        let shell = sphere_area(d - 1);
        let norm = 1.0 / shell.sqrt();
        let w: Vec<f64> = w.iter().map(|w| w * shell).collect();
        let mut z = vec![0.0; n * (lmax + 1)];
        let mut dz = vec![0.0; n * (lmax + 1)];
        let mut d2z = vec![0.0; n * (lmax + 1)];
        for (i, &xi) in x.iter().enumerate() {
            let (p, dp, d2p) = orthonormal_poly_table(alpha, lmax, xi);
            for l in 0..=lmax {
                z[i * (lmax + 1) + l] = p[l] * norm;
                dz[i * (lmax + 1) + l] = dp[l] * norm;
                d2z[i * (lmax + 1) + l] = d2p[l] * norm;
            }
        }
        Ok(Arc::new(Self { d, lmax, x, w, z, dz, d2z }))
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    /// Nodes in `x = cos θ`, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.x
    }
    /// Weights on S^d; they sum to `|S^d|`.
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn analyze(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: values.len() });
        }
        let k = self.lmax + 1;
        let mut a = vec![0.0; k];
        for i in 0..self.len() {
            let wv = self.w[i] * values[i];
            for l in 0..k {
                a[l] += wv * self.z[i * k + l];
            }
        }
        Ok(a)
    }

    fn synth(&self, a: &[f64], table: &[f64]) -> Vec<f64> {
        let k = self.lmax + 1;
        let lm = a.len().min(k);
        (0..self.len()).map(|i| (0..lm).map(|l| a[l] * table[i * k + l]).sum()).collect()
    }

    pub fn synthesize(&self, a: &[f64]) -> Vec<f64> {
        self.synth(a, &self.z)
    }
    /// `du/dx` at the nodes.
    pub fn synthesize_dx(&self, a: &[f64]) -> Vec<f64> {
        self.synth(a, &self.dz)
    }
    /// `d²u/dx²` at the nodes.
    pub fn synthesize_dxx(&self, a: &[f64]) -> Vec<f64> {
        self.synth(a, &self.d2z)
    }
}

/// Zonal field sampled at the nodes of a [`ZonalGrid`].
#[derive(Debug, Clone)]
pub struct ZonalField {
    grid: Arc<ZonalGrid>,
    values: Vec<f64>,
}

/// Pointwise zonal derivative data: `u_θ` and the two Hessian eigenvalues
/// (`u_θθ` along `e_θ`, and `cot θ · u_θ` with multiplicity `d - 1`).
#[derive(Debug, Clone)]
pub struct ZonalDerivs {
    pub u_theta: Vec<f64>,
    pub h_radial: Vec<f64>,
    pub h_tangential: Vec<f64>,
}

impl ZonalField {
    pub fn new(grid: Arc<ZonalGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Samples `g(cos θ)`.
    pub fn from_fn(grid: &Arc<ZonalGrid>, g: impl Fn(f64) -> f64) -> Self {
        Self { grid: grid.clone(), values: grid.x.iter().map(|&x| g(x)).collect() }
    }

    pub fn from_coeffs(grid: &Arc<ZonalGrid>, a: &[f64]) -> Self {
        Self { grid: grid.clone(), values: grid.synthesize(a) }
    }

    pub fn grid(&self) -> &Arc<ZonalGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn coeffs(&self) -> Vec<f64> {
        self.grid.analyze(&self.values).expect("grid-consistent field")
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| g(v)).collect() }
    }

    pub fn zip_map(&self, o: &ZonalField, g: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.values.iter().zip(&o.values).map(|(&a, &b)| g(a, b)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn laplacian(&self) -> Self {
        let d = self.grid.d as f64;
        let a: Vec<f64> =
            self.coeffs().iter().enumerate().map(|(l, a)| -(l as f64) * (l as f64 + d - 1.0) * a).collect();
        Self::from_coeffs(&self.grid, &a)
    }

    pub fn derivs(&self) -> ZonalDerivs {
        let a = self.coeffs();
        let ux = self.grid.synthesize_dx(&a);
        let uxx = self.grid.synthesize_dxx(&a);
        let n = self.values.len();
        let mut out = ZonalDerivs { u_theta: vec![0.0; n], h_radial: vec![0.0; n], h_tangential: vec![0.0; n] };
        for i in 0..n {
            let x = self.grid.x[i];
            let s = (1.0 - x * x).sqrt();
            out.u_theta[i] = -s * ux[i];
            out.h_radial[i] = (1.0 - x * x) * uxx[i] - x * ux[i];
            out.h_tangential[i] = -x * ux[i];
        }
        out
    }

    /// `|∇̃u|²`.
    pub fn grad_sq(&self) -> Self {
        let d = self.derivs();
        Self { grid: self.grid.clone(), values: d.u_theta.iter().map(|v| v * v).collect() }
    }

    /// `∇̃u · ∇̃v`.
    pub fn grad_dot(&self, o: &ZonalField) -> Self {
        let a = self.derivs();
        let b = o.derivs();
        let values = a.u_theta.iter().zip(&b.u_theta).map(|(x, y)| x * y).collect();
        Self { grid: self.grid.clone(), values }
    }

    /// `|∇̃²u|²`.
    pub fn hessian_normsq(&self) -> Self {
        let dm1 = self.grid.d as f64 - 1.0;
        let h = self.derivs();
        let values = (0..self.values.len()).map(|i| h.h_radial[i].powi(2) + dm1 * h.h_tangential[i].powi(2));
        Self { grid: self.grid.clone(), values: values.collect() }
    }

    /// `|∇̃²u - (Δ̃u/d) σ̃|²` on S^d.
    pub fn traceless_hessian_normsq(&self) -> Self {
        let d = self.grid.d as f64;
        let h = self.derivs();
        let values = (0..self.values.len()).map(|i| {
            let tr = h.h_radial[i] + (d - 1.0) * h.h_tangential[i];
            (h.h_radial[i] - tr / d).powi(2) + (d - 1.0) * (h.h_tangential[i] - tr / d).powi(2)
        });
        Self { grid: self.grid.clone(), values: values.collect() }
    }

    pub fn integrate(&self) -> f64 {
        self.values.iter().zip(&self.grid.w).map(|(v, w)| v * w).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// Relative L² energy in degrees `l ≥ 2`.
    pub fn low_mode_distance(&self) -> f64 {
        let a = self.coeffs();
        let total: f64 = a.iter().map(|v| v * v).sum();
        if total == 0.0 {
            return 0.0;
        }
        (a.iter().skip(2).map(|v| v * v).sum::<f64>() / total).sqrt()
    }
}
