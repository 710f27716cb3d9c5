//! Real spherical-harmonic calculus on the round unit sphere S².
//!
//! Basis: real orthonormal harmonics with `∫ Y_lm Y_l'm' dμ = δδ`,
//! `Y_l0 = P̄_l0(cos θ)`, `Y_lm = √2 P̄_lm cos(mφ)`, `Y_l,-m = √2 P̄_lm sin(mφ)`
//! for `m > 0`, without the Condon–Shortley phase. With this choice
//! `Y_11 ∝ x`, `Y_1,-1 ∝ y`, `Y_10 ∝ z`.
//!
//! Fields are stored as samples on a Gauss–Legendre × uniform-longitude
//! grid. A grid of bandlimit `L` has `L + 1` colatitude rings and `2L + 2`
//! longitudes, so analysis up to degree `L` is exact for fields of degree
//! `≤ L + 1`. Nodes never sit on the poles.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Largest grid bandlimit accepted by the dense transforms.
pub const MAX_GRID_BANDLIMIT: usize = 256;

#[inline]
pub fn coeff_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

#[derive(Debug)]
pub struct SphereGrid {
    lmax: usize,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
    phi: Vec<f64>,
    ring_weight: Vec<f64>,
    dphi: f64,
    cos_mp: Vec<f64>,
    sin_mp: Vec<f64>,
    // per ring, triangular (l, m >= 0)
    p: Vec<f64>,
    dp: Vec<f64>,
    d2p: Vec<f64>,
    p_sin: Vec<f64>,
    dp_sin: Vec<f64>,
    p_sin2: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Table {
    P,
    Dp,
    D2p,
    PSin,
    DpSin,
    PSin2,
}

impl SphereGrid {
    /// Grid for bandlimit `lmax`: `lmax + 1` rings, `2 lmax + 2` longitudes.
    pub fn new(lmax: usize) -> Arc<Self> {
        Self::with_sizes(lmax, lmax + 1, 2 * lmax + 2).expect("valid default grid")
    }

    /// Grid for fields of bandlimit `l_field` whose nonlinear products up to
    /// degree `factor · l_field` must be resolved exactly.
    pub fn dealiased(l_field: usize, factor: usize) -> Arc<Self> {
        Self::new((factor * l_field).max(l_field))
    }

    pub fn with_sizes(lmax: usize, n_theta: usize, n_phi: usize) -> Result<Arc<Self>> {
        if lmax > MAX_GRID_BANDLIMIT {
            return Err(Error::BandlimitTooLarge(lmax));
        }
        if n_theta < lmax + 1 || n_phi < 2 * lmax + 1 {
            return Err(Error::Aliasing { grid: n_theta.min(n_phi / 2), required: lmax + 1 });
        }
        let (x, w) = gauss_legendre(n_theta);
        let theta: Vec<f64> = x.iter().map(|x| x.acos()).collect();
        let sin_t: Vec<f64> = x.iter().map(|x| (1.0 - x * x).sqrt()).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let phi: Vec<f64> = (0..n_phi).map(|j| j as f64 * dphi).collect();
        let mut cos_mp = vec![0.0; (lmax + 1) * n_phi];
        let mut sin_mp = vec![0.0; (lmax + 1) * n_phi];
        for m in 0..=lmax {
            for j in 0..n_phi {
                let a = m as f64 * phi[j];
                cos_mp[m * n_phi + j] = a.cos();
                sin_mp[m * n_phi + j] = a.sin();
            }
        }
        let nt = tri(lmax, lmax) + 1;
        let mut p = vec![0.0; n_theta * nt];
        let mut dp = vec![0.0; n_theta * nt];
        let mut d2p = vec![0.0; n_theta * nt];
        let mut p_sin = vec![0.0; n_theta * nt];
        let mut dp_sin = vec![0.0; n_theta * nt];
        let mut p_sin2 = vec![0.0; n_theta * nt];
        for i in 0..n_theta {
            let (c, s) = (x[i], sin_t[i]);
            let row = normalized_legendre(lmax, c, s);
            for l in 0..=lmax {
                for m in 0..=l {
                    let k = tri(l, m);
                    let val = row[k];
                    let lf = l as f64;
                    let mf = m as f64;
                    let prev = if l > m { row[tri(l - 1, m)] } else { 0.0 };
                    let coef =
                        if l > m { ((lf * lf - mf * mf) * (2.0 * lf + 1.0) / (2.0 * lf - 1.0)).sqrt() } else { 0.0 };
                    let d = (lf * c * val - coef * prev) / s;
                    let d2 = -c / s * d + (mf * mf / (s * s) - lf * (lf + 1.0)) * val;
                    let o = i * nt + k;
                    p[o] = val;
                    dp[o] = d;
                    d2p[o] = d2;
                    p_sin[o] = val / s;
                    dp_sin[o] = d / s;
                    p_sin2[o] = val / (s * s);
                }
            }
        }
        Ok(Arc::new(Self {
            lmax,
            n_theta,
            n_phi,
            theta,
            cos_t: x,
            sin_t,
            phi,
            ring_weight: w,
            dphi,
            cos_mp,
            sin_mp,
            p,
            dp,
            d2p,
            p_sin,
            dp_sin,
            p_sin2,
        }))
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }
    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn n_coeffs(&self) -> usize {
        (self.lmax + 1) * (self.lmax + 1)
    }

    /// `(θ, φ)` of node `k` (ring-major order).
    pub fn node(&self, k: usize) -> (f64, f64) {
        (self.theta[k / self.n_phi], self.phi[k % self.n_phi])
    }

    /// Unit vector `(x, y, z)` of node `k`.
    pub fn node_xyz(&self, k: usize) -> [f64; 3] {
        let i = k / self.n_phi;
        let j = k % self.n_phi;
        let s = self.sin_t[i];
        let (sp, cp) = self.phi[j].sin_cos();
        [s * cp, s * sp, self.cos_t[i]]
    }

    pub fn sin_theta(&self, k: usize) -> f64 {
        self.sin_t[k / self.n_phi]
    }
    pub fn cos_theta(&self, k: usize) -> f64 {
        self.cos_t[k / self.n_phi]
    }

    /// Quadrature weight of node `k`; the weights sum to `4π`.
    pub fn weight(&self, k: usize) -> f64 {
        self.ring_weight[k / self.n_phi] * self.dphi
    }

    fn table(&self, t: Table) -> &[f64] {
        match t {
            Table::P => &self.p,
            Table::Dp => &self.dp,
            Table::D2p => &self.d2p,
            Table::PSin => &self.p_sin,
            Table::DpSin => &self.dp_sin,
            Table::PSin2 => &self.p_sin2,
        }
    }

    /// Analysis: samples → coefficients up to the grid bandlimit.
    pub fn analyze(&self, values: &[f64]) -> Result<SphCoeffs> {
        if values.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: values.len() });
        }
        let l = self.lmax;
        let nt = tri(l, l) + 1;
        let mut out = SphCoeffs::zeros(l);
        let mut cm = vec![0.0; l + 1];
        let mut sm = vec![0.0; l + 1];
        for i in 0..self.n_theta {
            let ring = &values[i * self.n_phi..(i + 1) * self.n_phi];
            for m in 0..=l {
                let ct = &self.cos_mp[m * self.n_phi..(m + 1) * self.n_phi];
                let st = &self.sin_mp[m * self.n_phi..(m + 1) * self.n_phi];
                let mut c = 0.0;
                let mut s = 0.0;
                for j in 0..self.n_phi {
                    c += ring[j] * ct[j];
                    s += ring[j] * st[j];
                }
                let w = self.ring_weight[i] * self.dphi;
                let scale = if m == 0 { w } else { w * std::f64::consts::SQRT_2 };
                cm[m] = c * scale;
                sm[m] = s * scale;
            }
            let p = &self.p[i * nt..(i + 1) * nt];
            for ll in 0..=l {
                for m in 0..=ll {
                    let pv = p[tri(ll, m)];
                    out.data[coeff_index(ll, m as i64)] += pv * cm[m];
                    if m > 0 {
                        out.data[coeff_index(ll, -(m as i64))] += pv * sm[m];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Synthesis with a chosen colatitude table and longitude derivative order.
    fn synth(&self, c: &SphCoeffs, table: Table, phi_order: u8) -> Vec<f64> {
        let l = c.lmax.min(self.lmax);
        let nt = tri(self.lmax, self.lmax) + 1;
        let tab = self.table(table);
        let mut out = vec![0.0; self.len()];
        let mut gc = vec![0.0; l + 1];
        let mut gs = vec![0.0; l + 1];
        for i in 0..self.n_theta {
            let p = &tab[i * nt..(i + 1) * nt];
            for m in 0..=l {
                let mut a = 0.0;
                let mut b = 0.0;
                for ll in m..=l {
                    let pv = p[tri(ll, m)];
                    a += c.data[coeff_index(ll, m as i64)] * pv;
                    if m > 0 {
                        b += c.data[coeff_index(ll, -(m as i64))] * pv;
                    }
                }
                let w = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                gc[m] = a * w;
                gs[m] = b * w;
            }
            let ring = &mut out[i * self.n_phi..(i + 1) * self.n_phi];
            for m in 0..=l {
                let mf = m as f64;
                let (ac, as_) = match phi_order {
                    0 => (gc[m], gs[m]),
                    // d/dφ: cos → -m sin, sin → m cos
                    1 => (mf * gs[m], -mf * gc[m]),
                    _ => (-mf * mf * gc[m], -mf * mf * gs[m]),
                };
                if ac == 0.0 && as_ == 0.0 {
                    continue;
                }
                let ct = &self.cos_mp[m * self.n_phi..(m + 1) * self.n_phi];
                let st = &self.sin_mp[m * self.n_phi..(m + 1) * self.n_phi];
                for j in 0..self.n_phi {
                    ring[j] += ac * ct[j] + as_ * st[j];
                }
            }
        }
        out
    }

    pub fn synthesize(&self, c: &SphCoeffs) -> Vec<f64> {
        self.synth(c, Table::P, 0)
    }

    /// Orthonormal-frame gradient `(∂_θ u, ∂_φ u / sin θ)`.
    pub fn gradient(&self, c: &SphCoeffs) -> Gradient {
        Gradient { th: self.synth(c, Table::Dp, 0), ph: self.synth(c, Table::PSin, 1) }
    }

    /// Covariant Hessian of the round metric in the orthonormal frame
    /// `(e_θ, e_φ)`, from `∇²u_ab = ∂_a∂_b u - Γ̃^c_ab ∂_c u`.
    pub fn hessian(&self, c: &SphCoeffs) -> Hessian {
        let ut = self.synth(c, Table::Dp, 0);
        let utt = self.synth(c, Table::D2p, 0);
        let utp = self.synth(c, Table::DpSin, 1);
        let up = self.synth(c, Table::PSin, 1);
        let upp = self.synth(c, Table::PSin2, 2);
        let mut h = Hessian { tt: utt, tp: vec![0.0; self.len()], pp: vec![0.0; self.len()] };
        for k in 0..self.len() {
            let i = k / self.n_phi;
            let cot = self.cos_t[i] / self.sin_t[i];
            h.tp[k] = utp[k] - cot * up[k];
            h.pp[k] = upp[k] + cot * ut[k];
        }
        h
    }
}

/// Fully normalized associated Legendre values `P̄_lm(cos θ)` (triangular),
/// with `∫ P̄_lm² d(cos θ) = 1/(2π)`.
fn normalized_legendre(lmax: usize, x: f64, s: f64) -> Vec<f64> {
    let mut out = vec![0.0; tri(lmax, lmax) + 1];
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        out[tri(m, m)] = pmm;
        if m < lmax {
            out[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        }
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            out[tri(l, m)] = a * (x * out[tri(l - 1, m)] - b * out[tri(l - 2, m)]);
        }
    }
    out
}

/// Real spherical-harmonic coefficients `a_lm`, `0 ≤ l ≤ lmax`, `|m| ≤ l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphCoeffs {
    lmax: usize,
    data: Vec<f64>,
}

impl SphCoeffs {
    pub fn zeros(lmax: usize) -> Self {
        Self { lmax, data: vec![0.0; (lmax + 1) * (lmax + 1)] }
    }

    pub fn from_vec(lmax: usize, data: Vec<f64>) -> Result<Self> {
        let expected = (lmax + 1) * (lmax + 1);
        if data.len() != expected {
            return Err(Error::SizeMismatch { expected, got: data.len() });
        }
        Ok(Self { lmax, data })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            return 0.0;
        }
        self.data[coeff_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        self.data[coeff_index(l, m)] = v;
    }

    /// Copy truncated or zero-padded to `lmax`.
    pub fn resized(&self, lmax: usize) -> Self {
        let mut out = Self::zeros(lmax);
        for l in 0..=lmax.min(self.lmax) {
            for m in -(l as i64)..=(l as i64) {
                out.set(l, m, self.get(l, m));
            }
        }
        out
    }

    /// Multiply each degree-`l` block by `g(l)`.
    pub fn scale_by_degree(&self, g: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.lmax {
            let s = g(l);
            for m in -(l as i64)..=(l as i64) {
                out.data[coeff_index(l, m)] *= s;
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        self.scale_by_degree(|l| -((l * (l + 1)) as f64))
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum()
    }

    /// `√(Σ_{l≥2} a²) / √(Σ a²)`; zero when the field vanishes.
    pub fn low_mode_distance(&self) -> f64 {
        let total = self.norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        let high: f64 = self.data.iter().skip(4).map(|a| a * a).sum();
        (high / total).sqrt()
    }

    pub fn project_low_modes(&self) -> Self {
        let mut out = Self::zeros(self.lmax);
        let k = 4.min(self.data.len());
        out.data[..k].copy_from_slice(&self.data[..k]);
        out
    }

    /// `u = a + b·X̃`: constant part and `(x, y, z)` vector of the ℓ≤1 part.
    pub fn low_mode_parts(&self) -> (f64, [f64; 3]) {
        let c0 = 1.0 / (4.0 * PI).sqrt();
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        (self.get(0, 0) * c0, [self.get(1, 1) * c1, self.get(1, -1) * c1, self.get(1, 0) * c1])
    }

    /// Coefficients of `a + b·X̃`.
    pub fn from_low_modes(lmax: usize, a: f64, b: [f64; 3]) -> Self {
        let mut out = Self::zeros(lmax.max(1));
        let c0 = (4.0 * PI).sqrt();
        let c1 = (4.0 * PI / 3.0).sqrt();
        out.set(0, 0, a * c0);
        out.set(1, 1, b[0] * c1);
        out.set(1, -1, b[1] * c1);
        out.set(1, 0, b[2] * c1);
        out
    }

    /// Value and coordinate derivatives `(u, ∂_θ u, ∂_φ u)` at an arbitrary
    /// point off the poles.
    pub fn eval_point(&self, theta: f64, phi: f64) -> [f64; 3] {
        let l = self.lmax;
        let (s, c) = theta.sin_cos();
        let p = normalized_legendre(l, c, s);
        let mut out = [0.0; 3];
        for ll in 0..=l {
            let lf = ll as f64;
            for m in 0..=ll {
                let mf = m as f64;
                let val = p[tri(ll, m)];
                let prev = if ll > m { p[tri(ll - 1, m)] } else { 0.0 };
                let coef =
                    if ll > m { ((lf * lf - mf * mf) * (2.0 * lf + 1.0) / (2.0 * lf - 1.0)).sqrt() } else { 0.0 };
                let dval = (lf * c * val - coef * prev) / s;
                let (sm, cm) = (mf * phi).sin_cos();
                let w = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                let a = self.get(ll, m as i64) * w;
                let b = if m > 0 { self.get(ll, -(m as i64)) * w } else { 0.0 };
                out[0] += val * (a * cm + b * sm);
                out[1] += dval * (a * cm + b * sm);
                out[2] += val * mf * (b * cm - a * sm);
            }
        }
        out
    }

    pub fn to_file(&self) -> CoeffFile {
        let mut coeffs = Vec::with_capacity(self.data.len());
        for l in 0..=self.lmax {
            for m in -(l as i64)..=(l as i64) {
                coeffs.push((l, m, self.get(l, m)));
            }
        }
        CoeffFile { bandlimit: self.lmax, coeffs }
    }

    pub fn from_file(f: &CoeffFile) -> Result<Self> {
        let mut out = Self::zeros(f.bandlimit);
        for &(l, m, v) in &f.coeffs {
            if l > f.bandlimit || m.unsigned_abs() as usize > l {
                return Err(Error::Parse(format!("coefficient ({l}, {m}) outside bandlimit")));
            }
            out.set(l, m, v);
        }
        Ok(out)
    }
}

/// `{"bandlimit": L, "coeffs": [[l, m, value], ...]}` in the real orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffFile {
    pub bandlimit: usize,
    pub coeffs: Vec<(usize, i64, f64)>,
}

/// Orthonormal-frame gradient components at grid nodes.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub th: Vec<f64>,
    pub ph: Vec<f64>,
}

impl Gradient {
    pub fn norm_sq(&self) -> Vec<f64> {
        self.th.iter().zip(&self.ph).map(|(a, b)| a * a + b * b).collect()
    }
    pub fn dot(&self, o: &Gradient) -> Vec<f64> {
        (0..self.th.len()).map(|k| self.th[k] * o.th[k] + self.ph[k] * o.ph[k]).collect()
    }
}

/// Orthonormal-frame Hessian components at grid nodes.
#[derive(Debug, Clone)]
pub struct Hessian {
    pub tt: Vec<f64>,
    pub tp: Vec<f64>,
    pub pp: Vec<f64>,
}

impl Hessian {
    pub fn trace(&self) -> Vec<f64> {
        self.tt.iter().zip(&self.pp).map(|(a, b)| a + b).collect()
    }
    pub fn norm_sq(&self) -> Vec<f64> {
        (0..self.tt.len()).map(|k| self.tt[k].powi(2) + 2.0 * self.tp[k].powi(2) + self.pp[k].powi(2)).collect()
    }
    /// `|∇²u - (Δu/2) σ̃|²`, the traceless part on S².
    pub fn traceless_norm_sq(&self) -> Vec<f64> {
        (0..self.tt.len()).map(|k| 0.5 * (self.tt[k] - self.pp[k]).powi(2) + 2.0 * self.tp[k].powi(2)).collect()
    }
    /// `∇²u(X, ·)` for an orthonormal-frame vector `X`.
    pub fn apply(&self, k: usize, x: [f64; 2]) -> [f64; 2] {
        [self.tt[k] * x[0] + self.tp[k] * x[1], self.tp[k] * x[0] + self.pp[k] * x[1]]
    }
}

/// Real scalar field sampled on a [`SphereGrid`].
#[derive(Debug, Clone)]
pub struct SphereField {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl SphereField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &Arc<SphereGrid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `g(θ, φ)`.
    pub fn from_angles(grid: &Arc<SphereGrid>, g: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| {
            let (t, p) = grid.node(k);
            g(t, p)
        });
        Self { grid: grid.clone(), values: values.collect() }
    }

    /// Samples `g(x, y, z)` on the unit sphere.
    pub fn from_xyz(grid: &Arc<SphereGrid>, g: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| g(grid.node_xyz(k)));
        Self { grid: grid.clone(), values: values.collect() }
    }

    pub fn from_coeffs(grid: &Arc<SphereGrid>, c: &SphCoeffs) -> Self {
        Self { grid: grid.clone(), values: grid.synthesize(c) }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn coeffs(&self) -> SphCoeffs {
        self.grid.analyze(&self.values).expect("grid-consistent field")
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| g(v)).collect() }
    }

    pub fn zip_map(&self, o: &SphereField, g: impl Fn(f64, f64) -> f64) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &o.grid) || self.grid.len() == o.grid.len());
        let values = self.values.iter().zip(&o.values).map(|(&a, &b)| g(a, b)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn laplacian(&self) -> Self {
        Self::from_coeffs(&self.grid, &self.coeffs().laplacian())
    }

    pub fn gradient(&self) -> Gradient {
        self.grid.gradient(&self.coeffs())
    }

    pub fn hessian(&self) -> Hessian {
        self.grid.hessian(&self.coeffs())
    }

    /// `|∇̃²u - (Δ̃u/d) σ̃|²` computed from the frame components. For `d = 2`
    /// this is the traceless norm on S²; other `d` treat the sphere's Hessian
    /// as embedded with the given trace normalization.
    pub fn traceless_hessian_normsq(&self, d: usize) -> Self {
        let h = self.hessian();
        let df = d as f64;
        let values = (0..self.values.len())
            .map(|k| {
                let tr = h.tt[k] + h.pp[k];
                (h.tt[k] - tr / df).powi(2)
                    + 2.0 * h.tp[k].powi(2)
                    + (h.pp[k] - tr / df).powi(2)
                    + (df - 2.0).max(0.0) * (tr / df).powi(2)
            })
            .collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn integrate(&self) -> f64 {
        (0..self.values.len()).map(|k| self.grid.weight(k) * self.values[k]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    pub fn project_low_modes(&self) -> Self {
        Self::from_coeffs(&self.grid, &self.coeffs().project_low_modes())
    }

    pub fn low_mode_distance(&self) -> f64 {
        self.coeffs().low_mode_distance()
    }
}
