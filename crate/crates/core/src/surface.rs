//! Spacelike codimension-2 surfaces `Σ = {(v(x), w₀, x)}` in a standard null
//! cone `w = w₀`, described by the band-limited inverse radius `u = 1/r`.
//!
//! Vectors along Σ are written in EF coordinates `(v, w, θ, φ)`. Tangential
//! parts are kept as components in the round orthonormal frame
//! `(e_θ, e_φ = ∂_φ / sin θ)`; the EF inner product is
//! `⟨X, Z⟩ = -(f²/2)(X^v Z^w + X^w Z^v) + r² T_X·T_Z`.
//!
//! The frame is `L = (2r/f²)∂_v` and
//! `L̄ = (1/r)(2∂_w + f²∇v + (f²/2)|∇v|²∂_v)`, normalised by `⟨L, L̄⟩ = -2`.
//! The mean curvature vector is the trace of the second fundamental form,
//! `H = ½(tr χ̄ L + tr χ L̄)` with `tr χ = n - 1`, so `⟨H, L⟩ = -(n-1)` and
//! `⟨H, H⟩ = (n-1)·E` where `E = -tr χ̄` is the quantity called `hsq` here.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curvature::christoffels_ef;
use crate::error::{Error, Result};
use crate::spacetime::{ModelDescriptor, ModelKind, WarpingModel};
use crate::sphere::{CoeffFile, Gradient, Hessian, SphCoeffs, SphereField, SphereGrid};
use crate::zonal::ZonalField;

/// Default tolerance for recognising an ℓ≤1 profile.
pub const LOW_MODE_TOL: f64 = 1e-8;

/// Reference radius of the tortoise coordinate: the centre for the space
/// forms, an interior radius otherwise.
pub fn default_r_ref(model: &WarpingModel) -> f64 {
    if model.kind().is_space_form() {
        return 0.0;
    }
    let (lo, hi) = model.domain();
    if hi.is_finite() {
        0.5 * (lo + hi)
    } else {
        2.0 * lo.max(0.5)
    }
}

/// Surface in the null cone `w = w₀` of a four-dimensional model.
#[derive(Debug, Clone)]
pub struct NullConeSurface {
    model: WarpingModel,
    w0: f64,
    r_ref: f64,
    coeffs: SphCoeffs,
    grid: Arc<SphereGrid>,
    u: Vec<f64>,
    grad_u: Gradient,
    lap_u: Vec<f64>,
    r: Vec<f64>,
    grad_r: Gradient,
    hess_r: Hessian,
    lap_r: Vec<f64>,
}

/// Per-node frame in EF coordinate components `(v, w, θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullFrame {
    pub r: f64,
    pub fsq: f64,
    pub theta: f64,
    pub phi: f64,
    pub l: [f64; 4],
    pub lbar: [f64; 4],
    /// `∂F/∂θ` and `∂F/∂φ`.
    pub tangents: [[f64; 4]; 2],
}

impl NullFrame {
    pub fn inner(&self, x: &[f64; 4], y: &[f64; 4]) -> f64 {
        let s2 = self.theta.sin().powi(2);
        -0.5 * self.fsq * (x[0] * y[1] + x[1] * y[0]) + self.r * self.r * (x[2] * y[2] + s2 * x[3] * y[3])
    }

    /// `[⟨L,L⟩, ⟨L̄,L̄⟩, ⟨L,L̄⟩ + 2, max_a |⟨L,∂_a F⟩|, max_a |⟨L̄,∂_a F⟩|]`.
    pub fn pairing_residuals(&self) -> [f64; 5] {
        let t = &self.tangents;
        [
            self.inner(&self.l, &self.l),
            self.inner(&self.lbar, &self.lbar),
            self.inner(&self.l, &self.lbar) + 2.0,
            self.inner(&self.l, &t[0]).abs().max(self.inner(&self.l, &t[1]).abs()),
            self.inner(&self.lbar, &t[0]).abs().max(self.inner(&self.lbar, &t[1]).abs()),
        ]
    }

    /// Induced metric `⟨∂_a F, ∂_b F⟩` minus `r² g̃_ab`, largest entry.
    pub fn induced_metric_defect(&self) -> f64 {
        let t = &self.tangents;
        let s2 = self.theta.sin().powi(2);
        let r2 = self.r * self.r;
        let e = [self.inner(&t[0], &t[0]) - r2, self.inner(&t[0], &t[1]), self.inner(&t[1], &t[1]) - r2 * s2];
        e.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Mean curvature vector data at the grid nodes.
#[derive(Debug, Clone)]
pub struct MeanCurvature {
    /// EF components of `H`.
    pub h: Vec<[f64; 4]>,
    /// `⟨H, H⟩`.
    pub norm_sq: Vec<f64>,
    /// `⟨H, L⟩`.
    pub pairing_l: Vec<f64>,
    /// Largest `|⟨H, ∂_a F⟩|`.
    pub tangential: f64,
    /// Measured ratio `⟨H, H⟩ / hsq` (equal to `n - 1` up to rounding).
    pub ratio: f64,
}

/// 1-form on Σ in round orthonormal components.
#[derive(Debug, Clone)]
pub struct OneForm {
    pub th: Vec<f64>,
    pub ph: Vec<f64>,
}

impl OneForm {
    pub fn max_abs(&self) -> f64 {
        self.th.iter().chain(&self.ph).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `α_H`, `d log|H|` and their sum.
#[derive(Debug, Clone)]
pub struct CnncResidual {
    pub alpha: OneForm,
    pub dlog_h: OneForm,
    pub residual: OneForm,
}

impl CnncResidual {
    pub fn max_abs(&self) -> f64 {
        self.residual.max_abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum KillingField {
    TimeTranslation,
    /// `y⁰∂_i + y^i∂_0` in Minkowski space.
    MinkowskiBoost(usize),
    /// `y⁰∂_i + y^i∂_0` on the anti-de Sitter quadric.
    AdsK(usize),
    /// `y^{n+1}∂_i + y^i∂_{n+1}` on the anti-de Sitter quadric.
    AdsKPrime(usize),
    /// `y⁰∂_i + y^i∂_0` on the de Sitter quadric.
    DsK(usize),
}

impl KillingField {
    pub fn name(&self) -> String {
        match self {
            KillingField::TimeTranslation => "time_translation".into(),
            KillingField::MinkowskiBoost(i) => format!("minkowski_boost_{i}"),
            KillingField::AdsK(i) => format!("ads_k_{i}"),
            KillingField::AdsKPrime(i) => format!("ads_kprime_{i}"),
            KillingField::DsK(i) => format!("ds_k_{i}"),
        }
    }

    /// All fields available for a model kind.
    pub fn available(kind: ModelKind) -> Vec<KillingField> {
        let mut out = vec![KillingField::TimeTranslation];
        for i in 1..=3 {
            match kind {
                ModelKind::Minkowski => out.push(KillingField::MinkowskiBoost(i)),
                ModelKind::AntiDeSitter { .. } => {
                    out.push(KillingField::AdsK(i));
                    out.push(KillingField::AdsKPrime(i));
                }
                ModelKind::DeSitter { .. } => out.push(KillingField::DsK(i)),
                _ => {}
            }
        }
        out
    }
}

/// `⟨K, L⟩` from the Killing field and from its closed form.
#[derive(Debug, Clone)]
pub struct KillingPairing {
    pub computed: SphereField,
    pub closed_form: SphereField,
    /// `max |computed - closed| / max |closed|`.
    pub max_relative: f64,
}

/// Result of [`fit_boosted_sphere`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BoostFit {
    Boosted {
        r0: f64,
        beta: f64,
        /// `None` when `β = 0` and the axis is undetermined.
        axis: Option<[f64; 3]>,
    },
    NotLowMode {
        distance: f64,
    },
}

/// Profile file: `u = 1/r` in the real orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub model: ModelDescriptor,
    pub w0: f64,
    pub bandlimit: usize,
    pub u_coeffs: Vec<(usize, i64, f64)>,
    pub represents: String,
}

impl NullConeSurface {
    /// Surface with `u` given by coefficients; the working grid resolves
    /// products up to three times the bandlimit.
    pub fn from_u_coeffs(model: &WarpingModel, w0: f64, coeffs: SphCoeffs) -> Result<Self> {
        let grid = SphereGrid::dealiased(coeffs.lmax().max(2), 3);
        Self::with_grid(model, w0, coeffs, grid)
    }

    pub fn with_grid(model: &WarpingModel, w0: f64, coeffs: SphCoeffs, grid: Arc<SphereGrid>) -> Result<Self> {
        if model.n() != 3 {
            return Err(Error::Unsupported(format!(
                "full surfaces need n = 3 (got {}); use the zonal path",
                model.n()
            )));
        }
        if grid.lmax() < coeffs.lmax() {
            return Err(Error::Aliasing { grid: grid.lmax(), required: coeffs.lmax() });
        }
        let c = coeffs.resized(grid.lmax());
        let u = grid.synthesize(&c);
        let bad: Vec<usize> = (0..u.len()).filter(|&k| !(u[k] > 0.0)).collect();
        if let Some(&first) = bad.first() {
            return Err(Error::NotPositive { count: bad.len(), first });
        }
        let r: Vec<f64> = u.iter().map(|u| 1.0 / u).collect();
        for &rk in &r {
            model.check(rk)?;
        }
        let grad_u = grid.gradient(&c);
        let hess_u = grid.hessian(&c);
        let lap_u = grid.synthesize(&c.laplacian());
        let n = u.len();
        let mut grad_r = Gradient { th: vec![0.0; n], ph: vec![0.0; n] };
        let mut hess_r = Hessian { tt: vec![0.0; n], tp: vec![0.0; n], pp: vec![0.0; n] };
        let mut lap_r = vec![0.0; n];
        for k in 0..n {
            let (u2, u3) = (u[k] * u[k], u[k] * u[k] * u[k]);
            let (a, b) = (grad_u.th[k], grad_u.ph[k]);
            grad_r.th[k] = -a / u2;
            grad_r.ph[k] = -b / u2;
            hess_r.tt[k] = -hess_u.tt[k] / u2 + 2.0 * a * a / u3;
            hess_r.tp[k] = -hess_u.tp[k] / u2 + 2.0 * a * b / u3;
            hess_r.pp[k] = -hess_u.pp[k] / u2 + 2.0 * b * b / u3;
            lap_r[k] = -lap_u[k] / u2 + 2.0 * (a * a + b * b) / u3;
        }
        Ok(Self {
            model: model.clone(),
            w0,
            r_ref: default_r_ref(model),
            coeffs,
            grid,
            u,
            grad_u,
            lap_u,
            r,
            grad_r,
            hess_r,
            lap_r,
        })
    }

    /// Surface whose `u` is the degree-`bandlimit` projection of `1/r(x)`.
    pub fn from_radius_fn(
        model: &WarpingModel,
        w0: f64,
        bandlimit: usize,
        r_of: impl Fn([f64; 3]) -> f64,
    ) -> Result<Self> {
        let g = SphereGrid::dealiased(bandlimit.max(2), 3);
        let u = SphereField::from_xyz(&g, |p| 1.0 / r_of(p));
        Self::from_u_coeffs(model, w0, u.coeffs().resized(bandlimit))
    }

    /// Sphere of symmetry `r ≡ r₀`.
    pub fn round(model: &WarpingModel, w0: f64, r0: f64, bandlimit: usize) -> Result<Self> {
        Self::from_u_coeffs(model, w0, SphCoeffs::from_low_modes(bandlimit, 1.0 / r0, [0.0; 3]))
    }

    pub fn model(&self) -> &WarpingModel {
        &self.model
    }
    pub fn w0(&self) -> f64 {
        self.w0
    }
    pub fn r_ref(&self) -> f64 {
        self.r_ref
    }
    pub fn bandlimit(&self) -> usize {
        self.coeffs.lmax()
    }
    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }
    pub fn u_coeffs(&self) -> &SphCoeffs {
        &self.coeffs
    }
    pub fn u(&self) -> SphereField {
        SphereField::new(self.grid.clone(), self.u.clone()).unwrap()
    }
    pub fn r(&self) -> SphereField {
        SphereField::new(self.grid.clone(), self.r.clone()).unwrap()
    }
    pub fn radius_values(&self) -> &[f64] {
        &self.r
    }
    pub fn grad_r(&self) -> &Gradient {
        &self.grad_r
    }
    pub fn hess_r(&self) -> &Hessian {
        &self.hess_r
    }
    pub fn lap_r(&self) -> &[f64] {
        &self.lap_r
    }
    pub fn grad_u(&self) -> &Gradient {
        &self.grad_u
    }
    pub fn lap_u(&self) -> &[f64] {
        &self.lap_u
    }

    fn field(&self, values: Vec<f64>) -> SphereField {
        SphereField::new(self.grid.clone(), values).unwrap()
    }

    /// `v = w₀ + 2 r*(r)` at the nodes.
    pub fn v(&self) -> Result<Vec<f64>> {
        self.r.iter().map(|&r| Ok(self.w0 + 2.0 * self.model.tortoise_fast(r, self.r_ref)?)).collect()
    }

    /// Round-frame gradient of `v`, `2∇̃r/f²`.
    pub fn grad_v(&self) -> Gradient {
        let n = self.r.len();
        let mut g = Gradient { th: vec![0.0; n], ph: vec![0.0; n] };
        for k in 0..n {
            let s = 2.0 / self.model.fsq(self.r[k]);
            g.th[k] = s * self.grad_r.th[k];
            g.ph[k] = s * self.grad_r.ph[k];
        }
        g
    }

    /// Round Hessian of `v`: `2∇̃²r/f² - 2(f²)'∇̃r⊗∇̃r/f⁴`.
    pub fn hess_v(&self) -> Hessian {
        let n = self.r.len();
        let mut h = Hessian { tt: vec![0.0; n], tp: vec![0.0; n], pp: vec![0.0; n] };
        for k in 0..n {
            let f2 = self.model.fsq(self.r[k]);
            let c = 2.0 * self.model.dfsq(self.r[k]) / (f2 * f2);
            let (a, b) = (self.grad_r.th[k], self.grad_r.ph[k]);
            h.tt[k] = 2.0 * self.hess_r.tt[k] / f2 - c * a * a;
            h.tp[k] = 2.0 * self.hess_r.tp[k] / f2 - c * a * b;
            h.pp[k] = 2.0 * self.hess_r.pp[k] / f2 - c * b * b;
        }
        h
    }

    /// Frame at node `k`.
    pub fn frame_at(&self, k: usize) -> NullFrame {
        let (theta, phi) = self.grid.node(k);
        let r = self.r[k];
        let f2 = self.model.fsq(r);
        let s = theta.sin();
        // coordinate derivatives of v
        let vt = 2.0 * self.grad_r.th[k] / f2;
        let vp = 2.0 * self.grad_r.ph[k] * s / f2;
        frame_from_parts(r, f2, theta, phi, vt, vp)
    }

    pub fn frame(&self) -> Vec<NullFrame> {
        (0..self.r.len()).map(|k| self.frame_at(k)).collect()
    }

    /// `tr χ̄ = -(1/r²)[(n-1)(f² + |∇r|²_σ) - 2rΔ_σ r]`.
    pub fn tr_chi_bar(&self) -> SphereField {
        let n = self.model.n() as f64;
        let vals = (0..self.r.len())
            .map(|k| {
                let r = self.r[k];
                let g2 = self.grad_r.th[k].powi(2) + self.grad_r.ph[k].powi(2);
                let grad_sigma = g2 / (r * r);
                let lap_sigma = (self.lap_r[k] + (n - 3.0) * g2 / r) / (r * r);
                -((n - 1.0) * (self.model.fsq(r) + grad_sigma) - 2.0 * r * lap_sigma) / (r * r)
            })
            .collect();
        self.field(vals)
    }

    /// `E = -tr χ̄` (σ-form).
    pub fn hsq(&self) -> SphereField {
        self.tr_chi_bar().map(|v| -v)
    }

    /// `E` in `u`-variables: `(n-1)u²f²(1/u) - (n-1)|∇̃u|² + 2uΔ̃u`.
    pub fn hsq_u_form(&self) -> SphereField {
        let n1 = self.model.n() as f64 - 1.0;
        let vals = (0..self.u.len())
            .map(|k| {
                let u = self.u[k];
                let g2 = self.grad_u.th[k].powi(2) + self.grad_u.ph[k].powi(2);
                n1 * u * u * self.model.fsq(self.r[k]) - n1 * g2 + 2.0 * u * self.lap_u[k]
            })
            .collect();
        self.field(vals)
    }

    /// Gauss curvature `(1 - Δ̃ log r)/r²` of `σ = r²σ̃`.
    pub fn gauss_curvature(&self) -> SphereField {
        let log_r = self.r().map(f64::ln);
        let lap = log_r.laplacian();
        let vals = (0..self.r.len()).map(|k| (1.0 - lap.values()[k]) / (self.r[k] * self.r[k])).collect();
        self.field(vals)
    }

    pub fn mean_curvature_vector(&self) -> Result<MeanCurvature> {
        let n1 = self.model.n() as f64 - 1.0;
        let tcb = self.tr_chi_bar();
        let hsq = tcb.values();
        let mut out = MeanCurvature {
            h: Vec::with_capacity(hsq.len()),
            norm_sq: Vec::with_capacity(hsq.len()),
            pairing_l: Vec::with_capacity(hsq.len()),
            tangential: 0.0,
            ratio: 0.0,
        };
        let mut ratio_num = 0.0;
        let mut ratio_den = 0.0;
        for k in 0..hsq.len() {
            let fr = self.frame_at(k);
            let mut h = [0.0; 4];
            for i in 0..4 {
                h[i] = 0.5 * (tcb.values()[k] * fr.l[i] + n1 * fr.lbar[i]);
            }
            let hh = fr.inner(&h, &h);
            out.tangential =
                out.tangential.max(fr.inner(&h, &fr.tangents[0]).abs()).max(fr.inner(&h, &fr.tangents[1]).abs());
            out.pairing_l.push(fr.inner(&h, &fr.l));
            out.norm_sq.push(hh);
            out.h.push(h);
            ratio_num += hh * (-hsq[k]);
            ratio_den += hsq[k] * hsq[k];
        }
        out.ratio = if ratio_den > 0.0 { ratio_num / ratio_den } else { f64::NAN };
        Ok(out)
    }

    fn spacelike_check(&self, hsq: &[f64]) -> Result<()> {
        let bad: Vec<usize> = (0..hsq.len()).filter(|&k| !(hsq[k] > 0.0)).collect();
        match bad.first() {
            Some(&first) => Err(Error::NotSpacelike { count: bad.len(), first }),
            None => Ok(()),
        }
    }

    /// Normal connection 1-form `α_H(e) = ⟨D_e e_n, e_{n+1}⟩` with
    /// `e_n = -H/|H|` and `e_{n+1}` the future unit normal orthogonal to it.
    pub fn alpha_h(&self) -> Result<OneForm> {
        let n1 = self.model.n() as f64 - 1.0;
        let hsq = self.hsq();
        self.spacelike_check(hsq.values())?;
        let nn = self.r.len();
        let gv = self.grad_v();
        let hv = self.hess_v();
        // e_n = c L + d L̄, e_{n+1} = p L + q L̄, written as P_v ∂_v + P_w ∂_w + S ∇̃v
        let mut en = [vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]];
        let mut em = [vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]];
        for k in 0..nn {
            let r = self.r[k];
            let f2 = self.model.fsq(r);
            let e = hsq.values()[k];
            let hn = (n1 * e).sqrt();
            let (c, d) = (e / (2.0 * hn), -n1 / (2.0 * hn));
            let (p, q) = (e / (2.0 * hn), n1 / (2.0 * hn));
            let gv2 = gv.th[k].powi(2) + gv.ph[k].powi(2);
            let a = 0.5 * f2 * gv2 / (r * r);
            let (lv, lbv, lbw, lbs) = (2.0 * r / f2, a / r, 2.0 / r, f2 / (r * r * r));
            en[0][k] = c * lv + d * lbv;
            en[1][k] = d * lbw;
            en[2][k] = d * lbs;
            em[0][k] = p * lv + q * lbv;
            em[1][k] = q * lbw;
            em[2][k] = q * lbs;
        }
        let grads: Vec<Gradient> = en.iter().map(|f| self.field(f.clone()).gradient()).collect();
        let mut alpha = OneForm { th: vec![0.0; nn], ph: vec![0.0; nn] };
        for k in 0..nn {
            let r = self.r[k];
            let f2 = self.model.fsq(r);
            let df2 = self.model.dfsq(r);
            let (pv, pw, s) = (en[0][k], en[1][k], en[2][k]);
            let (mv, mw, ms) = (em[0][k], em[1][k], em[2][k]);
            let grad_v = [gv.th[k], gv.ph[k]];
            let t_m = [ms * grad_v[0], ms * grad_v[1]];
            for (dir, slot) in [(0usize, &mut alpha.th), (1usize, &mut alpha.ph)] {
                let pick = |g: &Gradient| if dir == 0 { g.th[k] } else { g.ph[k] };
                let ev = grad_v[dir];
                let dv = pick(&grads[0]) + 0.5 * df2 * ev * pv - r * s * ev;
                let dw = pick(&grads[1]) + r * s * ev;
                let es = pick(&grads[2]);
                let mut e_dir = [0.0; 2];
                e_dir[dir] = 1.0;
                let hess = hv.apply(k, e_dir);
                let mut dt = [0.0; 2];
                for i in 0..2 {
                    dt[i] = es * grad_v[i] + s * hess[i] + 0.5 * f2 / r * (ev * s * grad_v[i] + (pv - pw) * e_dir[i]);
                }
                slot[k] = -0.5 * f2 * (dv * mw + dw * mv) + r * r * (dt[0] * t_m[0] + dt[1] * t_m[1]);
            }
        }
        Ok(alpha)
    }

    /// `d log|H|` in round orthonormal components.
    pub fn dlog_h(&self) -> Result<OneForm> {
        let n1 = self.model.n() as f64 - 1.0;
        let hsq = self.hsq();
        self.spacelike_check(hsq.values())?;
        let g = hsq.map(|e| 0.5 * (n1 * e).ln()).gradient();
        Ok(OneForm { th: g.th, ph: g.ph })
    }

    /// `α_H + d log|H|`, which vanishes for surfaces in a standard null cone.
    pub fn cnnc_residual(&self) -> Result<CnncResidual> {
        let alpha = self.alpha_h()?;
        let dlog_h = self.dlog_h()?;
        let residual = OneForm {
            th: alpha.th.iter().zip(&dlog_h.th).map(|(a, b)| a + b).collect(),
            ph: alpha.ph.iter().zip(&dlog_h.ph).map(|(a, b)| a + b).collect(),
        };
        Ok(CnncResidual { alpha, dlog_h, residual })
    }

    /// `⟨K, L⟩` for a Killing field, from its embedding-space definition
    /// converted to EF components, together with the closed form.
    pub fn killing_pairing(&self, which: KillingField) -> Result<KillingPairing> {
        let kind = self.model.kind();
        let mismatch = || Error::KillingMismatch { which: which.name(), model: kind.name().into() };
        let idx = |i: usize| if (1..=3).contains(&i) { Ok(i - 1) } else { Err(mismatch()) };
        match (which, kind) {
            (KillingField::TimeTranslation, _) => {}
            (KillingField::MinkowskiBoost(i), ModelKind::Minkowski) => {
                idx(i)?;
            }
            (KillingField::AdsK(i) | KillingField::AdsKPrime(i), ModelKind::AntiDeSitter { .. }) => {
                idx(i)?;
            }
            (KillingField::DsK(i), ModelKind::DeSitter { .. }) => {
                idx(i)?;
            }
            _ => return Err(mismatch()),
        }
        let nn = self.r.len();
        let mut computed = vec![0.0; nn];
        let mut closed = vec![0.0; nn];
        let w0 = self.w0;
        for k in 0..nn {
            let r = self.r[k];
            let f2 = self.model.fsq(r);
            let x = self.grid.node_xyz(k);
            let t = w0 + self.model.tortoise_fast(r, self.r_ref)?;
            let (kt, kr, cf) = match (which, kind) {
                (KillingField::TimeTranslation, _) => (1.0, 0.0, -r),
                (KillingField::MinkowskiBoost(i), _) => {
                    let xi = x[i - 1];
                    // y⁰ = t, y = r X̃
                    let (y0, yi) = (t, r * xi);
                    (yi, y0 * yi / r, r * w0 * xi)
                }
                (KillingField::AdsK(i), ModelKind::AntiDeSitter { radius: l })
                | (KillingField::AdsKPrime(i), ModelKind::AntiDeSitter { radius: l }) => {
                    let xi = x[i - 1];
                    let rho = (l * l + r * r).sqrt();
                    let (y0, yn1, yi) = (rho * (t / l).sin(), rho * (t / l).cos(), r * xi);
                    let den = y0 * y0 + yn1 * yn1;
                    let (dt0, dtn1) = (l * yn1 / den, -l * y0 / den);
                    if let KillingField::AdsK(_) = which {
                        (yi * dt0, y0 * yi / r, r * l * (w0 / l).sin() * xi)
                    } else {
                        (yi * dtn1, yn1 * yi / r, r * l * (w0 / l).cos() * xi)
                    }
                }
                (KillingField::DsK(i), ModelKind::DeSitter { radius: l }) => {
                    let xi = x[i - 1];
                    let sig = (l * l - r * r).sqrt();
                    let (y0, yn1, yi) = (sig * (t / l).sinh(), sig * (t / l).cosh(), r * xi);
                    let dt0 = l * yn1 / (yn1 * yn1 - y0 * y0);
                    (yi * dt0, y0 * yi / r, r * l * (w0 / l).sinh() * xi)
                }
                _ => unreachable!(),
            };
            // ⟨K, L⟩ = (2r/f²) ḡ_vw K^w = -r K^w with K^w = K^t - K^r/f²
            computed[k] = -r * (kt - kr / f2);
            closed[k] = cf;
        }
        let scale = closed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = computed.iter().zip(&closed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let max_relative = if scale > 0.0 { diff / scale } else { diff };
        Ok(KillingPairing { computed: self.field(computed), closed_form: self.field(closed), max_relative })
    }

    /// Frame at an arbitrary point, from point evaluation of `u`.
    pub fn frame_at_point(&self, theta: f64, phi: f64) -> Result<NullFrame> {
        let [u, ut, up] = self.coeffs.eval_point(theta, phi);
        if !(u > 0.0) {
            return Err(Error::NotPositive { count: 1, first: 0 });
        }
        let r = 1.0 / u;
        self.model.check(r)?;
        let f2 = self.model.fsq(r);
        // ∂r = -∂u/u², ∂v = 2∂r/f²
        let vt = -2.0 * ut / (u * u * f2);
        let vp = -2.0 * up / (u * u * f2);
        Ok(frame_from_parts(r, f2, theta, phi, vt, vp))
    }

    /// `σ^{ab}⟨D_a X, ∂_b F⟩` at a point for `X = L` or `L̄`, with `D_a X`
    /// from centered differences of the EF components of `X` along the
    /// surface and the closed-form EF Christoffel symbols.
    pub fn null_expansion_fd(&self, theta: f64, phi: f64, barred: bool) -> Result<f64> {
        let h = 1e-4;
        let pick = |fr: &NullFrame| if barred { fr.lbar } else { fr.l };
        let base = self.frame_at_point(theta, phi)?;
        let x = pick(&base);
        let deriv = |dt: f64, dp: f64| -> Result<[f64; 4]> {
            let one = |s: f64| -> Result<[f64; 4]> {
                let a = pick(&self.frame_at_point(theta + s * dt, phi + s * dp)?);
                let b = pick(&self.frame_at_point(theta - s * dt, phi - s * dp)?);
                let mut o = [0.0; 4];
                for i in 0..4 {
                    o[i] = (a[i] - b[i]) / (2.0 * s);
                }
                Ok(o)
            };
            let (a, b) = (one(h)?, one(0.5 * h)?);
            let mut o = [0.0; 4];
            for i in 0..4 {
                o[i] = (4.0 * b[i] - a[i]) / 3.0;
            }
            Ok(o)
        };
        let gam = christoffels_ef(&self.model, base.r, &[theta, phi])?;
        let s2 = theta.sin().powi(2);
        let sigma_inv = [1.0 / (base.r * base.r), 1.0 / (base.r * base.r * s2)];
        let mut tr = 0.0;
        for a in 0..2 {
            let dx = if a == 0 { deriv(1.0, 0.0)? } else { deriv(0.0, 1.0)? };
            let ta = base.tangents[a];
            let mut dcov = [0.0; 4];
            for mu in 0..4 {
                let mut s = dx[mu];
                for nu in 0..4 {
                    for la in 0..4 {
                        s += gam.get(mu, nu, la) * ta[nu] * x[la];
                    }
                }
                dcov[mu] = s;
            }
            tr += sigma_inv[a] * base.inner(&dcov, &ta);
        }
        Ok(tr)
    }

    pub fn to_file(&self) -> Result<ProfileFile> {
        let c = self.coeffs.to_file();
        Ok(ProfileFile {
            model: self.model.descriptor()?,
            w0: self.w0,
            bandlimit: c.bandlimit,
            u_coeffs: c.coeffs,
            represents: "u".into(),
        })
    }

    pub fn from_file(f: &ProfileFile) -> Result<Self> {
        if f.represents != "u" {
            return Err(Error::Parse(format!("profile represents {:?}, expected \"u\"", f.represents)));
        }
        let model = f.model.build()?;
        let coeffs = SphCoeffs::from_file(&CoeffFile { bandlimit: f.bandlimit, coeffs: f.u_coeffs.clone() })?;
        Self::from_u_coeffs(&model, f.w0, coeffs)
    }
}

fn frame_from_parts(r: f64, f2: f64, theta: f64, phi: f64, vt: f64, vp: f64) -> NullFrame {
    let s2 = theta.sin().powi(2);
    // σ-gradient of v: σ^{ab} v_b with σ = r² g̃
    let (gt, gp) = (vt / (r * r), vp / (r * r * s2));
    let gv2 = vt * gt + vp * gp;
    let l = [2.0 * r / f2, 0.0, 0.0, 0.0];
    let lbar = [0.5 * f2 * gv2 / r, 2.0 / r, f2 * gt / r, f2 * gp / r];
    NullFrame { r, fsq: f2, theta, phi, l, lbar, tangents: [[vt, 0.0, 1.0, 0.0], [vp, 0.0, 0.0, 1.0]] }
}

/// Surface `r(x) = r₀/(cosh β - sinh β X̃·axis)`, i.e. `u = (cosh β - sinh β X̃·axis)/r₀`.
pub fn boost_sphere(
    model: &WarpingModel,
    w0: f64,
    r0: f64,
    beta: f64,
    axis: [f64; 3],
    bandlimit: usize,
) -> Result<NullConeSurface> {
    if !model.kind().is_space_form() {
        return Err(Error::NotSpaceForm(model.kind().name().into()));
    }
    model.check(r0)?;
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidModel("boost axis must be nonzero".into()));
    }
    let s = beta.sinh() / (r0 * norm);
    let coeffs =
        SphCoeffs::from_low_modes(bandlimit.max(1), beta.cosh() / r0, [-s * axis[0], -s * axis[1], -s * axis[2]]);
    NullConeSurface::from_u_coeffs(model, w0, coeffs)
}

/// Recover `(r₀, β, axis)` from an ℓ≤1 profile `u = a + b·X̃`.
pub fn fit_boosted_sphere(u: &SphCoeffs, tol: f64) -> Result<BoostFit> {
    let distance = u.low_mode_distance();
    if distance >= tol {
        return Ok(BoostFit::NotLowMode { distance });
    }
    let (a, b) = u.low_mode_parts();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    if !(a > nb) {
        return Err(Error::NotBoostedSphere { a, b: nb });
    }
    let r0 = 1.0 / (a * a - nb * nb).sqrt();
    let beta = (nb / a).atanh();
    let axis = if nb > 1e-14 * a { Some([-b[0] / nb, -b[1] / nb, -b[2] / nb]) } else { None };
    Ok(BoostFit::Boosted { r0, beta, axis })
}

/// Axisymmetric surface in the null cone of an (n+1)-dimensional model.
#[derive(Debug, Clone)]
pub struct ZonalSurface {
    model: WarpingModel,
    u: ZonalField,
}

impl ZonalSurface {
    pub fn new(model: &WarpingModel, u: ZonalField) -> Result<Self> {
        if u.grid().dim() + 1 != model.n() {
            return Err(Error::SizeMismatch { expected: model.n() - 1, got: u.grid().dim() });
        }
        let bad: Vec<usize> = (0..u.values().len()).filter(|&i| !(u.values()[i] > 0.0)).collect();
        if let Some(&first) = bad.first() {
            return Err(Error::NotPositive { count: bad.len(), first });
        }
        for &v in u.values() {
            model.check(1.0 / v)?;
        }
        Ok(Self { model: model.clone(), u })
    }

    pub fn model(&self) -> &WarpingModel {
        &self.model
    }
    pub fn u(&self) -> &ZonalField {
        &self.u
    }
    pub fn r(&self) -> ZonalField {
        self.u.map(|v| 1.0 / v)
    }

    /// `E` from the σ-form on S^{n-1}, with `r` derivatives by the chain rule.
    pub fn hsq(&self) -> ZonalField {
        let n = self.model.n() as f64;
        let gu2 = self.u.grad_sq();
        let lapu = self.u.laplacian();
        let vals = (0..gu2.values().len())
            .map(|i| {
                let u = self.u.values()[i];
                let rv = 1.0 / u;
                let g2 = gu2.values()[i] / u.powi(4);
                let lap = -lapu.values()[i] / (u * u) + 2.0 * gu2.values()[i] / u.powi(3);
                let grad_sigma = g2 / (rv * rv);
                let lap_sigma = (lap + (n - 3.0) * g2 / rv) / (rv * rv);
                ((n - 1.0) * (self.model.fsq(rv) + grad_sigma) - 2.0 * rv * lap_sigma) / (rv * rv)
            })
            .collect();
        ZonalField::new(self.u.grid().clone(), vals).unwrap()
    }

    /// `E` in `u`-variables.
    pub fn hsq_u_form(&self) -> ZonalField {
        let n1 = self.model.n() as f64 - 1.0;
        let g2 = self.u.grad_sq();
        let lap = self.u.laplacian();
        let vals = (0..g2.values().len())
            .map(|i| {
                let u = self.u.values()[i];
                n1 * u * u * self.model.fsq(1.0 / u) - n1 * g2.values()[i] + 2.0 * u * lap.values()[i]
            })
            .collect();
        ZonalField::new(self.u.grid().clone(), vals).unwrap()
    }
}
