//! Christoffel symbols and Riemann curvature of the static metric
//! `-f² dt² + dr²/f² + r² g̃` and of its Eddington–Finkelstein form
//! `-f² dv dw + r² g̃`.
//!
//! Conventions: `R(X,Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z`,
//! `R(X,Y,Z,W) = ḡ(R(X,Y)W, Z)`, so with `up[δ,α,β,γ] = R_{αβγ}^δ` the
//! lowered tensor is `R_{αβεγ} = ḡ_{εδ} R_{αβγ}^δ`.
//!
//! The finite-difference engine differentiates metric components
//! numerically. Points are addressed by `(r, angles)`: in both charts the
//! components depend on the first two coordinates only through `r`, and the
//! rates `∂r/∂x⁰`, `∂r/∂x¹` are exact (`(0, 1)` static, `(f²/2, -f²/2)` EF).

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spacetime::{ModelKind, WarpingModel};
use crate::surface::NullConeSurface;

/// Default relative finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Relative discrepancy above which a printed formula is reported.
pub const ERRATUM_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Static,
    EddingtonFinkelstein,
}

impl ChartKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChartKind::Static => "static",
            ChartKind::EddingtonFinkelstein => "eddington_finkelstein",
        }
    }
}

/// Diagonal of the round metric on S^{k} in hyperspherical angles:
/// `g̃_11 = 1`, `g̃_jj = Π_{i<j} sin²θ_i`.
pub fn round_metric_diag(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut s = 1.0;
    for a in angles {
        out.push(s);
        s *= a.sin().powi(2);
    }
    out
}

/// Coordinate chart of the (n+1)-dimensional spacetime.
#[derive(Debug, Clone)]
pub struct MetricChart {
    model: WarpingModel,
    kind: ChartKind,
}

impl MetricChart {
    pub fn new(model: WarpingModel, kind: ChartKind) -> Self {
        Self { model, kind }
    }
    pub fn model(&self) -> &WarpingModel {
        &self.model
    }
    pub fn kind(&self) -> ChartKind {
        self.kind
    }
    pub fn dim(&self) -> usize {
        self.model.n() + 1
    }

    /// `(∂r/∂x⁰, ∂r/∂x¹)` at radius `r`.
    pub fn radial_rates(&self, r: f64) -> [f64; 2] {
        match self.kind {
            ChartKind::Static => [0.0, 1.0],
            ChartKind::EddingtonFinkelstein => {
                let h = 0.5 * self.model.fsq(r);
                [h, -h]
            }
        }
    }

    /// Radius of the coordinate point `(x⁰, x¹)`.
    pub fn radius_at(&self, x0: f64, x1: f64, r_ref: f64) -> Result<f64> {
        match self.kind {
            ChartKind::Static => {
                self.model.check(x1)?;
                Ok(x1)
            }
            ChartKind::EddingtonFinkelstein => Ok(self.model.static_from_ef(x0, x1, r_ref)?.1),
        }
    }

    /// Metric components at `(r, angles)`.
    pub fn metric(&self, r: f64, angles: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let f2 = self.model.fsq(r);
        let mut g = DMatrix::zeros(d, d);
        match self.kind {
            ChartKind::Static => {
                g[(0, 0)] = -f2;
                g[(1, 1)] = 1.0 / f2;
            }
            ChartKind::EddingtonFinkelstein => {
                g[(0, 1)] = -0.5 * f2;
                g[(1, 0)] = -0.5 * f2;
            }
        }
        for (k, s) in round_metric_diag(angles).into_iter().enumerate() {
            g[(k + 2, k + 2)] = r * r * s;
        }
        g
    }

    /// Number of negative eigenvalues of the metric.
    pub fn negative_eigenvalues(&self, r: f64, angles: &[f64]) -> usize {
        SymmetricEigen::new(self.metric(r, angles)).eigenvalues.iter().filter(|&&e| e < 0.0).count()
    }

    fn check_point(&self, r: f64, angles: &[f64]) -> Result<()> {
        self.model.check(r)?;
        if angles.len() + 2 != self.dim() {
            return Err(Error::SizeMismatch { expected: self.dim() - 2, got: angles.len() });
        }
        Ok(())
    }

    /// Coordinate derivative `∂_μ Φ` of a point function by centered
    /// differences: radial step `hr`, angular step `h`.
    fn derivative<T, F>(&self, r: f64, angles: &[f64], mu: usize, (hr, h): (f64, f64), phi: &F) -> Option<T>
    where
        F: Fn(f64, &[f64]) -> T,
        T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        if mu < 2 {
            let rate = self.radial_rates(r)[mu];
            if rate == 0.0 {
                return None;
            }
            Some((phi(r + hr, angles) - phi(r - hr, angles)) * (rate / (2.0 * hr)))
        } else {
            let mut p = angles.to_vec();
            p[mu - 2] = angles[mu - 2] + h;
            let a = phi(r, &p);
            p[mu - 2] = angles[mu - 2] - h;
            let b = phi(r, &p);
            Some((a - b) * (1.0 / (2.0 * h)))
        }
    }

    fn christoffels_raw(&self, r: f64, angles: &[f64], h: (f64, f64)) -> Christoffel {
        let d = self.dim();
        let metric = |r: f64, a: &[f64]| self.metric(r, a);
        let dg: Vec<Option<DMatrix<f64>>> = (0..d).map(|mu| self.derivative(r, angles, mu, h, &metric)).collect();
        let ginv = self.metric(r, angles).try_inverse().expect("nondegenerate metric");
        let get = |mu: usize, a: usize, b: usize| dg[mu].as_ref().map_or(0.0, |m| m[(a, b)]);
        let mut out = Christoffel::zeros(d);
        for del in 0..d {
            for al in 0..d {
                for be in al..d {
                    let mut s = 0.0;
                    for ep in 0..d {
                        let gi = ginv[(del, ep)];
                        if gi != 0.0 {
                            s += gi * (get(al, ep, be) + get(be, ep, al) - get(ep, al, be));
                        }
                    }
                    out.set(del, al, be, 0.5 * s);
                }
            }
        }
        out
    }

    fn riemann_raw(&self, r: f64, angles: &[f64], h: (f64, f64)) -> Vec<f64> {
        let d = self.dim();
        let gam = self.christoffels_raw(r, angles, h);
        let field = |r: f64, a: &[f64]| ChristoffelVec(self.christoffels_raw(r, a, h).data);
        let dgam: Vec<Option<ChristoffelVec>> = (0..d).map(|mu| self.derivative(r, angles, mu, h, &field)).collect();
        let dget =
            |mu: usize, del: usize, a: usize, b: usize| dgam[mu].as_ref().map_or(0.0, |v| v.0[(del * d + a) * d + b]);
        let mut up = vec![0.0; d * d * d * d];
        for del in 0..d {
            for al in 0..d {
                for be in 0..d {
                    for ga in 0..d {
                        let mut v = dget(al, del, be, ga) - dget(be, del, al, ga);
                        for ep in 0..d {
                            v +=
                                gam.get(del, al, ep) * gam.get(ep, be, ga) - gam.get(del, be, ep) * gam.get(ep, al, ga);
                        }
                        up[((del * d + al) * d + be) * d + ga] = v;
                    }
                }
            }
        }
        up
    }

    /// Radial and angular steps for relative step `step`. The radial step
    /// follows `max(r, model length)` and keeps nested stencils inside the
    /// domain.
    fn steps(&self, r: f64, step: f64) -> (f64, f64) {
        let (lo, hi) = self.model.domain();
        let mut hr = step * r.max(model_length(&self.model));
        // nested differences reach r ± 2 hr
        hr = hr.min(0.2 * (r - lo));
        if hi.is_finite() {
            hr = hr.min(0.2 * (hi - r));
        }
        (hr, step)
    }

    fn halve((hr, h): (f64, f64)) -> (f64, f64) {
        (0.5 * hr, 0.5 * h)
    }

    /// Christoffel symbols by centered differences with one Richardson step.
    pub fn christoffels_fd(&self, r: f64, angles: &[f64], step: f64) -> Result<Christoffel> {
        self.check_point(r, angles)?;
        let h = self.steps(r, step);
        let a = self.christoffels_raw(r, angles, h);
        let b = self.christoffels_raw(r, angles, Self::halve(h));
        let data = a.data.iter().zip(&b.data).map(|(x, y)| (4.0 * y - x) / 3.0).collect();
        Ok(Christoffel { dim: a.dim, data })
    }

    /// Full Riemann tensor by nested centered differences, Richardson
    /// extrapolated over steps `h` and `h/2`.
    pub fn riemann_fd(&self, r: f64, angles: &[f64], step: f64) -> Result<Riemann> {
        self.check_point(r, angles)?;
        let h = self.steps(r, step);
        let a = self.riemann_raw(r, angles, h);
        let b = self.riemann_raw(r, angles, Self::halve(h));
        let up: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (4.0 * y - x) / 3.0).collect();
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let scale = up.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut out = Riemann::from_up(self.dim(), up, &self.metric(r, angles));
        out.error_estimate = diff / 3.0;
        let natural = curvature_scale(&self.model, r) * r.max(1.0).powi(2);
        if diff > 1e-2 * scale.max(natural) + 1e-4 * r.max(1.0).powi(2) {
            return Err(Error::StepControl(diff));
        }
        Ok(out)
    }
}

struct ChristoffelVec(Vec<f64>);

impl std::ops::Sub for ChristoffelVec {
    type Output = ChristoffelVec;
    fn sub(self, o: Self) -> Self {
        ChristoffelVec(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl std::ops::Mul<f64> for ChristoffelVec {
    type Output = ChristoffelVec;
    fn mul(self, s: f64) -> Self {
        ChristoffelVec(self.0.into_iter().map(|a| a * s).collect())
    }
}

/// Length scale of the model: mass, curvature radius, or 1.
pub fn model_length(model: &WarpingModel) -> f64 {
    match model.kind() {
        ModelKind::Schwarzschild { mass } => mass,
        ModelKind::DeSitter { radius } | ModelKind::AntiDeSitter { radius } => radius,
        _ => 1.0,
    }
}

/// Natural curvature magnitude of the model at `r`.
pub fn curvature_scale(model: &WarpingModel, r: f64) -> f64 {
    let f2 = model.fsq(r);
    (0.5 * model.d2fsq(r)).abs().max((model.dfsq(r) / r).abs()).max(((1.0 - f2) / (r * r)).abs())
}

/// Table `Γ^δ_{αβ}`, symmetric in the lower pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim * dim] }
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn get(&self, del: usize, a: usize, b: usize) -> f64 {
        self.data[(del * self.dim + a) * self.dim + b]
    }
    pub fn set(&mut self, del: usize, a: usize, b: usize, v: f64) {
        let d = self.dim;
        self.data[(del * d + a) * d + b] = v;
        self.data[(del * d + b) * d + a] = v;
    }
    pub fn max_abs_diff(&self, o: &Christoffel) -> f64 {
        self.data.iter().zip(&o.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Riemann tensor with both index placements.
#[derive(Debug, Clone)]
pub struct Riemann {
    dim: usize,
    up: Vec<f64>,
    low: Vec<f64>,
    pub error_estimate: f64,
}

impl Riemann {
    fn from_up(dim: usize, up: Vec<f64>, g: &DMatrix<f64>) -> Self {
        let d = dim;
        let mut low = vec![0.0; d * d * d * d];
        for al in 0..d {
            for be in 0..d {
                for ep in 0..d {
                    for ga in 0..d {
                        let mut s = 0.0;
                        for del in 0..d {
                            s += g[(ep, del)] * up[((del * d + al) * d + be) * d + ga];
                        }
                        low[((al * d + be) * d + ep) * d + ga] = s;
                    }
                }
            }
        }
        Self { dim, up, low, error_estimate: 0.0 }
    }

    fn from_low(dim: usize, low: Vec<f64>, g: &DMatrix<f64>) -> Self {
        let d = dim;
        let ginv = g.clone().try_inverse().expect("nondegenerate metric");
        let mut up = vec![0.0; d * d * d * d];
        for del in 0..d {
            for al in 0..d {
                for be in 0..d {
                    for ga in 0..d {
                        let mut s = 0.0;
                        for ep in 0..d {
                            s += ginv[(del, ep)] * low[((al * d + be) * d + ep) * d + ga];
                        }
                        up[((del * d + al) * d + be) * d + ga] = s;
                    }
                }
            }
        }
        Self { dim, up, low, error_estimate: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R(∂_α, ∂_β, ∂_γ, ∂_δ)`.
    pub fn low(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dim;
        self.low[((a * n + b) * n + c) * n + d]
    }

    /// `R_{αβγ}^δ`.
    pub fn up(&self, del: usize, a: usize, b: usize, c: usize) -> f64 {
        let n = self.dim;
        self.up[((del * n + a) * n + b) * n + c]
    }

    /// `R(X, Y, Z, W)` for coordinate-component vectors.
    pub fn contract(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                if y[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    if z[c] == 0.0 {
                        continue;
                    }
                    for d in 0..n {
                        s += x[a] * y[b] * z[c] * w[d] * self.low(a, b, c, d);
                    }
                }
            }
        }
        s
    }

    /// `Ric_{βγ} = R_{αβγ}^α`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |b, c| (0..n).map(|a| self.up(a, a, b, c)).sum())
    }

    /// Largest violation of the first Bianchi identity
    /// `R_{αβγδ} + R_{βγαδ} + R_{γαβδ} = 0`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.dim;
        let mut m = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = self.low(a, b, c, d) + self.low(b, c, a, d) + self.low(c, a, b, d);
                        m = m.max(v.abs());
                    }
                }
            }
        }
        m
    }

    /// Residual against constant sectional curvature `k`:
    /// `R_{αβγδ} - k(g_αγ g_βδ - g_αδ g_βγ)`.
    pub fn space_form_residual(&self, g: &DMatrix<f64>, k: f64) -> f64 {
        let n = self.dim;
        let mut m = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let e = k * (g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)]);
                        m = m.max((self.low(a, b, c, d) - e).abs());
                    }
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.low.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, o: &Riemann) -> f64 {
        self.low.iter().zip(&o.low).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Christoffel symbols of the round metric in hyperspherical angles,
/// written into `out` with angular indices offset by 2.
fn add_round_christoffels(out: &mut Christoffel, angles: &[f64]) {
    let g = round_metric_diag(angles);
    let k = angles.len();
    // ∂_j g_ii = 2 cot θ_j g_ii for j < i
    let dg = |j: usize, i: usize| if j < i { 2.0 * angles[j].cos() / angles[j].sin() * g[i] } else { 0.0 };
    for i in 0..k {
        for j in 0..k {
            // Γ^i_ij = ∂_j g_ii / (2 g_ii)
            let v = dg(j, i) / (2.0 * g[i]);
            if v != 0.0 {
                out.set(i + 2, i + 2, j + 2, v);
            }
            // Γ^j_ii = -∂_j g_ii / (2 g_jj), j ≠ i
            if j != i {
                let w = -dg(j, i) / (2.0 * g[j]);
                if w != 0.0 {
                    out.set(j + 2, i + 2, i + 2, w);
                }
            }
        }
    }
}

/// Which version of a closed-form table to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    /// Entries exactly as printed in the source derivation.
    Printed,
    /// Entries after validation against the finite-difference oracle.
    Validated,
}

/// Closed-form static-chart Christoffel symbols.
pub fn christoffels_static(model: &WarpingModel, r: f64, angles: &[f64], table: Table) -> Result<Christoffel> {
    model.check(r)?;
    let d = model.n() + 1;
    let f2 = model.fsq(r);
    let df2 = model.dfsq(r);
    let f = f2.sqrt();
    let fp = 0.5 * df2 / f;
    let mut out = Christoffel::zeros(d);
    match table {
        Table::Printed => {
            out.set(1, 0, 0, -fp / f);
            out.set(0, 0, 1, fp / f);
            out.set(1, 1, 1, -fp / f);
        }
        Table::Validated => {
            out.set(1, 0, 0, 0.5 * f2 * df2);
            out.set(0, 0, 1, 0.5 * df2 / f2);
            out.set(1, 1, 1, -0.5 * df2 / f2);
        }
    }
    let g = round_metric_diag(angles);
    for a in 0..angles.len() {
        out.set(a + 2, a + 2, 1, 1.0 / r);
        out.set(1, a + 2, a + 2, -f2 * r * g[a]);
    }
    add_round_christoffels(&mut out, angles);
    Ok(out)
}

/// Closed-form EF-chart Christoffel symbols in `(v, w, θ...)`.
pub fn christoffels_ef(model: &WarpingModel, r: f64, angles: &[f64]) -> Result<Christoffel> {
    model.check(r)?;
    let d = model.n() + 1;
    let f2 = model.fsq(r);
    let df2 = model.dfsq(r);
    let mut out = Christoffel::zeros(d);
    out.set(0, 0, 0, 0.5 * df2);
    out.set(1, 1, 1, -0.5 * df2);
    let g = round_metric_diag(angles);
    for a in 0..angles.len() {
        out.set(0, a + 2, a + 2, -r * g[a]);
        out.set(1, a + 2, a + 2, r * g[a]);
        out.set(a + 2, 0, a + 2, 0.5 * f2 / r);
        out.set(a + 2, 1, a + 2, -0.5 * f2 / r);
    }
    add_round_christoffels(&mut out, angles);
    Ok(out)
}

/// Closed-form static-chart Riemann tensor (validated entries):
/// `R_trrt = -(f²)''/2`, `R_{iabj} = r ∇²_{ij} r · g̃_ab` on the `(t, r)` block,
/// and `R_abcd = r²(1 - f²)(g̃_ac g̃_bd - g̃_ad g̃_bc)`.
pub fn riemann_static_closedform(model: &WarpingModel, r: f64, angles: &[f64]) -> Result<Riemann> {
    model.check(r)?;
    let d = model.n() + 1;
    let f2 = model.fsq(r);
    let df2 = model.dfsq(r);
    let g = round_metric_diag(angles);
    let mut low = vec![0.0; d * d * d * d];
    let idx = |a: usize, b: usize, c: usize, e: usize| ((a * d + b) * d + c) * d + e;
    let mut put = |a: usize, b: usize, c: usize, e: usize, v: f64| {
        for (p, q, s) in [
            ((a, b, c, e), 1.0, 0),
            ((b, a, c, e), -1.0, 0),
            ((a, b, e, c), -1.0, 0),
            ((b, a, e, c), 1.0, 0),
            ((c, e, a, b), 1.0, 0),
            ((e, c, a, b), -1.0, 0),
            ((c, e, b, a), -1.0, 0),
            ((e, c, b, a), 1.0, 0),
        ] {
            let _ = s;
            low[idx(p.0, p.1, p.2, p.3)] = q * v;
        }
    };
    put(0, 1, 1, 0, -0.5 * model.d2fsq(r));
    // r ∇²r on the (t, r) block: ∇²_tt r = -f² (f²)'/2, ∇²_rr r = (f²)'/(2f²)
    let hess = [[-0.5 * f2 * df2, 0.0], [0.0, 0.5 * df2 / f2]];
    for i in 0..2 {
        for a in 0..angles.len() {
            put(i, a + 2, a + 2, i, r * hess[i][i] * g[a]);
        }
    }
    let k = r * r * (1.0 - f2);
    for a in 0..angles.len() {
        for b in 0..angles.len() {
            if a != b {
                // R_abab-type component: k (g̃_aa g̃_bb) with R_{a b a b} = k g̃_aa g̃_bb
                low[idx(a + 2, b + 2, a + 2, b + 2)] = k * g[a] * g[b];
                low[idx(a + 2, b + 2, b + 2, a + 2)] = -k * g[a] * g[b];
            }
        }
    }
    let chart = MetricChart::new(model.clone(), ChartKind::Static);
    Ok(Riemann::from_low(d, low, &chart.metric(r, angles)))
}

/// Recorded mismatch between a printed formula and the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Erratum {
    pub component: String,
    pub printed: f64,
    pub oracle: f64,
    pub point: ErratumPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErratumPoint {
    pub model: String,
    pub chart: ChartKind,
    pub r: f64,
    pub angles: Vec<f64>,
}

fn relative(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor).max(f64::MIN_POSITIVE)
}

/// Magnitude of the individual terms entering a lowered angular component,
/// used as the reference for components that vanish identically.
pub fn zero_component_floor(model: &WarpingModel, r: f64) -> f64 {
    r * r * (1.0 + curvature_scale(model, r))
}

/// Relative distance between two full tensors, measured against
/// `max(max|R|, r²)`.
pub fn tensor_gap(a: &Riemann, b: &Riemann, r: f64) -> f64 {
    a.max_abs_diff(b) / a.max_abs().max(b.max_abs()).max(r * r)
}

/// A named scalar compared three ways.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentCheck {
    pub component: String,
    pub printed: f64,
    pub validated: f64,
    pub oracle: f64,
    /// Relative gap between the validated closed form and the oracle.
    pub validated_gap: f64,
    /// Relative gap between the printed formula and the oracle.
    pub printed_gap: f64,
}

impl ComponentCheck {
    /// Gaps are relative to the larger magnitude; components that vanish in
    /// closed form are measured against `zero_floor` instead.
    fn new(component: &str, printed: f64, validated: f64, oracle: f64, zero_floor: f64) -> Self {
        let scale = if validated == 0.0 { zero_floor } else { 0.0 };
        Self {
            component: component.to_string(),
            printed,
            validated,
            oracle,
            validated_gap: relative(validated, oracle, scale),
            printed_gap: relative(printed, oracle, scale),
        }
    }

    pub fn erratum(&self, point: &ErratumPoint) -> Option<Erratum> {
        (self.printed_gap > ERRATUM_THRESHOLD).then(|| Erratum {
            component: self.component.clone(),
            printed: self.printed,
            oracle: self.oracle,
            point: point.clone(),
        })
    }
}

/// Printed and validated static Christoffel entries against the oracle.
pub fn check_static_christoffels(model: &WarpingModel, r: f64, angles: &[f64]) -> Result<Vec<ComponentCheck>> {
    let chart = MetricChart::new(model.clone(), ChartKind::Static);
    let fd = chart.christoffels_fd(r, angles, DEFAULT_STEP)?;
    let printed = christoffels_static(model, r, angles, Table::Printed)?;
    let valid = christoffels_static(model, r, angles, Table::Validated)?;
    let scale = zero_component_floor(model, r) / (r * r);
    let names = ["t", "r"];
    let label = |i: usize| if i < 2 { names[i].to_string() } else { format!("θ{}", i - 1) };
    let mut out = Vec::new();
    let d = fd.dim();
    for del in 0..d {
        for a in 0..d {
            for b in a..d {
                let (p, v, o) = (printed.get(del, a, b), valid.get(del, a, b), fd.get(del, a, b));
                if p == 0.0 && v == 0.0 && o.abs() < 1e-9 {
                    continue;
                }
                let name = format!("Gamma^{}_{}{}", label(del), label(a), label(b));
                out.push(ComponentCheck::new(&name, p, v, o, scale));
            }
        }
    }
    Ok(out)
}

/// The four printed static Riemann components against the oracle, each
/// evaluated at the first one or two angular indices.
pub fn check_static_riemann(model: &WarpingModel, r: f64, angles: &[f64]) -> Result<Vec<ComponentCheck>> {
    let chart = MetricChart::new(model.clone(), ChartKind::Static);
    let fd = chart.riemann_fd(r, angles, DEFAULT_STEP)?;
    let cf = riemann_static_closedform(model, r, angles)?;
    let f2 = model.fsq(r);
    let f = f2.sqrt();
    let fp = 0.5 * model.dfsq(r) / f;
    let ffpp = 0.5 * model.d2fsq(r) - fp * fp;
    let g = round_metric_diag(angles);
    let scale = zero_component_floor(model, r);
    let a = 2;
    let mut out = vec![
        ComponentCheck::new("R_trrt", -ffpp - fp * fp, cf.low(0, 1, 1, 0), fd.low(0, 1, 1, 0), scale),
        ComponentCheck::new("R_t(θ1)(θ1)t", -r * f2 * f * fp * g[0], cf.low(0, a, a, 0), fd.low(0, a, a, 0), scale),
        ComponentCheck::new("R_r(θ1)(θ1)r", fp / f * r * r * g[0], cf.low(1, a, a, 1), fd.low(1, a, a, 1), scale),
    ];
    if angles.len() >= 2 {
        let b = 3;
        // R_abdc with (a, b, d, c) = (θ1, θ2, θ2, θ1): r² R̃ + r f² (g̃_ac g̃_bd - g̃_ad g̃_bc)
        let rt = -g[0] * g[1];
        let printed = r * r * rt + r * f2 * g[0] * g[1];
        out.push(ComponentCheck::new("R_(θ1)(θ2)(θ2)(θ1)", printed, cf.low(a, b, b, a), fd.low(a, b, b, a), scale));
    }
    Ok(out)
}

/// The printed EF-chart curvature relations against the oracle.
pub fn check_ef_riemann(model: &WarpingModel, r: f64, angles: &[f64]) -> Result<Vec<ComponentCheck>> {
    let chart = MetricChart::new(model.clone(), ChartKind::EddingtonFinkelstein);
    let fd = chart.riemann_fd(r, angles, DEFAULT_STEP)?;
    let f2 = model.fsq(r);
    let df2 = model.dfsq(r);
    let d2f2 = model.d2fsq(r);
    let f = f2.sqrt();
    let fp = 0.5 * df2 / f;
    // f f'' + f'² = (f²)''/2
    let half = 0.5 * d2f2;
    let g = round_metric_diag(angles);
    let scale = zero_component_floor(model, r);
    let (v, w, a) = (0, 1, 2);
    Ok(vec![
        ComponentCheck::new("R(w,v,w,v)", -0.25 * f2 * f2 * half, 0.25 * f2 * f2 * half, fd.low(w, v, w, v), scale),
        ComponentCheck::new(
            "R(w,θ1,θ1,v)",
            -0.5 * r * f2 * f * fp * g[0],
            -0.5 * r * f2 * f * fp * g[0],
            fd.low(w, a, a, v),
            scale,
        ),
        ComponentCheck::new("R(w,θ1,θ1,w)", 0.0, 0.0, fd.low(w, a, a, w), scale),
        ComponentCheck::new("R(v,θ1,θ1,v)", 0.0, 0.0, fd.low(v, a, a, v), scale),
    ])
}

/// Sectional curvature of the space forms (`-(f²)''/2`), `None` otherwise.
pub fn space_form_curvature(model: &WarpingModel) -> Option<f64> {
    match model.kind() {
        ModelKind::Minkowski => Some(0.0),
        ModelKind::DeSitter { radius } => Some(1.0 / (radius * radius)),
        ModelKind::AntiDeSitter { radius } => Some(-1.0 / (radius * radius)),
        _ => None,
    }
}

/// Ricci curvature on the null vector `(1/f)∂_t + e` with `e` a unit vector
/// tangent to the sphere, from the oracle tensor.
pub fn null_ricci_oracle(model: &WarpingModel, r: f64, angles: &[f64]) -> Result<f64> {
    let chart = MetricChart::new(model.clone(), ChartKind::Static);
    let ric = chart.riemann_fd(r, angles, DEFAULT_STEP)?.ricci();
    let f = model.f(r);
    let mut wv = vec![0.0; chart.dim()];
    wv[0] = 1.0 / f;
    wv[2] = 1.0 / r;
    let mut s = 0.0;
    for a in 0..wv.len() {
        for b in 0..wv.len() {
            s += wv[a] * wv[b] * ric[(a, b)];
        }
    }
    Ok(s)
}

/// Frame contractions of the curvature at one surface node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionSample {
    pub node: usize,
    pub r: f64,
    /// `σ^{ab} R̄(L̄, ∂_a, ∂_b, L)`: oracle and `-2(n-1)ff'/r`.
    pub trace_oracle: f64,
    pub trace_closed: f64,
    /// `R̄(L̄, ∂_a, L, L̄)` for `a = θ, φ`: oracle and `(4/r)∂_a r(-(ff')' + ff'/r)`.
    pub mixed_oracle: [f64; 2],
    pub mixed_closed: [f64; 2],
    /// Largest relative gap; the floor is the model curvature scale, and
    /// `10⁻²/r²` for flat models.
    pub gap: f64,
}

/// `σ^{ab}R̄(L̄,∂_a,∂_b,L)` and `R̄(L̄,∂_a,L,L̄)` at the given nodes, from the
/// EF-chart oracle contracted with the surface frame and in closed form.
pub fn ef_riemann_contractions(surface: &NullConeSurface, nodes: &[usize]) -> Result<Vec<ContractionSample>> {
    let model = surface.model();
    let chart = MetricChart::new(model.clone(), ChartKind::EddingtonFinkelstein);
    let n1 = model.n() as f64 - 1.0;
    let grad_r = surface.grad_r();
    nodes
        .iter()
        .map(|&k| {
            let fr = surface.frame_at(k);
            let (r, theta) = (fr.r, fr.theta);
            let riem = chart.riemann_fd(r, &[theta, fr.phi], DEFAULT_STEP)?;
            let s2 = theta.sin().powi(2);
            let sigma_inv = [1.0 / (r * r), 1.0 / (r * r * s2)];
            let (lb, l, t) = (&fr.lbar, &fr.l, &fr.tangents);
            let trace_oracle = (0..2).map(|a| sigma_inv[a] * riem.contract(lb, &t[a], &t[a], l)).sum::<f64>();
            let mixed_oracle = [riem.contract(lb, &t[0], l, lb), riem.contract(lb, &t[1], l, lb)];
            let ffp = 0.5 * model.dfsq(r);
            let ffp_prime = 0.5 * model.d2fsq(r);
            let trace_closed = -2.0 * n1 * ffp / r;
            let dr = [grad_r.th[k], grad_r.ph[k] * theta.sin()];
            let c = 4.0 / r * (-ffp_prime + ffp / r);
            let mixed_closed = [c * dr[0], c * dr[1]];
            let floor = (curvature_scale(model, r) * (1.0 + dr[0].abs() + dr[1].abs())).max(1e-2 / (r * r));
            let gap = relative(trace_oracle, trace_closed, floor)
                .max(relative(mixed_oracle[0], mixed_closed[0], floor))
                .max(relative(mixed_oracle[1], mixed_closed[1], floor));
            Ok(ContractionSample { node: k, r, trace_oracle, trace_closed, mixed_oracle, mixed_closed, gap })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn models(n: usize) -> Vec<WarpingModel> {
        vec![
            WarpingModel::minkowski(n).unwrap(),
            WarpingModel::schwarzschild(1.0, n).unwrap(),
            WarpingModel::de_sitter(1.0, n).unwrap(),
            WarpingModel::anti_de_sitter(1.0, n).unwrap(),
        ]
    }

    fn sample(m: &WarpingModel, rng: &mut ChaCha8Rng) -> f64 {
        match m.kind() {
            ModelKind::Schwarzschild { mass } => rng.gen_range(2.3 * mass..12.0 * mass),
            ModelKind::DeSitter { radius } => rng.gen_range(0.1 * radius..0.9 * radius),
            _ => rng.gen_range(0.3..5.0),
        }
    }

    fn angles(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n - 1).map(|k| if k + 2 == n { rng.gen_range(0.0..6.0) } else { rng.gen_range(0.4..2.7) }).collect()
    }

    #[test]
    fn minkowski_is_flat_and_lorentzian() {
        let m = WarpingModel::minkowski(3).unwrap();
        for kind in [ChartKind::Static, ChartKind::EddingtonFinkelstein] {
            let c = MetricChart::new(m.clone(), kind);
            let r = c.riemann_fd(2.0, &[0.7, 1.3], DEFAULT_STEP).unwrap();
            assert!(r.max_abs() < 1e-7, "{kind:?} {}", r.max_abs());
            assert_eq!(c.negative_eigenvalues(2.0, &[0.7, 1.3]), 1);
        }
        let cs = christoffels_static(&m, 2.0, &[0.7, 1.3], Table::Printed).unwrap();
        assert_eq!(cs.get(1, 0, 0), 0.0);
        assert!((cs.get(1, 2, 2) + 2.0).abs() < 1e-15);
        assert!((cs.get(2, 2, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn schwarzschild_trrt() {
        let m = WarpingModel::schwarzschild(1.0, 3).unwrap();
        let c = MetricChart::new(m.clone(), ChartKind::Static);
        let r = c.riemann_fd(4.0, &[1.0, 0.5], DEFAULT_STEP).unwrap();
        assert!((r.low(0, 1, 1, 0) - 0.03125).abs() < 1e-8);
        assert!(r.bianchi_residual() < 1e-8);
    }

    #[test]
    fn validated_christoffels_match_oracle_and_printed_tt_does_not() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for n in [3, 4] {
            for m in models(n) {
                for _ in 0..4 {
                    let r = sample(&m, &mut rng);
                    let a = angles(n, &mut rng);
                    let chart = MetricChart::new(m.clone(), ChartKind::Static);
                    let fd = chart.christoffels_fd(r, &a, DEFAULT_STEP).unwrap();
                    let v = christoffels_static(&m, r, &a, Table::Validated).unwrap();
                    assert!(fd.max_abs_diff(&v) < 1e-7 * fd.max_abs(), "{m:?} r={r}");
                    let ef = MetricChart::new(m.clone(), ChartKind::EddingtonFinkelstein);
                    let fd = ef.christoffels_fd(r, &a, DEFAULT_STEP).unwrap();
                    let cf = christoffels_ef(&m, r, &a).unwrap();
                    assert!(fd.max_abs_diff(&cf) < 1e-7 * fd.max_abs(), "EF {m:?} r={r}");
                }
            }
        }
        let m = WarpingModel::schwarzschild(1.0, 3).unwrap();
        let checks = check_static_christoffels(&m, 4.0, &[1.0, 0.3]).unwrap();
        let tt = checks.iter().find(|c| c.component == "Gamma^r_tt").unwrap();
        assert!(tt.printed_gap > 1e-2 && tt.validated_gap < 1e-7);
        let tr = checks.iter().find(|c| c.component == "Gamma^t_tr").unwrap();
        assert!(tr.printed_gap < 1e-7);
    }

    #[test]
    fn metric_compatibility() {
        // ∂_μ g_αβ = Γ^ε_μα g_εβ + Γ^ε_μβ g_αε for the closed-form tables
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for m in models(3) {
            let r = sample(&m, &mut rng);
            let a = angles(3, &mut rng);
            for kind in [ChartKind::Static, ChartKind::EddingtonFinkelstein] {
                let chart = MetricChart::new(m.clone(), kind);
                let gam = match kind {
                    ChartKind::Static => christoffels_static(&m, r, &a, Table::Validated).unwrap(),
                    _ => christoffels_ef(&m, r, &a).unwrap(),
                };
                let g = chart.metric(r, &a);
                let metric = |r: f64, p: &[f64]| chart.metric(r, p);
                for mu in 0..4 {
                    let dg =
                        chart.derivative(r, &a, mu, (1e-5 * r, 1e-5), &metric).unwrap_or_else(|| DMatrix::zeros(4, 4));
                    for al in 0..4 {
                        for be in 0..4 {
                            let mut s = 0.0;
                            for ep in 0..4 {
                                s += gam.get(ep, mu, al) * g[(ep, be)] + gam.get(ep, mu, be) * g[(al, ep)];
                            }
                            assert!((dg[(al, be)] - s).abs() < 1e-8 * (1.0 + r * r), "{m:?} {kind:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_riemann_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for n in [3, 4] {
            for m in models(n) {
                for _ in 0..3 {
                    let r = sample(&m, &mut rng);
                    let a = angles(n, &mut rng);
                    let chart = MetricChart::new(m.clone(), ChartKind::Static);
                    let fd = chart.riemann_fd(r, &a, DEFAULT_STEP).unwrap();
                    let cf = riemann_static_closedform(&m, r, &a).unwrap();
                    assert!(tensor_gap(&fd, &cf, r) < 1e-6, "{m:?} n={n} r={r}");
                    assert!(fd.bianchi_residual() < 1e-8 * fd.max_abs().max(r * r));
                }
            }
        }
    }

    #[test]
    fn space_forms_and_vacuum() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for m in models(3) {
            let r = sample(&m, &mut rng);
            let a = angles(3, &mut rng);
            for kind in [ChartKind::Static, ChartKind::EddingtonFinkelstein] {
                let chart = MetricChart::new(m.clone(), kind);
                let fd = chart.riemann_fd(r, &a, DEFAULT_STEP).unwrap();
                match space_form_curvature(&m) {
                    Some(k) => {
                        let res = fd.space_form_residual(&chart.metric(r, &a), k);
                        assert!(
                            res / fd.max_abs().max(r * r) < 1e-7,
                            "{m:?} {kind:?} r={r} {res:e} {:e}",
                            fd.max_abs()
                        );
                    }
                    None => assert!(fd.ricci().abs().max() < 1e-7),
                }
            }
        }
    }

    #[test]
    fn printed_static_components() {
        let m = WarpingModel::schwarzschild(1.0, 3).unwrap();
        let checks = check_static_riemann(&m, 4.0, &[1.1, 0.4]).unwrap();
        let by = |s: &str| checks.iter().find(|c| c.component == s).unwrap().clone();
        assert!(by("R_trrt").printed_gap < 1e-7);
        assert!(by("R_t(θ1)(θ1)t").printed_gap < 1e-7);
        assert!(by("R_r(θ1)(θ1)r").printed_gap > 1e-2);
        assert!(by("R_(θ1)(θ2)(θ2)(θ1)").printed_gap > 1e-2);
        for c in &checks {
            assert!(c.validated_gap < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn printed_ef_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for m in models(3).into_iter().skip(1) {
            let r = sample(&m, &mut rng);
            let checks = check_ef_riemann(&m, r, &[0.9, 2.0]).unwrap();
            for c in &checks {
                assert!(c.validated_gap < 1e-6, "{m:?} {c:?}");
            }
            assert!(checks[0].printed_gap > 1e-2);
            assert!(checks[1].printed_gap < 1e-6);
        }
    }

    #[test]
    fn null_ricci_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for n in [3, 4] {
            for m in models(n) {
                let r = sample(&m, &mut rng);
                let a = angles(n, &mut rng);
                let oracle = null_ricci_oracle(&m, r, &a).unwrap();
                let value = m.null_ricci_combination(r).unwrap().value;
                assert!((oracle - value).abs() < 1e-6 * (1.0 + value.abs()), "{m:?} n={n}: {oracle} {value}");
            }
        }
        let c = WarpingModel::custom(
            |r| 1.0 - 0.3 / r + 0.1 * r,
            |r| 0.3 / (r * r) + 0.1,
            |r| -0.6 / r.powi(3),
            1.0,
            5.0,
            3,
        )
        .unwrap();
        let oracle = null_ricci_oracle(&c, 2.0, &[1.0, 1.0]).unwrap();
        let value = c.null_ricci_combination(2.0).unwrap().value;
        assert!((oracle - value).abs() < 1e-6);
    }

    #[test]
    fn frame_contractions() {
        use crate::sphere::SphCoeffs;
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for m in models(3) {
            let r0 = match m.kind() {
                ModelKind::Schwarzschild { .. } => 4.0,
                ModelKind::DeSitter { .. } => 0.5,
                _ => 1.5,
            };
            let mut c = SphCoeffs::from_low_modes(6, 1.0 / r0, [0.0; 3]);
            for l in 1..=3usize {
                for mm in -(l as i64)..=(l as i64) {
                    c.set(l, mm, 0.1 * rng.gen_range(-1.0..1.0) / r0);
                }
            }
            let s = NullConeSurface::from_u_coeffs(&m, 0.2, c).unwrap();
            let nodes: Vec<usize> = (0..6).map(|_| rng.gen_range(0..s.grid().len())).collect();
            for smp in ef_riemann_contractions(&s, &nodes).unwrap() {
                assert!(smp.gap < 1e-5, "{m:?}: {smp:?}");
            }
        }
        let schw = WarpingModel::schwarzschild(1.0, 3).unwrap();
        let s = NullConeSurface::round(&schw, 0.0, 4.0, 2).unwrap();
        let smp = &ef_riemann_contractions(&s, &[3]).unwrap()[0];
        assert!((smp.trace_closed + 1.0 / 16.0).abs() < 1e-15);
        assert!((smp.trace_oracle + 1.0 / 16.0).abs() < 1e-6);
        assert!(smp.mixed_oracle.iter().all(|v| v.abs() < 1e-6));
    }
}
