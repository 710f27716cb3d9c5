//! Static spherically symmetric spacetimes
//! `-f²(r) dt² + dr²/f²(r) + r² g_{S^{n-1}}`, the null convergence checks,
//! the tortoise coordinate and Eddington–Finkelstein charts.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;

/// Fraction of the horizon radius excluded from the Schwarzschild and
/// de Sitter domains.
pub const HORIZON_CLIP: f64 = 1e-6;
/// Absolute tolerance of the tortoise quadrature.
pub const TORTOISE_TOL: f64 = 1e-12;
/// Relative tolerance for validating derivatives of custom models.
pub const CUSTOM_DERIVATIVE_TOL: f64 = 1e-6;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Minkowski,
    Schwarzschild { mass: f64 },
    DeSitter { radius: f64 },
    AntiDeSitter { radius: f64 },
    Custom,
}

impl ModelKind {
    pub fn is_space_form(&self) -> bool {
        matches!(self, ModelKind::Minkowski | ModelKind::DeSitter { .. } | ModelKind::AntiDeSitter { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Minkowski => "minkowski",
            ModelKind::Schwarzschild { .. } => "schwarzschild",
            ModelKind::DeSitter { .. } => "desitter",
            ModelKind::AntiDeSitter { .. } => "antidesitter",
            ModelKind::Custom => "custom",
        }
    }
}

/// Warping factor `f²` with two derivatives on an open radial domain.
#[derive(Clone)]
pub struct WarpingModel {
    kind: ModelKind,
    n: usize,
    r_lo: f64,
    r_hi: f64,
    custom: Option<(ScalarFn, ScalarFn, ScalarFn)>,
}

impl fmt::Debug for WarpingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpingModel")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("domain", &(self.r_lo, self.r_hi))
            .finish()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidModel(format!("dimension n={n} must be >= 3")));
    }
    Ok(())
}

impl WarpingModel {
    pub fn minkowski(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self { kind: ModelKind::Minkowski, n, r_lo: 0.0, r_hi: f64::INFINITY, custom: None })
    }

    pub fn schwarzschild(mass: f64, n: usize) -> Result<Self> {
        check_n(n)?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidModel(format!("mass {mass} must be positive")));
        }
        Ok(Self {
            kind: ModelKind::Schwarzschild { mass },
            n,
            r_lo: 2.0 * mass * (1.0 + HORIZON_CLIP),
            r_hi: f64::INFINITY,
            custom: None,
        })
    }

    pub fn de_sitter(radius: f64, n: usize) -> Result<Self> {
        check_n(n)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidModel(format!("radius {radius} must be positive")));
        }
        Ok(Self {
            kind: ModelKind::DeSitter { radius },
            n,
            r_lo: 0.0,
            r_hi: radius * (1.0 - HORIZON_CLIP),
            custom: None,
        })
    }

    pub fn anti_de_sitter(radius: f64, n: usize) -> Result<Self> {
        check_n(n)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidModel(format!("radius {radius} must be positive")));
        }
        Ok(Self { kind: ModelKind::AntiDeSitter { radius }, n, r_lo: 0.0, r_hi: f64::INFINITY, custom: None })
    }

    /// Custom warping factor from `f²`, `(f²)'`, `(f²)''`.
    ///
    /// The derivatives are checked against centered differences of `fsq` at
    /// interior sample points; inconsistent triples are rejected.
    pub fn custom<A, B, C>(fsq: A, dfsq: B, d2fsq: C, r_lo: f64, r_hi: f64, n: usize) -> Result<Self>
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        C: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_n(n)?;
        if !(r_lo >= 0.0 && r_hi > r_lo) {
            return Err(Error::InvalidModel(format!("bad domain ({r_lo}, {r_hi})")));
        }
        let hi = if r_hi.is_finite() { r_hi } else { r_lo + 100.0 };
        for k in 1..=9 {
            let r = r_lo + (hi - r_lo) * k as f64 / 10.0;
            let h = 1e-4 * r.max(1e-3);
            let v = fsq(r);
            if !(v > 0.0) {
                return Err(Error::InvalidModel(format!("f^2({r}) = {v} not positive")));
            }
            let d1 = (fsq(r + h) - fsq(r - h)) / (2.0 * h);
            let d2 = (dfsq(r + h) - dfsq(r - h)) / (2.0 * h);
            for (which, analytic, numeric) in [("(f^2)'", dfsq(r), d1), ("(f^2)''", d2fsq(r), d2)] {
                let scale = analytic.abs().max(numeric.abs()).max(1e-8);
                if (analytic - numeric).abs() > CUSTOM_DERIVATIVE_TOL * scale {
                    return Err(Error::InconsistentDerivative { which, r, analytic, numeric });
                }
            }
        }
        Ok(Self {
            kind: ModelKind::Custom,
            n,
            r_lo,
            r_hi,
            custom: Some((Arc::new(fsq), Arc::new(dfsq), Arc::new(d2fsq))),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// `n`: the spacetime is `(n+1)`-dimensional, surfaces are `(n-1)`-spheres.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        check_n(n)?;
        let mut m = self.clone();
        m.n = n;
        Ok(m)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.r_lo && r < self.r_hi
    }

    pub fn check(&self, r: f64) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(Error::Domain { r, lo: self.r_lo, hi: self.r_hi })
        }
    }

    /// Closed domain allowed for the tortoise integral: the regular centre
    /// `r = 0` of the space forms may serve as an endpoint.
    fn contains_for_tortoise(&self, r: f64) -> bool {
        let centre_ok = self.r_lo == 0.0 && self.kind != ModelKind::Custom && r == 0.0;
        self.contains(r) || centre_ok
    }

    pub fn fsq(&self, r: f64) -> f64 {
        match self.kind {
            ModelKind::Minkowski => 1.0,
            ModelKind::Schwarzschild { mass } => 1.0 - 2.0 * mass / r,
            ModelKind::DeSitter { radius } => 1.0 - (r / radius).powi(2),
            ModelKind::AntiDeSitter { radius } => 1.0 + (r / radius).powi(2),
            ModelKind::Custom => (self.custom.as_ref().unwrap().0)(r),
        }
    }

    pub fn dfsq(&self, r: f64) -> f64 {
        match self.kind {
            ModelKind::Minkowski => 0.0,
            ModelKind::Schwarzschild { mass } => 2.0 * mass / (r * r),
            ModelKind::DeSitter { radius } => -2.0 * r / (radius * radius),
            ModelKind::AntiDeSitter { radius } => 2.0 * r / (radius * radius),
            ModelKind::Custom => (self.custom.as_ref().unwrap().1)(r),
        }
    }

    pub fn d2fsq(&self, r: f64) -> f64 {
        match self.kind {
            ModelKind::Minkowski => 0.0,
            ModelKind::Schwarzschild { mass } => -4.0 * mass / (r * r * r),
            ModelKind::DeSitter { radius } => -2.0 / (radius * radius),
            ModelKind::AntiDeSitter { radius } => 2.0 / (radius * radius),
            ModelKind::Custom => (self.custom.as_ref().unwrap().2)(r),
        }
    }

    pub fn f(&self, r: f64) -> f64 {
        self.fsq(r).sqrt()
    }

    /// `f f' = (f²)'/2`.
    pub fn ffp(&self, r: f64) -> f64 {
        0.5 * self.dfsq(r)
    }

    /// `(f f')' = (f²)''/2`.
    pub fn ffp_prime(&self, r: f64) -> f64 {
        0.5 * self.d2fsq(r)
    }

    pub fn descriptor(&self) -> Result<ModelDescriptor> {
        let (kind, mass, radius_l) = match self.kind {
            ModelKind::Minkowski => ("minkowski", 0.0, 0.0),
            ModelKind::Schwarzschild { mass } => ("schwarzschild", mass, 0.0),
            ModelKind::DeSitter { radius } => ("desitter", 0.0, radius),
            ModelKind::AntiDeSitter { radius } => ("antidesitter", 0.0, radius),
            ModelKind::Custom => return Err(Error::Unsupported("custom models are not serializable".into())),
        };
        Ok(ModelDescriptor { kind: kind.into(), mass, radius_l, n: self.n })
    }

    // --- null convergence ------------------------------------------------

    /// `(f²-1)/r² - f f'/r`; non-positive values certify the NCC inequality.
    pub fn ncc_deficit(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok((self.fsq(r) - 1.0) / (r * r) - self.ffp(r) / r)
    }

    /// `r^{n-1} f f' + r^{n-2}(1 - f²)`.
    pub fn ncc_flux(&self, r: f64) -> Result<f64> {
        self.check(r)?;
        Ok(self.flux_unchecked(r))
    }

    fn flux_unchecked(&self, r: f64) -> f64 {
        let n = self.n as i32;
        r.powi(n - 1) * self.ffp(r) + r.powi(n - 2) * (1.0 - self.fsq(r))
    }

    /// Ricci curvature on the null vector `(1/f)∂_t + e_1`, together with a
    /// finite-difference check of `d/dr(flux) = r^{n-1} · value`.
    pub fn null_ricci_combination(&self, r: f64) -> Result<NullRicci> {
        self.check(r)?;
        let n = self.n as f64;
        let value = (n - 3.0) * self.ffp(r) / r + 0.5 * self.d2fsq(r) + (n - 2.0) * (1.0 - self.fsq(r)) / (r * r);
        let fd = richardson_derivative(|x| self.flux_unchecked(x), r, self.fd_step(r));
        let expected = r.powi(self.n as i32 - 1) * value;
        let scale = fd.abs().max(expected.abs()).max(r.powi(self.n as i32 - 3));
        Ok(NullRicci { value, flux_derivative: fd, relative_gap: (fd - expected).abs() / scale })
    }

    fn fd_step(&self, r: f64) -> f64 {
        let mut h = 1e-3 * r.max(1e-2);
        if self.r_lo > 0.0 {
            h = h.min(0.25 * (r - self.r_lo));
        }
        if self.r_hi.is_finite() {
            h = h.min(0.25 * (self.r_hi - r));
        }
        h
    }

    // --- tortoise coordinate ----------------------------------------------

    /// `∫_{r_ref}^{r} ds / f²(s)` by adaptive quadrature.
    pub fn tortoise(&self, r: f64, r_ref: f64) -> Result<f64> {
        for x in [r, r_ref] {
            if !self.contains_for_tortoise(x) {
                return Err(Error::Domain { r: x, lo: self.r_lo, hi: self.r_hi });
            }
        }
        Ok(integrate_adaptive(|s| 1.0 / self.fsq(s), r_ref, r, TORTOISE_TOL))
    }

    /// Closed-form antiderivative of `1/f²` for the built-in kinds.
    pub fn tortoise_antiderivative(&self, r: f64) -> Option<f64> {
        match self.kind {
            ModelKind::Minkowski => Some(r),
            ModelKind::Schwarzschild { mass } => Some(r + 2.0 * mass * (r / (2.0 * mass) - 1.0).ln()),
            ModelKind::DeSitter { radius } => Some(radius * (r / radius).atanh()),
            ModelKind::AntiDeSitter { radius } => Some(radius * (r / radius).atan()),
            ModelKind::Custom => None,
        }
    }

    /// Closed-form `r*(r) - r*(r_ref)` when available, quadrature otherwise.
    pub fn tortoise_fast(&self, r: f64, r_ref: f64) -> Result<f64> {
        for x in [r, r_ref] {
            if !self.contains_for_tortoise(x) {
                return Err(Error::Domain { r: x, lo: self.r_lo, hi: self.r_hi });
            }
        }
        match (self.tortoise_antiderivative(r), self.tortoise_antiderivative(r_ref)) {
            (Some(a), Some(b)) => Ok(a - b),
            _ => self.tortoise(r, r_ref),
        }
    }

    /// Inverse of the tortoise map: the radius with `r*(r) - r*(r_ref) = target`.
    ///
    /// `r*` is strictly increasing, so a bracket is grown geometrically toward
    /// the relevant domain edge and refined by safeguarded Newton.
    pub fn radius_from_tortoise(&self, target: f64, r_ref: f64) -> Result<f64> {
        let g = |r: f64| self.tortoise_fast(r, r_ref).map(|v| v - target);
        let start = if self.contains(r_ref) {
            r_ref
        } else if self.r_hi.is_finite() {
            0.5 * (self.r_lo + self.r_hi)
        } else {
            self.r_lo + 1.0
        };
        let g0 = g(start)?;
        let (mut lo, mut hi);
        if g0 > 0.0 {
            hi = start;
            if self.contains_for_tortoise(self.r_lo) && g(self.r_lo)? > 0.0 {
                return Err(Error::TortoiseRange { value: target });
            }
            let mut k = 1;
            loop {
                lo = self.r_lo + (start - self.r_lo) * 0.5f64.powi(k);
                if !self.contains(lo) {
                    return Err(Error::TortoiseRange { value: target });
                }
                if g(lo)? <= 0.0 {
                    break;
                }
                hi = lo;
                k += 1;
                if k > 1000 {
                    return Err(Error::TortoiseRange { value: target });
                }
            }
        } else {
            lo = start;
            let mut k = 0;
            loop {
                hi = if self.r_hi.is_finite() {
                    self.r_hi - (self.r_hi - start) * 0.5f64.powi(k + 1)
                } else {
                    start + start.max(1.0) * 2f64.powi(k)
                };
                if !self.contains(hi) || !hi.is_finite() {
                    return Err(Error::TortoiseRange { value: target });
                }
                if g(hi)? >= 0.0 {
                    break;
                }
                lo = hi;
                k += 1;
                if k > 1000 {
                    return Err(Error::TortoiseRange { value: target });
                }
            }
        }
        let mut r = 0.5 * (lo + hi);
        for _ in 0..200 {
            let val = g(r)?;
            if val == 0.0 {
                return Ok(r);
            }
            if val > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let mut next = r - val * self.fsq(r);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 4.0 * f64::EPSILON * r.abs() {
                return Ok(next);
            }
            r = next;
        }
        Ok(r)
    }

    /// `(t, r) ↦ (v, w) = (t + r*, t - r*)`.
    pub fn ef_from_static(&self, t: f64, r: f64, r_ref: f64) -> Result<(f64, f64)> {
        self.check(r)?;
        let rs = self.tortoise_fast(r, r_ref)?;
        Ok((t + rs, t - rs))
    }

    /// Inverse of [`Self::ef_from_static`].
    pub fn static_from_ef(&self, v: f64, w: f64, r_ref: f64) -> Result<(f64, f64)> {
        let r = self.radius_from_tortoise(0.5 * (v - w), r_ref)?;
        self.check(r)?;
        Ok((0.5 * (v + w), r))
    }

    /// Eddington–Finkelstein metric at `(v, w)`.
    pub fn ef_metric(&self, v: f64, w: f64, r_ref: f64) -> Result<EfMetric> {
        let (_, r) = self.static_from_ef(v, w, r_ref)?;
        Ok(EfMetric { r, g_vw: -0.5 * self.fsq(r), angular_scale: r * r })
    }
}

/// Result of [`WarpingModel::null_ricci_combination`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullRicci {
    pub value: f64,
    pub flux_derivative: f64,
    pub relative_gap: f64,
}

/// EF metric `-f² dv dw + r² g̃`: only `g_vw = g_wv` and the angular block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfMetric {
    pub r: f64,
    pub g_vw: f64,
    /// Multiplier of the round metric in the angular block.
    pub angular_scale: f64,
}

impl EfMetric {
    /// Full metric in `(v, w, θ, φ)` for `n = 3`.
    pub fn matrix(&self, theta: f64) -> Matrix4<f64> {
        let mut g = Matrix4::zeros();
        g[(0, 1)] = self.g_vw;
        g[(1, 0)] = self.g_vw;
        g[(2, 2)] = self.angular_scale;
        g[(3, 3)] = self.angular_scale * theta.sin().powi(2);
        g
    }
}

/// Serializable model record used by files and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub kind: String,
    #[serde(default)]
    pub mass: f64,
    #[serde(default)]
    pub radius_l: f64,
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_n() -> usize {
    3
}

impl ModelDescriptor {
    pub fn build(&self) -> Result<WarpingModel> {
        match self.kind.to_ascii_lowercase().as_str() {
            "minkowski" => WarpingModel::minkowski(self.n),
            "schwarzschild" => WarpingModel::schwarzschild(self.mass, self.n),
            "desitter" => WarpingModel::de_sitter(self.radius_l, self.n),
            "antidesitter" => WarpingModel::anti_de_sitter(self.radius_l, self.n),
            other => Err(Error::InvalidModel(format!("unknown kind {other:?}"))),
        }
    }
}

/// Centered difference with one Richardson step.
pub(crate) fn richardson_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<WarpingModel> {
        vec![
            WarpingModel::minkowski(3).unwrap(),
            WarpingModel::schwarzschild(1.0, 3).unwrap(),
            WarpingModel::de_sitter(1.0, 3).unwrap(),
            WarpingModel::anti_de_sitter(2.0, 3).unwrap(),
        ]
    }

    fn sample_radius(m: &WarpingModel, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = m.domain();
        let hi = if hi.is_finite() { hi } else { lo + 30.0 };
        lo + (hi - lo) * rng.gen_range(0.02..0.98)
    }

    #[test]
    fn ncc_deficit_examples() {
        let mink = WarpingModel::minkowski(3).unwrap();
        assert_eq!(mink.ncc_deficit(1.0).unwrap(), 0.0);
        let schw = WarpingModel::schwarzschild(1.0, 3).unwrap();
        // -3m/r^3 by symbolic differentiation of 1 - 2m/r
        assert!((schw.ncc_deficit(3.0).unwrap() + 1.0 / 9.0).abs() < 1e-15);
        let ads = WarpingModel::anti_de_sitter(2.0, 3).unwrap();
        assert!(ads.ncc_deficit(1.0).unwrap().abs() < 1e-15);
        assert!(matches!(schw.ncc_deficit(1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn ncc_flux_examples() {
        let mink = WarpingModel::minkowski(3).unwrap();
        assert_eq!(mink.ncc_flux(7.0).unwrap(), 0.0);
        let schw = WarpingModel::schwarzschild(1.0, 3).unwrap();
        assert!((schw.ncc_flux(3.0).unwrap() - 3.0).abs() < 1e-14);
        let ds = WarpingModel::de_sitter(1.0, 3).unwrap();
        assert!(ds.ncc_flux(0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn null_ricci_examples() {
        let schw = WarpingModel::schwarzschild(1.0, 3).unwrap();
        let nr = schw.null_ricci_combination(3.0).unwrap();
        assert!(nr.value.abs() < 1e-15);
        assert!(nr.relative_gap < 1e-8);
        let mink = WarpingModel::minkowski(3).unwrap();
        assert_eq!(mink.null_ricci_combination(2.0).unwrap().value, 0.0);
        // de Sitter n=3, l=1, r=0.5: 0 + (-1) + (0.25)/0.25 = 0; flux oracle agrees
        let ds = WarpingModel::de_sitter(1.0, 3).unwrap();
        let nr = ds.null_ricci_combination(0.5).unwrap();
        assert!(nr.value.abs() < 1e-14);
        assert!(nr.flux_derivative.abs() < 1e-9);
        // general n: Schwarzschild-Tangherlini-like custom model is not Ricci flat for n=4
        let schw4 = WarpingModel::schwarzschild(1.0, 4).unwrap();
        let nr = schw4.null_ricci_combination(3.0).unwrap();
        assert!(nr.relative_gap < 1e-8);
    }

    #[test]
    fn flux_and_deficit_signs_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in models() {
            for _ in 0..100 {
                let r = sample_radius(&m, &mut rng);
                let d = m.ncc_deficit(r).unwrap();
                let fl = m.ncc_flux(r).unwrap();
                let tol = 1e-12;
                if d.abs() < tol {
                    assert!(fl.abs() < tol * r.powi(3).max(1.0));
                } else {
                    assert_eq!(d.signum(), -fl.signum(), "{m:?} r={r}");
                }
                let nr = m.null_ricci_combination(r).unwrap();
                assert!(nr.relative_gap < 1e-8, "{m:?} r={r}: {}", nr.relative_gap);
            }
        }
    }

    #[test]
    fn deficit_vanishes_only_for_space_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for m in models() {
            let max = (0..50).map(|_| m.ncc_deficit(sample_radius(&m, &mut rng)).unwrap().abs()).fold(0.0, f64::max);
            assert_eq!(max < 1e-12, m.kind().is_space_form(), "{m:?}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in models() {
            for _ in 0..20 {
                let r = sample_radius(&m, &mut rng);
                let h = 1e-4 * r;
                let d1 = (m.fsq(r + h) - m.fsq(r - h)) / (2.0 * h);
                let d2 = (m.dfsq(r + h) - m.dfsq(r - h)) / (2.0 * h);
                let s1 = m.dfsq(r).abs().max(1e-8);
                let s2 = m.d2fsq(r).abs().max(1e-8);
                assert!((d1 - m.dfsq(r)).abs() < 1e-6 * s1);
                assert!((d2 - m.d2fsq(r)).abs() < 1e-6 * s2);
            }
        }
    }

    #[test]
    fn custom_model_validation() {
        let ok = WarpingModel::custom(|r| 1.0 + 0.1 * r * r, |r| 0.2 * r, |_| 0.2, 0.0, 10.0, 3);
        assert!(ok.is_ok());
        let bad = WarpingModel::custom(|r| 1.0 + 0.1 * r * r, |r| 0.3 * r, |_| 0.2, 0.0, 10.0, 3);
        assert!(matches!(bad, Err(Error::InconsistentDerivative { .. })));
        assert!(WarpingModel::minkowski(2).is_err());
    }

    #[test]
    fn tortoise_examples() {
        let mink = WarpingModel::minkowski(3).unwrap();
        assert!((mink.tortoise(5.0, 0.0).unwrap() - 5.0).abs() < 1e-12);
        let ads = WarpingModel::anti_de_sitter(1.0, 3).unwrap();
        assert!((ads.tortoise(1.0, 0.0).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let schw = WarpingModel::schwarzschild(1.0, 3).unwrap();
        let expected = 1.0 + 2.0 * 2f64.ln();
        assert!((schw.tortoise(4.0, 3.0).unwrap() - expected).abs() < 1e-10 * expected);
        assert!(schw.tortoise(4.0, 1.5).is_err());
    }

    #[test]
    fn tortoise_quadrature_matches_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for m in models() {
            for _ in 0..10 {
                let a = sample_radius(&m, &mut rng);
                let b = sample_radius(&m, &mut rng);
                let q = m.tortoise(a, b).unwrap();
                let c = m.tortoise_antiderivative(a).unwrap() - m.tortoise_antiderivative(b).unwrap();
                assert!((q - c).abs() <= 1e-10 * c.abs().max(1e-2), "{m:?} {a} {b}: {q} {c}");
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                if hi > lo {
                    assert!(m.tortoise(hi, lo).unwrap() > 0.0);
                }
                // d r*/dr = 1/f²
                let h = 1e-4 * a;
                let fd = richardson_derivative(|x| m.tortoise_fast(x, b).unwrap(), a, h.min(0.1 * (a - m.domain().0)));
                assert!((fd * m.fsq(a) - 1.0).abs() < 1e-8, "{m:?} r={a}");
            }
        }
    }

    #[test]
    fn ef_round_trip() {
        let mink = WarpingModel::minkowski(3).unwrap();
        assert_eq!(mink.ef_from_static(2.0, 1.0, 0.0).unwrap(), (3.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in models() {
            for _ in 0..20 {
                let r = sample_radius(&m, &mut rng);
                let t = rng.gen_range(-3.0..3.0);
                let r_ref = if m.domain().0 > 0.0 { 3.0 } else { 0.0 };
                let (v, w) = m.ef_from_static(t, r, r_ref).unwrap();
                let (t2, r2) = m.static_from_ef(v, w, r_ref).unwrap();
                assert!((r2 - r).abs() < 1e-10 * r.max(1.0), "{m:?}: {r} vs {r2}");
                assert!((t2 - t).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dr_dv_is_half_fsq() {
        let schw = WarpingModel::schwarzschild(1.0, 3).unwrap();
        let (v, w) = schw.ef_from_static(0.0, 4.0, 3.0).unwrap();
        let h = 1e-4;
        let r_of = |v: f64| schw.static_from_ef(v, w, 3.0).unwrap().1;
        let d = (r_of(v + h) - r_of(v - h)) / (2.0 * h);
        assert!((d - 0.5 * schw.fsq(4.0)).abs() < 1e-8);
    }

    #[test]
    fn ef_metric_examples() {
        let mink = WarpingModel::minkowski(3).unwrap();
        let g = mink.ef_metric(3.0, 1.0, 0.0).unwrap();
        assert!((g.r - 1.0).abs() < 1e-14);
        assert_eq!(g.g_vw, -0.5);
        assert!((g.angular_scale - 1.0).abs() < 1e-14);
        let schw = WarpingModel::schwarzschild(1.0, 3).unwrap();
        let (v, w) = schw.ef_from_static(0.3, 4.0, 3.0).unwrap();
        let g = schw.ef_metric(v, w, 3.0).unwrap();
        assert!((g.g_vw + 0.25).abs() < 1e-12);
        let theta = 0.7;
        let det = g.matrix(theta).determinant();
        let fsq = schw.fsq(g.r);
        let expected = -(fsq * fsq / 4.0) * g.r.powi(4) * theta.sin().powi(2);
        assert!((det - expected).abs() < 1e-10 * expected.abs());
    }

    #[test]
    fn tortoise_range_errors() {
        let ds = WarpingModel::de_sitter(1.0, 3).unwrap();
        // r* is bounded below by 0 at the centre
        assert!(ds.static_from_ef(-5.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let d: ModelDescriptor =
            serde_json::from_str(r#"{"kind":"schwarzschild","mass":1.5,"radius_l":0,"n":3}"#).unwrap();
        let m = d.build().unwrap();
        assert_eq!(m.kind(), ModelKind::Schwarzschild { mass: 1.5 });
        assert_eq!(m.descriptor().unwrap(), d);
    }
}
