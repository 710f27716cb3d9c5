//! Batch checks over the module identities, and the bundled sample surfaces.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cmc::{
    conformal_scalar_curvature, laplacian_bochner_identity, liouville_residual, max_principle_functional,
    mobius_conformal_factor, obata_weighted_identity, SphereFunction,
};
use crate::curvature::{
    check_ef_riemann, check_static_christoffels, check_static_riemann, ef_riemann_contractions, null_ricci_oracle,
    space_form_curvature, ChartKind, Erratum, ErratumPoint, MetricChart, DEFAULT_STEP,
};
use crate::error::{Error, Result};
use crate::rigidity::{quadratic_form_identity, zonal_quadratic_form_identity};
use crate::spacetime::{ModelKind, WarpingModel};
use crate::sphere::{SphCoeffs, SphereField, SphereGrid};
use crate::surface::{KillingField, NullConeSurface, ProfileFile, ZonalSurface};
use crate::zonal::{ZonalField, ZonalGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Frames,
    Cnnc,
    Killing,
    Ricci1,
    Bochner,
    Obata,
    Curvature,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Frames, Suite::Cnnc, Suite::Killing, Suite::Ricci1, Suite::Bochner, Suite::Obata, Suite::Curvature];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Frames => "frames",
            Suite::Cnnc => "cnnc",
            Suite::Killing => "killing",
            Suite::Ricci1 => "ricci1",
            Suite::Bochner => "bochner",
            Suite::Obata => "obata",
            Suite::Curvature => "curvature",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

/// One row of a suite table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub identity: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityRow {
    pub fn new(identity: impl Into<String>, max_error: f64, tolerance: f64) -> Self {
        Self { identity: identity.into(), max_error, tolerance, pass: max_error < tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub rows: Vec<IdentityRow>,
    pub errata: Vec<Erratum>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Tolerances used by the suites, keyed by name; overridable from the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances(pub BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        let entries = [
            ("frame_pairing", 1e-9),
            ("hsq_two_routes", 1e-9),
            ("mean_curvature", 1e-9),
            ("expansion_fd", 1e-5),
            ("cnnc", 1e-6),
            ("killing", 1e-8),
            ("ricci1", 1e-8),
            ("bochner", 1e-8),
            ("max_principle_spread", 1e-6),
            ("liouville", 1e-8),
            ("obata", 1e-7),
            ("conformal_liouville", 1e-10),
            ("oracle_closed_form", 1e-6),
            ("ricci_flat", 1e-7),
            ("space_form", 1e-7),
            ("contractions", 1e-5),
            ("null_ricci", 1e-6),
            ("ncc", 1e-12),
            ("kernel_threshold", 1e-7),
            ("kernel_gap", 1e4),
            ("kernel_low_mode", 1e-6),
            ("classify", 1e-6),
            ("mobius_low_mode", 1e-9),
            ("boost_hsq", 1e-8),
        ];
        Tolerances(entries.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        self.0.get(key).copied().unwrap_or_else(|| panic!("unknown tolerance {key}"))
    }

    /// Applies `name=value` overrides.
    pub fn apply(&mut self, overrides: &[String]) -> Result<()> {
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Parse(format!("tolerance override {o:?}")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("tolerance value {v:?}")))?;
            match self.0.get_mut(k.trim()) {
                Some(slot) => *slot = v,
                None => return Err(Error::Parse(format!("unknown tolerance {k:?}"))),
            }
        }
        Ok(())
    }
}

/// Expected outcome recorded next to each bundled surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub kernel_dimension: usize,
    pub fit: String,
    #[serde(default)]
    pub beta: Option<f64>,
    pub constant_hsq: bool,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub text: &'static str,
    pub profile: ProfileFile,
    pub expected: Expected,
}

const FIXTURES: [(&str, &str); 12] = [
    ("minkowski_round.json", include_str!("../fixtures/minkowski_round.json")),
    ("minkowski_boosted.json", include_str!("../fixtures/minkowski_boosted.json")),
    ("minkowski_perturbed.json", include_str!("../fixtures/minkowski_perturbed.json")),
    ("schwarzschild_round.json", include_str!("../fixtures/schwarzschild_round.json")),
    ("schwarzschild_offcenter.json", include_str!("../fixtures/schwarzschild_offcenter.json")),
    ("schwarzschild_perturbed.json", include_str!("../fixtures/schwarzschild_perturbed.json")),
    ("desitter_round.json", include_str!("../fixtures/desitter_round.json")),
    ("desitter_boosted.json", include_str!("../fixtures/desitter_boosted.json")),
    ("desitter_perturbed.json", include_str!("../fixtures/desitter_perturbed.json")),
    ("antidesitter_round.json", include_str!("../fixtures/antidesitter_round.json")),
    ("antidesitter_boosted.json", include_str!("../fixtures/antidesitter_boosted.json")),
    ("antidesitter_perturbed.json", include_str!("../fixtures/antidesitter_perturbed.json")),
];

/// The bundled sample surfaces, three per model.
pub fn bundled_fixtures() -> Vec<Fixture> {
    let expected: BTreeMap<String, Expected> =
        serde_json::from_str(include_str!("../fixtures/expected.json")).expect("bundled expectations parse");
    FIXTURES
        .iter()
        .map(|(name, text)| Fixture {
            name,
            text,
            profile: serde_json::from_str(text).expect("bundled fixture parses"),
            expected: expected[*name].clone(),
        })
        .collect()
}

pub fn bundled_surfaces() -> Result<Vec<(String, NullConeSurface)>> {
    bundled_fixtures().iter().map(|f| Ok((f.name.to_string(), NullConeSurface::from_file(&f.profile)?))).collect()
}

/// Loads every `*.json` profile in a directory, sorted by name.
pub fn load_profile_dir(dir: &std::path::Path) -> Result<Vec<(String, NullConeSurface)>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        let Ok(profile) = serde_json::from_str::<ProfileFile>(&text) else { continue };
        out.push((p.file_name().unwrap().to_string_lossy().into_owned(), NullConeSurface::from_file(&profile)?));
    }
    if out.is_empty() {
        return Err(Error::Io(format!("no surface profiles in {}", dir.display())));
    }
    Ok(out)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn random_coeffs(l: usize, rng: &mut ChaCha8Rng) -> SphCoeffs {
    let mut c = SphCoeffs::zeros(l);
    for v in c.as_mut_slice() {
        *v = rng.gen_range(-1.0..1.0);
    }
    c
}

/// Frame pairings, induced metric, expansions and mean curvature.
pub fn frames_rows(
    name: &str,
    s: &NullConeSurface,
    tol: &Tolerances,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<IdentityRow>> {
    let frames = s.frame();
    let pair = max_of(frames.iter().flat_map(|f| f.pairing_residuals().map(f64::abs)));
    let induced = max_of(frames.iter().map(|f| f.induced_metric_defect() / (f.r * f.r)));
    let (a, b) = (s.hsq(), s.hsq_u_form());
    let two = max_of(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs())) / b.max_abs();
    let h = s.mean_curvature_vector()?;
    let n1 = s.model().n() as f64 - 1.0;
    let mc = max_of(h.pairing_l.iter().map(|v| (v + n1).abs())).max(h.tangential).max((h.ratio - n1).abs());
    let tcb = s.tr_chi_bar();
    let mut fd = 0.0f64;
    for _ in 0..20 {
        let k = rng.gen_range(0..s.grid().len());
        let (theta, phi) = s.grid().node(k);
        let v = s.null_expansion_fd(theta, phi, true)?;
        fd = fd.max((v - tcb.values()[k]).abs() / tcb.values()[k].abs().max(1e-300));
    }
    Ok(vec![
        IdentityRow::new(format!("{name}: null frame pairings"), pair, tol.get("frame_pairing")),
        IdentityRow::new(format!("{name}: induced metric"), induced, tol.get("frame_pairing")),
        IdentityRow::new(format!("{name}: hsq sigma-form vs u-form"), two, tol.get("hsq_two_routes")),
        IdentityRow::new(format!("{name}: <H,L> = -(n-1), H normal, <H,H>/hsq = n-1"), mc, tol.get("mean_curvature")),
        IdentityRow::new(format!("{name}: tr chibar vs finite differences"), fd, tol.get("expansion_fd")),
    ])
}

/// `α_H + d log|H|` on a grid of six times the bandlimit (at least 96).
pub fn cnnc_row(name: &str, s: &NullConeSurface, tol: &Tolerances) -> Result<IdentityRow> {
    let grid = SphereGrid::new(96.max(6 * s.bandlimit()));
    let fine = NullConeSurface::with_grid(s.model(), s.w0(), s.u_coeffs().clone(), grid)?;
    Ok(IdentityRow::new(format!("{name}: alpha_H + d log|H|"), fine.cnnc_residual()?.max_abs(), tol.get("cnnc")))
}

pub fn killing_rows(name: &str, s: &NullConeSurface, tol: &Tolerances) -> Result<Vec<IdentityRow>> {
    KillingField::available(s.model().kind())
        .into_iter()
        .map(|k| {
            let p = s.killing_pairing(k)?;
            Ok(IdentityRow::new(format!("{name}: <K,L> {}", k.name()), p.max_relative, tol.get("killing")))
        })
        .collect()
}

/// Integration-by-parts identity for random `u` at bandlimit 16, 3L grid.
pub fn ricci1_row(name: &str, s: &NullConeSurface, tol: &Tolerances, rng: &mut ChaCha8Rng) -> Result<IdentityRow> {
    let l = 16;
    let grid = SphereGrid::new(3 * l.max(s.bandlimit()));
    let fine = NullConeSurface::with_grid(s.model(), s.w0(), s.u_coeffs().clone(), grid)?;
    let q = quadratic_form_identity(&fine, &random_coeffs(l, rng))?;
    Ok(IdentityRow::new(format!("{name}: quadratic form identity"), q.relative_gap, tol.get("ricci1")))
}

fn zonal_ricci1_rows(tol: &Tolerances, rng: &mut ChaCha8Rng) -> Result<Vec<IdentityRow>> {
    let grid = ZonalGrid::new(3, 48)?;
    let mut rows = Vec::new();
    for (m, r0) in [(WarpingModel::schwarzschild(1.0, 4)?, 3.0), (WarpingModel::anti_de_sitter(1.0, 4)?, 1.5)] {
        let mut a = vec![0.0; 5];
        a[0] = 1.0 / r0;
        for v in a.iter_mut().skip(1) {
            *v = 0.05 * rng.gen_range(-1.0..1.0) / r0;
        }
        let s = ZonalSurface::new(&m, ZonalField::from_coeffs(&grid, &a))?;
        let b: Vec<f64> = (0..=16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = zonal_quadratic_form_identity(&s, &ZonalField::from_coeffs(&grid, &b))?;
        rows.push(IdentityRow::new(
            format!("zonal n=4 {}: quadratic form identity", m.kind().name()),
            q.relative_gap,
            tol.get("ricci1"),
        ));
    }
    Ok(rows)
}

/// Random Möbius map coefficients.
pub fn random_mobius(rng: &mut ChaCha8Rng) -> [Complex64; 4] {
    let mut z = || Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
    loop {
        let m = [z(), z(), z(), z()];
        if (m[0] * m[3] - m[1] * m[2]).norm() > 0.1 {
            return m;
        }
    }
}

fn bochner_rows(tol: &Tolerances, rng: &mut ChaCha8Rng) -> Result<Vec<IdentityRow>> {
    let grid = SphereGrid::new(48);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        worst = worst.max(laplacian_bochner_identity(&random_coeffs(16, rng), &grid)?.gap);
    }
    let g = SphereGrid::new(24);
    let (mut spread, mut liou, mut ident) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..5 {
        let [a, b, c, d] = random_mobius(rng);
        let f = mobius_conformal_factor(a, b, c, d, &g)?;
        let scale = f.u.max_abs().powi(2).max(1.0);
        liou = liou.max(liouville_residual(&f.u, 1.0).max_abs() / scale);
        let mp = max_principle_functional(&f.u)?;
        spread = spread.max(mp.spread);
        ident = ident.max(mp.identity_gap);
    }
    Ok(vec![
        IdentityRow::new("Laplacian of the Liouville expression (Bochner), L=16", worst, tol.get("bochner")),
        IdentityRow::new("Mobius factors solve the Liouville equation with E=1", liou, tol.get("liouville")),
        IdentityRow::new("(Laplacian + 2)u constant on Liouville solutions", spread, tol.get("max_principle_spread")),
        IdentityRow::new("u Lap(Lap+2)u = 2|traceless Hessian|^2 on solutions", ident, tol.get("obata")),
    ])
}

fn obata_rows(tol: &Tolerances, rng: &mut ChaCha8Rng) -> Result<Vec<IdentityRow>> {
    let z = ZonalGrid::new(3, 60)?;
    let (mut zg, mut zb) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let mut a = vec![0.0; 11];
        a[0] = 3.0;
        for (l, v) in a.iter_mut().enumerate().skip(1) {
            *v = 0.3 * rng.gen_range(-1.0..1.0) / (l * l) as f64;
        }
        let o = obata_weighted_identity(SphereFunction::Zonal(&ZonalField::from_coeffs(&z, &a)), 3, 2.0)?;
        zg = zg.max(o.gap);
        zb = zb.max(o.bochner_gap);
    }
    let g = SphereGrid::new(36);
    let (mut fg, mut conf) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let mut c = SphCoeffs::from_low_modes(10, 2.0, [0.2, 0.1, 0.0]);
        for l in 2..=10usize {
            for m in -(l as i64)..=(l as i64) {
                c.set(l, m, 0.1 * rng.gen_range(-1.0..1.0) / l as f64);
            }
        }
        let u = SphereField::from_coeffs(&g, &c);
        fg = fg.max(obata_weighted_identity(SphereFunction::Full(&u), 2, 1.0)?.gap);
        let r = conformal_scalar_curvature(SphereFunction::Full(&u), 2, 1.0)?;
        let l = liouville_residual(&u, 0.0);
        let scale = l.max_abs().max(1.0);
        conf = conf.max(max_of(r.iter().zip(l.values()).map(|(a, b)| (a - 2.0 * b).abs())) / scale);
    }
    Ok(vec![
        IdentityRow::new("weighted Obata identity, zonal S^3", zg, tol.get("obata")),
        IdentityRow::new("Bochner expansion of the scalar curvature Laplacian, zonal S^3", zb, tol.get("obata")),
        IdentityRow::new("weighted Obata identity, S^2", fg, tol.get("obata")),
        IdentityRow::new("conformal scalar curvature = 2 x Liouville at n=2", conf, tol.get("conformal_liouville")),
    ])
}

fn sample_radius(m: &WarpingModel, rng: &mut ChaCha8Rng) -> f64 {
    match m.kind() {
        ModelKind::Schwarzschild { mass } => rng.gen_range(2.5 * mass..12.0 * mass),
        ModelKind::DeSitter { radius } => rng.gen_range(0.15 * radius..0.85 * radius),
        _ => rng.gen_range(0.4..4.0),
    }
}

/// Oracle checks of the closed-form curvature at `points` radii per model.
pub fn curvature_rows(
    models: &[WarpingModel],
    points: usize,
    charts: &[ChartKind],
    tol: &Tolerances,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<IdentityRow>, Vec<Erratum>)> {
    let mut rows = Vec::new();
    let mut errata = Vec::new();
    for m in models {
        let static_chart = MetricChart::new(m.clone(), ChartKind::Static);
        let (mut closed, mut ef, mut flat, mut sf, mut nr) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..points {
            let r = sample_radius(m, rng);
            let angles = [rng.gen_range(0.4..2.7), rng.gen_range(0.0..6.2)];
            let mut record = |checks: Vec<crate::curvature::ComponentCheck>, chart: ChartKind| -> f64 {
                let point = ErratumPoint { model: m.kind().name().into(), chart, r, angles: angles.to_vec() };
                let mut worst = 0.0f64;
                for c in checks {
                    worst = worst.max(c.validated_gap);
                    if let Some(e) = c.erratum(&point) {
                        errata.push(e);
                    }
                }
                worst
            };
            if charts.contains(&ChartKind::Static) {
                closed = closed.max(record(check_static_christoffels(m, r, &angles)?, ChartKind::Static));
                closed = closed.max(record(check_static_riemann(m, r, &angles)?, ChartKind::Static));
            }
            if charts.contains(&ChartKind::EddingtonFinkelstein) {
                ef = ef.max(record(check_ef_riemann(m, r, &angles)?, ChartKind::EddingtonFinkelstein));
            }
            let riem = static_chart.riemann_fd(r, &angles, DEFAULT_STEP)?;
            let scale = riem.max_abs().max(r * r);
            if let Some(k) = space_form_curvature(m) {
                sf = sf.max(riem.space_form_residual(&static_chart.metric(r, &angles), k) / scale);
            }
            if let ModelKind::Schwarzschild { .. } = m.kind() {
                let ric = riem.ricci();
                flat = flat.max(ric.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            }
            let nro = null_ricci_oracle(m, r, &angles)?;
            let nrc = m.null_ricci_combination(r)?.value;
            let floor = crate::curvature::curvature_scale(m, r).max(1.0 / (r * r));
            nr = nr.max((nro - nrc).abs() / nrc.abs().max(floor));
        }
        let name = m.kind().name();
        if charts.contains(&ChartKind::Static) {
            rows.push(IdentityRow::new(
                format!("{name}: static closed forms vs oracle"),
                closed,
                tol.get("oracle_closed_form"),
            ));
        }
        if charts.contains(&ChartKind::EddingtonFinkelstein) {
            rows.push(IdentityRow::new(format!("{name}: EF relations vs oracle"), ef, tol.get("oracle_closed_form")));
        }
        rows.push(IdentityRow::new(format!("{name}: null Ricci chain"), nr, tol.get("null_ricci")));
        match m.kind() {
            ModelKind::Schwarzschild { .. } => {
                rows.push(IdentityRow::new(format!("{name}: Ricci flatness"), flat, tol.get("ricci_flat")))
            }
            _ => {
                rows.push(IdentityRow::new(format!("{name}: constant sectional curvature"), sf, tol.get("space_form")))
            }
        }
    }
    Ok((rows, errata))
}

/// Frame contractions of the EF curvature on the given surfaces.
pub fn contraction_rows(
    surfaces: &[(String, NullConeSurface)],
    tol: &Tolerances,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<IdentityRow>> {
    surfaces
        .iter()
        .map(|(name, s)| {
            let nodes: Vec<usize> = (0..5).map(|_| rng.gen_range(0..s.grid().len())).collect();
            let worst = max_of(ef_riemann_contractions(s, &nodes)?.into_iter().map(|c| c.gap));
            Ok(IdentityRow::new(format!("{name}: frame contractions of the curvature"), worst, tol.get("contractions")))
        })
        .collect()
}

pub fn four_models() -> Result<Vec<WarpingModel>> {
    Ok(vec![
        WarpingModel::minkowski(3)?,
        WarpingModel::schwarzschild(1.0, 3)?,
        WarpingModel::de_sitter(1.0, 3)?,
        WarpingModel::anti_de_sitter(1.0, 3)?,
    ])
}

/// Runs one suite over the given surfaces (surface-independent suites ignore them).
pub fn run_suite(
    suite: Suite,
    surfaces: &[(String, NullConeSurface)],
    tol: &Tolerances,
    seed: u64,
) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut errata = Vec::new();
    match suite {
        Suite::Frames => {
            for (name, s) in surfaces {
                rows.extend(frames_rows(name, s, tol, &mut rng)?);
            }
        }
        Suite::Cnnc => {
            for (name, s) in surfaces {
                rows.push(cnnc_row(name, s, tol)?);
            }
        }
        Suite::Killing => {
            for (name, s) in surfaces {
                rows.extend(killing_rows(name, s, tol)?);
            }
        }
        Suite::Ricci1 => {
            for (name, s) in surfaces {
                rows.push(ricci1_row(name, s, tol, &mut rng)?);
            }
            rows.extend(zonal_ricci1_rows(tol, &mut rng)?);
        }
        Suite::Bochner => rows.extend(bochner_rows(tol, &mut rng)?),
        Suite::Obata => rows.extend(obata_rows(tol, &mut rng)?),
        Suite::Curvature => {
            let (r, e) = curvature_rows(
                &four_models()?,
                3,
                &[ChartKind::Static, ChartKind::EddingtonFinkelstein],
                tol,
                &mut rng,
            )?;
            rows.extend(r);
            errata = e;
            rows.extend(contraction_rows(surfaces, tol, &mut rng)?);
        }
    }
    Ok(SuiteOutcome { suite, rows, errata })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load_and_match_expectations() {
        for f in bundled_fixtures() {
            let s = NullConeSurface::from_file(&f.profile).unwrap();
            let h = s.hsq();
            let mean = h.integrate() / (4.0 * std::f64::consts::PI);
            let spread = h.values().iter().fold(0.0f64, |m, v| m.max((v - mean).abs())) / mean;
            assert_eq!(spread < 1e-9, f.expected.constant_hsq, "{}: {spread}", f.name);
            let fit = crate::surface::fit_boosted_sphere(s.u_coeffs(), crate::surface::LOW_MODE_TOL);
            match (fit.unwrap(), f.expected.fit.as_str()) {
                (crate::surface::BoostFit::Boosted { beta, .. }, "boosted") => {
                    assert!((beta - f.expected.beta.unwrap()).abs() < 1e-9, "{}", f.name)
                }
                (crate::surface::BoostFit::NotLowMode { .. }, "not_low_mode") => {}
                (other, e) => panic!("{}: {other:?} vs {e}", f.name),
            }
        }
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.apply(&["cnnc=1e-3".to_string()]).unwrap();
        assert_eq!(t.get("cnnc"), 1e-3);
        assert!(t.apply(&["nope=1".to_string()]).is_err());
        assert!(t.apply(&["cnnc".to_string()]).is_err());
    }

    #[test]
    fn suites_pass_on_fixtures() {
        let surfaces = bundled_surfaces().unwrap();
        let tol = Tolerances::default();
        for suite in [Suite::Frames, Suite::Killing, Suite::Bochner, Suite::Obata] {
            let out = run_suite(suite, &surfaces, &tol, 7).unwrap();
            for r in &out.rows {
                assert!(r.pass, "{suite:?}: {r:?}");
            }
        }
    }
}
