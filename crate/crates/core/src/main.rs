use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use nullcone::cmc::{
    classify, liouville_residual, max_principle_functional, mobius_conformal_factor, newton_solve, CmcProblem, Gauge,
    Verdict,
};
use nullcone::curvature::ChartKind;
use nullcone::report::{InputDigest, Outcome, Plot, RunReport, Series, Status};
use nullcone::rigidity::assemble;
use nullcone::sphere::{CoeffFile, SphCoeffs, SphereField, SphereGrid};
use nullcone::surface::{boost_sphere, fit_boosted_sphere, KillingField, NullConeSurface, ProfileFile, LOW_MODE_TOL};
use nullcone::verify::{self, Suite, Tolerances};
use nullcone::{Error, ModelDescriptor, WarpingModel};

#[derive(Parser)]
#[command(
    name = "nullcone",
    version,
    about = "Surfaces in standard null cones: geometry checks, rigidity kernels and constant-|H|² solves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// minkowski, schwarzschild, desitter, antidesitter, or a JSON model file.
    #[arg(long, default_value = "minkowski")]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    #[arg(long = "radius-l", default_value_t = 1.0)]
    radius_l: f64,
    /// Spacetime dimension is n + 1.
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Append a JSON report line to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write CSV and SVG plots into this directory.
    #[arg(long)]
    plots: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Null convergence along a radial sweep.
    NccCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long = "r-min")]
        r_min: Option<f64>,
        #[arg(long = "r-max")]
        r_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Geometry of one surface: frame, |H|², CNNC residual, Killing pairings, fit.
    SurfaceReport {
        #[command(flatten)]
        common: Common,
        /// Profile file, or bundled:<name>.
        #[arg(long)]
        surface: String,
    },
    /// Kernel of the linearized CNNC operator.
    RigidityKernel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        surface: String,
        #[arg(long, default_value_t = 16)]
        bandlimit: usize,
    },
    /// Newton solve of |H|² = E followed by classification.
    SolveCmc {
        #[command(flatten)]
        common: Common,
        #[arg(long = "E")]
        e: f64,
        /// hsq, or gauss (Liouville scaling, multiplied by n - 1).
        #[arg(long, default_value = "hsq")]
        target: String,
        #[arg(long, default_value_t = 8)]
        bandlimit: usize,
        /// Relative size of the random ℓ ≥ 1 perturbation of the initial guess.
        #[arg(long, default_value_t = 0.05)]
        perturb: f64,
        /// auto, none, fix or lm.
        #[arg(long, default_value = "auto")]
        gauge: String,
        /// Initial guess as a coefficient file.
        #[arg(long)]
        initial: Option<PathBuf>,
        /// Write the solution coefficients here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Identity suites with their default tolerances.
    VerifyIdentities {
        #[command(flatten)]
        common: Common,
        /// frames, cnnc, killing, ricci1, bochner, obata, curvature, or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Directory of profile files; the bundled surfaces by default.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Finite-difference curvature against the closed forms.
    CurvatureOracle {
        #[command(flatten)]
        common: Common,
        /// static, ef or both.
        #[arg(long, default_value = "both")]
        chart: String,
        #[arg(long, default_value_t = 10)]
        points: usize,
        /// Run all four standard models instead of --model.
        #[arg(long)]
        all_models: bool,
    },
    /// Conformal factor of a Möbius map; coefficients as re,im.
    Mobius {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        a: String,
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        b: String,
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        c: String,
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        d: String,
        #[arg(long, default_value_t = 24)]
        bandlimit: usize,
    },
    /// Boosted round sphere in a space form.
    BoostSphere {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
        axis: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        w0: f64,
        #[arg(long, default_value_t = 4)]
        bandlimit: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::NccCheck { .. } => "ncc-check",
            Command::SurfaceReport { .. } => "surface-report",
            Command::RigidityKernel { .. } => "rigidity-kernel",
            Command::SolveCmc { .. } => "solve-cmc",
            Command::VerifyIdentities { .. } => "verify-identities",
            Command::CurvatureOracle { .. } => "curvature-oracle",
            Command::Mobius { .. } => "mobius",
            Command::BoostSphere { .. } => "boost-sphere",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::NccCheck { common, .. }
            | Command::SurfaceReport { common, .. }
            | Command::RigidityKernel { common, .. }
            | Command::SolveCmc { common, .. }
            | Command::VerifyIdentities { common, .. }
            | Command::CurvatureOracle { common, .. }
            | Command::Mobius { common, .. }
            | Command::BoostSphere { common, .. } => common,
        }
    }
}

/// State shared by the subcommands while they fill in the report.
struct Ctx {
    report: RunReport,
    tol: Tolerances,
    plots: Option<PathBuf>,
    started: Instant,
}

impl Ctx {
    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.report.timings.insert(label.into(), t.elapsed().as_secs_f64());
        out
    }

    fn plot(&self, plot: Plot, stem: &str) -> nullcone::Result<()> {
        match &self.plots {
            Some(dir) => plot.write(dir, stem),
            None => Ok(()),
        }
    }

    fn model(&mut self, c: &Common) -> nullcone::Result<WarpingModel> {
        let desc = if c.model.ends_with(".json") || Path::new(&c.model).is_file() {
            let bytes = std::fs::read(&c.model)?;
            self.report.inputs.push(InputDigest::of_bytes(&c.model, &bytes));
            serde_json::from_slice::<ModelDescriptor>(&bytes)?
        } else {
            let kind = match c.model.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
                "minkowski" | "flat" => "minkowski",
                "schwarzschild" => "schwarzschild",
                "desitter" | "ds" => "desitter",
                "antidesitter" | "ads" => "antidesitter",
                other => return Err(Error::InvalidModel(format!("unknown model {other:?}"))),
            };
            ModelDescriptor { kind: kind.into(), mass: c.mass, radius_l: c.radius_l, n: c.n }
        };
        let model = desc.build()?;
        self.report.model = Some(model.descriptor()?);
        Ok(model)
    }

    fn surface(&mut self, spec: &str) -> nullcone::Result<NullConeSurface> {
        let (name, text) = match spec.strip_prefix("bundled:") {
            Some(name) => {
                let want = if name.ends_with(".json") { name.to_string() } else { format!("{name}.json") };
                let f = verify::bundled_fixtures()
                    .into_iter()
                    .find(|f| f.name == want)
                    .ok_or_else(|| Error::Io(format!("no bundled surface {name:?}")))?;
                (spec.to_string(), f.text.to_string())
            }
            None => (spec.to_string(), std::fs::read_to_string(spec)?),
        };
        self.report.inputs.push(InputDigest::of_bytes(name, text.as_bytes()));
        let profile: ProfileFile = serde_json::from_str(&text)?;
        let s = NullConeSurface::from_file(&profile)?;
        self.report.model = Some(s.model().descriptor()?);
        self.report.bandlimit = Some(s.bandlimit());
        Ok(s)
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn say(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{line}");
}

type Outcome3 = nullcone::Result<(Value, Status)>;

fn check_failed(guard: &str, message: String) -> Status {
    Status::new(Outcome::CheckFailed, Some(guard.into()), Some(message))
}

fn violation(message: String) -> Status {
    Status::new(Outcome::TheoremViolation, Some("rigidity".into()), Some(message))
}

fn parse_complex(s: &str) -> nullcone::Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Parse(format!("complex number {s:?}")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Parse(format!("complex number {s:?}, expected re,im"))),
    }
}

fn parse_vec3(s: &str) -> nullcone::Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("vector {s:?}")))?;
    v.try_into().map_err(|_| Error::Parse(format!("vector {s:?}, expected x,y,z")))
}

fn stats(values: &[f64]) -> Value {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({ "min": min, "max": max })
}

fn relative_spread(values: &[f64]) -> f64 {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max - min) / max.abs().max(min.abs()).max(f64::MIN_POSITIVE)
}

/// Values along the first meridian of the grid, by colatitude.
fn meridian(field: &SphereField) -> Vec<(f64, f64)> {
    let g = field.grid();
    let phi0 = g.node(0).1;
    (0..g.len()).filter(|&k| g.node(k).1 == phi0).map(|k| (g.node(k).0, field.values()[k])).collect()
}

fn ncc_check(ctx: &mut Ctx, c: &Common, r_min: Option<f64>, r_max: Option<f64>, points: usize) -> Outcome3 {
    let model = ctx.model(c)?;
    let (lo, hi) = model.domain();
    let a = r_min.unwrap_or(if lo > 0.0 { 1.05 * lo } else { 0.1 });
    let b = r_max.unwrap_or(if hi.is_finite() { 0.95 * hi } else { 50.0 * lo.max(1.0) });
    if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) || points < 2 {
        return Err(Error::Parse(format!("empty sweep [{a}, {b}] with {points} points")));
    }
    let tol = ctx.tol.get("ncc");
    let mut rows = Vec::with_capacity(points);
    ctx.time("sweep", || -> nullcone::Result<()> {
        for i in 0..points {
            let r = a + (b - a) * i as f64 / (points - 1) as f64;
            rows.push((r, model.ncc_flux(r)?, model.ncc_deficit(r)?, model.null_ricci_combination(r)?));
        }
        Ok(())
    })?;
    let min_flux = rows.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let max_deficit = rows.iter().map(|x| x.2).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_deficit = rows.iter().map(|x| x.2.abs()).fold(0.0, f64::max);
    let flux_derivative_gap = rows.iter().map(|x| x.3.relative_gap).fold(0.0, f64::max);
    let holds = min_flux >= -tol && max_deficit <= tol;
    ctx.plot(
        Plot::new("null convergence sweep", "r", "value")
            .with(Series::new("ncc_flux", rows.iter().map(|x| (x.0, x.1)).collect()))
            .with(Series::new("ncc_deficit", rows.iter().map(|x| (x.0, x.2)).collect())),
        "ncc_sweep",
    )?;
    let results = json!({
        "r_min": a, "r_max": b, "points": points,
        "min_flux": min_flux, "max_deficit": max_deficit, "max_abs_deficit": max_abs_deficit,
        "flux_derivative_gap": flux_derivative_gap,
        "ncc_holds": holds,
    });
    let status = if holds {
        Status::ok()
    } else {
        check_failed("ncc", format!("max deficit {max_deficit:e}, min flux {min_flux:e}"))
    };
    Ok((results, status))
}

fn surface_report(ctx: &mut Ctx, spec: &str) -> Outcome3 {
    let s = ctx.surface(spec)?;
    let n1 = s.model().n() as f64 - 1.0;
    let hsq = s.hsq();
    let mc = ctx.time("mean_curvature", || s.mean_curvature_vector())?;
    let frame_pairing = s.frame().iter().flat_map(|f| f.pairing_residuals()).map(f64::abs).fold(0.0, f64::max);
    let cnnc = ctx.time("cnnc", || {
        NullConeSurface::with_grid(s.model(), s.w0(), s.u_coeffs().clone(), SphereGrid::new(96.max(6 * s.bandlimit())))
            .and_then(|f| f.cnnc_residual())
            .map(|r| r.max_abs())
    })?;
    let mut killing = serde_json::Map::new();
    let mut killing_worst = 0.0f64;
    for k in KillingField::available(s.model().kind()) {
        let p = s.killing_pairing(k)?;
        killing_worst = killing_worst.max(p.max_relative);
        killing.insert(k.name(), json!(p.max_relative));
    }
    let fit = fit_boosted_sphere(s.u_coeffs(), LOW_MODE_TOL).ok();
    let class = classify(s.u_coeffs(), s.model(), ctx.tol.get("classify"))?;
    ctx.plot(
        Plot::new("colatitude profile", "colatitude", "value")
            .with(Series::new("r", meridian(&s.r())))
            .with(Series::new("hsq", meridian(&hsq))),
        "surface_profile",
    )?;
    let results = json!({
        "r": stats(s.radius_values()),
        "hsq": stats(hsq.values()),
        "hsq_relative_spread": relative_spread(hsq.values()),
        "gauss_curvature": stats(s.gauss_curvature().values()),
        "frame_pairing_max": frame_pairing,
        "mean_curvature": {
            "ratio_hh_over_hsq": mc.ratio,
            "expected_ratio": n1,
            "pairing_l_max_dev": mc.pairing_l.iter().map(|v| (v + n1).abs()).fold(0.0, f64::max),
            "tangential": mc.tangential,
        },
        "cnnc_residual_max": cnnc,
        "killing_max_relative": killing,
        "boost_fit": fit,
        "classification": class,
    });
    let status = if cnnc >= ctx.tol.get("cnnc") {
        check_failed("cnnc", format!("CNNC residual {cnnc:e}"))
    } else if killing_worst >= ctx.tol.get("killing") {
        check_failed("killing", format!("Killing pairing gap {killing_worst:e}"))
    } else {
        Status::ok()
    };
    Ok((results, status))
}

fn rigidity_kernel(ctx: &mut Ctx, spec: &str, bandlimit: usize) -> Outcome3 {
    let s = ctx.surface(spec)?;
    ctx.report.bandlimit = Some(bandlimit);
    let op = ctx.time("assemble_svd", || assemble(&s, bandlimit))?;
    let k = op.kernel(ctx.tol.get("kernel_threshold"));
    let space_form = s.model().kind().is_space_form();
    let expected = if space_form { 4 } else { 1 };
    let low_mode = op.kernel_low_mode_distance(&k);
    ctx.plot(
        Plot::new("singular values", "index", "sigma")
            .log_y()
            .markers()
            .with(Series::new("sigma", k.singular_values.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect())),
        "singular_spectrum",
    )?;
    let status = if k.gap < ctx.tol.get("kernel_gap") {
        Status::new(Outcome::Guard, Some("kernel-gap".into()), Some(format!("singular-value gap {:e}", k.gap)))
    } else if k.dimension != expected {
        violation(format!("kernel dimension {} where {expected} is predicted", k.dimension))
    } else if space_form && low_mode >= ctx.tol.get("kernel_low_mode") {
        violation(format!("kernel not in the l<=1 modes: distance {low_mode:e}"))
    } else {
        Status::ok()
    };
    let results = json!({
        "kernel_dimension": k.dimension,
        "expected_dimension": expected,
        "gap": k.gap,
        "threshold": k.threshold,
        "candidate_dimension": k.candidate_dimension,
        "warning": k.warning,
        "kernel_low_mode_distance": low_mode,
        "singular_values": k.singular_values,
        "kernel_basis": k
            .basis
            .iter()
            .map(|v| SphCoeffs::from_vec(bandlimit, v.clone()).map(|c| c.to_file()))
            .collect::<nullcone::Result<Vec<_>>>()?,
    });
    Ok((results, status))
}

/// Smallest `c` with `(n-1) c² f²(1/c) = e`, i.e. the outermost round sphere.
fn constant_solution(model: &WarpingModel, e: f64) -> nullcone::Result<f64> {
    let n1 = model.n() as f64 - 1.0;
    let (lo, hi) = model.domain();
    let r_hi = if hi.is_finite() { hi * (1.0 - 1e-9) } else { 1e8 * lo.max(1.0) };
    let r_lo = if lo > 0.0 { lo * (1.0 + 1e-9) } else { 1e-8 * r_hi.min(1.0) };
    let g = |c: f64| n1 * c * c * model.fsq(1.0 / c) - e;
    let steps = 4000;
    let (c0, c1) = (1.0 / r_hi, 1.0 / r_lo);
    let at = |i: usize| c0 * (c1 / c0).powf(i as f64 / steps as f64);
    let mut prev = at(0);
    for i in 1..=steps {
        let c = at(i);
        if g(prev).signum() != g(c).signum() {
            let (mut a, mut b) = (prev, c);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if g(a).signum() == g(m).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev = c;
    }
    Err(Error::InvalidModel(format!("no round sphere with |H|² = {e} in this model")))
}

#[allow(clippy::too_many_arguments)]
fn solve_cmc(
    ctx: &mut Ctx,
    c: &Common,
    e_in: f64,
    target: &str,
    bandlimit: usize,
    perturb: f64,
    gauge: &str,
    initial: Option<&Path>,
    output: Option<&Path>,
) -> Outcome3 {
    let model = ctx.model(c)?;
    ctx.report.bandlimit = Some(bandlimit);
    ctx.report.seed = Some(c.seed);
    let n1 = model.n() as f64 - 1.0;
    let factor = match target {
        "hsq" => 1.0,
        "gauss" => n1,
        other => return Err(Error::Parse(format!("target {other:?}, expected hsq or gauss"))),
    };
    let e = factor * e_in;
    let space_form = model.kind().is_space_form();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let c0 = constant_solution(&model, e)?;
    let mut boost = None;
    let u0 = match initial {
        Some(p) => {
            let bytes = std::fs::read(p)?;
            ctx.report.inputs.push(InputDigest::of_bytes(p.display().to_string(), &bytes));
            SphCoeffs::from_file(&serde_json::from_slice::<CoeffFile>(&bytes)?)?.resized(bandlimit)
        }
        None => {
            let mut u = if space_form {
                // keep r₀e^β inside a bounded static domain
                let hi = model.domain().1;
                let beta_max = if hi.is_finite() { (0.9 * hi * c0).ln().clamp(0.0, 0.5) } else { 0.5 };
                let beta = beta_max * rng.gen_range(0.0..1.0);
                let mut axis = [0.0; 3];
                for v in &mut axis {
                    *v = rng.gen_range(-1.0..1.0);
                }
                boost = Some(json!({ "r0": 1.0 / c0, "beta": beta, "axis": axis }));
                boost_sphere(&model, 0.0, 1.0 / c0, beta, axis, bandlimit)?.u_coeffs().resized(bandlimit)
            } else {
                SphCoeffs::from_low_modes(bandlimit, c0, [0.0; 3])
            };
            let l_start = if space_form { 2 } else { 1 };
            for l in l_start..=bandlimit.min(4) {
                for m in -(l as i64)..=(l as i64) {
                    let v = u.get(l, m) + perturb * c0 * rng.gen_range(-1.0..1.0) / (l * l) as f64;
                    u.set(l, m, v);
                }
            }
            u
        }
    };
    let gauge = match (gauge, space_form) {
        ("none", _) | ("auto", false) => Gauge::None,
        ("fix", _) | ("auto", true) => {
            let s = u0.as_slice();
            Gauge::FixLowModes { values: [s[0], s[1], s[2], s[3]] }
        }
        ("lm", _) => Gauge::LevenbergMarquardt { lambda: 1e-8 },
        (other, _) => return Err(Error::Parse(format!("gauge {other:?}, expected auto, none, fix or lm"))),
    };
    let problem = CmcProblem::new(&model, e, bandlimit, gauge)?;
    let res = ctx.time("newton", || newton_solve(&problem, &u0))?;
    let class = classify(&res.u, &model, ctx.tol.get("classify"))?;
    let final_residual = problem.hsq_residual(&res.u)?.max_abs();
    if let Some(p) = output {
        std::fs::write(p, serde_json::to_string_pretty(&res.u.to_file())?)?;
    }
    let r_field = SphereField::from_coeffs(problem.grid(), &res.u).map(|u| 1.0 / u);
    ctx.plot(
        Plot::new("Newton residual", "iteration", "max |residual|").log_y().markers().with(Series::new(
            "residual",
            res.residual_history.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect(),
        )),
        "residual_history",
    )?;
    ctx.plot(
        Plot::new("solution profile", "colatitude", "r").with(Series::new("r", meridian(&r_field))),
        "solution_profile",
    )?;
    let results = json!({
        "target": target,
        "E_input": e_in,
        "conversion_factor": factor,
        "E_hsq": e,
        "E_gauss": e / n1,
        "gauge": gauge,
        "round_sphere_r0": 1.0 / c0,
        "initial_boost": boost,
        "iterations": res.iterations,
        "converged": res.converged,
        "lm_fallback": res.lm_fallback,
        "residual_history": res.residual_history,
        "final_residual": final_residual,
        "classification": class,
    });
    let status = if !res.converged {
        Status::new(Outcome::Guard, Some("newton-convergence".into()), Some(format!("residual {final_residual:e}")))
    } else if class.rigidity_violation {
        violation("boosted profile in a model without boosts".into())
    } else if let Verdict::NonRigid { distance } = class.verdict {
        violation(format!("converged solution outside the l<=1 modes: distance {distance:e}"))
    } else {
        Status::ok()
    };
    Ok((results, status))
}

fn verify_identities(ctx: &mut Ctx, c: &Common, suite: &str, profiles: Option<&Path>) -> Outcome3 {
    ctx.report.seed = Some(c.seed);
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(suite).ok_or_else(|| Error::Parse(format!("unknown suite {suite:?}")))?]
    };
    let surfaces = match profiles {
        Some(dir) => {
            let s = verify::load_profile_dir(dir)?;
            for (name, _) in &s {
                let bytes = std::fs::read(dir.join(name))?;
                ctx.report.inputs.push(InputDigest::of_bytes(name.clone(), &bytes));
            }
            s
        }
        None => {
            for f in verify::bundled_fixtures() {
                ctx.report.inputs.push(InputDigest::of_bytes(format!("bundled:{}", f.name), f.text.as_bytes()));
            }
            verify::bundled_surfaces()?
        }
    };
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for s in suites {
        let tol = ctx.tol.clone();
        let outcome = ctx.time(s.name(), || verify::run_suite(s, &surfaces, &tol, c.seed))?;
        say(&format!("suite {}", s.name()));
        for r in &outcome.rows {
            say(&format!(
                "  {:<4} {:<70} {:>10.3e} < {:>8.1e}",
                if r.pass { "ok" } else { "FAIL" },
                r.identity,
                r.max_error,
                r.tolerance
            ));
            if !r.pass {
                failures.push(r.identity.clone());
            }
        }
        ctx.report.errata.extend(outcome.errata.iter().cloned());
        out.push(json!({ "suite": s.name(), "passed": outcome.passed(), "rows": outcome.rows }));
    }
    let status = if failures.is_empty() {
        Status::ok()
    } else {
        check_failed("identity-suite", format!("{} failing rows, first: {}", failures.len(), failures[0]))
    };
    Ok((Value::Array(out), status))
}

fn curvature_oracle(ctx: &mut Ctx, c: &Common, chart: &str, points: usize, all_models: bool) -> Outcome3 {
    ctx.report.seed = Some(c.seed);
    let charts = match chart {
        "static" => vec![ChartKind::Static],
        "ef" => vec![ChartKind::EddingtonFinkelstein],
        "both" => vec![ChartKind::Static, ChartKind::EddingtonFinkelstein],
        other => return Err(Error::Parse(format!("chart {other:?}, expected static, ef or both"))),
    };
    let models = if all_models { verify::four_models()? } else { vec![ctx.model(c)?] };
    if models.iter().any(|m| m.n() != 3) {
        return Err(Error::Unsupported("the curvature oracle runs in four dimensions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let tol = ctx.tol.clone();
    let (rows, errata) = ctx.time("oracle", || verify::curvature_rows(&models, points, &charts, &tol, &mut rng))?;
    ctx.report.errata = errata;
    let failing: Vec<_> = rows.iter().filter(|r| !r.pass).map(|r| r.identity.clone()).collect();
    let status = match failing.first() {
        None => Status::ok(),
        Some(first) => check_failed("oracle", format!("{} failing rows, first: {first}", failing.len())),
    };
    let mut components: Vec<&str> = ctx.report.errata.iter().map(|e| e.component.as_str()).collect();
    components.sort();
    components.dedup();
    Ok((json!({ "rows": rows, "errata_components": components }), status))
}

fn mobius(ctx: &mut Ctx, coeffs: [&str; 4], bandlimit: usize) -> Outcome3 {
    let [a, b, c, d] =
        [parse_complex(coeffs[0])?, parse_complex(coeffs[1])?, parse_complex(coeffs[2])?, parse_complex(coeffs[3])?];
    ctx.report.bandlimit = Some(bandlimit);
    let grid = SphereGrid::new(bandlimit);
    let f = ctx.time("conformal_factor", || mobius_conformal_factor(a, b, c, d, &grid))?;
    let scale = f.u.max_abs().powi(2).max(1.0);
    let liouville = liouville_residual(&f.u, 1.0).max_abs() / scale;
    let mp = max_principle_functional(&f.u).ok();
    let diff = |p: &nullcone::cmc::LowModeCoeffs| {
        let mut m = (p.a - f.fitted.a).abs();
        for i in 0..3 {
            m = m.max((p.b[i] - f.fitted.b[i]).abs());
        }
        m
    };
    let fit = fit_boosted_sphere(&f.u.coeffs(), LOW_MODE_TOL).ok();
    let results = json!({
        "det_abs": (a * d - b * c).norm(),
        "low_mode_distance": f.low_mode_distance,
        "liouville_residual": liouville,
        "fitted": f.fitted,
        "printed": f.printed,
        "corrected": f.corrected,
        "printed_vs_fitted": diff(&f.printed),
        "corrected_vs_fitted": diff(&f.corrected),
        "max_principle_spread": mp.as_ref().map(|m| m.spread),
        "max_principle_identity_gap": mp.as_ref().map(|m| m.identity_gap),
        "boost_fit": fit,
    });
    let status = if f.low_mode_distance >= ctx.tol.get("mobius_low_mode") {
        violation(format!("conformal factor outside the l<=1 modes: {:e}", f.low_mode_distance))
    } else if liouville >= ctx.tol.get("liouville") {
        check_failed("liouville", format!("Liouville residual {liouville:e}"))
    } else {
        Status::ok()
    };
    Ok((results, status))
}

#[allow(clippy::too_many_arguments)]
fn boost(
    ctx: &mut Ctx,
    c: &Common,
    r0: f64,
    beta: f64,
    axis: &str,
    w0: f64,
    bandlimit: usize,
    output: Option<&Path>,
) -> Outcome3 {
    let model = ctx.model(c)?;
    ctx.report.bandlimit = Some(bandlimit);
    let s = boost_sphere(&model, w0, r0, beta, parse_vec3(axis)?, bandlimit)?;
    let hsq = s.hsq();
    let round = NullConeSurface::round(&model, w0, r0, bandlimit)?.hsq();
    let expected = round.values()[0];
    let dev = hsq.values().iter().map(|v| (v - expected).abs()).fold(0.0, f64::max) / expected.abs();
    let fit = fit_boosted_sphere(s.u_coeffs(), LOW_MODE_TOL)?;
    if let Some(p) = output {
        std::fs::write(p, serde_json::to_string_pretty(&s.to_file()?)?)?;
    }
    ctx.plot(
        Plot::new("boosted sphere", "colatitude", "r").with(Series::new("r", meridian(&s.r()))),
        "boosted_profile",
    )?;
    let results = json!({
        "hsq_round": expected,
        "hsq_max_relative_deviation": dev,
        "r": stats(s.radius_values()),
        "fit": fit,
        "output": output.map(|p| p.display().to_string()),
    });
    let status = if dev < ctx.tol.get("boost_hsq") {
        Status::ok()
    } else {
        check_failed("boost-hsq", format!("|H|² deviates from the round value by {dev:e}"))
    };
    Ok((results, status))
}

fn dispatch(ctx: &mut Ctx, cmd: &Command) -> Outcome3 {
    match cmd {
        Command::NccCheck { common, r_min, r_max, points } => ncc_check(ctx, common, *r_min, *r_max, *points),
        Command::SurfaceReport { surface, .. } => surface_report(ctx, surface),
        Command::RigidityKernel { surface, bandlimit, .. } => rigidity_kernel(ctx, surface, *bandlimit),
        Command::SolveCmc { common, e, target, bandlimit, perturb, gauge, initial, output } => {
            solve_cmc(ctx, common, *e, target, *bandlimit, *perturb, gauge, initial.as_deref(), output.as_deref())
        }
        Command::VerifyIdentities { common, suite, profiles } => {
            verify_identities(ctx, common, suite, profiles.as_deref())
        }
        Command::CurvatureOracle { common, chart, points, all_models } => {
            curvature_oracle(ctx, common, chart, *points, *all_models)
        }
        Command::Mobius { a, b, c, d, bandlimit, .. } => mobius(ctx, [a, b, c, d], *bandlimit),
        Command::BoostSphere { common, r0, beta, axis, w0, bandlimit, output } => {
            boost(ctx, common, *r0, *beta, axis, *w0, *bandlimit, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let common = cli.command.common().clone();
    let mut ctx = Ctx {
        report: RunReport::new(cli.command.name(), std::env::args().skip(2).collect()),
        tol: Tolerances::default(),
        plots: common.plots.clone(),
        started: Instant::now(),
    };
    let result = ctx.tol.apply(&common.tol).and_then(|_| dispatch(&mut ctx, &cli.command));
    ctx.report.tolerances = ctx.tol.0.clone();
    ctx.report.status = match result {
        Ok((results, status)) => {
            ctx.report.results = results;
            status
        }
        Err(e) => {
            let outcome = if e.guard_name().is_some() { Outcome::Guard } else { Outcome::InputError };
            Status::new(outcome, e.guard_name().map(String::from), Some(e.to_string()))
        }
    };
    ctx.report.timings.insert("total".into(), ctx.started.elapsed().as_secs_f64());
    if !matches!(cli.command, Command::VerifyIdentities { .. }) {
        say(&serde_json::to_string_pretty(&ctx.report.results).unwrap());
    }
    let st = &ctx.report.status;
    match (&st.guard, &st.message) {
        (Some(g), Some(m)) => eprintln!("status: {:?} [{g}] {m}", st.outcome),
        (None, Some(m)) => eprintln!("status: {:?} {m}", st.outcome),
        _ => eprintln!("status: ok"),
    }
    if let Some(path) = &common.report {
        if let Err(e) = ctx.report.append_to(path) {
            eprintln!("cannot write report: {e}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(ctx.report.status.exit_code as u8)
}
