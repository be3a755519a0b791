//! Executes a parsed scenario: one solve, the checks, and the output files.

use crate::config::{Check, ConfigError, FixtureRef, Scenario, Solve, FOUR_COMPONENT_TOML};
use blowup::closed_forms::{half_space, pullback_solution, relative_pde_residual, SolutionHandle};
use blowup::cone_solver::{
    solve_reciprocal_profile, solve_wedge_profile, solve_zonal_profile, wedge_cone, ConeGeometry, ConeSolution,
    LevelRecord,
};
use blowup::field_solver::{
    solve_cross_section, solve_radial, solve_strip, Domain2D, RadialProfile, ScalarField, SolveOptions, SolveReport,
    StripField, StripMap, StripOptions,
};
use blowup::geometry::{
    circle_chord, conformal_factor, conformal_map, line_arc_fixture, spheres_second_intersection, CornerChart, Vector,
};
use blowup::verifier::{
    anisotropic_check, anisotropy_samples, barrier_check, bounds_check, boundary_rate, corner_rate,
    difference_bound_check, interior_ray_check, rate_fit_svg, scaled_derivative_check, stability_check,
    tangent_ball_probes, write_rows_csv, CheckRow, RateFit,
};
use blowup::Error;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

/// Overrides the output directory of every scenario; each scenario writes
/// to a subdirectory named after it.
pub const OUTPUT_ENV: &str = "BLOWUP_OUTPUT_DIR";

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Solver(Error),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 3,
            RunError::Solver(_) | RunError::Io(_) => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Solver(e) => write!(f, "solver failure: {e}"),
            RunError::Io(e) => write!(f, "output failure: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn io_error(path: &Path, e: impl fmt::Display) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// Errors that mean the numerics broke down rather than a check failing.
fn is_solver_failure(e: &Error) -> bool {
    matches!(e, Error::NoConvergence(_) | Error::MaskTooCoarse(_) | Error::WindowEmpty { .. })
}

pub struct RunSummary {
    pub rows: Vec<CheckRow>,
    pub output_dir: Option<PathBuf>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Flag, then environment, then the config, then `blowup-out/<name>`.
pub fn output_dir(scenario: &Scenario, flag: Option<&Path>) -> PathBuf {
    let name = &scenario.config.name;
    if let Some(dir) = flag {
        return dir.join(name);
    }
    if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir).join(name);
    }
    match &scenario.config.output_dir {
        Some(dir) => dir.clone(),
        None => PathBuf::from("blowup-out").join(name),
    }
}

enum Solved {
    Nothing,
    Radial(RadialProfile),
    Cone(ConeSolution),
    Cross { fields: Vec<ScalarField>, report: SolveReport, domain: Domain2D },
    Strip { field: StripField, domain: Domain2D },
}

impl Solved {
    fn handle(&self) -> Result<SolutionHandle, Error> {
        match self {
            Solved::Cone(sol) => Ok(sol.to_handle(match sol.geometry() {
                ConeGeometry::Wedge { .. } => 2,
                ConeGeometry::Zonal { .. } => sol.equation().dim(),
            })),
            Solved::Cross { fields, .. } => Ok(fields.last().expect("at least one level").to_handle()),
            Solved::Strip { field, .. } => Ok(field.to_handle()),
            _ => Err(Error::InvalidArgument("this solve has no pointwise solution".into())),
        }
    }

    fn domain(&self) -> Option<&Domain2D> {
        match self {
            Solved::Cross { domain, .. } | Solved::Strip { domain, .. } => Some(domain),
            _ => None,
        }
    }

    fn level_records(&self) -> Vec<LevelRecord> {
        match self {
            Solved::Radial(p) => p.records.clone(),
            Solved::Cone(sol) => sol.levels().to_vec(),
            Solved::Cross { report, .. } => report.levels.clone(),
            _ => vec![],
        }
    }
}

fn solve(scenario: &Scenario) -> Result<Solved, Error> {
    let n = scenario.config.n;
    let Some(spec) = &scenario.config.solve else { return Ok(Solved::Nothing) };
    Ok(match spec.get_ref() {
        Solve::Radial { domain, intervals, levels } => Solved::Radial(solve_radial(n, *domain, *intervals, &levels.values())?),
        Solve::Cone { geometry, intervals, levels } => Solved::Cone(match (geometry, levels) {
            (_, None) => solve_reciprocal_profile(n, *geometry, *intervals)?,
            (ConeGeometry::Wedge { opening }, Some(l)) => solve_wedge_profile(n, *opening, *intervals, &l.values())?,
            (ConeGeometry::Zonal { aperture }, Some(l)) => solve_zonal_profile(n, *aperture, *intervals, &l.values())?,
        }),
        Solve::CrossSection { domain, step, formulation, levels } => {
            let domain = domain.build()?;
            let opts = SolveOptions { formulation: *formulation, levels: levels.values(), probes: vec![] };
            let (fields, report) = solve_cross_section(n, &domain, *step, &opts)?;
            Solved::Cross { fields, report, domain }
        }
        Solve::Strip { map, domain, across, re_range } => {
            let domain = domain.build()?;
            let field = solve_strip(n, *map, &domain, StripOptions { across: *across, re_range: *re_range })?;
            Solved::Strip { field, domain }
        }
    })
}

fn load_fixture(scenario: &Scenario) -> Result<Option<CornerChart>, Error> {
    Ok(match &scenario.fixture {
        None => None,
        Some(FixtureRef::LineArc) => Some(line_arc_fixture()),
        Some(FixtureRef::FourComponent) => Some(CornerChart::from_toml_str(FOUR_COMPONENT_TOML)?),
        Some(FixtureRef::File(path)) => Some(CornerChart::from_toml_file(path)?),
        Some(FixtureRef::StraightWedge) => match scenario.config.solve.as_ref().map(|s| s.get_ref()) {
            Some(Solve::Strip { map: StripMap::Sector { opening }, .. }) => Some(CornerChart::straight_wedge(*opening)?),
            _ => return Err(Error::InvalidArgument("straight-wedge fixture without a sector solve".into())),
        },
    })
}

/// Rows and plots produced by the checks, before anything is written.
pub struct Evaluation {
    pub rows: Vec<CheckRow>,
    plots: Vec<(String, String)>,
    solved: Solved,
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    solved: &'a Solved,
    chart: Option<&'a CornerChart>,
    rows: Vec<CheckRow>,
    plots: Vec<(String, String)>,
}

impl Ctx<'_> {
    fn row(&mut self, quantity: String, value: f64, constant: f64, window: (f64, f64), threshold: String, passed: bool) {
        self.rows.push(CheckRow {
            scenario: self.scenario.config.name.clone(),
            theorem: self.scenario.config.anchor.clone(),
            quantity,
            value,
            constant,
            window_lo: window.0,
            window_hi: window.1,
            threshold,
            passed,
        });
    }

    /// Slope and R² rows; without `min_r2` the R² is only reported.
    fn fit_rows(&mut self, label: &str, fit: &RateFit, slope_ok: bool, slope_rule: String, min_r2: Option<f64>) {
        let window = (fit.window[0], fit.window[1]);
        self.row(format!("{label} slope"), fit.slope, fit.constant(), window, slope_rule, slope_ok);
        let (rule, ok) = match min_r2 {
            Some(m) => (format!(">= {m:?}"), fit.r_squared >= m),
            None => ("reported".to_string(), true),
        };
        self.row(format!("{label} r-squared"), fit.r_squared, f64::NAN, window, rule, ok);
        if self.scenario.config.plots {
            let file = format!("{}.svg", label.replace(' ', "-"));
            let title = format!("{} {label}", self.scenario.config.name);
            self.plots.push((file, rate_fit_svg(fit, &title)));
        }
    }

    fn failed(&mut self, label: &str, e: &Error) {
        self.row(format!("{label}: {e}"), f64::NAN, f64::NAN, (f64::NAN, f64::NAN), "no error".into(), false);
    }
}

fn chart<'a>(ctx: &Ctx<'a>) -> Result<&'a CornerChart, Error> {
    ctx.chart.ok_or_else(|| Error::InvalidArgument("no fixture".into()))
}

fn boundary_distance(solved: &Solved) -> Result<Box<dyn Fn(&Vector) -> f64 + '_>, Error> {
    if let Some(domain) = solved.domain() {
        return Ok(Box::new(move |x: &Vector| domain.signed_distance([x[0], x[1]])));
    }
    match solved {
        Solved::Cone(sol) => match sol.geometry() {
            ConeGeometry::Wedge { opening } => {
                let cone = wedge_cone(opening)?;
                Ok(Box::new(move |x: &Vector| {
                    (0..cone.k()).map(|i| cone.face_distance(x, i).unwrap_or(0.0)).fold(f64::INFINITY, f64::min)
                }))
            }
            ConeGeometry::Zonal { aperture } => Ok(Box::new(move |x: &Vector| {
                let n = x.len();
                let theta = (x[n - 1] / x.norm()).clamp(-1.0, 1.0).acos();
                x.norm() * (aperture - theta).min(PI / 2.0).sin()
            })),
        },
        _ => Err(Error::InvalidArgument("no boundary distance for this solve".into())),
    }
}

pub fn evaluate(scenario: &Scenario) -> Result<Evaluation, RunError> {
    let solved = solve(scenario).map_err(RunError::Solver)?;
    let chart = load_fixture(scenario).map_err(RunError::Solver)?;
    let mut ctx = Ctx { scenario, solved: &solved, chart: chart.as_ref(), rows: Vec::new(), plots: Vec::new() };
    for (index, check) in scenario.config.checks.iter().enumerate() {
        let check = check.get_ref();
        if let Err(e) = run_check(&mut ctx, check, index as u64) {
            if is_solver_failure(&e) {
                return Err(RunError::Solver(e));
            }
            ctx.failed(check.label(), &e);
        }
    }
    let (rows, plots) = (ctx.rows, ctx.plots);
    Ok(Evaluation { rows, plots, solved })
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b.abs()) })
}

fn vector(x: &[f64]) -> Vector {
    Vector::from_vec(x.to_vec())
}

fn run_check(ctx: &mut Ctx<'_>, check: &Check, index: u64) -> Result<(), Error> {
    let n = ctx.scenario.config.n;
    // each check gets its own stream so adding a check leaves the others unchanged
    let seed = ctx.scenario.config.seed.wrapping_add(index);
    match check {
        Check::RadialOracle { probes, max_error } => {
            let Solved::Radial(profile) = ctx.solved else { unreachable!("validated") };
            let ext = profile.extrapolate(probes)?;
            let mut err: f64 = 0.0;
            for (r, e) in probes.iter().zip(&ext) {
                err = err.max((e.value / profile.exact(*r)? - 1.0).abs());
            }
            let bar = max_abs(ext.iter().map(|e| e.relative_error_bar()));
            let window = (probes.iter().copied().fold(f64::INFINITY, f64::min), probes.iter().copied().fold(0.0, f64::max));
            ctx.row("max relative error vs exact".into(), err, bar, window, format!("<= {max_error:?}"), err <= *max_error);
        }
        Check::ProfileOracle { window, max_error, samples } => {
            let Solved::Cone(sol) = ctx.solved else { unreachable!("validated") };
            let beta = sol.equation().decay();
            let exact = |t: f64| match sol.geometry() {
                ConeGeometry::Wedge { .. } => t.sin().powf(-beta),
                ConeGeometry::Zonal { .. } => t.cos().powf(-beta),
            };
            let mut err: f64 = 0.0;
            for i in 0..*samples {
                let t = window[0] + (window[1] - window[0]) * i as f64 / (*samples - 1) as f64;
                err = err.max((sol.g_at(t)? / exact(t) - 1.0).abs());
            }
            ctx.row(
                "max relative profile error".into(),
                err,
                f64::NAN,
                (window[0], window[1]),
                format!("<= {max_error:?}"),
                err <= *max_error,
            );
        }
        Check::MonotoneLevels { tolerance } => {
            let records = ctx.solved.level_records();
            let min = records.iter().map(|r| r.min_increase).fold(f64::INFINITY, f64::min);
            let lo = records.first().map_or(f64::NAN, |r| r.level);
            let hi = records.last().map_or(f64::NAN, |r| r.level);
            ctx.row("min level increase".into(), min, f64::NAN, (lo, hi), format!(">= -{tolerance:?}"), min >= -tolerance);
        }
        Check::BoundaryRate { foot, normal, distances, slope, min_r2 } => {
            let u = ctx.solved.handle()?;
            let fit = boundary_rate(&u, &vector(foot), &vector(normal).normalize(), &distances.values())?;
            let ok = fit.slope >= slope[0] && fit.slope <= slope[1];
            ctx.fit_rows("boundary rate", &fit, ok, format!("in [{:?}, {:?}]", slope[0], slope[1]), Some(*min_r2));
        }
        Check::Barriers { foot, normal, inner, outer, distances, tolerance } => {
            let u = ctx.solved.handle()?;
            let nrm = vector(normal).normalize();
            let probes = tangent_ball_probes(foot, nrm.as_slice(), *inner, *outer, &distances.values());
            let rep = barrier_check(&u, &probes, *tolerance)?;
            let window = distances.window();
            let rule = format!("<= {tolerance:?}");
            ctx.row("excess over inner-ball barrier".into(), rep.upper_excess, f64::NAN, window, rule.clone(), true);
            ctx.row("deficit under outer-ball barrier".into(), rep.lower_excess, f64::NAN, window, rule, true);
        }
        Check::CornerRate { direction, radii, min_slope, min_r2, max_form_ratio } => {
            let Solved::Strip { field, .. } = ctx.solved else { unreachable!("validated") };
            let cone = field.cone_profile()?;
            let rate = corner_rate(&field.to_handle(), &cone, chart(ctx)?, &vector(direction), &radii.values())?;
            let need = |f: &Option<RateFit>| {
                f.clone().ok_or(Error::InsufficientSamples { found: 0, needed: 3 })
            };
            let map_form = need(&rate.map_form)?;
            let distance_form = need(&rate.distance_form)?;
            let rule = format!(">= {min_slope:?}");
            ctx.fit_rows("corner rate map form", &map_form, map_form.slope >= *min_slope, rule.clone(), Some(*min_r2));
            ctx.fit_rows("corner rate distance form", &distance_form, distance_form.slope >= *min_slope, rule, Some(*min_r2));
            let ratio = rate.form_disagreement();
            let window = radii.window();
            ctx.row("error form ratio".into(), ratio, f64::NAN, window, format!("<= {max_form_ratio:?}"), ratio <= *max_form_ratio);
        }
        Check::InteriorRays { deltas, radii, rays, max_constant_ratio } => {
            let Solved::Strip { field, .. } = ctx.solved else { unreachable!("validated") };
            let cone = field.cone_profile()?;
            let u = field.to_handle();
            let dist = boundary_distance(ctx.solved)?;
            let mut constants = Vec::new();
            for &delta in deltas {
                let fit = interior_ray_check(&u, &cone, chart(ctx)?, &*dist, delta, &radii.values(), *rays)?;
                constants.push(fit.linear_constant());
                let window = (fit.window[0], fit.window[1]);
                ctx.row(format!("interior rays delta {delta} constant"), fit.linear_constant(), fit.slope, window, "reported".into(), true);
            }
            let hi = constants.iter().copied().fold(0.0, f64::max);
            let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
            let ratio = hi / lo;
            ctx.row(
                "interior rays constant ratio".into(),
                ratio,
                f64::NAN,
                radii.window(),
                format!("<= {max_constant_ratio:?}"),
                ratio <= *max_constant_ratio,
            );
        }
        Check::Bounds { samples, tolerance } => {
            let u = ctx.solved.handle()?;
            let dist = boundary_distance(ctx.solved)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points = bounds_samples(ctx.solved, *samples, &mut rng)?;
            let rep = bounds_check(&u, &*dist, &points, *tolerance)?;
            ctx.row(
                "max d^beta u over 2^beta".into(),
                rep.upper / rep.upper_limit,
                rep.lower,
                (f64::NAN, f64::NAN),
                format!("<= 1 + {tolerance:?}, lower > 0"),
                rep.lower > 0.0,
            );
        }
        Check::ScaledDerivatives { foot, normal, distances, step_fraction, max_slope } => {
            let u = ctx.solved.handle()?;
            let dist = boundary_distance(ctx.solved)?;
            let nrm = vector(normal).normalize();
            let points: Vec<Vector> = distances.values().iter().map(|d| vector(foot) + &nrm * *d).collect();
            let rep = scaled_derivative_check(&u, &*dist, &points, *step_fraction)?;
            let fit = rep.trend.ok_or(Error::InsufficientSamples { found: 0, needed: 3 })?;
            let window = (fit.window[0], fit.window[1]);
            ctx.row(
                "scaled derivative trend slope".into(),
                fit.slope,
                rep.constant,
                window,
                format!("|slope| <= {max_slope:?}"),
                fit.slope.abs() <= *max_slope,
            );
        }
        Check::Anisotropy { ratios, count, step_fraction, max_slope } => {
            let (u, cone) = wedge_parts(ctx.solved)?;
            let samples = anisotropy_samples(&cone, ratios[0], ratios[1], *count)?;
            let rep = anisotropic_check(&u, &cone, &samples, *step_fraction)?;
            let fit = rep.trend.ok_or(Error::InsufficientSamples { found: 0, needed: 3 })?;
            // a flat trend explains no variance, so R² is not a criterion here
            ctx.fit_rows("anisotropy trend", &fit, fit.slope.abs() <= *max_slope, format!("|slope| <= {max_slope:?}"), None);
        }
        Check::Differences { ratios, count, taus, pairs, max_spread } => {
            let (u, cone) = wedge_parts(ctx.solved)?;
            let base = anisotropy_samples(&cone, ratios[0], ratios[1], *count)?;
            let rep = difference_bound_check(&u, &cone, &base, taus, *pairs, seed)?;
            for c in &rep.constants {
                ctx.row(format!("difference constant tau {}", c[0]), c[1], f64::NAN, (ratios[0], ratios[1]), "reported".into(), true);
            }
            let spread = rep.spread();
            ctx.row("difference constant spread".into(), spread, f64::NAN, (ratios[0], ratios[1]), format!("< {max_spread:?}"), spread < *max_spread);
        }
        Check::Stability { perturbations, grid, samples, max_spread } => {
            let Solved::Cone(sol) = ctx.solved else { unreachable!("validated") };
            let ConeGeometry::Wedge { opening } = sol.geometry() else { unreachable!("validated") };
            let rep = stability_check(n, opening, perturbations, *grid, *samples)?;
            for r in &rep.rows {
                ctx.row(format!("stability quotient eps {}", r.perturbation), r.quotient(), r.sup_ratio_error, (f64::NAN, f64::NAN), "reported".into(), true);
            }
            let spread = rep.spread();
            let lo = perturbations.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = perturbations.iter().copied().fold(0.0, f64::max);
            ctx.row("stability quotient spread".into(), spread, f64::NAN, (lo, hi), format!("< {max_spread:?}"), spread < *max_spread);
        }
        Check::Homogeneity { points, tolerance } => {
            let Solved::Cone(sol) = ctx.solved else { unreachable!("validated") };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (worst_u, worst_f) = homogeneity(sol, *points, &mut rng)?;
            let rule = format!("<= {tolerance:?}");
            ctx.row("homogeneity defect of u_V".into(), worst_u, f64::NAN, (0.01, 100.0), rule.clone(), worst_u <= *tolerance);
            if let Some(f) = worst_f {
                ctx.row("homogeneity defect of f_V".into(), f, f64::NAN, (0.01, 100.0), rule, f <= *tolerance);
            }
        }
        Check::Spheres { trials, max_dim } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (violations, off) = spheres(*trials, *max_dim, &mut rng)?;
            ctx.row("chord bound violations".into(), violations as f64, *trials as f64, (2.0, 4.0), "== 0".into(), violations == 0);
            ctx.row("second point off the spheres".into(), off, f64::NAN, (2.0, 4.0), "<= 1e-10".into(), off <= 1e-10);
        }
        Check::Chord { trials, tolerance } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..*trials {
                let (r1, r2) = (rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0));
                let alpha = rng.gen_range(0.05..PI - 0.05);
                let exact = chord_by_root_finding(r1, r2, alpha)?;
                worst = worst.max((circle_chord(r1, r2, alpha)? - exact).abs() / exact.max(1.0));
            }
            ctx.row("chord vs root finding".into(), worst, f64::NAN, (0.05, PI - 0.05), format!("<= {tolerance:?}"), worst <= *tolerance);
        }
        Check::Conformal { points, residual_tolerance, jacobian_tolerance } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (residual, jacobian) = conformal(n, *points, &mut rng)?;
            ctx.row("pullback relative residual".into(), residual, f64::NAN, (f64::NAN, f64::NAN), format!("<= {residual_tolerance:?}"), residual <= *residual_tolerance);
            ctx.row("jacobian conformality defect".into(), jacobian, f64::NAN, (f64::NAN, f64::NAN), format!("<= {jacobian_tolerance:?}"), jacobian <= *jacobian_tolerance);
        }
        Check::Sandwich { radii, samples, aperture } => {
            let chart = chart(ctx)?.clone();
            let theta0 = aperture.unwrap_or_else(|| chart.aperture());
            for &r in radii {
                let shift = chart.curvature_bound() * r * r / theta0.sin();
                let rep = chart.cone_sandwich(r, shift, *samples, seed)?;
                let bad = rep.outer_violations + rep.inner_violations;
                ctx.row(format!("sandwich violations r {r}"), bad as f64, shift, (r, r), "== 0".into(), bad == 0);
            }
        }
        Check::CornerMap { samples, radius, tolerance } => {
            let chart = chart(ctx)?.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (round_trip, mismatches, used) = corner_map_samples(&chart, *samples, *radius, &mut rng)?;
            ctx.row("corner map round trip".into(), round_trip, used as f64, (0.0, *radius), format!("<= {tolerance:?}"), round_trip <= *tolerance);
            ctx.row("corner map membership mismatches".into(), mismatches as f64, used as f64, (0.0, *radius), "== 0".into(), mismatches == 0);
        }
    }
    Ok(())
}

fn wedge_parts(solved: &Solved) -> Result<(SolutionHandle, blowup::geometry::ConeSpec), Error> {
    let Solved::Cone(sol) = solved else { unreachable!("validated") };
    let ConeGeometry::Wedge { opening } = sol.geometry() else { unreachable!("validated") };
    Ok((sol.to_handle(2), wedge_cone(opening)?))
}

fn bounds_samples(solved: &Solved, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vector>, Error> {
    let mut out = Vec::with_capacity(count);
    match solved {
        Solved::Cone(sol) => {
            let (lo, hi) = sol.window();
            for _ in 0..count {
                let t = rng.gen_range(lo..hi);
                out.push(match sol.geometry() {
                    ConeGeometry::Wedge { .. } => vector(&[t.cos(), t.sin()]),
                    ConeGeometry::Zonal { .. } => {
                        let n = sol.equation().dim();
                        let mut x = Vector::zeros(n);
                        x[0] = t.sin();
                        x[n - 1] = t.cos();
                        x
                    }
                });
            }
        }
        _ => {
            let domain = solved.domain().expect("validated");
            // stay a few grid steps from the boundary where the field is resolved
            let margin = match solved {
                Solved::Cross { report, .. } => 3.0 * report.step,
                _ => 1e-3,
            };
            let [x0, x1, y0, y1] = domain.bbox;
            let mut tries = 0;
            while out.len() < count {
                tries += 1;
                if tries > 1000 * count {
                    return Err(Error::InsufficientSamples { found: out.len(), needed: count });
                }
                let p = [rng.gen_range(x0..x1), rng.gen_range(y0..y1)];
                if domain.signed_distance(p) > margin {
                    out.push(vector(&p));
                }
            }
        }
    }
    Ok(out)
}

fn homogeneity(sol: &ConeSolution, points: usize, rng: &mut ChaCha8Rng) -> Result<(f64, Option<f64>), Error> {
    let beta = sol.equation().decay();
    let (lo, hi) = sol.window();
    let mut worst_u: f64 = 0.0;
    let mut worst_f: Option<f64> = None;
    for _ in 0..points {
        let t = rng.gen_range(lo..hi);
        let lam: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let scale = rng.gen_range(0.1..2.0);
        let x = match sol.geometry() {
            ConeGeometry::Wedge { .. } => vector(&[t.cos(), t.sin()]),
            ConeGeometry::Zonal { .. } => {
                let n = sol.equation().dim();
                let mut x = Vector::zeros(n);
                x[0] = t.sin();
                x[n - 1] = t.cos();
                x
            }
        } * scale;
        let (a, b) = (sol.eval(&x)?, sol.eval(&(&x * lam))?);
        worst_u = worst_u.max((b * lam.powf(beta) / a - 1.0).abs());
        if let ConeGeometry::Wedge { .. } = sol.geometry() {
            let d = [rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0)];
            if let (Ok(a), Ok(b)) = (sol.eval_f(&d), sol.eval_f(&[d[0] * lam, d[1] * lam])) {
                let e = (b * lam.powf(beta) / a - 1.0).abs();
                worst_f = Some(worst_f.unwrap_or(0.0).max(e));
            }
        }
    }
    Ok((worst_u, worst_f))
}

fn spheres(trials: usize, max_dim: usize, rng: &mut ChaCha8Rng) -> Result<(usize, f64), Error> {
    let mut violations = 0;
    let mut off: f64 = 0.0;
    let mut done = 0;
    while done < trials {
        let k = rng.gen_range(2..=4.min(max_dim));
        let n = rng.gen_range(k.max(2)..=max_dim);
        let normals: Vec<Vector> =
            (0..k).map(|_| Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).normalize()).collect();
        let gram = DMatrix::from_fn(k, k, |i, j| normals[i].dot(&normals[j]));
        if gram.determinant() < 1e-6 {
            continue;
        }
        let p = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let r = rng.gen_range(0.1..3.0);
        let s = spheres_second_intersection(&p, &normals, r)?;
        if !s.bound_holds() {
            violations += 1;
        }
        for nu in &normals {
            off = off.max(((&s.q - (&p + nu * r)).norm() - r).abs() / r);
        }
        done += 1;
    }
    Ok((violations, off))
}

/// Second intersection of two circles through the origin, by a sign scan
/// along the first circle and bisection.
fn chord_by_root_finding(r1: f64, r2: f64, alpha: f64) -> Result<f64, Error> {
    let c2 = [r2 * alpha.cos(), r2 * alpha.sin()];
    let point = |t: f64| [r1 + r1 * t.cos(), r1 * t.sin()];
    let g = |t: f64| {
        let p = point(t);
        (p[0] - c2[0]).powi(2) + (p[1] - c2[1]).powi(2) - r2 * r2
    };
    let steps = 4000;
    let dt = 2.0 * PI / steps as f64;
    for s in 1..steps - 1 {
        let (mut lo, mut hi) = (PI + s as f64 * dt, PI + (s + 1) as f64 * dt);
        if g(lo) * g(hi) > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let p = point(0.5 * (lo + hi));
        return Ok(p[0].hypot(p[1]));
    }
    Err(Error::NoConvergence(format!("no second circle intersection for r1 = {r1}, r2 = {r2}, alpha = {alpha}")))
}

fn conformal(n: usize, points: usize, rng: &mut ChaCha8Rng) -> Result<(f64, f64), Error> {
    let step = 1e-3;
    let mut residual: f64 = 0.0;
    let mut done = 0;
    while done < points {
        let a = rng.gen_range(0.5..2.0);
        let u = pullback_solution(a, half_space(n)?)?;
        let x = Vector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let margin = 50.0 * step;
        let inside = u.contains(&x)
            && (0..n).all(|i| {
                let mut e = Vector::zeros(n);
                e[i] = margin;
                u.contains(&(&x + &e)) && u.contains(&(&x - &e))
            });
        if !inside {
            continue;
        }
        residual = residual.max(relative_pde_residual(&u, &x, step)?.abs());
        done += 1;
    }
    let mut jacobian: f64 = 0.0;
    let mut done = 0;
    while done < points {
        let a = rng.gen_range(0.5..2.0);
        let x = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let mut pole = Vector::zeros(n);
        pole[0] = -a;
        if (&x - &pole).norm() < 0.5 * a {
            continue;
        }
        let lam = conformal_factor(a, &x)?;
        let h = 1e-5;
        let mut j = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut e = Vector::zeros(n);
            e[c] = h;
            j.set_column(c, &((conformal_map(a, &(&x + &e))? - conformal_map(a, &(&x - &e))?) / (2.0 * h)));
        }
        jacobian = jacobian.max((j.transpose() * &j - DMatrix::identity(n, n) * lam * lam).norm());
        done += 1;
    }
    Ok((residual, jacobian))
}

fn corner_map_samples(chart: &CornerChart, samples: usize, radius: f64, rng: &mut ChaCha8Rng) -> Result<(f64, usize, usize), Error> {
    let n = chart.dim();
    let cone = chart.tangent_cone()?;
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    let mut used = 0;
    let mut tries = 0;
    while used < samples {
        tries += 1;
        if tries > 100 * samples {
            return Err(Error::InsufficientSamples { found: used, needed: samples });
        }
        let y = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        if y.norm() >= 1.0 || y.norm() < 1e-3 {
            continue;
        }
        let x = chart.corner() + y * radius;
        let Ok(inside) = chart.contains(&x) else { continue };
        let tx = chart.corner_map(&x)?;
        let Ok(in_cone) = cone.membership(&tx) else { continue };
        if inside != in_cone {
            mismatches += 1;
        }
        let back = chart.corner_map_inverse(&tx)?;
        worst = worst.max((back - &x).norm() / radius);
        used += 1;
    }
    Ok((worst, mismatches, used))
}

fn csv_float(x: f64) -> String {
    format!("{x:?}")
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| RunError::Io(e.to_string()))
}

fn write_exports(dir: &Path, solved: &Solved) -> Result<(), RunError> {
    let records = solved.level_records();
    if !records.is_empty() {
        let bytes = csv_bytes(
            &["level", "newton_iterations", "residual", "min_increase"],
            records.iter().map(|r| {
                vec![csv_float(r.level), r.newton_iterations.to_string(), csv_float(r.residual), csv_float(r.min_increase)]
            }),
        )?;
        write_file(&dir.join("levels.csv"), &bytes)?;
    }
    match solved {
        Solved::Nothing => {}
        Solved::Radial(p) => {
            let last = p.values.len() - 1;
            let bytes = csv_bytes(
                &["r", "u", "exact"],
                (0..p.nodes()).map(|i| {
                    let r = p.radius(i);
                    let exact = p.exact(r).map_or(f64::NAN, |v| v);
                    vec![csv_float(r), csv_float(p.values[last][i]), csv_float(exact)]
                }),
            )?;
            write_file(&dir.join("profile.csv"), &bytes)?;
        }
        Solved::Cone(sol) => {
            let bytes = csv_bytes(
                &["theta", "g"],
                sol.values().iter().enumerate().map(|(i, g)| vec![csv_float(sol.theta(i)), csv_float(*g)]),
            )?;
            write_file(&dir.join("profile.csv"), &bytes)?;
            write_file(&dir.join("cone.toml"), sol.to_toml_string().as_bytes())?;
        }
        Solved::Cross { fields, .. } => {
            let mut bytes = Vec::new();
            fields.last().expect("at least one level").write_csv(&mut bytes).map_err(RunError::Solver)?;
            write_file(&dir.join("field.csv"), &bytes)?;
        }
        Solved::Strip { field, .. } => {
            write_file(&dir.join("strip.toml"), field.to_toml_string().map_err(RunError::Solver)?.as_bytes())?;
        }
    }
    Ok(())
}

/// Writes `report.csv`, the exports and the plots of an evaluation.
pub fn write_outputs(dir: &Path, evaluation: &Evaluation) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut report = Vec::new();
    write_rows_csv(&evaluation.rows, &mut report).map_err(RunError::Solver)?;
    write_file(&dir.join("report.csv"), &report)?;
    write_exports(dir, &evaluation.solved)?;
    for (name, svg) in &evaluation.plots {
        write_file(&dir.join(name), svg.as_bytes())?;
    }
    Ok(())
}

pub fn run(scenario: &Scenario, flag: Option<&Path>) -> Result<RunSummary, RunError> {
    let evaluation = evaluate(scenario)?;
    let dir = output_dir(scenario, flag);
    write_outputs(&dir, &evaluation)?;
    Ok(RunSummary { rows: evaluation.rows, output_dir: Some(dir) })
}
