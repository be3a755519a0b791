//! Scenario files.
//!
//! A scenario is one TOML document: identification, the dimension `n`, an
//! optional corner fixture, at most one `[solve]` table and any number of
//! `[[check]]` tables. See `scenarios/` for the bundled examples.

use blowup::cone_solver::{default_levels, ConeGeometry};
use blowup::field_solver::{Domain2D, Formulation, Piece, RadialDomain, StripMap};
use serde::Deserialize;
use std::fmt;
use std::path::{Path, PathBuf};
use toml::Spanned;

#[derive(Debug, Clone)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{line}: {}", self.origin, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Result the scenario verifies, e.g. `thm3.1`.
    pub anchor: String,
    #[serde(default)]
    pub description: String,
    pub n: usize,
    /// Seed for every randomized check.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "enabled")]
    pub plots: bool,
    /// `line-arc`, `four-component`, `straight-wedge` (opening taken from
    /// the solve) or a path to a chart fixture file.
    #[serde(default)]
    pub fixture: Option<Spanned<String>>,
    #[serde(default)]
    pub solve: Option<Spanned<Solve>>,
    #[serde(default, rename = "check")]
    pub checks: Vec<Spanned<Check>>,
}

fn enabled() -> bool {
    true
}

/// Truncation schedule: an explicit list or `base · factor^j`, `j < count`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Levels {
    List(Vec<f64>),
    Geometric { base: f64, factor: f64, count: usize },
}

impl Default for Levels {
    fn default() -> Self {
        Levels::List(default_levels())
    }
}

impl Levels {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Levels::List(v) => v.clone(),
            Levels::Geometric { base, factor, count } => (0..*count).map(|j| base * factor.powi(j as i32)).collect(),
        }
    }
}

/// A sample set: an explicit list or `count` points between `from` and `to`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    List(Vec<f64>),
    Range {
        from: f64,
        to: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

impl Samples {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Samples::List(ref v) => v.clone(),
            Samples::Range { from, to, count, spacing } => (0..count)
                .map(|i| {
                    let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
                    match spacing {
                        Spacing::Log => from * (to / from).powf(t),
                        Spacing::Linear => from + (to - from) * t,
                    }
                })
                .collect(),
        }
    }

    pub fn window(&self) -> (f64, f64) {
        let v = self.values();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { center: [f64; 2], radius: f64 },
    Sector { opening: f64, radius: f64 },
    Rectangle { bbox: [f64; 4] },
    LineArcLune,
    Pieces { pieces: Vec<Piece>, bbox: [f64; 4] },
}

impl DomainSpec {
    pub fn build(&self) -> blowup::Result<Domain2D> {
        match self {
            DomainSpec::Disk { center, radius } => Domain2D::disk(*center, *radius),
            DomainSpec::Sector { opening, radius } => Domain2D::sector(*opening, *radius),
            DomainSpec::Rectangle { bbox } => Domain2D::rectangle(*bbox),
            DomainSpec::LineArcLune => Domain2D::line_arc_lune(),
            DomainSpec::Pieces { pieces, bbox } => Domain2D::new(pieces.clone(), *bbox),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Solve {
    /// Radially symmetric profile on a ball or shell.
    Radial {
        domain: RadialDomain,
        intervals: usize,
        #[serde(default)]
        levels: Levels,
    },
    /// Angular profile of a cone solution; without `levels` the
    /// untruncated reciprocal form is solved.
    Cone {
        geometry: ConeGeometry,
        intervals: usize,
        #[serde(default)]
        levels: Option<Levels>,
    },
    /// Cartesian-grid solve of a planar cross-section.
    CrossSection {
        domain: DomainSpec,
        step: f64,
        #[serde(default)]
        formulation: Formulation,
        #[serde(default)]
        levels: Levels,
    },
    /// Conformally mapped solve of a corner domain.
    Strip {
        map: StripMap,
        domain: DomainSpec,
        across: usize,
        re_range: [f64; 2],
    },
}

impl Solve {
    pub fn label(&self) -> &'static str {
        match self {
            Solve::Radial { .. } => "radial",
            Solve::Cone { .. } => "cone",
            Solve::CrossSection { .. } => "cross-section",
            Solve::Strip { .. } => "strip",
        }
    }
}

fn default_probes() -> Vec<f64> {
    (0..10).map(|i| 0.1 * i as f64).collect()
}

fn default_r2() -> f64 {
    0.9
}

fn default_monotone() -> f64 {
    1e-9
}

fn default_form_ratio() -> f64 {
    2.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Check {
    /// Extrapolated radial profile against the exact ball solution.
    RadialOracle {
        #[serde(default = "default_probes")]
        probes: Vec<f64>,
        max_error: f64,
    },
    /// Cone profile against `(sin θ)^{−β}` (half-plane) or `(cos θ)^{−β}`
    /// (half-space as a zonal cone).
    ProfileOracle { window: [f64; 2], max_error: f64, samples: usize },
    /// Successive truncation levels are pointwise nondecreasing.
    MonotoneLevels {
        #[serde(default = "default_monotone")]
        tolerance: f64,
    },
    /// Slope of `|d^β u − 1|` along an inner normal.
    BoundaryRate {
        foot: Vec<f64>,
        normal: Vec<f64>,
        distances: Samples,
        slope: [f64; 2],
        #[serde(default = "default_r2")]
        min_r2: f64,
    },
    /// `v_{r,−q} ≤ u ≤ u_{r,q}` for tangent balls at `foot`.
    Barriers { foot: Vec<f64>, normal: Vec<f64>, inner: f64, outer: f64, distances: Samples, tolerance: f64 },
    /// Slope of `|u/u_V(Tx) − 1|` along `direction` from the fixture corner.
    CornerRate {
        direction: Vec<f64>,
        radii: Samples,
        min_slope: f64,
        #[serde(default = "default_r2")]
        min_r2: f64,
        #[serde(default = "default_form_ratio")]
        max_form_ratio: f64,
    },
    /// Cone comparison at points with `dist(x, ∂Ω) > δ|x − x0|`; the
    /// constants for the different `δ` may differ by `max_constant_ratio`.
    InteriorRays { deltas: Vec<f64>, radii: Samples, rays: usize, max_constant_ratio: f64 },
    /// `0 < d^β u ≤ 2^β` at random interior points.
    Bounds { samples: usize, tolerance: f64 },
    /// `d|Du| + d²|D²u| ≤ C u` along an inner normal without a trend in `d`.
    ScaledDerivatives {
        foot: Vec<f64>,
        normal: Vec<f64>,
        distances: Samples,
        step_fraction: f64,
        max_slope: f64,
    },
    /// Trend of `dist_i |∂_{μ_i} u| / u` against the face-distance ratio.
    Anisotropy { ratios: [f64; 2], count: usize, step_fraction: f64, max_slope: f64 },
    /// Uniformity in `τ` of the anisotropic difference constant.
    Differences { ratios: [f64; 2], count: usize, taus: Vec<f64>, pairs: usize, max_spread: f64 },
    /// `sup |f_1/f_2 − 1| / ‖N_1 − N_2‖` across wedge perturbations.
    Stability { perturbations: Vec<f64>, grid: usize, samples: usize, max_spread: f64 },
    /// Degree `−β` homogeneity of `u_V` and `f_V`.
    Homogeneity { points: usize, tolerance: f64 },
    /// Second common point of spheres through a point and the chord bound.
    Spheres { trials: usize, max_dim: usize },
    /// Closed-form circle chord against root finding.
    Chord { trials: usize, tolerance: f64 },
    /// Pullback of the half-space solution and the conformal Jacobian.
    Conformal { points: usize, residual_tolerance: f64, jacobian_tolerance: f64 },
    /// Tangent cone shifted by `±M r²/sin θ₀` brackets the fixture domain.
    Sandwich {
        radii: Vec<f64>,
        samples: usize,
        #[serde(default)]
        aperture: Option<f64>,
    },
    /// The corner map is a bijection onto the tangent cone near the corner.
    CornerMap { samples: usize, radius: f64, tolerance: f64 },
}

/// What a check needs from the rest of the scenario.
enum Needs {
    Nothing,
    Fixture,
    Solve(&'static [&'static str]),
    SolveAndFixture(&'static [&'static str]),
}

impl Check {
    pub fn label(&self) -> &'static str {
        match self {
            Check::RadialOracle { .. } => "radial-oracle",
            Check::ProfileOracle { .. } => "profile-oracle",
            Check::MonotoneLevels { .. } => "monotone-levels",
            Check::BoundaryRate { .. } => "boundary-rate",
            Check::Barriers { .. } => "barriers",
            Check::CornerRate { .. } => "corner-rate",
            Check::InteriorRays { .. } => "interior-rays",
            Check::Bounds { .. } => "bounds",
            Check::ScaledDerivatives { .. } => "scaled-derivatives",
            Check::Anisotropy { .. } => "anisotropy",
            Check::Differences { .. } => "differences",
            Check::Stability { .. } => "stability",
            Check::Homogeneity { .. } => "homogeneity",
            Check::Spheres { .. } => "spheres",
            Check::Chord { .. } => "chord",
            Check::Conformal { .. } => "conformal",
            Check::Sandwich { .. } => "sandwich",
            Check::CornerMap { .. } => "corner-map",
        }
    }

    fn needs(&self) -> Needs {
        const FIELDS: &[&str] = &["cross-section", "strip"];
        match self {
            Check::RadialOracle { .. } => Needs::Solve(&["radial"]),
            Check::ProfileOracle { .. } | Check::Homogeneity { .. } => Needs::Solve(&["cone"]),
            Check::Anisotropy { .. } | Check::Differences { .. } | Check::Stability { .. } => Needs::Solve(&["cone"]),
            Check::MonotoneLevels { .. } => Needs::Solve(&["radial", "cone", "cross-section"]),
            Check::BoundaryRate { .. } | Check::Barriers { .. } | Check::ScaledDerivatives { .. } => {
                Needs::Solve(FIELDS)
            }
            Check::Bounds { .. } => Needs::Solve(&["cross-section", "strip", "cone"]),
            Check::CornerRate { .. } | Check::InteriorRays { .. } => Needs::SolveAndFixture(&["strip"]),
            Check::Spheres { .. } | Check::Chord { .. } | Check::Conformal { .. } => Needs::Nothing,
            Check::Sandwich { .. } | Check::CornerMap { .. } => Needs::Fixture,
        }
    }

    /// Threshold values that must be positive.
    fn thresholds(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Check::RadialOracle { max_error, .. } | Check::ProfileOracle { max_error, .. } => vec![("max_error", max_error)],
            Check::MonotoneLevels { tolerance } => vec![("tolerance", tolerance)],
            Check::BoundaryRate { min_r2, .. } => vec![("min_r2", min_r2)],
            Check::Barriers { tolerance, inner, outer, .. } => {
                vec![("tolerance", tolerance), ("inner", inner), ("outer", outer)]
            }
            Check::CornerRate { min_slope, min_r2, max_form_ratio, .. } => {
                vec![("min_slope", min_slope), ("min_r2", min_r2), ("max_form_ratio", max_form_ratio)]
            }
            Check::InteriorRays { max_constant_ratio, .. } => vec![("max_constant_ratio", max_constant_ratio)],
            Check::Bounds { tolerance, .. } => vec![("tolerance", tolerance)],
            Check::ScaledDerivatives { step_fraction, max_slope, .. } => {
                vec![("step_fraction", step_fraction), ("max_slope", max_slope)]
            }
            Check::Anisotropy { step_fraction, max_slope, .. } => {
                vec![("step_fraction", step_fraction), ("max_slope", max_slope)]
            }
            Check::Differences { max_spread, .. } | Check::Stability { max_spread, .. } => {
                vec![("max_spread", max_spread)]
            }
            Check::Homogeneity { tolerance, .. } | Check::Chord { tolerance, .. } => vec![("tolerance", tolerance)],
            Check::Spheres { .. } | Check::Sandwich { .. } => vec![],
            Check::Conformal { residual_tolerance, jacobian_tolerance, .. } => {
                vec![("residual_tolerance", residual_tolerance), ("jacobian_tolerance", jacobian_tolerance)]
            }
            Check::CornerMap { tolerance, radius, .. } => vec![("tolerance", tolerance), ("radius", radius)],
        }
    }
}

/// A fixture reference resolved against the config location.
#[derive(Debug, Clone, PartialEq)]
pub enum FixtureRef {
    LineArc,
    FourComponent,
    StraightWedge,
    File(PathBuf),
}

pub const FOUR_COMPONENT_TOML: &str = include_str!("../fixtures/four-component.toml");

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub fixture: Option<FixtureRef>,
    pub origin: String,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

impl Scenario {
    /// Parses `text`; `origin` names the source in diagnostics and `base`
    /// resolves relative fixture paths.
    pub fn parse(text: &str, origin: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let err = |line: Option<usize>, message: String| ConfigError { origin: origin.to_string(), line, message };
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            err(line, e.message().trim().to_string())
        })?;
        if config.name.trim().is_empty() {
            return Err(err(None, "`name` must not be empty".into()));
        }
        if config.anchor.trim().is_empty() || config.anchor.contains(char::is_whitespace) {
            return Err(err(None, "`anchor` must be a single tag such as `thm3.1`".into()));
        }
        if config.n < 3 {
            return Err(err(None, format!("`n` must be at least 3, got {}", config.n)));
        }
        let fixture = match &config.fixture {
            None => None,
            Some(spanned) => {
                let line = Some(line_of(text, spanned.span().start));
                let name = spanned.get_ref().as_str();
                Some(match name {
                    "line-arc" => FixtureRef::LineArc,
                    "four-component" => FixtureRef::FourComponent,
                    "straight-wedge" => FixtureRef::StraightWedge,
                    path => {
                        let p = match base {
                            Some(dir) => dir.join(path),
                            None => PathBuf::from(path),
                        };
                        if !p.is_file() {
                            return Err(err(line, format!("fixture `{path}` is neither built in nor a readable file")));
                        }
                        if let Err(e) = blowup::geometry::CornerChart::from_toml_file(&p) {
                            return Err(err(line, format!("fixture `{path}`: {e}")));
                        }
                        FixtureRef::File(p)
                    }
                })
            }
        };
        let solve_kind = config.solve.as_ref().map(|s| s.get_ref().label());
        if let Some(solve) = &config.solve {
            let line = Some(line_of(text, solve.span().start));
            validate_solve(solve.get_ref()).map_err(|m| err(line, m))?;
            if fixture == Some(FixtureRef::StraightWedge)
                && !matches!(solve.get_ref(), Solve::Strip { map: StripMap::Sector { .. }, .. })
            {
                return Err(err(line, "the straight-wedge fixture takes its opening from a sector strip solve".into()));
            }
        }
        for check in &config.checks {
            let line = Some(line_of(text, check.span().start));
            let c = check.get_ref();
            let wants_solve = |kinds: &[&str]| match solve_kind {
                Some(k) if kinds.contains(&k) => Ok(()),
                _ => Err(err(line, format!("check `{}` needs a solve of kind {}", c.label(), kinds.join(" or ")))),
            };
            let wants_fixture = || match fixture {
                Some(_) => Ok(()),
                None => Err(err(line, format!("check `{}` needs a `fixture`", c.label()))),
            };
            match c.needs() {
                Needs::Nothing => {}
                Needs::Fixture => wants_fixture()?,
                Needs::Solve(kinds) => wants_solve(kinds)?,
                Needs::SolveAndFixture(kinds) => {
                    wants_solve(kinds)?;
                    wants_fixture()?;
                }
            }
            for (key, value) in c.thresholds() {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(err(line, format!("`{key}` of check `{}` must be positive, got {value}", c.label())));
                }
            }
            validate_check(c, config.solve.as_ref().map(|s| s.get_ref())).map_err(|m| err(line, m))?;
        }
        Ok(Self { config, fixture, origin: origin.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { origin: origin.clone(), line: None, message: e.to_string() })?;
        Self::parse(&text, &origin, path.parent())
    }
}

fn validate_levels(levels: &[f64], allow_infinite: bool) -> Result<(), String> {
    if levels.is_empty() {
        return Err("truncation schedule is empty".into());
    }
    if levels.windows(2).any(|w| !(w[1] > w[0])) || !(levels[0] > 0.0) {
        return Err("truncation levels must be positive and increasing".into());
    }
    if !allow_infinite && levels.iter().any(|m| !m.is_finite()) {
        return Err("only the reciprocal cross-section form accepts an infinite level".into());
    }
    Ok(())
}

fn validate_solve(solve: &Solve) -> Result<(), String> {
    match solve {
        Solve::Radial { intervals, levels, .. } => {
            if *intervals < 8 {
                return Err("`intervals` must be at least 8".into());
            }
            validate_levels(&levels.values(), false)
        }
        Solve::Cone { intervals, levels, .. } => {
            if *intervals < 8 {
                return Err("`intervals` must be at least 8".into());
            }
            match levels {
                Some(l) => validate_levels(&l.values(), false),
                None => Ok(()),
            }
        }
        Solve::CrossSection { step, formulation, levels, domain } => {
            if !(*step > 0.0) {
                return Err("`step` must be positive".into());
            }
            domain.build().map_err(|e| e.to_string())?;
            validate_levels(&levels.values(), *formulation == Formulation::Reciprocal)
        }
        Solve::Strip { across, re_range, domain, .. } => {
            if *across < 64 {
                return Err("`across` must be at least 64".into());
            }
            if !(re_range[1] > re_range[0]) {
                return Err("`re_range` must be increasing".into());
            }
            domain.build().map_err(|e| e.to_string())?;
            Ok(())
        }
    }
}

fn validate_check(check: &Check, solve: Option<&Solve>) -> Result<(), String> {
    let wedge = || match solve {
        Some(Solve::Cone { geometry: ConeGeometry::Wedge { opening }, .. }) => Ok(*opening),
        _ => Err(format!("check `{}` needs a wedge cone solve", check.label())),
    };
    match check {
        Check::ProfileOracle { window, samples, .. } => {
            match solve {
                Some(Solve::Cone { geometry: ConeGeometry::Wedge { opening }, .. })
                    if (opening - std::f64::consts::PI).abs() < 1e-12 => {}
                Some(Solve::Cone { geometry: ConeGeometry::Zonal { aperture }, .. })
                    if (aperture - std::f64::consts::FRAC_PI_2).abs() < 1e-12 => {}
                _ => return Err("the profile oracle is known for the half-plane wedge and the hemisphere cap only".into()),
            }
            if !(window[1] > window[0]) || *samples < 2 {
                return Err("profile window must be increasing with at least two samples".into());
            }
        }
        Check::MonotoneLevels { .. } => {
            if let Some(Solve::Cone { levels: None, .. }) = solve {
                return Err("monotone-levels needs a truncated cone solve (give `levels`)".into());
            }
        }
        Check::BoundaryRate { foot, normal, .. }
        | Check::Barriers { foot, normal, .. }
        | Check::ScaledDerivatives { foot, normal, .. } => {
            if foot.len() != 2 || normal.len() != 2 {
                return Err("`foot` and `normal` are points of the plane".into());
            }
        }
        Check::CornerRate { direction, .. } => {
            if direction.len() != 2 {
                return Err("`direction` is a vector of the plane".into());
            }
        }
        Check::InteriorRays { deltas, rays, .. } => {
            if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) || *rays == 0 {
                return Err("`deltas` must be positive and `rays` nonzero".into());
            }
        }
        Check::Anisotropy { ratios, .. } | Check::Differences { ratios, .. } => {
            let opening = wedge()?;
            if !(opening < std::f64::consts::PI) {
                return Err("anisotropy samples need a wedge of opening below π".into());
            }
            if !(ratios[0] >= 1.0 && ratios[1] >= ratios[0]) {
                return Err("`ratios` must satisfy 1 ≤ lo ≤ hi".into());
            }
        }
        Check::Stability { perturbations, .. } => {
            wedge()?;
            if perturbations.len() < 2 {
                return Err("stability needs at least two perturbations".into());
            }
        }
        Check::Spheres { trials, max_dim } => {
            if *trials == 0 || !(3..=8).contains(max_dim) {
                return Err("spheres needs trials > 0 and 3 ≤ max_dim ≤ 8".into());
            }
        }
        Check::Sandwich { radii, samples, .. } => {
            if radii.is_empty() || *samples == 0 {
                return Err("sandwich needs radii and samples".into());
            }
        }
        _ => {}
    }
    Ok(())
}
