use blowup::cone_solver::{solve_reciprocal_profile, solve_wedge_profile, solve_zonal_profile, ConeGeometry};
use blowup::field_solver::{solve_cross_section, solve_radial, Domain2D, Formulation, RadialDomain, SolveOptions};
use blowup_cli::catalog;
use blowup_cli::config::Scenario;
use blowup_cli::run::{self, RunError, RunSummary};
use clap::{Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Parser)]
#[command(name = "blowup", version, about = "Solvers and verification scenarios for boundary blow-up solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the bundled scenarios and the result each one checks.
    List,
    /// Print the configuration of a bundled scenario.
    Show { name: String },
    /// Run bundled scenarios.
    Verify {
        names: Vec<String>,
        #[arg(long, conflicts_with = "names")]
        all: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Parent directory for the outputs; overrides the config and the environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run scenario files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Radial solve on a ball or a shell; writes `r,u,exact` rows.
    SolveRadial {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, num_args = 2, value_names = ["INNER", "OUTER"])]
        shell: Option<Vec<f64>>,
        #[arg(long, default_value_t = 8192)]
        intervals: usize,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Angular profile of a wedge or zonal cone solution.
    SolveCone {
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "zonal", required_unless_present = "zonal")]
        wedge: Option<f64>,
        #[arg(long)]
        zonal: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        intervals: usize,
        /// Truncation levels; without them the untruncated reciprocal form is solved.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// TOML export of the solution.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `theta,g` rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Cross-section solve on a planar domain; writes the last level as CSV.
    SolveDomain {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        domain: Shape,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        opening: Option<f64>,
        #[arg(long, num_args = 4, value_names = ["XLO", "XHI", "YLO", "YHI"], allow_hyphen_values = true)]
        bbox: Option<Vec<f64>>,
        #[arg(long)]
        step: f64,
        #[arg(long, value_enum, default_value_t = Form::Direct)]
        formulation: Form,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        levels: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Geometry checks without a solve; prints report rows.
    Geom {
        #[arg(value_enum)]
        check: GeomCheck,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// `line-arc`, `four-component` or a fixture file.
        #[arg(long, default_value = "line-arc")]
        fixture: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Disk,
    Sector,
    Lune,
    Rectangle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Direct,
    Reciprocal,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeomCheck {
    Spheres,
    Chord,
    Conformal,
    Sandwich,
    CornerMap,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn solver_exit(e: blowup::Error) -> ExitCode {
    fail(2, format!("solver failure: {e}"))
}

fn print_summary(scenario: &Scenario, result: &Result<RunSummary, RunError>) {
    let mut text = format!("{} ({})\n", scenario.config.name, scenario.config.anchor);
    match result {
        Ok(summary) => {
            for r in &summary.rows {
                text += &format!(
                    "  {} {} = {:.6e} ({})\n",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.quantity,
                    r.value,
                    r.threshold
                );
            }
            let dir = summary.output_dir.as_ref().map(|d| d.display().to_string()).unwrap_or_default();
            text += &format!("  {} -> {dir}\n", if summary.passed() { "passed" } else { "failed" });
        }
        Err(e) => text += &format!("  {e}\n"),
    }
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

/// Runs the scenarios on `jobs` threads and returns the worst exit code.
fn run_all(scenarios: Vec<Scenario>, jobs: usize, flag: Option<&Path>) -> u8 {
    let next = AtomicUsize::new(0);
    let worst = Mutex::new(0i32);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, scenarios.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(scenario) = scenarios.get(i) else { break };
                let result = run::run(scenario, flag);
                print_summary(scenario, &result);
                let code = match &result {
                    Ok(summary) => summary.exit_code(),
                    Err(e) => {
                        eprintln!("error: {}: {e}", scenario.config.name);
                        e.exit_code()
                    }
                };
                let mut w = worst.lock().expect("no panics while holding the lock");
                *w = (*w).max(code);
            });
        }
    });
    let code = *worst.lock().expect("threads joined");
    code as u8
}

fn write_or_print(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => std::io::stdout().lock().write_all(bytes),
    }
}

fn csv_rows(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut text = format!("{header}\n");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|x| format!("{x:?}")).collect();
        text += &cells.join(",");
        text.push('\n');
    }
    text.into_bytes()
}

fn main() -> ExitCode {
    faer::set_global_parallelism(faer::Par::Seq);
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            let mut out = String::new();
            for name in catalog::names() {
                match catalog::scenario(name).expect("listed") {
                    Ok(s) => out += &format!("{name:<28} {:<18} {}\n", s.config.anchor, s.config.description),
                    Err(e) => return fail(3, e),
                }
            }
            print!("{out}");
            ExitCode::SUCCESS
        }
        Command::Show { name } => match catalog::source(&name) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => fail(3, format!("no bundled scenario `{name}`; see `blowup list`")),
        },
        Command::Verify { names, all, jobs, output_dir } => {
            let names: Vec<String> = if all { catalog::names().map(String::from).collect() } else { names };
            if names.is_empty() {
                return fail(3, "name at least one scenario or pass --all");
            }
            let mut scenarios = Vec::new();
            for name in &names {
                match catalog::scenario(name) {
                    Some(Ok(s)) => scenarios.push(s),
                    Some(Err(e)) => return fail(3, e),
                    None => return fail(3, format!("no bundled scenario `{name}`; see `blowup list`")),
                }
            }
            ExitCode::from(run_all(scenarios, jobs, output_dir.as_deref()))
        }
        Command::Run { configs, jobs, output_dir } => {
            let mut scenarios = Vec::new();
            for path in &configs {
                match Scenario::load(path) {
                    Ok(s) => scenarios.push(s),
                    Err(e) => return fail(3, format!("config error: {e}")),
                }
            }
            ExitCode::from(run_all(scenarios, jobs, output_dir.as_deref()))
        }
        Command::SolveRadial { n, radius, shell, intervals, levels, out } => {
            let domain = match shell {
                Some(s) => RadialDomain::Shell { inner: s[0], outer: s[1] },
                None => RadialDomain::Ball { radius },
            };
            let levels = levels.unwrap_or_else(blowup::cone_solver::default_levels);
            let profile = match solve_radial(n, domain, intervals, &levels) {
                Ok(p) => p,
                Err(e) => return solver_exit(e),
            };
            let last = profile.values.len() - 1;
            let bytes = csv_rows(
                "r,u,exact",
                (0..profile.nodes()).map(|i| {
                    let r = profile.radius(i);
                    vec![r, profile.values[last][i], profile.exact(r).unwrap_or(f64::NAN)]
                }),
            );
            match write_or_print(out.as_deref(), &bytes) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(2, e),
            }
        }
        Command::SolveCone { n, wedge, zonal, intervals, levels, out, csv } => {
            let geometry = match (wedge, zonal) {
                (Some(opening), _) => ConeGeometry::Wedge { opening },
                (None, Some(aperture)) => ConeGeometry::Zonal { aperture },
                (None, None) => unreachable!("clap requires one of them"),
            };
            let sol = match (&levels, geometry) {
                (None, g) => solve_reciprocal_profile(n, g, intervals),
                (Some(l), ConeGeometry::Wedge { opening }) => solve_wedge_profile(n, opening, intervals, l),
                (Some(l), ConeGeometry::Zonal { aperture }) => solve_zonal_profile(n, aperture, intervals, l),
            };
            let sol = match sol {
                Ok(s) => s,
                Err(e) => return solver_exit(e),
            };
            let (lo, hi) = sol.window();
            eprintln!("g(θ) on {} intervals; evaluation window [{lo:.6}, {hi:.6}]", sol.grid_size());
            if let Some(path) = &out {
                if let Err(e) = sol.save(path) {
                    return fail(2, e);
                }
            }
            let bytes = csv_rows("theta,g", sol.values().iter().enumerate().map(|(i, g)| vec![sol.theta(i), *g]));
            if out.is_none() || csv.is_some() {
                if let Err(e) = write_or_print(csv.as_deref(), &bytes) {
                    return fail(2, e);
                }
            }
            ExitCode::SUCCESS
        }
        Command::SolveDomain { n, domain, radius, opening, bbox, step, formulation, levels, out } => {
            let dom = match domain {
                Shape::Disk => Domain2D::disk([0.0, 0.0], radius),
                Shape::Sector => match opening {
                    Some(o) => Domain2D::sector(o, radius),
                    None => return fail(3, "--domain sector needs --opening"),
                },
                Shape::Lune => Domain2D::line_arc_lune(),
                Shape::Rectangle => match bbox {
                    Some(b) => Domain2D::rectangle([b[0], b[1], b[2], b[3]]),
                    None => return fail(3, "--domain rectangle needs --bbox"),
                },
            };
            let dom = match dom {
                Ok(d) => d,
                Err(e) => return fail(3, e),
            };
            let formulation = match formulation {
                Form::Direct => Formulation::Direct,
                Form::Reciprocal => Formulation::Reciprocal,
            };
            let opts = SolveOptions { formulation, levels, probes: vec![] };
            let (fields, report) = match solve_cross_section(n, &dom, step, &opts) {
                Ok(r) => r,
                Err(e) => return solver_exit(e),
            };
            for r in &report.levels {
                eprintln!(
                    "level {:e}: {} Newton steps, residual {:.2e}, min increase {:.2e}",
                    r.level, r.newton_iterations, r.residual, r.min_increase
                );
            }
            let mut bytes = Vec::new();
            if let Err(e) = fields.last().expect("at least one level").write_csv(&mut bytes) {
                return fail(2, e);
            }
            match write_or_print(out.as_deref(), &bytes) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(2, e),
            }
        }
        Command::Geom { check, seed, trials, n, fixture } => {
            let body = match check {
                GeomCheck::Spheres => format!("kind = \"spheres\"\ntrials = {trials}\nmax_dim = 5"),
                GeomCheck::Chord => format!("kind = \"chord\"\ntrials = {trials}\ntolerance = 1e-10"),
                GeomCheck::Conformal => {
                    format!("kind = \"conformal\"\npoints = {trials}\nresidual_tolerance = 1e-2\njacobian_tolerance = 1e-6")
                }
                GeomCheck::Sandwich => format!("kind = \"sandwich\"\nradii = [0.05, 0.1]\nsamples = {}", trials.max(1)),
                GeomCheck::CornerMap => {
                    format!("kind = \"corner-map\"\nsamples = {}\nradius = 0.1\ntolerance = 1e-8", trials.max(1))
                }
            };
            let needs_fixture = matches!(check, GeomCheck::Sandwich | GeomCheck::CornerMap);
            let fixture_line = if needs_fixture { format!("fixture = {fixture:?}\n") } else { String::new() };
            let text = format!("name = \"geom\"\nanchor = \"geometry\"\nn = {n}\nseed = {seed}\n{fixture_line}\n[[check]]\n{body}\n");
            let scenario = match Scenario::parse(&text, "geom", Some(Path::new("."))) {
                Ok(s) => s,
                Err(e) => return fail(3, e),
            };
            let evaluation = match run::evaluate(&scenario) {
                Ok(e) => e,
                Err(e) => return fail(e.exit_code() as u8, e),
            };
            let mut bytes = Vec::new();
            if let Err(e) = blowup::verifier::write_rows_csv(&evaluation.rows, &mut bytes) {
                return fail(2, e);
            }
            let _ = std::io::stdout().lock().write_all(&bytes);
            if evaluation.rows.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
