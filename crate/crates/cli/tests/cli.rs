use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use blowup_cli::catalog;
use blowup_cli::config::Scenario;

fn blowup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup"))
        .args(args)
        .env_remove("BLOWUP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn report_rows(dir: &Path) -> Vec<csv::StringRecord> {
    let mut reader = csv::Reader::from_path(dir.join("report.csv")).expect("report.csv exists");
    reader.records().map(|r| r.expect("valid row")).collect()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn list_is_stable_and_names_key_scenarios() {
    let first = blowup(&["list"]);
    assert!(first.status.success());
    let second = blowup(&["list"]);
    assert_eq!(first.stdout, second.stdout);
    let text = stdout(&first);
    for name in ["thm3.1-disk", "thm1.1-wedge", "lemma6.2-spheres"] {
        let line = text
            .lines()
            .find(|l| l.split_whitespace().next() == Some(name))
            .unwrap_or_else(|| panic!("{name} missing from list"));
        assert!(line.split_whitespace().count() >= 3, "{line}");
    }
    assert_eq!(text.lines().count(), catalog::names().count());
}

#[test]
fn bundled_scenarios_parse_and_match_file_names() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut files = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let scenario = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(path.file_stem().unwrap().to_str().unwrap(), scenario.config.name);
        assert!(catalog::source(&scenario.config.name).is_some());
        files += 1;
    }
    assert_eq!(files, catalog::names().count());
    for name in catalog::names() {
        assert!(catalog::scenario(name).is_some_and(|s| s.is_ok()), "{name}");
    }
}

#[test]
fn show_prints_the_bundled_config() {
    let out = blowup(&["show", "lemma6.2-spheres"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("kind = \"spheres\""));
    let missing = blowup(&["show", "no-such-scenario"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn radial_ball_matches_exact_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let out = blowup(&["verify", "radial-ball-n3", "--output-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let rows = report_rows(&tmp.path().join("radial-ball-n3"));
    let error = rows
        .iter()
        .find(|r| &r[2] == "max relative error vs exact")
        .expect("oracle row");
    assert!(error[3].parse::<f64>().unwrap() <= 1e-3);
    assert!(tmp.path().join("radial-ball-n3/levels.csv").exists());
}

#[test]
fn wedge_corner_rate_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let out = blowup(&["verify", "wedge-corner-rate", "--output-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let rows = report_rows(&tmp.path().join("wedge-corner-rate"));
    let slope = rows
        .iter()
        .find(|r| r[2].ends_with("slope"))
        .expect("slope row");
    assert!(slope[3].parse::<f64>().unwrap() >= 0.8, "{slope:?}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = blowup(&["verify", "lemma6.2-spheres", "lemma6.1-chord", "--output-dir", dir.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    for name in ["lemma6.2-spheres", "lemma6.1-chord"] {
        let x = fs::read(a.path().join(name).join("report.csv")).unwrap();
        let y = fs::read(b.path().join(name).join("report.csv")).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_blowup"))
        .args(["verify", "lemma6.2-spheres"])
        .env("BLOWUP_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("lemma6.2-spheres/report.csv").exists());
}

#[test]
fn malformed_config_exits_3_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(
        tmp.path(),
        "name = \"x\"\nanchor = \"y\"\ndescription = \"d\"\nn = 3\nseed = 1\n\n[[check]]\nkind = \"bogus\"\n",
    );
    let out = blowup(&["run", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("scenario.toml:8"), "{}", stderr(&out));
}

#[test]
fn check_without_required_solve_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(
        tmp.path(),
        "name = \"x\"\nanchor = \"y\"\ndescription = \"d\"\nn = 3\nseed = 1\n\n[[check]]\nkind = \"radial-oracle\"\nmax_error = 1e-3\n",
    );
    let out = blowup(&["run", &path]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn failing_threshold_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(
        tmp.path(),
        "name = \"strict\"\nanchor = \"y\"\ndescription = \"d\"\nn = 3\nseed = 1\n\n[[check]]\nkind = \"chord\"\ntrials = 200\ntolerance = 1e-300\n",
    );
    let out = blowup(&["run", &path, "--output-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    let rows = report_rows(&tmp.path().join("strict"));
    assert!(rows.iter().any(|r| &r[8] == "false"));
}

#[test]
fn geom_spheres_prints_rows() {
    let out = blowup(&["geom", "spheres", "--trials", "50", "--seed", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("scenario,theorem,quantity"));
    assert!(text.contains("chord bound violations,0.0"));
}
