use super::RateFit;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write;

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub scenario: String,
    /// Result being checked, e.g. `thm3.1`.
    pub theorem: String,
    pub quantity: String,
    pub value: f64,
    pub constant: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub threshold: String,
    pub passed: bool,
}

impl CheckRow {
    /// Row for a fitted slope.
    pub fn from_fit(scenario: &str, theorem: &str, quantity: &str, fit: &RateFit, threshold: &str, passed: bool) -> Self {
        Self {
            scenario: scenario.into(),
            theorem: theorem.into(),
            quantity: quantity.into(),
            value: fit.slope,
            constant: fit.constant(),
            window_lo: fit.window[0],
            window_hi: fit.window[1],
            threshold: threshold.into(),
            passed,
        }
    }
}

/// Writes the rows with a header; floats use the shortest round-trip
/// decimal form.
pub fn write_rows_csv(rows: &[CheckRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "theorem", "quantity", "value", "constant", "window_lo", "window_hi", "threshold", "passed"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.theorem.clone(),
            r.quantity.clone(),
            format!("{:?}", r.value),
            format!("{:?}", r.constant),
            format!("{:?}", r.window_lo),
            format!("{:?}", r.window_hi),
            r.threshold.clone(),
            r.passed.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Log-log scatter of the fit samples with the fitted line, as SVG.
pub fn rate_fit_svg(fit: &RateFit, title: &str) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let xs: Vec<f64> = fit.samples.iter().map(|p| p[0].log10()).collect();
    let ys: Vec<f64> = fit.samples.iter().map(|p| p[1].log10()).collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" font-size="14">{}</text>"#, PAD - 16.0, escape(title));
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" font-size="12">slope {:.4}, R² {:.4}; log10 s ∈ [{x0:.2}, {x1:.2}], log10 e ∈ [{y0:.2}, {y1:.2}]</text>"#,
        H - 16.0,
        fit.slope,
        fit.r_squared
    );
    for (x, y) in xs.iter().zip(&ys) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, px(*x), py(*y));
    }
    let line = |x: f64| (fit.slope * x * std::f64::consts::LN_10 + fit.intercept) / std::f64::consts::LN_10;
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson"/>"#,
        px(x0),
        py(line(x0)),
        px(x1),
        py(line(x1))
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit() -> RateFit {
        RateFit::fit(&[(0.1, 0.01), (0.2, 0.04), (0.4, 0.16)]).unwrap()
    }

    #[test]
    fn csv_is_stable() {
        let row = CheckRow::from_fit("disk", "thm3.1", "slope", &fit(), "[0.85, 1.15]", true);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_rows_csv(&[row.clone()], &mut a).unwrap();
        write_rows_csv(&[row], &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "scenario,theorem,quantity,value,constant,window_lo,window_hi,threshold,passed");
        assert!(lines.next().unwrap().starts_with("disk,thm3.1,slope,2.0"));
    }

    #[test]
    fn svg_has_one_marker_per_sample() {
        let svg = rate_fit_svg(&fit(), "a < b");
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("a &lt; b"));
    }
}
