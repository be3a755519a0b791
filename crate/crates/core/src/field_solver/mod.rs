//! Solves of the full problem on radial shells and on two-dimensional cross
//! sections `Ω₂ × R^{n−2}`.

mod cartesian;
mod domain;
mod radial;
mod strip;

pub use cartesian::{solve_cross_section, Formulation, NodeKind, ScalarField, SolveOptions, SolveReport};
pub use domain::{Domain2D, Piece};
pub use radial::{solve_radial, RadialDomain, RadialProfile};
pub use strip::{solve_strip, StripField, StripMap, StripOptions};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Limit estimate at one probe together with the size of the correction
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated {
    pub value: f64,
    /// Last computed level value.
    pub last: f64,
    /// `|value − last|`, the estimated remainder of the tail.
    pub error_bar: f64,
}

impl Extrapolated {
    /// Relative size of the remainder.
    pub fn relative_error_bar(&self) -> f64 {
        self.error_bar / self.value.abs()
    }
}

/// Geometric-tail (Aitken) extrapolation of `values[level][probe]` to the
/// untruncated limit, using the last three levels.
///
/// Fails with [`Error::NonMonotoneTail`] at the first probe whose last two
/// increments change sign or do not shrink.
pub fn extrapolate_truncation(values: &[Vec<f64>]) -> Result<Vec<Extrapolated>> {
    if values.len() < 3 {
        return Err(Error::InsufficientSamples { found: values.len(), needed: 3 });
    }
    let l = values.len();
    let (a, b, c) = (&values[l - 3], &values[l - 2], &values[l - 1]);
    if a.len() != c.len() || b.len() != c.len() {
        return Err(Error::DimensionMismatch { expected: c.len(), got: a.len().min(b.len()) });
    }
    (0..c.len())
        .map(|p| {
            let d1 = b[p] - a[p];
            let d2 = c[p] - b[p];
            let scale = c[p].abs().max(f64::MIN_POSITIVE);
            if d2.abs() <= 1e-15 * scale {
                return Ok(Extrapolated { value: c[p], last: c[p], error_bar: 0.0 });
            }
            let q = d2 / d1;
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::NonMonotoneTail { probe: p });
            }
            let tail = d2 * q / (1.0 - q);
            Ok(Extrapolated { value: c[p] + tail, last: c[p], error_bar: tail.abs() })
        })
        .collect()
}

/// Combines limits computed on grids of step `2h` and `h` assuming a
/// first-order discretization error, as left by the boundary layer of the
/// truncated problem. The error bar absorbs the size of the correction.
pub fn richardson_first_order(coarse: &[Extrapolated], fine: &[Extrapolated]) -> Result<Vec<Extrapolated>> {
    if coarse.len() != fine.len() {
        return Err(Error::DimensionMismatch { expected: fine.len(), got: coarse.len() });
    }
    Ok(coarse
        .iter()
        .zip(fine)
        .map(|(c, f)| {
            let value = 2.0 * f.value - c.value;
            Extrapolated { value, last: f.last, error_bar: f.error_bar + (value - f.value).abs() }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_tail_is_exact() {
        let l = 1.75;
        let seq: Vec<Vec<f64>> = (0..6).map(|j| vec![l - 2f64.powi(-j), l + 3.0 * 0.3f64.powi(j)]).collect();
        let e = extrapolate_truncation(&seq).unwrap();
        assert!((e[0].value - l).abs() < 1e-14);
        assert!((e[1].value - l).abs() < 1e-14);
        assert!(e[0].error_bar > 0.0);
    }

    #[test]
    fn oscillating_tail_is_rejected() {
        let seq = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 1.5]];
        assert!(matches!(extrapolate_truncation(&seq), Err(Error::NonMonotoneTail { probe: 0 })));
    }

    #[test]
    fn converged_probe_has_no_error_bar() {
        let seq = vec![vec![1.0], vec![2.0], vec![2.0]];
        let e = extrapolate_truncation(&seq).unwrap();
        assert_eq!(e[0].error_bar, 0.0);
    }

    #[test]
    fn ball_probes_after_grid_and_level_extrapolation() {
        let levels: Vec<f64> = (0..13).map(|j| 10.0 * 2f64.powi(j)).collect();
        let probes: Vec<f64> = (0..=9).map(|i| 0.1 * i as f64).collect();
        let coarse = solve_radial(3, RadialDomain::Ball { radius: 1.0 }, 16384, &levels).unwrap();
        let fine = solve_radial(3, RadialDomain::Ball { radius: 1.0 }, 32768, &levels).unwrap();
        let e = richardson_first_order(&coarse.extrapolate(&probes).unwrap(), &fine.extrapolate(&probes).unwrap()).unwrap();
        for (r, x) in probes.iter().zip(&e) {
            let exact = fine.exact(*r).unwrap();
            assert!((x.value / exact - 1.0).abs() < 1e-4, "r={r}: {} vs {exact}", x.value);
        }
    }

    #[test]
    fn near_boundary_probe_reports_large_error_bar() {
        let p = solve_radial(3, RadialDomain::Ball { radius: 1.0 }, 2048, &[10.0, 20.0, 40.0, 80.0]).unwrap();
        let e = p.extrapolate(&[0.0, 0.99]).unwrap();
        assert!(e[0].relative_error_bar() < 1e-3);
        assert!(e[1].relative_error_bar() > 1e-3, "{:?}", e[1]);
    }
}
