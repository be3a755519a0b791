//! Rate and bound checks on solver output.

mod checks;
mod report;

pub use checks::{
    anisotropic_check, anisotropy_samples, barrier_check, bounds_check, boundary_rate, corner_rate,
    difference_bound_check, interior_ray_check, scaled_derivative_check, stability_check, tangent_ball_probes,
    AnisotropyReport, AnisotropyRow, BarrierProbe, BarrierReport, BoundsReport, CornerRate, DerivativeReport,
    DifferenceReport, StabilityReport, StabilityRow,
};
pub use report::{rate_fit_svg, write_rows_csv, CheckRow};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Least-squares fit of `log e = slope · log s + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `(s, e)` pairs with both entries positive.
    pub samples: Vec<[f64; 2]>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Smallest and largest `s` used.
    pub window: [f64; 2],
}

impl RateFit {
    /// Fits the strictly positive pairs; needs at least three of them.
    pub fn fit(samples: &[(f64, f64)]) -> Result<Self> {
        let kept: Vec<[f64; 2]> = samples
            .iter()
            .filter(|(s, e)| *s > 0.0 && *e > 0.0 && s.is_finite() && e.is_finite())
            .map(|&(s, e)| [s, e])
            .collect();
        if kept.len() < 3 {
            return Err(Error::InsufficientSamples { found: kept.len(), needed: 3 });
        }
        let xs: Vec<f64> = kept.iter().map(|p| p[0].ln()).collect();
        let ys: Vec<f64> = kept.iter().map(|p| p[1].ln()).collect();
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let my = ys.iter().sum::<f64>() / m;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        if sxx == 0.0 {
            return Err(Error::InsufficientSamples { found: 1, needed: 3 });
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
        let lo = kept.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = kept.iter().map(|p| p[0]).fold(0.0, f64::max);
        Ok(Self { samples: kept, slope, intercept, r_squared, window: [lo, hi] })
    }

    /// `e^{intercept}`, the constant of the fitted power law.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }

    /// `max e/s`, the smallest `C` with `e ≤ C s` on the samples.
    pub fn linear_constant(&self) -> f64 {
        self.samples.iter().map(|p| p[1] / p[0]).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..10).map(|i| (0.01 * i as f64, 3.0 * (0.01 * i as f64).powf(1.5))).collect();
        let f = RateFit::fit(&pts).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.constant() - 3.0).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.window, [0.01, 0.09]);
    }

    #[test]
    fn non_positive_samples_are_dropped() {
        let pts = [(0.1, 0.0), (0.2, 1.0), (-1.0, 1.0), (0.3, 2.0)];
        assert!(matches!(RateFit::fit(&pts), Err(Error::InsufficientSamples { found: 2, needed: 3 })));
    }
}
