//! Radially symmetric solves on a ball or on an exterior shell.

use super::{extrapolate_truncation, Extrapolated};
use crate::closed_forms::{ball_exterior, ball_interior};
use crate::cone_solver::LevelRecord;
use crate::equation::Equation;
use crate::error::{Error, Result};
use crate::linalg::SparseLu;
use crate::ode::{solve_level, Stencil};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Where the singular boundary sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialDomain {
    /// `|x| < radius`, blowing up on the sphere.
    Ball { radius: f64 },
    /// `inner < |x| < outer`, blowing up on the inner sphere with the exact
    /// exterior solution prescribed on the outer one.
    Shell { inner: f64, outer: f64 },
}

/// Profiles `u_m(r)` on `r_i = r_0 + i h`, one per truncation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub equation: Equation,
    pub domain: RadialDomain,
    pub start: f64,
    pub step: f64,
    /// `values[l][i]` is the level-`l` solution at node `i`.
    pub values: Vec<Vec<f64>>,
    pub records: Vec<LevelRecord>,
}

impl RadialProfile {
    pub fn nodes(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    /// Distance from node `i` to the singular sphere.
    pub fn boundary_distance(&self, i: usize) -> f64 {
        match self.domain {
            RadialDomain::Ball { radius } => radius - self.radius(i),
            RadialDomain::Shell { inner, .. } => self.radius(i) - inner,
        }
    }

    /// Level-`level` value at radius `r` by cubic interpolation in the
    /// reciprocal variable, which stays smooth up to the boundary.
    pub fn value(&self, level: usize, r: f64) -> Result<f64> {
        let v = self
            .values
            .get(level)
            .ok_or_else(|| Error::invalid(format!("no level {level}")))?;
        let last = self.radius(v.len() - 1);
        if !(r >= self.start && r <= last) {
            return Err(Error::OutsideDomain);
        }
        let s = (r - self.start) / self.step;
        let k = (s.floor() as usize).clamp(1, v.len().saturating_sub(3)).min(v.len() - 1);
        let lo = k.saturating_sub(1);
        let hi = (lo + 4).min(v.len());
        let lo = hi.saturating_sub(4);
        let mut acc = 0.0;
        for a in lo..hi {
            let mut w = 1.0;
            for b in lo..hi {
                if a != b {
                    w *= (s - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * self.equation.to_reciprocal(v[a]);
        }
        Ok(self.equation.from_reciprocal(acc))
    }

    /// Extrapolates the last three levels to `m → ∞` at each probe radius.
    pub fn extrapolate(&self, probes: &[f64]) -> Result<Vec<Extrapolated>> {
        let seq = (0..self.values.len())
            .map(|l| probes.iter().map(|&r| self.value(l, r)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        extrapolate_truncation(&seq)
    }

    /// Closed-form solution on the same domain.
    pub fn exact(&self, r: f64) -> Result<f64> {
        let n = self.equation.dim();
        let mut x = DVector::zeros(n);
        x[0] = r;
        match self.domain {
            RadialDomain::Ball { radius } => ball_interior(n, radius, DVector::zeros(n))?.eval(&x),
            RadialDomain::Shell { inner, .. } => ball_exterior(n, inner, DVector::zeros(n))?.eval(&x),
        }
    }
}

/// Solves `u″ + ((n−1)/r)u′ = ¼n(n−2)u^{(n+2)/(n−2)}` with `u = m` on the
/// singular sphere for each level `m`, using `J` intervals.
///
/// On a ball the centre carries `u′(0) = 0`; on a shell the outer value is
/// taken from the exact exterior solution.
pub fn solve_radial(n: usize, domain: RadialDomain, j: usize, levels: &[f64]) -> Result<RadialProfile> {
    let eq = Equation::new(n)?;
    if j < 16 {
        return Err(Error::invalid(format!("grid size J = {j} must be at least 16")));
    }
    if levels.is_empty() || levels.windows(2).any(|w| !(w[1] > w[0])) || !(levels[0] > 0.0) {
        return Err(Error::invalid("truncation levels must be positive and increasing"));
    }
    let (start, end) = match domain {
        RadialDomain::Ball { radius } if radius > 0.0 => (0.0, radius),
        RadialDomain::Shell { inner, outer } if inner > 0.0 && outer > inner => (inner, outer),
        _ => return Err(Error::invalid(format!("bad radial domain {domain:?}"))),
    };
    let h = (end - start) / j as f64;
    let k = n as f64 - 1.0;
    let st: Vec<Stencil> = (0..=j)
        .map(|i| {
            let r = start + i as f64 * h;
            if r == 0.0 {
                // u′(0) = 0 and (n−1)u′/r → (n−1)u″ at the centre
                Stencil { a: 0.0, b: -2.0 * n as f64, c: 2.0 * n as f64 }
            } else {
                let t = 0.5 * k * h / r;
                Stencil { a: 1.0 - t, b: -2.0, c: 1.0 + t }
            }
        })
        .collect();
    let beta = eq.decay();
    let outer_value = match domain {
        RadialDomain::Shell { inner, outer } => {
            let mut x = DVector::zeros(n);
            x[0] = outer;
            Some(ball_exterior(n, inner, DVector::zeros(n))?.eval(&x)?)
        }
        RadialDomain::Ball { .. } => None,
    };
    let range = match domain {
        RadialDomain::Ball { .. } => 0..j,
        RadialDomain::Shell { .. } => 1..j,
    };
    let dist = |i: usize| match domain {
        RadialDomain::Ball { radius } => radius - (start + i as f64 * h),
        RadialDomain::Shell { inner, .. } => start + i as f64 * h - inner,
    };
    let m0 = levels[0];
    let mut g: Vec<f64> = (0..=j)
        .map(|i| {
            let d = dist(i);
            let floor = outer_value.map_or(0.0, |v| v.min(m0));
            if d <= 0.0 { m0 } else { d.powf(-beta).min(m0).max(floor) }
        })
        .collect();
    let mut lu = SparseLu::new();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(levels.len());
    let mut records = Vec::with_capacity(levels.len());
    for &m in levels {
        match domain {
            RadialDomain::Ball { .. } => g[j] = m,
            RadialDomain::Shell { .. } => {
                g[0] = m;
                g[j] = outer_value.expect("shell has outer data");
            }
        }
        let (iterations, residual) = solve_level(eq, &st, &mut g, h, &range, &mut lu)?;
        let min_increase = match values.last() {
            None => f64::INFINITY,
            Some(old) => range.clone().map(|i| g[i] - old[i]).fold(f64::INFINITY, f64::min),
        };
        records.push(LevelRecord { level: m, newton_iterations: iterations, residual, min_increase });
        values.push(g.clone());
    }
    Ok(RadialProfile { equation: eq, domain, start, step: h, values, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels() -> Vec<f64> {
        (0..13).map(|j| 10.0 * 2f64.powi(j)).collect()
    }

    #[test]
    fn ball_centre_values() {
        for (n, centre) in [(3, 2f64.sqrt()), (4, 2.0)] {
            let p = solve_radial(n, RadialDomain::Ball { radius: 1.0 }, 8192, &levels()).unwrap();
            let e = p.extrapolate(&[0.0]).unwrap();
            assert!((e[0].value / centre - 1.0).abs() < 1e-3, "n={n}: {:?}", e[0]);
            assert!(p.records.iter().all(|r| r.min_increase > -1e-9));
        }
    }

    #[test]
    fn shell_matches_exterior_solution() {
        let p = solve_radial(4, RadialDomain::Shell { inner: 1.0, outer: 3.0 }, 65536, &levels()).unwrap();
        let probes: Vec<f64> = (0..=10).map(|i| 1.5 + 0.15 * i as f64).collect();
        let e = p.extrapolate(&probes).unwrap();
        for (r, x) in probes.iter().zip(&e) {
            let exact = p.exact(*r).unwrap();
            assert!((x.value / exact - 1.0).abs() < 1e-4, "r={r}: {} vs {exact}", x.value);
        }
    }
}
