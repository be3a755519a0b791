//! Finite-difference solves of the reduced problem on an arc of the circle
//! (wedges) or on a polar cap (zonal cones).

use super::{ConeGeometry, ConeSolution, LevelRecord};
use crate::equation::Equation;
use crate::error::{Error, Result};
use crate::linalg::{Assembly, SparseLu};
use crate::ode::{solve_level, Stencil, LEVEL_RTOL, MAX_NEWTON, NEWTON_RTOL};

/// Truncation levels `10·2^j`, `j = 0..12`.
pub fn default_levels() -> Vec<f64> {
    (0..13).map(|j| 10.0 * 2f64.powi(j)).collect()
}

/// Nodes with `g` below this fraction of the last level form the window.
pub const WINDOW_FRACTION: f64 = 0.8;

/// Linear part of the u-form operator at every node of the grid, with the
/// regular pole folded in for the zonal case.
fn linear_stencils(eq: Equation, geometry: ConeGeometry, h: f64, nodes: usize) -> Vec<Stencil> {
    let beta2 = eq.decay().powi(2);
    let n = eq.dim() as f64;
    (0..nodes)
        .map(|i| match geometry {
            ConeGeometry::Wedge { .. } => Stencil { a: 1.0, b: -2.0 + h * h * beta2, c: 1.0 },
            ConeGeometry::Zonal { .. } => {
                if i == 0 {
                    // ghost g_{−1} = g_1 and (n−2) cot θ g′ → (n−2) g″ at the pole
                    Stencil { a: 0.0, b: -2.0 * (n - 1.0) - h * h * beta2, c: 2.0 * (n - 1.0) }
                } else {
                    let t = 0.5 * (n - 2.0) * h / (i as f64 * h).tan();
                    Stencil { a: 1.0 - t, b: -2.0 - h * h * beta2, c: 1.0 + t }
                }
            }
        })
        .collect()
}

/// Index range of the unknowns: wedges fix both ends, zonal caps only the rim.
fn unknowns(geometry: ConeGeometry, j: usize) -> std::ops::Range<usize> {
    match geometry {
        ConeGeometry::Wedge { .. } => 1..j,
        ConeGeometry::Zonal { .. } => 0..j,
    }
}

fn check_grid(n: usize, geometry: ConeGeometry, j: usize) -> Result<Equation> {
    let eq = Equation::new(n)?;
    if j < 64 {
        return Err(Error::invalid(format!("grid size J = {j} must be at least 64")));
    }
    match geometry {
        ConeGeometry::Wedge { opening } if !(opening > 0.0 && opening < 2.0 * std::f64::consts::PI) => {
            Err(Error::BadAngle(opening))
        }
        ConeGeometry::Zonal { aperture } if !(aperture > 0.0 && aperture < std::f64::consts::PI) => {
            Err(Error::BadAngle(aperture))
        }
        _ => Ok(eq),
    }
}

/// Angular distance to the boundary of the arc or cap, converted to the
/// distance of the unit-radius point from the cone boundary.
fn boundary_distance(geometry: ConeGeometry, theta: f64) -> f64 {
    let ang = match geometry {
        ConeGeometry::Wedge { opening } => theta.min(opening - theta),
        ConeGeometry::Zonal { aperture } => aperture - theta,
    };
    ang.min(std::f64::consts::FRAC_PI_2).sin()
}

fn solve_levels(n: usize, geometry: ConeGeometry, j: usize, levels: &[f64]) -> Result<ConeSolution> {
    let eq = check_grid(n, geometry, j)?;
    if levels.is_empty() || levels.windows(2).any(|w| !(w[1] > w[0])) || !(levels[0] > 0.0) {
        return Err(Error::invalid("truncation levels must be positive and increasing"));
    }
    let h = geometry.extent() / j as f64;
    let st = linear_stencils(eq, geometry, h, j + 1);
    let range = unknowns(geometry, j);
    let beta = eq.decay();
    let m0 = levels[0];
    let mut g: Vec<f64> = (0..=j)
        .map(|i| {
            let d = boundary_distance(geometry, i as f64 * h);
            if d <= 0.0 { m0 } else { d.powf(-beta).min(m0) }
        })
        .collect();
    let mut lu = SparseLu::new();
    let mut records: Vec<LevelRecord> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for &m in levels {
        for i in 0..=j {
            if !range.contains(&i) {
                g[i] = m;
            }
        }
        let (iterations, residual) = solve_level(eq, &st, &mut g, h, &range, &mut lu)?;
        let (min_increase, change) = match &prev {
            None => (f64::INFINITY, f64::INFINITY),
            Some(old) => {
                let min_inc = (0..=j).map(|i| g[i] - old[i]).fold(f64::INFINITY, f64::min);
                let change = (0..=j)
                    .filter(|&i| g[i] < WINDOW_FRACTION * m)
                    .map(|i| ((g[i] - old[i]) / g[i]).abs())
                    .fold(0.0, f64::max);
                (min_inc, change)
            }
        };
        records.push(LevelRecord { level: m, newton_iterations: iterations, residual, min_increase });
        prev = Some(g.clone());
        if change < LEVEL_RTOL {
            break;
        }
    }
    let m_max = records.last().map(|r| r.level).unwrap_or(m0);
    ConeSolution::from_parts(eq, geometry, h, g, m_max, records)
}

/// Wedge of opening `ω` in the `(x_1, x_2)` plane: solves
/// `g″ + ((n−2)²/4) g = ¼n(n−2) g^{(n+2)/(n−2)}` on `(0, ω)` with
/// `g = m` at both ends for each level `m`.
pub fn solve_wedge_profile(n: usize, opening: f64, j: usize, levels: &[f64]) -> Result<ConeSolution> {
    solve_levels(n, ConeGeometry::Wedge { opening }, j, levels)
}

/// Circular cone of half-aperture `θ_ap` about the last axis: solves
/// `g″ + (n−2) cot θ g′ − ((n−2)²/4) g = ¼n(n−2) g^{(n+2)/(n−2)}` on
/// `(0, θ_ap)` with `g′(0) = 0` and `g = m` at `θ_ap`.
pub fn solve_zonal_profile(n: usize, aperture: f64, j: usize, levels: &[f64]) -> Result<ConeSolution> {
    solve_levels(n, ConeGeometry::Zonal { aperture }, j, levels)
}

/// Residual of the reciprocal profile equation at node `i`, scaled by `h²`.
///
/// With `ψ = g^{−2/(n−2)}` the wedge equation becomes
/// `ψψ″ = (n/2)(ψ′² − 1) + ((n−2)/2)ψ²` and the zonal one
/// `ψψ″ + (n−2) cot θ ψψ′ = (n/2)(ψ′² − 1) − ((n−2)/2)ψ²`.
/// Returns the residual and its partial derivatives in `ψ_{i−1}, ψ_i, ψ_{i+1}`.
fn reciprocal_row(eq: Equation, geometry: ConeGeometry, h: f64, i: usize, l: f64, c: f64, r: f64) -> (f64, [f64; 3]) {
    let half_n = eq.dim() as f64 / 2.0;
    let beta = eq.decay();
    let h2 = h * h;
    match geometry {
        ConeGeometry::Wedge { .. } => {
            let d = 0.5 * (r - l);
            let res = c * (l - 2.0 * c + r) - half_n * (d * d - h2) - beta * h2 * c * c;
            let dl = c + half_n * d;
            let dc = (l - 2.0 * c + r) - 2.0 * c - 2.0 * beta * h2 * c;
            let dr = c - half_n * d;
            (res, [dl, dc, dr])
        }
        ConeGeometry::Zonal { .. } => {
            let n = eq.dim() as f64;
            if i == 0 {
                // ψ′(0) = 0 and cot θ ψ′ → ψ″ at the pole
                let lap = 2.0 * (r - c) * (n - 1.0);
                let res = c * lap + half_n * h2 + beta * h2 * c * c;
                let dc = lap - 2.0 * (n - 1.0) * c + 2.0 * beta * h2 * c;
                let dr = 2.0 * (n - 1.0) * c;
                (res, [0.0, dc, dr])
            } else {
                let t = 0.5 * (n - 2.0) * h / (i as f64 * h).tan();
                let d = 0.5 * (r - l);
                let res = c * (l - 2.0 * c + r) + t * c * (r - l) - half_n * (d * d - h2) + beta * h2 * c * c;
                let dl = c - t * c + half_n * d;
                let dc = (l - 2.0 * c + r) - 2.0 * c + t * (r - l) + 2.0 * beta * h2 * c;
                let dr = c + t * c - half_n * d;
                (res, [dl, dc, dr])
            }
        }
    }
}

/// Solves for `ψ = g^{−2/(n−2)}` directly, with `ψ = 0` on the boundary of
/// the arc, which is the untruncated limit. The result has `g = +∞` at the
/// boundary nodes and its window is the open arc.
pub fn solve_reciprocal_profile(n: usize, geometry: ConeGeometry, j: usize) -> Result<ConeSolution> {
    let eq = check_grid(n, geometry, j)?;
    let h = geometry.extent() / j as f64;
    let range = unknowns(geometry, j);
    let first = range.start;
    let mut psi: Vec<f64> = (0..=j)
        .map(|i| {
            let t = i as f64 * h;
            match geometry {
                ConeGeometry::Wedge { opening } => {
                    opening / std::f64::consts::PI * (std::f64::consts::PI * t / opening).sin()
                }
                ConeGeometry::Zonal { aperture } => {
                    2.0 * aperture / std::f64::consts::PI * (std::f64::consts::FRAC_PI_2 * (1.0 - t / aperture)).sin()
                }
            }
        })
        .collect();
    for i in 0..=j {
        if !range.contains(&i) {
            psi[i] = 0.0;
        }
    }
    let mut lu = SparseLu::new();
    let residuals = |psi: &[f64]| -> Vec<f64> {
        range
            .clone()
            .map(|i| {
                let l = if i == 0 { 0.0 } else { psi[i - 1] };
                reciprocal_row(eq, geometry, h, i, l, psi[i], psi[i + 1]).0
            })
            .collect()
    };
    // terms of size one cancel down to O(h²), so rounding sets a floor
    let tol = (NEWTON_RTOL * h * h).max(1e-14);
    let mut iterations = 0;
    let mut rnorm = f64::INFINITY;
    for iter in 0..MAX_NEWTON {
        let res = residuals(&psi);
        rnorm = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        iterations = iter;
        if rnorm <= tol {
            break;
        }
        let mut jac = Assembly::new(range.len(), 3);
        for i in range.clone() {
            let row = i - first;
            let l = if i == 0 { 0.0 } else { psi[i - 1] };
            let (_, d) = reciprocal_row(eq, geometry, h, i, l, psi[i], psi[i + 1]);
            if i > first {
                jac.add(row, row - 1, d[0]);
            }
            jac.add(row, row, d[1]);
            if i + 1 < range.end {
                jac.add(row, row + 1, d[2]);
            }
        }
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let step = lu.solve(&jac, &rhs)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = (0..=j)
                .map(|i| if range.contains(&i) { psi[i] + t * step[i - first] } else { 0.0 })
                .collect();
            let positive = range.clone().all(|i| trial[i] > 0.0);
            if positive {
                let tn = residuals(&trial).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if tn < rnorm || t < 1e-3 {
                    psi = trial;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(Error::NoConvergence("reciprocal profile line search failed".into()));
            }
        }
    }
    if !(rnorm <= tol) {
        return Err(Error::NoConvergence(format!("reciprocal profile residual {rnorm:e}")));
    }
    let g: Vec<f64> = psi.iter().map(|&p| if p > 0.0 { eq.from_reciprocal(p) } else { f64::INFINITY }).collect();
    let record = LevelRecord { level: f64::INFINITY, newton_iterations: iterations, residual: rnorm, min_increase: f64::INFINITY };
    ConeSolution::from_parts(eq, geometry, h, g, f64::INFINITY, vec![record])
}

/// Untruncated wedge profile, see [`solve_reciprocal_profile`].
pub fn solve_wedge_profile_reciprocal(n: usize, opening: f64, j: usize) -> Result<ConeSolution> {
    solve_reciprocal_profile(n, ConeGeometry::Wedge { opening }, j)
}

/// Untruncated zonal profile, see [`solve_reciprocal_profile`].
pub fn solve_zonal_profile_reciprocal(n: usize, aperture: f64, j: usize) -> Result<ConeSolution> {
    solve_reciprocal_profile(n, ConeGeometry::Zonal { aperture }, j)
}
