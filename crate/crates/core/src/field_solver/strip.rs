//! Corner domains mapped conformally onto a strip `{0 < Im ζ < ω}`.
//!
//! With `z = F(ζ)` conformal and `w = u^{−2/(n−2)}`, the quotient
//! `W = w/|F′|` satisfies
//! `W(ΔW + 2∇ℓ·∇W + W|∇ℓ|²) = (n/2)(|∇W + W∇ℓ|² − 1)` with
//! `ℓ = log|F′|`, and stays bounded and positive at corners sent to
//! `Re ζ = ±∞`, where it tends to the reciprocal cone profile.

use super::domain::Domain2D;
use crate::closed_forms::SolutionHandle;
use crate::cone_solver::{solve_wedge_profile_reciprocal, ConeSolution};
use crate::equation::Equation;
use crate::error::{Error, Result};
use crate::linalg::{Assembly, SparseLu};
use crate::ode::MAX_NEWTON;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Conformal parametrisation of a corner domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StripMap {
    /// `F(ζ) = e^ζ`: the sector `{0 < arg z < opening, |z| < 1}` for
    /// `Re ζ < 0`.
    Sector { opening: f64 },
    /// `F(ζ) = (p + q e^ζ)/(1 + e^ζ)`: the region left of the segment
    /// `p → q` and bounded by a circular arc through `p` and `q` meeting the
    /// segment at angle `opening`. `Im ζ = 0` is the segment.
    Lens { corner: [f64; 2], far: [f64; 2], opening: f64 },
}

impl StripMap {
    pub fn opening(&self) -> f64 {
        match *self {
            StripMap::Sector { opening } | StripMap::Lens { opening, .. } => opening,
        }
    }

    /// The corner sent to `Re ζ = −∞`.
    pub fn corner(&self) -> [f64; 2] {
        match *self {
            StripMap::Sector { .. } => [0.0, 0.0],
            StripMap::Lens { corner, .. } => corner,
        }
    }

    pub fn to_plane(&self, zeta: Complex64) -> Complex64 {
        match *self {
            StripMap::Sector { .. } => zeta.exp(),
            StripMap::Lens { corner, far, .. } => {
                let (p, q) = (c(corner), c(far));
                let e = zeta.exp();
                (p + q * e) / (1.0 + e)
            }
        }
    }

    pub fn to_strip(&self, z: Complex64) -> Result<Complex64> {
        let zeta = match *self {
            StripMap::Sector { .. } => {
                if z.norm() == 0.0 {
                    return Err(Error::Pole);
                }
                let mut zeta = z.ln();
                if zeta.im < 0.0 {
                    zeta.im += std::f64::consts::TAU;
                }
                zeta
            }
            StripMap::Lens { corner, far, .. } => {
                let (p, q) = (c(corner), c(far));
                if (q - z).norm() == 0.0 || (z - p).norm() == 0.0 {
                    return Err(Error::Pole);
                }
                ((z - p) / (q - z)).ln()
            }
        };
        Ok(zeta)
    }

    /// `|F′(ζ)|`.
    pub fn stretch(&self, zeta: Complex64) -> f64 {
        match *self {
            StripMap::Sector { .. } => zeta.re.exp(),
            StripMap::Lens { corner, far, .. } => {
                let (p, q) = (c(corner), c(far));
                let e = zeta.exp();
                ((q - p) * e / ((1.0 + e) * (1.0 + e))).norm()
            }
        }
    }

    /// `∇ log|F′|` in `(Re ζ, Im ζ)`, from `F″/F′ = ∂_ρ ℓ − i ∂_θ ℓ`.
    fn log_stretch_gradient(&self, zeta: Complex64) -> [f64; 2] {
        let g = match *self {
            StripMap::Sector { .. } => Complex64::new(1.0, 0.0),
            StripMap::Lens { .. } => {
                let e = zeta.exp();
                (1.0 - e) / (1.0 + e)
            }
        };
        [g.re, -g.im]
    }
}

fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Grid options for [`solve_strip`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripOptions {
    /// Intervals across the strip.
    pub across: usize,
    /// `Re ζ` range; the ends carry the cone profile except the sector's
    /// outer arc at `Re ζ = 0`.
    pub re_range: [f64; 2],
}

/// `W` on the grid `ζ = (ρ_0 + i h) + i (k h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripField {
    pub equation: Equation,
    pub map: StripMap,
    pub domain: Domain2D,
    pub start: f64,
    pub step: f64,
    pub shape: [usize; 2],
    /// `values[i * (shape[1] + 1) + k]`, boundary nodes included.
    pub values: Vec<f64>,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// Solves the untruncated problem on the strip image of `domain`.
///
/// The cone profile on the same angular grid is used at the corner ends,
/// so the discrete tangent-cone solution is reproduced exactly where the
/// domain is a cone.
pub fn solve_strip(n: usize, map: StripMap, domain: &Domain2D, options: StripOptions) -> Result<StripField> {
    let eq = Equation::new(n)?;
    let omega = map.opening();
    let nt = options.across;
    if nt < 8 {
        return Err(Error::MaskTooCoarse(format!("{nt} intervals across the strip")));
    }
    let h = omega / nt as f64;
    let [lo, hi] = options.re_range;
    if !(hi > lo) {
        return Err(Error::invalid(format!("empty range {lo}..{hi}")));
    }
    if let StripMap::Sector { .. } = map {
        if hi > 0.0 {
            return Err(Error::invalid("the sector strip ends at Re ζ = 0"));
        }
    }
    let nr = ((hi - lo) / h).round() as usize;
    let start = hi - nr as f64 * h;
    let profile = solve_wedge_profile_reciprocal(n, omega, nt)?;
    let psi: Vec<f64> = profile.values().iter().map(|g| eq.to_reciprocal(*g)).collect();
    let rows = nt + 1;
    let idx = |i: usize, k: usize| i * rows + k;
    let zeta = |i: usize, k: usize| Complex64::new(start + i as f64 * h, k as f64 * h);
    let mut w = vec![0.0; (nr + 1) * rows];
    for k in 0..=nt {
        w[idx(0, k)] = psi[k];
        w[idx(nr, k)] = match map {
            StripMap::Sector { .. } => 0.0,
            StripMap::Lens { .. } => psi[k],
        };
    }
    for i in 1..nr {
        for k in 1..nt {
            let z = zeta(i, k);
            let d = domain.signed_distance(to_xy(map.to_plane(z))).max(0.0);
            w[idx(i, k)] = psi[k].min(d / map.stretch(z)).max(1e-3 * psi[k]);
        }
    }
    let unknown = |i: usize, k: usize| (i - 1) * (nt - 1) + (k - 1);
    let count = (nr - 1) * (nt - 1);
    let grads: Vec<[f64; 2]> = (0..(nr + 1) * rows).map(|q| map.log_stretch_gradient(zeta(q / rows, q % rows))).collect();
    let half_n = n as f64 / 2.0;
    let residual = |w: &[f64], mut jac: Option<&mut Assembly>| -> Vec<f64> {
        let mut out = vec![0.0; count];
        for i in 1..nr {
            for k in 1..nt {
                let [lr, lt] = grads[idx(i, k)];
                let c0 = w[idx(i, k)];
                let (we, ww, wn, ws) = (w[idx(i + 1, k)], w[idx(i - 1, k)], w[idx(i, k + 1)], w[idx(i, k - 1)]);
                let lap = we + ww + wn + ws - 4.0 * c0;
                let dr = 0.5 * h * (we - ww) / h;
                let dt = 0.5 * h * (wn - ws) / h;
                // h-scaled: lap ~ h²ΔW, dr ~ h ∂ρW
                let gr = dr + h * c0 * lr;
                let gt = dt + h * c0 * lt;
                let ll = h * h * (lr * lr + lt * lt);
                let adv = 2.0 * h * (lr * dr + lt * dt);
                let r = c0 * (lap + adv + c0 * ll) - half_n * (gr * gr + gt * gt - h * h);
                let row = unknown(i, k);
                out[row] = r;
                if let Some(jac) = jac.as_deref_mut() {
                    let diag = lap + adv + 2.0 * c0 * ll - 4.0 * c0 - 2.0 * half_n * (gr * h * lr + gt * h * lt);
                    jac.add(row, row, diag);
                    let nb = [
                        (i + 1, k, c0 * (1.0 + h * lr) - half_n * gr),
                        (i - 1, k, c0 * (1.0 - h * lr) + half_n * gr),
                        (i, k + 1, c0 * (1.0 + h * lt) - half_n * gt),
                        (i, k - 1, c0 * (1.0 - h * lt) + half_n * gt),
                    ];
                    for (a, b, v) in nb {
                        if a >= 1 && a < nr && b >= 1 && b < nt {
                            jac.add(row, unknown(a, b), v);
                        }
                    }
                }
            }
        }
        out
    };
    let tol = 1e-13;
    let mut lu = SparseLu::new();
    let mut rnorm = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..MAX_NEWTON {
        let mut jac = Assembly::new(count, 5);
        let res = residual(&w, Some(&mut jac));
        rnorm = res.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        iterations = iter;
        if rnorm <= tol {
            break;
        }
        let rhs: Vec<f64> = res.iter().map(|x| -x).collect();
        let step = lu.solve(&jac, &rhs)?;
        let mut t = 1.0;
        loop {
            let mut trial = w.clone();
            let mut positive = true;
            for i in 1..nr {
                for k in 1..nt {
                    let v = w[idx(i, k)] + t * step[unknown(i, k)];
                    positive &= v > 0.1 * w[idx(i, k)];
                    trial[idx(i, k)] = v;
                }
            }
            if positive {
                let tn = residual(&trial, None).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if tn < rnorm {
                    w = trial;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-4 {
                return Err(Error::NoConvergence(format!("strip line search failed at residual {rnorm:e}")));
            }
        }
    }
    if !(rnorm <= tol) {
        return Err(Error::NoConvergence(format!("strip residual {rnorm:e} after {MAX_NEWTON} iterations")));
    }
    Ok(StripField {
        equation: eq,
        map,
        domain: domain.clone(),
        start,
        step: h,
        shape: [nr, nt],
        values: w,
        newton_iterations: iterations,
        residual: rnorm,
    })
}

fn to_xy(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl StripField {
    /// `W` at a strip point by bicubic interpolation.
    pub fn quotient(&self, zeta: Complex64) -> Result<f64> {
        let [nr, nt] = self.shape;
        let s = [(zeta.re - self.start) / self.step, zeta.im / self.step];
        if !(s[0] >= 0.0 && s[0] <= nr as f64 && s[1] >= 0.0 && s[1] <= nt as f64) {
            return Err(Error::OutsideDomain);
        }
        let base = |v: f64, top: usize| ((v.floor() as isize) - 1).clamp(0, top as isize - 3) as usize;
        let (i0, k0) = (base(s[0], nr), base(s[1], nt));
        let mut acc = 0.0;
        for a in 0..4 {
            let la = lagrange(s[0] - i0 as f64, a);
            for b in 0..4 {
                acc += la * lagrange(s[1] - k0 as f64, b) * self.values[(i0 + a) * (nt + 1) + k0 + b];
            }
        }
        Ok(acc)
    }

    /// `u` at a point of the physical domain.
    pub fn eval(&self, x: [f64; 2]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain);
        }
        let zeta = self.map.to_strip(c(x))?;
        let q = self.quotient(zeta)?;
        if !(q > 0.0) {
            return Err(Error::OutsideDomain);
        }
        Ok(self.equation.from_reciprocal(self.map.stretch(zeta) * q))
    }

    /// Discrete tangent-cone profile on the same angular grid, in the
    /// canonical wedge frame.
    pub fn cone_profile(&self) -> Result<ConeSolution> {
        solve_wedge_profile_reciprocal(self.equation.dim(), self.map.opening(), self.shape[1])
    }

    pub fn to_handle(&self) -> SolutionHandle {
        let field = self.clone();
        let tag = format!("strip field (n = {}, {:?})", self.equation.dim(), self.map);
        SolutionHandle::from_fn(self.equation, 2, tag, move |x| field.eval([x[0], x[1]]))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn lagrange(t: f64, a: usize) -> f64 {
    (0..4).filter(|&b| b != a).map(|b| (t - b as f64) / (a as f64 - b as f64)).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use std::f64::consts::FRAC_PI_3;

    fn lens() -> StripMap {
        StripMap::Lens { corner: [0.0, 0.0], far: [1.5, 3f64.sqrt() / 2.0], opening: 2.0 * FRAC_PI_3 }
    }

    #[test]
    fn lens_map_inverts_and_matches_the_domain() {
        let m = lens();
        let dom = Domain2D::line_arc_lune().unwrap();
        for (re, im) in [(-3.0, 0.5), (0.0, 1.0), (2.5, 2.0)] {
            let zeta = Complex64::new(re, im);
            let z = m.to_plane(zeta);
            assert!((m.to_strip(z).unwrap() - zeta).norm() < 1e-12);
            assert!(dom.contains([z.re, z.im]));
        }
        for re in [-2.0, 0.3, 1.7] {
            let edge = m.to_plane(Complex64::new(re, 2.0 * FRAC_PI_3));
            assert!(dom.signed_distance([edge.re, edge.im]).abs() < 1e-12);
        }
    }

    #[test]
    fn stretch_gradient_matches_differences() {
        for m in [lens(), StripMap::Sector { opening: 2.0 }] {
            let zeta = Complex64::new(0.4, 0.7);
            let e = 1e-6;
            let l = |z: Complex64| m.stretch(z).ln();
            let fd = [
                (l(zeta + e) - l(zeta - e)) / (2.0 * e),
                (l(zeta + Complex64::i() * e) - l(zeta - Complex64::i() * e)) / (2.0 * e),
            ];
            let g = m.log_stretch_gradient(zeta);
            assert!((g[0] - fd[0]).abs() < 1e-8 && (g[1] - fd[1]).abs() < 1e-8, "{g:?} vs {fd:?}");
        }
    }

    #[test]
    fn sector_is_close_to_its_cone_near_the_corner() {
        let om = 2.0 * FRAC_PI_3;
        let dom = Domain2D::sector(om, 1.0).unwrap();
        let f = solve_strip(3, StripMap::Sector { opening: om }, &dom, StripOptions { across: 64, re_range: [-6.0, 0.0] })
            .unwrap();
        let cone = f.cone_profile().unwrap();
        let x = [0.05 * (om / 2.0).cos(), 0.05 * (om / 2.0).sin()];
        let ratio = f.eval(x).unwrap() / cone.eval(&DVector::from_vec(x.to_vec())).unwrap();
        assert!((ratio - 1.0).abs() < 1e-4, "{ratio}");
        assert!(f.eval([0.5, -0.1]).is_err());
    }

    #[test]
    fn half_disk_matches_the_flat_edge_near_its_middle() {
        let dom = Domain2D::sector(std::f64::consts::PI, 1.0).unwrap();
        let f = solve_strip(3, StripMap::Sector { opening: std::f64::consts::PI }, &dom, StripOptions { across: 64, re_range: [-6.0, 0.0] })
            .unwrap();
        let d: f64 = 0.01;
        let u = f.eval([0.3, d]).unwrap();
        assert!((d.sqrt() * u - 1.0).abs() < 5e-2, "{}", d.sqrt() * u);
    }
}
