//! Cone solutions `u_V(x) = |x|^{−(n−2)/2} g(θ)` from the reduced problem on
//! the sphere, their evaluation in Cartesian and signed-distance
//! coordinates, and comparison of solutions on nearby cones.

mod profile;

pub use profile::{
    default_levels, solve_reciprocal_profile, solve_wedge_profile, solve_wedge_profile_reciprocal,
    solve_zonal_profile, solve_zonal_profile_reciprocal, WINDOW_FRACTION,
};

use crate::closed_forms::SolutionHandle;
use crate::equation::Equation;
use crate::error::{Error, Result};
use crate::geometry::{ConeSpec, SignVector, Vector};
use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Cross-section of the cone on which `g` lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConeGeometry {
    /// `{0 < θ < ω}` in polar coordinates of the `(x_1, x_2)` plane, times
    /// the remaining coordinates.
    Wedge { opening: f64 },
    /// Circular cone `{angle(x, e_n) < θ_ap}`.
    Zonal { aperture: f64 },
}

impl ConeGeometry {
    /// Length of the angular interval.
    pub fn extent(&self) -> f64 {
        match *self {
            ConeGeometry::Wedge { opening } => opening,
            ConeGeometry::Zonal { aperture } => aperture,
        }
    }
}

/// Per-level summary of a truncated solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    /// Boundary value `m`; infinite for the reciprocal solve.
    pub level: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    /// `min_i (g_i − g_i^{previous level})`, infinite for the first level.
    pub min_increase: f64,
}

/// Angular profile `g` on a uniform grid `θ_i = i h`, `i = 0..J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSolution {
    equation: Equation,
    geometry: ConeGeometry,
    step: f64,
    g: Vec<f64>,
    m_max: f64,
    window: (f64, f64),
    levels: Vec<LevelRecord>,
}

/// Sup statistics of [`compare_cones`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeComparison {
    /// `sup |u_1(A⁻¹x)/u_2(x) − 1|` over unit points of the second cone.
    pub sup_u: f64,
    /// `sup |f_1(d)/f_2(d) − 1|` over unit distance vectors.
    pub sup_f: f64,
    /// `‖A − I‖` (spectral).
    pub a_distance: f64,
    /// `‖N_1 − N_2‖` (Frobenius).
    pub n_distance: f64,
    pub u_samples: usize,
    pub f_samples: usize,
}

impl ConeComparison {
    pub fn u_over_a(&self) -> f64 {
        ratio(self.sup_u, self.a_distance)
    }

    pub fn f_over_n(&self) -> f64 {
        ratio(self.sup_f, self.n_distance)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

impl ConeSolution {
    pub(crate) fn from_parts(
        equation: Equation,
        geometry: ConeGeometry,
        step: f64,
        g: Vec<f64>,
        m_max: f64,
        levels: Vec<LevelRecord>,
    ) -> Result<Self> {
        let cutoff = WINDOW_FRACTION * m_max;
        let inside: Vec<usize> = (0..g.len()).filter(|&i| g[i].is_finite() && g[i] < cutoff).collect();
        let (Some(&lo), Some(&hi)) = (inside.first(), inside.last()) else {
            return Err(Error::WindowEmpty { m_max });
        };
        Ok(Self {
            equation,
            geometry,
            step,
            g,
            m_max,
            window: (lo as f64 * step, hi as f64 * step),
            levels,
        })
    }

    pub fn equation(&self) -> Equation {
        self.equation
    }

    pub fn geometry(&self) -> ConeGeometry {
        self.geometry
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn grid_size(&self) -> usize {
        self.g.len() - 1
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    pub fn m_max(&self) -> f64 {
        self.m_max
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn levels(&self) -> &[LevelRecord] {
        &self.levels
    }

    /// Smallest `g_{j+1} − g_j` over all nodes and successive levels.
    pub fn min_level_increase(&self) -> f64 {
        self.levels.iter().map(|r| r.min_increase).fold(f64::INFINITY, f64::min)
    }

    /// Same profile with a narrower evaluation window.
    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || lo < self.window.0 - 1e-12 || hi > self.window.1 + 1e-12 {
            return Err(Error::WindowEmpty { m_max: self.m_max });
        }
        self.window = (lo, hi);
        Ok(self)
    }

    /// `g(θ)`, interpolated with cubic Lagrange polynomials in
    /// `ψ = g^{−2/(n−2)}`, which is smooth up to the boundary.
    pub fn g_at(&self, theta: f64) -> Result<f64> {
        let (lo, hi) = self.window;
        let slack = 1e-12 * self.geometry.extent();
        if !(theta >= lo - slack && theta <= hi + slack) {
            return Err(Error::OutsideWindow { theta, lo, hi });
        }
        let j = self.grid_size();
        let s = theta / self.step;
        let cell = (s.floor() as isize).clamp(0, j as isize - 1) as usize;
        let start = cell.saturating_sub(1).min(j - 3);
        let eq = self.equation;
        let mut psi = 0.0;
        for a in start..start + 4 {
            let mut w = 1.0;
            for b in start..start + 4 {
                if a != b {
                    w *= (s - b as f64) / (a as f64 - b as f64);
                }
            }
            psi += w * eq.to_reciprocal(self.g[a]);
        }
        if !(psi > 0.0) {
            return Err(Error::OutsideWindow { theta, lo, hi });
        }
        Ok(eq.from_reciprocal(psi))
    }

    /// Radius and angle of `x` in the coordinates the profile is written in.
    pub fn polar(&self, x: &Vector) -> Result<(f64, f64)> {
        if x.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: x.len() });
        }
        match self.geometry {
            ConeGeometry::Wedge { .. } => {
                let r = x[0].hypot(x[1]);
                let mut t = x[1].atan2(x[0]);
                if t < 0.0 {
                    t += 2.0 * PI;
                }
                Ok((r, t))
            }
            ConeGeometry::Zonal { .. } => {
                let r = x.norm();
                let c = (x[x.len() - 1] / r).clamp(-1.0, 1.0);
                Ok((r, c.acos()))
            }
        }
    }

    /// `u_V(x) = r^{−(n−2)/2} g(θ)`.
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        let (r, theta) = self.polar(x)?;
        if !(r > 0.0) {
            return Err(Error::OutsideDomain);
        }
        Ok(r.powf(-self.equation.decay()) * self.g_at(theta)?)
    }

    /// The cone in the `(x_1, x_2)` plane: edge 1 along `+x_1`, edge 2 at
    /// angle `ω`, inner normals `ν_1 = e_2`, `ν_2 = (sin ω, −cos ω)`. A wedge
    /// of opening `π` is the half-plane with the single normal `e_2`.
    pub fn cone_spec(&self) -> Result<ConeSpec> {
        match self.geometry {
            ConeGeometry::Wedge { opening } => wedge_cone(opening),
            ConeGeometry::Zonal { .. } => {
                Err(Error::invalid("a circular cone is not bounded by finitely many planes"))
            }
        }
    }

    /// `f_V(d_1, …, d_k)`: the solution at the point of the plane whose
    /// signed distances to the bounding lines are `d`.
    pub fn eval_f(&self, d: &[f64]) -> Result<f64> {
        let cone = self.cone_spec()?;
        if d.len() != cone.k() {
            return Err(Error::DimensionMismatch { expected: cone.k(), got: d.len() });
        }
        let x = cone.point_from_distances(&Vector::from_column_slice(d))?;
        match cone.membership(&x) {
            Ok(true) => self.eval(&x),
            _ => Err(Error::InconsistentDistances),
        }
    }

    /// Evaluation handle on points of `R^dim`.
    pub fn to_handle(&self, dim: usize) -> SolutionHandle {
        let sol = self.clone();
        let tag = format!("cone solution ({:?}, n = {})", self.geometry, self.equation.dim());
        SolutionHandle::from_fn(self.equation, dim, tag, move |x| sol.eval(x))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("cone solutions serialize")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Planar wedge of opening `ω ∈ (0, 2π)` in the canonical frame of
/// [`ConeSolution::cone_spec`].
pub fn wedge_cone(opening: f64) -> Result<ConeSpec> {
    if !(opening > 0.0 && opening < 2.0 * PI) {
        return Err(Error::BadAngle(opening));
    }
    let e2 = Vector::from_vec(vec![0.0, 1.0]);
    if (opening - PI).abs() < 1e-12 {
        return ConeSpec::new(vec![e2], [SignVector::all_positive(1)], Vector::zeros(2));
    }
    let nu2 = Vector::from_vec(vec![opening.sin(), -opening.cos()]);
    let components: Vec<SignVector> = if opening < PI {
        vec![SignVector::all_positive(2)]
    } else {
        [[1, 1], [1, -1], [-1, 1]].iter().map(|s| SignVector::new(s.to_vec()).expect("±1")).collect()
    };
    ConeSpec::new(vec![e2, nu2], components, Vector::zeros(2))
}

/// Linear map of the plane fixing `e_1` and sending the edge at angle `ω_1`
/// to the edge at angle `ω_2`, so it maps the first wedge onto the second.
pub fn wedge_map(opening1: f64, opening2: f64) -> DMatrix<f64> {
    let from = Matrix2::new(1.0, opening1.cos(), 0.0, opening1.sin());
    let to = Matrix2::new(1.0, opening2.cos(), 0.0, opening2.sin());
    let a = to * from.try_inverse().expect("opening is not a multiple of π");
    DMatrix::from_column_slice(2, 2, a.as_slice())
}

/// `u_V(x)`; see [`ConeSolution::eval`].
pub fn eval_cone_solution(sol: &ConeSolution, x: &Vector) -> Result<f64> {
    sol.eval(x)
}

/// `f_V(d)`; see [`ConeSolution::eval_f`].
pub fn eval_f_v(sol: &ConeSolution, d: &[f64]) -> Result<f64> {
    sol.eval_f(d)
}

/// Compares solutions on two planar wedges related by the linear map `a`
/// (first cone to second) over `samples` directions.
pub fn compare_cones(sol1: &ConeSolution, sol2: &ConeSolution, a: &DMatrix<f64>, samples: usize) -> Result<ConeComparison> {
    let c1 = sol1.cone_spec()?;
    let c2 = sol2.cone_spec()?;
    if a.nrows() != 2 || a.ncols() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: a.nrows() });
    }
    if c1.k() != c2.k() {
        return Err(Error::invalid("cones have different numbers of faces"));
    }
    let a_inv = a.clone().try_inverse().ok_or_else(|| Error::invalid("singular cone map"))?;
    let (lo, hi) = sol2.window();
    let mut sup_u: f64 = 0.0;
    let mut u_samples = 0;
    for s in 0..samples {
        let t = lo + (hi - lo) * (s as f64 + 0.5) / samples as f64;
        let x = Vector::from_vec(vec![t.cos(), t.sin()]);
        let y = &a_inv * &x;
        if let (Ok(u1), Ok(u2)) = (sol1.eval(&y), sol2.eval(&x)) {
            sup_u = sup_u.max((u1 / u2 - 1.0).abs());
            u_samples += 1;
        }
    }
    let mut sup_f: f64 = 0.0;
    let mut f_samples = 0;
    for s in 0..samples {
        let phi = 2.0 * PI * (s as f64 + 0.5) / samples as f64;
        let d: Vec<f64> = if c1.k() == 1 { vec![phi.sin().abs()] } else { vec![phi.cos(), phi.sin()] };
        if let (Ok(f1), Ok(f2)) = (sol1.eval_f(&d), sol2.eval_f(&d)) {
            sup_f = sup_f.max((f1 / f2 - 1.0).abs());
            f_samples += 1;
        }
    }
    let id = DMatrix::<f64>::identity(2, 2);
    let a_distance = (a - id).singular_values().max();
    let n_distance = (c1.normal_matrix() - c2.normal_matrix()).norm();
    Ok(ConeComparison { sup_u, sup_f, a_distance, n_distance, u_samples, f_samples })
}
