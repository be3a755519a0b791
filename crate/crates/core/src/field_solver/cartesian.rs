//! Five-point finite differences on a uniform Cartesian grid with
//! Shortley–Weller arms at the boundary.

use super::domain::Domain2D;
use super::{extrapolate_truncation, Extrapolated};
use crate::closed_forms::SolutionHandle;
use crate::cone_solver::LevelRecord;
use crate::equation::Equation;
use crate::error::{Error, Result};
use crate::linalg::{Assembly, SparseLu};
use crate::ode::{MAX_NEWTON, NEWTON_RTOL};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Nodes closer than this many steps to `∂Ω` are treated as boundary.
const SNAP: f64 = 1e-3;

/// Role of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Outside,
    Interior,
    /// Inside, with at least one stencil arm cut by the boundary.
    NearBoundary,
}

impl NodeKind {
    pub fn is_inside(self) -> bool {
        self != NodeKind::Outside
    }

    fn code(self) -> u8 {
        match self {
            NodeKind::Outside => 0,
            NodeKind::Interior => 1,
            NodeKind::NearBoundary => 2,
        }
    }
}

/// Unknown used for the nonlinear solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// `u` itself with `u = m` on the boundary.
    #[default]
    Direct,
    /// `w = u^{−2/(n−2)}` with `w = m^{−2/(n−2)}` on the boundary; an
    /// infinite level gives `w = 0`, the untruncated problem.
    Reciprocal,
}

/// Options for [`solve_cross_section`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    #[serde(default)]
    pub formulation: Formulation,
    /// Increasing boundary values; the reciprocal form accepts a final
    /// infinite level.
    pub levels: Vec<f64>,
    /// Points at which the truncation limit is estimated.
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
}

/// Solution of one level on the grid `origin + (i h, j h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub equation: Equation,
    pub domain: Domain2D,
    pub origin: [f64; 2],
    pub step: f64,
    pub shape: [usize; 2],
    /// Boundary value; infinite for the untruncated reciprocal solve.
    pub level: f64,
    pub mask: Vec<NodeKind>,
    /// `u` at inside nodes, zero elsewhere.
    pub values: Vec<f64>,
}

/// Diagnostics of a [`solve_cross_section`] run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub formulation: Formulation,
    pub step: f64,
    pub unknowns: usize,
    pub tolerance: f64,
    pub levels: Vec<LevelRecord>,
    pub probes: Vec<[f64; 2]>,
    /// Geometric-tail limits over the finite levels at each probe; empty
    /// with fewer than three finite levels.
    pub truncation: Vec<Extrapolated>,
}

impl SolveReport {
    pub fn min_level_increase(&self) -> f64 {
        self.levels.iter().map(|r| r.min_increase).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy)]
struct Arm {
    len: f64,
    /// Unknown index of the neighbour, or `None` when the arm ends on `∂Ω`.
    next: Option<usize>,
}

struct Grid {
    origin: [f64; 2],
    h: f64,
    shape: [usize; 2],
    mask: Vec<NodeKind>,
    /// Node index of each unknown.
    nodes: Vec<usize>,
    /// Arms in the order −x, +x, −y, +y.
    arms: Vec<[Arm; 4]>,
}

const DIRS: [[f64; 2]; 4] = [[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]];

impl Grid {
    fn build(domain: &Domain2D, h: f64) -> Result<Self> {
        let [x0, x1, y0, y1] = domain.bbox;
        let nx = ((x1 - x0) / h).round() as usize + 1;
        let ny = ((y1 - y0) / h).round() as usize + 1;
        let origin = [x0, y0];
        let pos = |i: usize, j: usize| [x0 + i as f64 * h, y0 + j as f64 * h];
        let mut index = vec![usize::MAX; nx * ny];
        let mut nodes = Vec::new();
        let mut deepest = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                let d = domain.signed_distance(pos(i, j));
                deepest = deepest.max(d);
                if d > SNAP * h {
                    index[j * nx + i] = nodes.len();
                    nodes.push(j * nx + i);
                }
            }
        }
        if deepest < 4.0 * h {
            return Err(Error::MaskTooCoarse(format!(
                "inscribed radius {deepest:.3e} is below 4 steps of {h:.3e}"
            )));
        }
        let mut mask = vec![NodeKind::Outside; nx * ny];
        let mut arms = Vec::with_capacity(nodes.len());
        for &k in &nodes {
            let (i, j) = (k % nx, k / nx);
            let x = pos(i, j);
            let mut a = [Arm { len: h, next: None }; 4];
            let mut cut = false;
            for (s, dir) in DIRS.iter().enumerate() {
                let (ni, nj) = (i as isize + dir[0] as isize, j as isize + dir[1] as isize);
                let inside = ni >= 0 && nj >= 0 && (ni as usize) < nx && (nj as usize) < ny;
                let nk = if inside { nj as usize * nx + ni as usize } else { usize::MAX };
                if inside && index[nk] != usize::MAX {
                    a[s] = Arm { len: h, next: Some(index[nk]) };
                } else {
                    let t = domain.exit_distance(x, *dir).unwrap_or(h).min(h);
                    a[s] = Arm { len: t.max(SNAP * h), next: None };
                    cut = true;
                }
            }
            mask[k] = if cut { NodeKind::NearBoundary } else { NodeKind::Interior };
            arms.push(a);
        }
        Ok(Self { origin, h, shape: [nx, ny], mask, nodes, arms })
    }
}

/// Second and first difference weights `(left, centre, right)` for unequal
/// arms `a` (left) and `b` (right).
fn weights(a: f64, b: f64) -> ([f64; 3], [f64; 3]) {
    let s = a + b;
    let d2 = [2.0 / (a * s), -2.0 / (a * b), 2.0 / (b * s)];
    let d1 = [-b / (a * s), (b - a) / (a * b), a / (b * s)];
    (d2, d1)
}

fn neighbour(arm: Arm, v: &[f64], boundary: f64) -> f64 {
    arm.next.map_or(boundary, |k| v[k])
}

/// `h²(Δu − c u^p)` and its Jacobian row for the direct form.
fn direct_row(eq: Equation, grid: &Grid, v: &[f64], m: f64, k: usize, jac: Option<&mut Assembly>) -> f64 {
    let h2 = grid.h * grid.h;
    let a = &grid.arms[k];
    let mut lap = 0.0;
    let mut diag = 0.0;
    let mut off = [0.0; 4];
    for axis in 0..2 {
        let (l, r) = (a[2 * axis], a[2 * axis + 1]);
        let (d2, _) = weights(l.len, r.len);
        lap += d2[0] * neighbour(l, v, m) + d2[1] * v[k] + d2[2] * neighbour(r, v, m);
        diag += d2[1];
        off[2 * axis] = d2[0];
        off[2 * axis + 1] = d2[2];
    }
    let u = v[k];
    if let Some(jac) = jac {
        jac.add(k, k, h2 * (diag - eq.source_derivative(u)));
        for s in 0..4 {
            if let Some(nk) = a[s].next {
                jac.add(k, nk, h2 * off[s]);
            }
        }
    }
    h2 * (lap - eq.source(u))
}

/// `h²(w Δw − (n/2)(|∇w|² − 1))` and its Jacobian row for the reciprocal
/// form.
fn reciprocal_row(eq: Equation, grid: &Grid, v: &[f64], eps: f64, k: usize, jac: Option<&mut Assembly>) -> f64 {
    let h2 = grid.h * grid.h;
    let half_n = eq.dim() as f64 / 2.0;
    let a = &grid.arms[k];
    let w = v[k];
    let mut lap = 0.0;
    let mut grad = [0.0; 2];
    let mut d2s = [[0.0; 3]; 2];
    let mut d1s = [[0.0; 3]; 2];
    for axis in 0..2 {
        let (l, r) = (a[2 * axis], a[2 * axis + 1]);
        let (d2, d1) = weights(l.len, r.len);
        let (wl, wr) = (neighbour(l, v, eps), neighbour(r, v, eps));
        lap += d2[0] * wl + d2[1] * w + d2[2] * wr;
        grad[axis] = d1[0] * wl + d1[1] * w + d1[2] * wr;
        d2s[axis] = d2;
        d1s[axis] = d1;
    }
    if let Some(jac) = jac {
        let mut diag = lap;
        for axis in 0..2 {
            diag += w * d2s[axis][1] - 2.0 * half_n * grad[axis] * d1s[axis][1];
            for (side, arm) in [(0, a[2 * axis]), (2, a[2 * axis + 1])] {
                if let Some(nk) = arm.next {
                    let dv = w * d2s[axis][side] - 2.0 * half_n * grad[axis] * d1s[axis][side];
                    jac.add(k, nk, h2 * dv);
                }
            }
        }
        jac.add(k, k, h2 * diag);
    }
    h2 * (w * lap - half_n * (grad[0] * grad[0] + grad[1] * grad[1] - 1.0))
}

struct Newton<'a> {
    eq: Equation,
    grid: &'a Grid,
    formulation: Formulation,
    lu: SparseLu,
}

impl Newton<'_> {
    fn residual(&self, v: &[f64], bc: f64, jac: Option<&mut Assembly>) -> Vec<f64> {
        let row = match self.formulation {
            Formulation::Direct => direct_row,
            Formulation::Reciprocal => reciprocal_row,
        };
        let mut out = vec![0.0; v.len()];
        match jac {
            Some(jac) => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = row(self.eq, self.grid, v, bc, k, Some(&mut *jac));
                }
            }
            None => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = row(self.eq, self.grid, v, bc, k, None);
                }
            }
        }
        out
    }

    fn tolerance(&self, v: &[f64]) -> f64 {
        match self.formulation {
            Formulation::Direct => NEWTON_RTOL * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(*x))),
            // order-one terms cancel to O(h²), so rounding sets a floor
            Formulation::Reciprocal => (NEWTON_RTOL * self.grid.h * self.grid.h).max(1e-13),
        }
    }

    /// Newton with backtracking that keeps the unknown above a tenth of its
    /// current value; the direct form falls back to a Picard step.
    fn solve(&mut self, v: &mut Vec<f64>, bc: f64) -> Result<(usize, f64)> {
        let count = v.len();
        for iter in 0..MAX_NEWTON {
            let mut jac = Assembly::new(count, 5);
            let res = self.residual(v, bc, Some(&mut jac));
            let rnorm = res.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if rnorm <= self.tolerance(v) {
                return Ok((iter, rnorm));
            }
            let rhs: Vec<f64> = res.iter().map(|x| -x).collect();
            let step = self.lu.solve(&jac, &rhs)?;
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-4 {
                let trial: Vec<f64> = v.iter().zip(&step).map(|(x, s)| x + t * s).collect();
                if trial.iter().zip(v.iter()).all(|(a, b)| *a > 0.1 * b) {
                    let tn = self.residual(&trial, bc, None).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    if tn < rnorm {
                        *v = trial;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted {
                continue;
            }
            if self.formulation == Formulation::Reciprocal {
                return Err(Error::NoConvergence("line search failed for the reciprocal form".into()));
            }
            *v = self.picard(v, bc)?;
        }
        Err(Error::NoConvergence(format!("Newton did not converge in {MAX_NEWTON} iterations")))
    }

    /// `(Δ − c u_old^{p−1}) u_new = 0` with `u = m` on the boundary.
    fn picard(&mut self, v: &[f64], m: f64) -> Result<Vec<f64>> {
        let c = self.eq.coefficient();
        let p = self.eq.power();
        let mut lin = Assembly::new(v.len(), 5);
        let mut rhs = vec![0.0; v.len()];
        for (k, a) in self.grid.arms.iter().enumerate() {
            let mut diag = -c * v[k].powf(p - 1.0);
            for axis in 0..2 {
                let (l, r) = (a[2 * axis], a[2 * axis + 1]);
                let (d2, _) = weights(l.len, r.len);
                diag += d2[1];
                for (w, arm) in [(d2[0], l), (d2[2], r)] {
                    match arm.next {
                        Some(nk) => lin.add(k, nk, w),
                        None => rhs[k] -= w * m,
                    }
                }
            }
            lin.add(k, k, diag);
        }
        let next = self.lu.solve(&lin, &rhs)?;
        if next.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::NoConvergence("Picard step left the positive cone".into()));
        }
        Ok(next)
    }
}

/// Solves `Δ₂u = ¼n(n−2)u^{(n+2)/(n−2)}` on `domain` with step `h` for
/// each truncation level, returning one field per level.
///
/// Fails with [`Error::MaskTooCoarse`] unless a disk of radius `4h` fits
/// around some node.
pub fn solve_cross_section(
    n: usize,
    domain: &Domain2D,
    h: f64,
    options: &SolveOptions,
) -> Result<(Vec<ScalarField>, SolveReport)> {
    let eq = Equation::new(n)?;
    let levels = &options.levels;
    if levels.is_empty() || !(levels[0] > 0.0) || levels.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("truncation levels must be positive and increasing"));
    }
    if options.formulation == Formulation::Direct && levels.iter().any(|m| !m.is_finite()) {
        return Err(Error::invalid("the direct form needs finite levels"));
    }
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step {h} must be positive")));
    }
    let grid = Grid::build(domain, h)?;
    let mut newton = Newton { eq, grid: &grid, formulation: options.formulation, lu: SparseLu::new() };
    let beta = eq.decay();
    let dist: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&k| {
            let (i, j) = (k % grid.shape[0], k / grid.shape[0]);
            domain.signed_distance([grid.origin[0] + i as f64 * h, grid.origin[1] + j as f64 * h])
        })
        .collect();
    let mut v: Vec<f64> = match options.formulation {
        Formulation::Direct => dist.iter().map(|d| d.powf(-beta).min(levels[0])).collect(),
        Formulation::Reciprocal => {
            let eps = eq.to_reciprocal(levels[0]);
            dist.iter().map(|d| d + eps).collect()
        }
    };
    let mut fields = Vec::with_capacity(levels.len());
    let mut records = Vec::with_capacity(levels.len());
    let mut previous: Option<Vec<f64>> = None;
    let mut tolerance = 0.0f64;
    for &m in levels {
        let bc = match options.formulation {
            Formulation::Direct => m,
            Formulation::Reciprocal => eq.to_reciprocal(m),
        };
        let (iterations, residual) = newton.solve(&mut v, bc)?;
        tolerance = tolerance.max(newton.tolerance(&v));
        let u: Vec<f64> = match options.formulation {
            Formulation::Direct => v.clone(),
            Formulation::Reciprocal => v.iter().map(|w| eq.from_reciprocal(*w)).collect(),
        };
        let min_increase = previous
            .as_ref()
            .map_or(f64::INFINITY, |old| u.iter().zip(old).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min));
        records.push(LevelRecord { level: m, newton_iterations: iterations, residual, min_increase });
        let mut values = vec![0.0; grid.mask.len()];
        for (x, &k) in u.iter().zip(&grid.nodes) {
            values[k] = *x;
        }
        fields.push(ScalarField {
            equation: eq,
            domain: domain.clone(),
            origin: grid.origin,
            step: h,
            shape: grid.shape,
            level: m,
            mask: grid.mask.clone(),
            values,
        });
        previous = Some(u);
    }
    let finite: Vec<&ScalarField> = fields.iter().filter(|f| f.level.is_finite()).collect();
    let truncation = if finite.len() >= 3 && !options.probes.is_empty() {
        let seq = finite
            .iter()
            .map(|f| options.probes.iter().map(|p| f.eval(*p)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        extrapolate_truncation(&seq)?
    } else {
        Vec::new()
    };
    let report = SolveReport {
        formulation: options.formulation,
        step: h,
        unknowns: grid.nodes.len(),
        tolerance,
        levels: records,
        probes: options.probes.clone(),
        truncation,
    };
    Ok((fields, report))
}

impl ScalarField {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.shape[0] + i
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.step, self.origin[1] + j as f64 * self.step]
    }

    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        self.mask[self.index(i, j)]
    }

    /// Value at an inside node.
    pub fn node_value(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.shape[0] && j < self.shape[1] && self.kind(i, j).is_inside()).then(|| self.values[self.index(i, j)])
    }

    /// Grid indices of the node nearest to `x`.
    pub fn nearest_node(&self, x: [f64; 2]) -> Option<(usize, usize)> {
        let i = ((x[0] - self.origin[0]) / self.step).round();
        let j = ((x[1] - self.origin[1]) / self.step).round();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.shape[0] && (j as usize) < self.shape[1])
            .then_some((i as usize, j as usize))
    }

    /// Interpolated value, bicubic in `w = u^{−2/(n−2)}` where the 4×4
    /// stencil is inside and bilinear where only the cell is. Points on an
    /// inside node return its value.
    pub fn eval(&self, x: [f64; 2]) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain);
        }
        let s = [(x[0] - self.origin[0]) / self.step, (x[1] - self.origin[1]) / self.step];
        let near = [s[0].round(), s[1].round()];
        if (s[0] - near[0]).abs() < 1e-9 && (s[1] - near[1]).abs() < 1e-9 && near[0] >= 0.0 && near[1] >= 0.0 {
            if let Some(u) = self.node_value(near[0] as usize, near[1] as usize) {
                return Ok(u);
            }
        }
        let ci = s[0].floor() as isize;
        let cj = s[1].floor() as isize;
        let w_at = |i: isize, j: isize| -> Option<f64> {
            if i < 0 || j < 0 {
                return None;
            }
            self.node_value(i as usize, j as usize).map(|u| self.equation.to_reciprocal(u))
        };
        for width in [4isize, 2] {
            let lo = [ci - (width / 2 - 1), cj - (width / 2 - 1)];
            let mut acc = 0.0;
            let mut ok = true;
            'stencil: for b in 0..width {
                let wy = lagrange(s[1] - lo[1] as f64, b, width);
                for a in 0..width {
                    match w_at(lo[0] + a, lo[1] + b) {
                        Some(w) => acc += wy * lagrange(s[0] - lo[0] as f64, a, width) * w,
                        None => {
                            ok = false;
                            break 'stencil;
                        }
                    }
                }
            }
            if ok && acc > 0.0 {
                return Ok(self.equation.from_reciprocal(acc));
            }
        }
        Err(Error::OutsideDomain)
    }

    /// Evaluation handle on cross-section points.
    pub fn to_handle(&self) -> SolutionHandle {
        let field = self.clone();
        let tag = format!("grid field (n = {}, h = {}, m = {})", self.equation.dim(), self.step, self.level);
        SolutionHandle::from_fn(self.equation, 2, tag, move |x| field.eval([x[0], x[1]]))
    }

    /// Writes `x,y,mask,u` rows, one per node.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "x,y,mask,u")?;
        for j in 0..self.shape[1] {
            for i in 0..self.shape[0] {
                let [x, y] = self.node(i, j);
                let k = self.index(i, j);
                writeln!(out, "{x:?},{y:?},{},{:?}", self.mask[k].code(), self.values[k])?;
            }
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// Lagrange basis polynomial `a` on nodes `0..width` evaluated at `t`.
fn lagrange(t: f64, a: isize, width: isize) -> f64 {
    (0..width).filter(|&b| b != a).map(|b| (t - b as f64) / (a - b) as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{ball_exterior, ball_interior};
    use nalgebra::DVector;

    fn opts(formulation: Formulation, levels: Vec<f64>) -> SolveOptions {
        SolveOptions { formulation, levels, probes: vec![[0.0, 0.0]] }
    }

    #[test]
    fn levels_increase_at_every_node() {
        let d = Domain2D::disk([0.0, 0.0], 1.0).unwrap();
        for (form, levels) in [
            (Formulation::Direct, vec![10.0, 20.0, 40.0, 80.0]),
            (Formulation::Reciprocal, vec![10.0, 20.0, 40.0, f64::INFINITY]),
        ] {
            let (fields, report) = solve_cross_section(3, &d, 1.0 / 40.0, &opts(form, levels)).unwrap();
            assert_eq!(fields.len(), 4);
            assert!(report.min_level_increase() > -1e-9, "{form:?}: {}", report.min_level_increase());
            assert!(report.levels.iter().all(|r| r.residual <= report.tolerance));
            assert_eq!(report.truncation.len(), 1);
        }
    }

    #[test]
    fn flat_edge_approaches_half_plane_profile() {
        let d = Domain2D::rectangle([-1.0, 1.0, 0.0, 1.0]).unwrap();
        let (fields, _) =
            solve_cross_section(3, &d, 1.0 / 100.0, &opts(Formulation::Reciprocal, vec![f64::INFINITY])).unwrap();
        let u = fields[0].eval([0.0, 0.05]).unwrap();
        assert!((0.05f64.sqrt() * u - 1.0).abs() < 2e-2, "{u}");
    }

    #[test]
    fn disk_lies_between_ball_barriers() {
        let n = 3;
        let d = Domain2D::disk([0.0, 0.0], 1.0).unwrap();
        let (fields, _) =
            solve_cross_section(n, &d, 1.0 / 50.0, &opts(Formulation::Reciprocal, vec![f64::INFINITY])).unwrap();
        let f = &fields[0];
        let inner = ball_interior(n, 1.0, DVector::zeros(n)).unwrap();
        let mut c = DVector::zeros(n);
        c[0] = 1.5;
        let outer = ball_exterior(n, 0.5, c).unwrap();
        for k in 1..=45 {
            let x = 1.0 - k as f64 / 50.0;
            let u = f.eval([x, 0.0]).unwrap();
            let p = DVector::from_vec(vec![x, 0.0, 0.0]);
            let (lo, hi) = (outer.eval(&p).unwrap(), inner.eval(&p).unwrap());
            assert!(u <= hi * (1.0 + 1e-3) && u >= lo * (1.0 - 1e-3), "x={x}: {lo} ≤ {u} ≤ {hi}");
        }
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let d = Domain2D::disk([0.0, 0.0], 0.03).unwrap();
        let r = solve_cross_section(3, &d, 0.01, &opts(Formulation::Direct, vec![10.0]));
        assert!(matches!(r, Err(Error::MaskTooCoarse(_))));
    }

    #[test]
    fn direct_form_rejects_infinite_level() {
        let d = Domain2D::disk([0.0, 0.0], 1.0).unwrap();
        assert!(solve_cross_section(3, &d, 0.05, &opts(Formulation::Direct, vec![10.0, f64::INFINITY])).is_err());
    }

    #[test]
    fn exports_round_trip() {
        let d = Domain2D::disk([0.0, 0.0], 1.0).unwrap();
        let (fields, _) = solve_cross_section(4, &d, 0.1, &opts(Formulation::Direct, vec![10.0])).unwrap();
        let f = &fields[0];
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + f.shape[0] * f.shape[1]);
        assert!(text.starts_with("x,y,mask,u\n"));
        let back = ScalarField::from_toml_str(&f.to_toml_string().unwrap()).unwrap();
        assert_eq!(&back, f);
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let d = Domain2D::disk([0.0, 0.0], 1.0).unwrap();
        let (fields, _) = solve_cross_section(3, &d, 0.05, &opts(Formulation::Direct, vec![10.0, 20.0])).unwrap();
        let f = &fields[1];
        let (i, j) = f.nearest_node([0.3, -0.2]).unwrap();
        let at = f.eval(f.node(i, j)).unwrap();
        assert!((at / f.node_value(i, j).unwrap() - 1.0).abs() < 1e-12);
        assert!(f.eval([0.999, 0.0]).is_err());
        assert!(f.eval([1.2, 0.0]).is_err());
    }
}
