//! Local description of a boundary near a corner by graphs `x_n = f_i(x')`.

use super::cone::{ConeSpec, SignVector};
use super::{check_unit, Vector};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Parametric description of one boundary graph, in coordinates relative to
/// the corner for `plane` and `poly-coef`, absolute for `circle-arc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphKind {
    /// `f(x') = x0_n + ⟨gradient, x' − x0'⟩`.
    Plane { gradient: Vec<f64> },
    /// The arc of the circle `|x − center| = radius` through the corner,
    /// as a graph over the first coordinate (n = 2 only).
    CircleArc { center: Vec<f64>, radius: f64 },
    /// `f(x') = x0_n + ⟨linear, y⟩ + yᵀ Q y` with `y = x' − x0'`.
    PolyCoef { linear: Vec<f64>, quadratic: Vec<Vec<f64>> },
}

/// A graph bound to its corner, ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGraph {
    kind: GraphKind,
    corner: Vector,
    /// `+1` for the upper half of a circle, `−1` for the lower half.
    branch: f64,
}

impl SurfaceGraph {
    pub fn new(kind: GraphKind, corner: Vector) -> Result<Self> {
        let n = corner.len();
        let m = n - 1;
        let mut branch = 1.0;
        match &kind {
            GraphKind::Plane { gradient } => check_len(gradient.len(), m)?,
            GraphKind::CircleArc { center, radius } => {
                if n != 2 {
                    return Err(Error::invalid("circle-arc graphs are only supported for n = 2"));
                }
                check_len(center.len(), 2)?;
                if !(*radius > 0.0) {
                    return Err(Error::invalid("circle-arc radius must be positive"));
                }
                let dx = corner[0] - center[0];
                let dy = corner[1] - center[1];
                if ((dx * dx + dy * dy).sqrt() - radius).abs() > 1e-10 * radius.max(1.0) {
                    return Err(Error::invalid("the corner does not lie on the circle-arc"));
                }
                if dy.abs() < 1e-8 * radius {
                    return Err(Error::invalid("circle-arc has a vertical tangent at the corner"));
                }
                branch = dy.signum();
            }
            GraphKind::PolyCoef { linear, quadratic } => {
                check_len(linear.len(), m)?;
                check_len(quadratic.len(), m)?;
                for row in quadratic {
                    check_len(row.len(), m)?;
                }
            }
        }
        Ok(Self { kind, corner, branch })
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    fn tangential_dim(&self) -> usize {
        self.corner.len() - 1
    }

    fn offset(&self, xp: &DVector<f64>) -> DVector<f64> {
        xp - self.corner.rows(0, self.tangential_dim())
    }

    /// Whether `x'` is inside the parameter range where the graph exists.
    pub fn defined_at(&self, xp: &DVector<f64>) -> bool {
        match &self.kind {
            GraphKind::CircleArc { center, radius } => (xp[0] - center[0]).abs() < *radius,
            _ => true,
        }
    }

    pub fn value(&self, xp: &DVector<f64>) -> f64 {
        let top = self.corner[self.tangential_dim()];
        match &self.kind {
            GraphKind::Plane { gradient } => top + dot(gradient, &self.offset(xp)),
            GraphKind::CircleArc { center, radius } => {
                let t = xp[0] - center[0];
                center[1] + self.branch * (radius * radius - t * t).max(0.0).sqrt()
            }
            GraphKind::PolyCoef { linear, quadratic } => {
                let y = self.offset(xp);
                top + dot(linear, &y) + quad_form(quadratic, &y)
            }
        }
    }

    pub fn gradient(&self, xp: &DVector<f64>) -> DVector<f64> {
        match &self.kind {
            GraphKind::Plane { gradient } => DVector::from_column_slice(gradient),
            GraphKind::CircleArc { center, radius } => {
                let t = xp[0] - center[0];
                let s = (radius * radius - t * t).max(f64::MIN_POSITIVE).sqrt();
                DVector::from_element(1, -self.branch * t / s)
            }
            GraphKind::PolyCoef { linear, quadratic } => {
                let y = self.offset(xp);
                DVector::from_column_slice(linear) + symmetrized(quadratic) * y
            }
        }
    }

    pub fn hessian(&self, xp: &DVector<f64>) -> DMatrix<f64> {
        let m = self.tangential_dim();
        match &self.kind {
            GraphKind::Plane { .. } => DMatrix::zeros(m, m),
            GraphKind::CircleArc { center, radius } => {
                let t = xp[0] - center[0];
                let s2 = (radius * radius - t * t).max(f64::MIN_POSITIVE);
                DMatrix::from_element(1, 1, -self.branch * radius * radius / (s2 * s2.sqrt()))
            }
            GraphKind::PolyCoef { quadratic, .. } => symmetrized(quadratic),
        }
    }

    /// Upward unit normal `(−∇f, 1)/√(1 + |∇f|²)` at `x'`.
    pub fn upward_normal(&self, xp: &DVector<f64>) -> Vector {
        let g = self.gradient(xp);
        let m = g.len();
        let mut nu = Vector::zeros(m + 1);
        for j in 0..m {
            nu[j] = -g[j];
        }
        nu[m] = 1.0;
        nu.normalize()
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn dot(a: &[f64], y: &DVector<f64>) -> f64 {
    a.iter().zip(y.iter()).map(|(p, q)| p * q).sum()
}

fn quad_form(q: &[Vec<f64>], y: &DVector<f64>) -> f64 {
    let mut s = 0.0;
    for (i, row) in q.iter().enumerate() {
        for (j, qij) in row.iter().enumerate() {
            s += qij * y[i] * y[j];
        }
    }
    s
}

fn symmetrized(q: &[Vec<f64>]) -> DMatrix<f64> {
    let m = q.len();
    DMatrix::from_fn(m, m, |i, j| q[i][j] + q[j][i])
}

/// Serialized form of a [`CornerChart`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFixture {
    #[serde(default)]
    pub name: String,
    pub corner: Vec<f64>,
    pub curvature_bound: f64,
    pub radius: f64,
    /// Half-aperture of a circular cone about `e_n` contained in the domain.
    pub aperture: f64,
    pub components: Vec<SignVector>,
    /// Optional expected inner normals at the corner, checked on load.
    #[serde(default)]
    pub normals: Option<Vec<Vec<f64>>>,
    pub graphs: Vec<GraphKind>,
}

/// Boundary near a corner `x0`: `k` graphs with a common point at `x0`, a
/// bound `M` on their deviation from the tangent planes inside radius `R`,
/// and the sign-vector set describing the domain,
/// `Ω ∩ B_R(x0) = {x : (sign(x_n − f_i(x')))_i ∈ L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerChart {
    name: String,
    corner: Vector,
    graphs: Vec<SurfaceGraph>,
    curvature_bound: f64,
    radius: f64,
    aperture: f64,
    components: Vec<SignVector>,
    normals: Vec<Vector>,
}

/// Outcome of [`CornerChart::cone_sandwich`].
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub shift: f64,
    pub samples: usize,
    /// Points of the raised cone that fall outside the domain.
    pub outer_violations: usize,
    /// Points of the domain that fall outside the lowered cone.
    pub inner_violations: usize,
    pub first_violation: Option<Vector>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.outer_violations == 0 && self.inner_violations == 0
    }
}

impl CornerChart {
    pub fn new(
        corner: Vector,
        graphs: Vec<GraphKind>,
        curvature_bound: f64,
        radius: f64,
        aperture: f64,
        components: Vec<SignVector>,
    ) -> Result<Self> {
        Self::build(String::new(), corner, graphs, curvature_bound, radius, aperture, components, None)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        name: String,
        corner: Vector,
        graphs: Vec<GraphKind>,
        curvature_bound: f64,
        radius: f64,
        aperture: f64,
        components: Vec<SignVector>,
        expected_normals: Option<Vec<Vector>>,
    ) -> Result<Self> {
        let n = corner.len();
        if n < 2 {
            return Err(Error::invalid("charts need n ≥ 2"));
        }
        if graphs.is_empty() || graphs.len() > n {
            return Err(Error::invalid(format!("need 1 ≤ k ≤ n graphs, got {}", graphs.len())));
        }
        if !(curvature_bound >= 0.0) || !(radius > 0.0) {
            return Err(Error::invalid("curvature bound must be ≥ 0 and radius > 0"));
        }
        if !(aperture > 0.0 && aperture <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::BadAngle(aperture));
        }
        let graphs = graphs
            .into_iter()
            .map(|g| SurfaceGraph::new(g, corner.clone()))
            .collect::<Result<Vec<_>>>()?;
        let cp = corner.rows(0, n - 1).into_owned();
        for (i, g) in graphs.iter().enumerate() {
            let gap = g.value(&cp) - corner[n - 1];
            if gap.abs() > 1e-10 {
                return Err(Error::invalid(format!("graph {i} misses the corner by {gap:e}")));
            }
        }
        let normals: Vec<Vector> = graphs.iter().map(|g| g.upward_normal(&cp)).collect();
        if let Some(expected) = expected_normals {
            check_len(expected.len(), normals.len())?;
            for (i, (a, b)) in expected.iter().zip(&normals).enumerate() {
                check_unit(a)?;
                if (a - b).norm() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "normal {i} given as {:?} but the graph has {:?}",
                        a.as_slice(),
                        b.as_slice()
                    )));
                }
            }
        }
        let chart = Self {
            name,
            corner,
            graphs,
            curvature_bound,
            radius,
            aperture,
            components,
            normals,
        };
        // validates components and independence
        chart.tangent_cone()?;
        Ok(chart)
    }

    /// Straight planar wedge `{0 < arg x < ω}`, `π/2 < ω < π`, in the frame
    /// of the canonical cone solutions: the first edge is the positive
    /// `x_1` axis.
    pub fn straight_wedge(opening: f64) -> Result<Self> {
        use std::f64::consts::{FRAC_PI_2, PI};
        if !(opening > FRAC_PI_2 && opening < PI) {
            return Err(Error::BadAngle(opening));
        }
        let graphs = vec![GraphKind::Plane { gradient: vec![0.0] }, GraphKind::Plane { gradient: vec![opening.tan()] }];
        let positive = SignVector::all_positive(2);
        let mut chart = Self::new(Vector::zeros(2), graphs, 0.0, 1.0, 0.5 * (opening - FRAC_PI_2), vec![positive])?;
        chart.name = format!("wedge-{opening}");
        Ok(chart)
    }

    pub fn from_fixture(f: ChartFixture) -> Result<Self> {
        let expected = f.normals.map(|v| v.into_iter().map(Vector::from_vec).collect());
        Self::build(
            f.name,
            Vector::from_vec(f.corner),
            f.graphs,
            f.curvature_bound,
            f.radius,
            f.aperture,
            f.components,
            expected,
        )
    }

    pub fn to_fixture(&self) -> ChartFixture {
        ChartFixture {
            name: self.name.clone(),
            corner: self.corner.as_slice().to_vec(),
            curvature_bound: self.curvature_bound,
            radius: self.radius,
            aperture: self.aperture,
            components: self.components.clone(),
            normals: Some(self.normals.iter().map(|v| v.as_slice().to_vec()).collect()),
            graphs: self.graphs.iter().map(|g| g.kind.clone()).collect(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: ChartFixture = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_fixture(f)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_fixture()).expect("chart fixtures serialize")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn k(&self) -> usize {
        self.graphs.len()
    }

    pub fn corner(&self) -> &Vector {
        &self.corner
    }

    pub fn graphs(&self) -> &[SurfaceGraph] {
        &self.graphs
    }

    pub fn curvature_bound(&self) -> f64 {
        self.curvature_bound
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn components(&self) -> &[SignVector] {
        &self.components
    }

    /// Inner unit normals of the graphs at the corner.
    pub fn normals(&self) -> &[Vector] {
        &self.normals
    }

    pub fn tangent_cone(&self) -> Result<ConeSpec> {
        ConeSpec::new(self.normals.clone(), self.components.iter().cloned(), self.corner.clone())
    }

    fn split(&self, x: &Vector) -> (DVector<f64>, f64) {
        let n = self.dim();
        (x.rows(0, n - 1).into_owned(), x[n - 1])
    }

    /// Membership in the domain through the sign vector of `x_n − f_i(x')`.
    pub fn contains(&self, x: &Vector) -> Result<bool> {
        check_len(x.len(), self.dim())?;
        let (xp, xn) = self.split(x);
        let mut s = Vec::with_capacity(self.k());
        for (face, g) in self.graphs.iter().enumerate() {
            if !g.defined_at(&xp) {
                return Err(Error::NoProjection { surface: face });
            }
            let d = xn - g.value(&xp);
            if d == 0.0 {
                return Err(Error::OnBoundary { face });
            }
            s.push(if d > 0.0 { 1 } else { -1 });
        }
        Ok(self.components.contains(&SignVector::new(s)?))
    }

    /// Nearest point on the i-th graph and the signed distance to it,
    /// positive above the graph.
    pub fn project(&self, x: &Vector, i: usize) -> Result<(Vector, f64)> {
        check_len(x.len(), self.dim())?;
        let g = self.graphs.get(i).ok_or_else(|| Error::invalid(format!("no graph {i}")))?;
        let (xp, xn) = self.split(x);
        let m = xp.len();
        let window = self.radius;
        let c0 = self.corner.rows(0, m).into_owned();
        let inside = |y: &DVector<f64>| (y - &c0).norm() < window && g.defined_at(y);
        if !inside(&xp) {
            return Err(Error::NoProjection { surface: i });
        }
        let phi = |y: &DVector<f64>| (y - &xp).norm_squared() + (xn - g.value(y)).powi(2);

        // the foot point lies within the vertical gap of x'
        let gap = (xn - g.value(&xp)).abs();
        if gap == 0.0 {
            return Ok((x.clone(), 0.0));
        }
        let per_dim = match m {
            1 => 129,
            2 => 41,
            3 => 13,
            _ => 7,
        };
        let mut best = xp.clone();
        let mut best_val = phi(&xp);
        let mut idx = vec![0usize; m];
        loop {
            let y = DVector::from_fn(m, |j, _| {
                xp[j] + gap * (2.0 * idx[j] as f64 / (per_dim - 1) as f64 - 1.0)
            });
            if inside(&y) {
                let v = phi(&y);
                if v < best_val {
                    best_val = v;
                    best = y;
                }
            }
            let mut j = 0;
            while j < m {
                idx[j] += 1;
                if idx[j] < per_dim {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == m {
                break;
            }
        }

        // Newton on the squared distance, with backtracking
        let stationarity = |y: &DVector<f64>| {
            ((y - &xp) * 2.0 - g.gradient(y) * (2.0 * (xn - g.value(y)))).norm()
        };
        let mut y = best;
        let mut converged = false;
        for _ in 0..100 {
            let f = g.value(&y);
            let gr = g.gradient(&y);
            let r = xn - f;
            let grad = (&y - &xp) * 2.0 - &gr * (2.0 * r);
            let hess = (DMatrix::identity(m, m) + &gr * gr.transpose() - g.hessian(&y) * r) * 2.0;
            let step = match hess.clone().cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => -&grad / (2.0 * (1.0 + gr.norm_squared())),
            };
            let base = phi(&y);
            let base_grad = grad.norm();
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = &y + &step * t;
                // near the minimum φ stalls at rounding level, the gradient does not
                if inside(&cand) && (phi(&cand) < base || stationarity(&cand) < base_grad) {
                    y = cand;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            let moved = step.norm() * t;
            if !accepted || moved <= 1e-12 * (1.0 + y.norm()) {
                converged = true;
                break;
            }
        }
        if !converged || !inside(&y) {
            return Err(Error::NoProjection { surface: i });
        }
        let f = g.value(&y);
        let mut foot = Vector::zeros(m + 1);
        foot.rows_mut(0, m).copy_from(&y);
        foot[m] = f;
        let dist = (x - &foot).norm();
        Ok((foot, if xn >= f { dist } else { -dist }))
    }

    /// Signed distances `s_i` to every graph.
    pub fn surface_distances(&self, x: &Vector) -> Result<Vector> {
        let mut d = Vector::zeros(self.k());
        for i in 0..self.k() {
            d[i] = self.project(x, i)?.1;
        }
        Ok(d)
    }

    /// Unit normals completing the chart normals to a basis of `R^n`,
    /// orthonormal among themselves and orthogonal to the chart normals.
    /// Standard basis vectors are taken greedily by largest remaining norm.
    pub fn complement_normals(&self) -> Vec<Vector> {
        let n = self.dim();
        let mut basis: Vec<Vector> = Vec::with_capacity(n);
        for nu in &self.normals {
            let mut v = nu.clone();
            for b in &basis {
                v -= b * b.dot(&v);
            }
            basis.push(v.normalize());
        }
        let mut extra = Vec::new();
        while basis.len() < n {
            let mut best: Option<(f64, Vector)> = None;
            for j in 0..n {
                let mut v = Vector::zeros(n);
                v[j] = 1.0;
                for b in &basis {
                    v -= b * b.dot(&v);
                }
                let norm = v.norm();
                if best.as_ref().map_or(true, |(bn, _)| norm > *bn + 1e-12) {
                    best = Some((norm, v));
                }
            }
            let (_, v) = best.expect("n ≥ 1");
            let v = v.normalize();
            basis.push(v.clone());
            extra.push(v);
        }
        extra
    }

    /// Full normal matrix with the complement normals appended.
    fn full_normal_matrix(&self) -> DMatrix<f64> {
        let mut cols = self.normals.clone();
        cols.extend(self.complement_normals());
        DMatrix::from_columns(&cols)
    }

    /// The map sending the domain near the corner onto its tangent cone:
    /// `Tx = x0 + Ñ^{−T} s` where `s` collects the signed surface distances
    /// followed by plane distances along the complement normals.
    pub fn corner_map(&self, x: &Vector) -> Result<Vector> {
        let n = self.dim();
        let k = self.k();
        let nt = self.full_normal_matrix();
        let d = self.surface_distances(x)?;
        let mut s = Vector::zeros(n);
        s.rows_mut(0, k).copy_from(&d);
        let rel = x - &self.corner;
        for j in k..n {
            s[j] = nt.column(j).dot(&rel);
        }
        let inv_t = nt
            .transpose()
            .try_inverse()
            .ok_or(Error::DegenerateNormals { det: 0.0 })?;
        Ok(&self.corner + inv_t * s)
    }

    /// Inverse of [`CornerChart::corner_map`] by Newton iteration with a
    /// finite-difference Jacobian.
    pub fn corner_map_inverse(&self, y: &Vector) -> Result<Vector> {
        let n = self.dim();
        let mut x = y.clone();
        let h = 1e-7 * (1.0 + (y - &self.corner).norm());
        for _ in 0..50 {
            let fx = self.corner_map(&x)? - y;
            if fx.norm() <= 1e-14 * (1.0 + y.norm()) {
                return Ok(x);
            }
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let col = (self.corner_map(&xp)? - self.corner_map(&xm)?) / (2.0 * h);
                jac.set_column(j, &col);
            }
            let step = jac
                .lu()
                .solve(&fx)
                .ok_or_else(|| Error::NoConvergence("singular corner-map Jacobian".into()))?;
            x -= &step;
            if step.norm() <= 1e-15 * (1.0 + x.norm()) {
                return Ok(x);
            }
        }
        let res = (self.corner_map(&x)? - y).norm();
        if res <= 1e-11 * (1.0 + y.norm()) {
            Ok(x)
        } else {
            Err(Error::NoConvergence(format!("corner-map inverse residual {res:e}")))
        }
    }

    /// Largest sampled value of `|f_i(x') − L_i(x')| / (M|x' − x0'|²)` inside
    /// the chart radius; at most 1 for a consistent fixture.
    pub fn curvature_ratio(&self, samples: usize, seed: u64) -> f64 {
        let n = self.dim();
        let m = n - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c0 = self.corner.rows(0, m).into_owned();
        let mut worst: f64 = 0.0;
        for g in &self.graphs {
            let g0 = g.gradient(&c0);
            for _ in 0..samples {
                let y = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)) * self.radius;
                if y.norm() >= self.radius || y.norm() == 0.0 {
                    continue;
                }
                let xp = &c0 + &y;
                if !g.defined_at(&xp) {
                    continue;
                }
                let lin = self.corner[m] + g0.dot(&y);
                let dev = (g.value(&xp) - lin).abs();
                if self.curvature_bound == 0.0 {
                    if dev > 1e-12 {
                        return f64::INFINITY;
                    }
                } else {
                    worst = worst.max(dev / (self.curvature_bound * y.norm_squared()));
                }
            }
        }
        worst
    }

    /// Samples `B_r(x0)` and checks that the tangent cone raised by `shift`
    /// along `e_n` lies in the domain and the domain lies in the cone
    /// lowered by `shift`.
    pub fn cone_sandwich(&self, r: f64, shift: f64, samples: usize, seed: u64) -> Result<SandwichReport> {
        if !(r > 0.0 && r < self.radius) {
            return Err(Error::invalid(format!("sandwich radius {r} must lie in (0, R)")));
        }
        let n = self.dim();
        let cone = self.tangent_cone()?;
        let mut en = Vector::zeros(n);
        en[n - 1] = shift;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = SandwichReport {
            shift,
            samples: 0,
            outer_violations: 0,
            inner_violations: 0,
            first_violation: None,
        };
        while report.samples < samples {
            let y = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            if y.norm() >= 1.0 {
                continue;
            }
            let x = &self.corner + y * r;
            report.samples += 1;
            // boundary hits have probability zero and are skipped
            let Ok(in_domain) = self.contains(&x) else { continue };
            if let Ok(true) = cone.membership(&(&x - &en)) {
                if !in_domain {
                    report.outer_violations += 1;
                    report.first_violation.get_or_insert(x.clone());
                }
            }
            if in_domain {
                if let Ok(false) = cone.membership(&(&x + &en)) {
                    report.inner_violations += 1;
                    report.first_violation.get_or_insert(x.clone());
                }
            }
        }
        Ok(report)
    }

    /// Shift `M r² / sin θ₀` used by [`CornerChart::cone_sandwich_check`].
    pub fn sandwich_shift(&self, r: f64) -> f64 {
        self.curvature_bound * r * r / self.aperture.sin()
    }

    pub fn cone_sandwich_check(&self, r: f64) -> bool {
        self.cone_sandwich(r, self.sandwich_shift(r), 10_000, 0x5eed)
            .map(|rep| rep.passed())
            .unwrap_or(false)
    }
}

/// Signed distance from `x` to the i-th boundary graph of `chart`.
pub fn signed_distance_graph(x: &Vector, chart: &CornerChart, i: usize) -> Result<f64> {
    Ok(chart.project(x, i)?.1)
}

pub fn tangent_cone(chart: &CornerChart) -> Result<ConeSpec> {
    chart.tangent_cone()
}

pub fn corner_map_t(chart: &CornerChart, x: &Vector) -> Result<Vector> {
    chart.corner_map(x)
}

pub fn cone_sandwich_check(chart: &CornerChart, r: f64) -> bool {
    chart.cone_sandwich_check(r)
}

/// Straight line through the origin at angle π/6 and the unit circle
/// through the origin centred at `(1/2, √3/2)`; the domain is the part of
/// the disk above the line, a circular segment with corner angle 2π/3.
pub fn line_arc_fixture() -> CornerChart {
    CornerChart::from_toml_str(LINE_ARC_TOML).expect("bundled fixture is valid")
}

pub const LINE_ARC_TOML: &str = r#"name = "line-arc"
corner = [0.0, 0.0]
curvature_bound = 2.4
radius = 0.3
aperture = 1.0471975511965976
components = [[1, 1]]
normals = [[-0.5, 0.8660254037844386], [0.5, 0.8660254037844386]]

[[graphs]]
kind = "plane"
gradient = [0.5773502691896258]

[[graphs]]
kind = "circle-arc"
center = [0.5, 0.8660254037844386]
radius = 1.0
"#;
