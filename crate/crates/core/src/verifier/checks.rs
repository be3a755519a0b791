use super::RateFit;
use crate::closed_forms::{ball_exterior, ball_interior, SolutionHandle};
use crate::cone_solver::{compare_cones, solve_wedge_profile_reciprocal, wedge_map, ConeSolution};
use crate::error::{Error, Result};
use crate::geometry::{ConeSpec, CornerChart, Vector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

fn decay(u: &SolutionHandle) -> f64 {
    u.equation().decay()
}

/// Fits `|d^{(n−2)/2}u − 1|` against `d` at `foot + d·normal`.
pub fn boundary_rate(u: &SolutionHandle, foot: &Vector, normal: &Vector, distances: &[f64]) -> Result<RateFit> {
    let beta = decay(u);
    let pts = distances
        .iter()
        .map(|&d| {
            let x = foot + normal * d;
            Ok((d, (d.powf(beta) * u.eval(&x)? - 1.0).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    RateFit::fit(&pts)
}

/// Rotation taking the chart normals at the corner to the canonical normals
/// of the cone solution.
fn cone_frame(cone: &ConeSolution, chart: &CornerChart) -> Result<DMatrix<f64>> {
    let spec = cone.cone_spec()?;
    let n = chart.dim();
    if spec.k() != chart.k() || chart.k() != n || spec.dim() != n {
        return Err(Error::invalid("corner comparisons need k = n faces on both sides"));
    }
    let from = DMatrix::from_columns(chart.normals());
    let inv = from.try_inverse().ok_or(Error::DegenerateNormals { det: 0.0 })?;
    let q = spec.normal_matrix() * inv;
    let defect = (q.transpose() * &q - DMatrix::<f64>::identity(n, n)).norm();
    if defect > 1e-8 {
        return Err(Error::invalid(format!("chart and cone corners differ (rotation defect {defect:.2e})")));
    }
    Ok(q)
}

/// The two corner error forms sampled along a ray and fitted against
/// `|x − x0|`. A fit is `None` when fewer than three errors are positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerRate {
    pub radii: Vec<f64>,
    /// `|u/f_V(d_1, …, d_k) − 1|` with signed surface distances `d_i`.
    pub distance_errors: Vec<f64>,
    /// `|u/u_V(Tx) − 1|` with the corner map `T`.
    pub map_errors: Vec<f64>,
    pub distance_form: Option<RateFit>,
    pub map_form: Option<RateFit>,
}

impl CornerRate {
    /// Largest ratio between the two error forms over the samples.
    pub fn form_disagreement(&self) -> f64 {
        self.distance_errors
            .iter()
            .zip(&self.map_errors)
            .filter(|(a, b)| **a > 0.0 && **b > 0.0)
            .map(|(a, b)| (a / b).max(b / a))
            .fold(1.0, f64::max)
    }
}

/// Samples `x = x0 + r·direction` for each radius and fits both error forms.
pub fn corner_rate(
    u: &SolutionHandle,
    cone: &ConeSolution,
    chart: &CornerChart,
    direction: &Vector,
    radii: &[f64],
) -> Result<CornerRate> {
    if radii.len() < 3 {
        return Err(Error::InsufficientSamples { found: radii.len(), needed: 3 });
    }
    let q = cone_frame(cone, chart)?;
    let dir = direction.normalize();
    let mut distance_errors = Vec::with_capacity(radii.len());
    let mut map_errors = Vec::with_capacity(radii.len());
    for &r in radii {
        let x = chart.corner() + &dir * r;
        let ux = u.eval(&x)?;
        let d = chart.surface_distances(&x)?;
        distance_errors.push((ux / cone.eval_f(d.as_slice())? - 1.0).abs());
        let y = &q * (chart.corner_map(&x)? - chart.corner());
        map_errors.push((ux / cone.eval(&y)? - 1.0).abs());
    }
    let fit = |e: &[f64]| RateFit::fit(&radii.iter().copied().zip(e.iter().copied()).collect::<Vec<_>>()).ok();
    Ok(CornerRate {
        radii: radii.to_vec(),
        distance_form: fit(&distance_errors),
        map_form: fit(&map_errors),
        distance_errors,
        map_errors,
    })
}

/// Fits `|u(x)/u_V(x) − 1|` against `|x − x0|` with no change of variables,
/// over sample points on `rays` directions and the given radii, keeping
/// those with `dist(x, ∂Ω) > δ|x − x0|`.
pub fn interior_ray_check(
    u: &SolutionHandle,
    cone: &ConeSolution,
    chart: &CornerChart,
    boundary_distance: &dyn Fn(&Vector) -> f64,
    delta: f64,
    radii: &[f64],
    rays: usize,
) -> Result<RateFit> {
    if chart.dim() != 2 {
        return Err(Error::invalid("interior rays are sampled in the plane"));
    }
    let q = cone_frame(cone, chart)?;
    let mut pts = Vec::new();
    for s in 0..rays {
        let phi = std::f64::consts::TAU * (s as f64 + 0.5) / rays as f64;
        let dir = Vector::from_vec(vec![phi.cos(), phi.sin()]);
        for &r in radii {
            let x = chart.corner() + &dir * r;
            if !chart.contains(&x).unwrap_or(false) || boundary_distance(&x) <= delta * r {
                continue;
            }
            let v = cone.eval(&(&q * (&x - chart.corner())))?;
            pts.push((r, (u.eval(&x)? / v - 1.0).abs()));
        }
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientSamples { found: pts.len(), needed: 3 });
    }
    RateFit::fit(&pts)
}

/// Extremes of `d^{(n−2)/2}u` over the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// `min d^{(n−2)/2}u`, the realized `C^{−1}`.
    pub lower: f64,
    /// `max d^{(n−2)/2}u`.
    pub upper: f64,
    /// `2^{(n−2)/2}`.
    pub upper_limit: f64,
    pub samples: usize,
}

/// Checks `0 < d^{(n−2)/2}u ≤ 2^{(n−2)/2}(1 + tol)` at every sample, where
/// `d` is the boundary distance.
pub fn bounds_check(
    u: &SolutionHandle,
    boundary_distance: &dyn Fn(&Vector) -> f64,
    samples: &[Vector],
    tol: f64,
) -> Result<BoundsReport> {
    let beta = decay(u);
    let limit = 2f64.powf(beta);
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    for x in samples {
        let d = boundary_distance(x);
        let s = d.powf(beta) * u.eval(x)?;
        if !(s > 0.0) {
            return Err(Error::BoundViolated { at: x.as_slice().to_vec(), message: format!("d^β u = {s}") });
        }
        if s > limit * (1.0 + tol) {
            return Err(Error::BoundViolated {
                at: x.as_slice().to_vec(),
                message: format!("d^β u = {s} exceeds 2^β = {limit}"),
            });
        }
        lower = lower.min(s);
        upper = upper.max(s);
    }
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { found: 0, needed: 1 });
    }
    Ok(BoundsReport { lower, upper, upper_limit: limit, samples: samples.len() })
}

/// Scaled edge derivatives at one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyRow {
    pub point: Vec<f64>,
    /// `max_i dist(x, F_i) / min_i dist(x, F_i)`.
    pub ratio: f64,
    /// `dist(x, F_i)|∂_{μ_i}u|/u` per face.
    pub per_face: Vec<f64>,
}

impl AnisotropyRow {
    pub fn worst(&self) -> f64 {
        self.per_face.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropyReport {
    pub rows: Vec<AnisotropyRow>,
    /// Largest scaled derivative over all samples and faces.
    pub constant: f64,
    /// Fit of the per-sample maximum over faces against the anisotropy
    /// ratio; `None` when the derivatives vanish.
    pub trend: Option<RateFit>,
}

/// Central-difference estimate of `dist(x, F_i)|∂_{μ_i}u(x)|/u(x)` with
/// step `step_fraction · min_j dist(x, F_j)`.
pub fn anisotropic_check(
    u: &SolutionHandle,
    cone: &ConeSpec,
    samples: &[Vector],
    step_fraction: f64,
) -> Result<AnisotropyReport> {
    let mu = cone.edge_directions()?;
    let mut rows = Vec::with_capacity(samples.len());
    for x in samples {
        let dist = (0..cone.k()).map(|i| cone.face_distance(x, i)).collect::<Result<Vec<_>>>()?;
        let dmin = dist.iter().copied().fold(f64::INFINITY, f64::min);
        let dmax = dist.iter().copied().fold(0.0, f64::max);
        let h = step_fraction * dmin;
        let ux = u.eval(x)?;
        let per_face = mu
            .iter()
            .zip(&dist)
            .map(|(m, d)| {
                let du = (u.eval(&(x + m * h))? - u.eval(&(x - m * h))?) / (2.0 * h);
                Ok(d * du.abs() / ux)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(AnisotropyRow { point: x.as_slice().to_vec(), ratio: dmax / dmin, per_face });
    }
    let constant = rows.iter().map(AnisotropyRow::worst).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.ratio, r.worst())).collect();
    let trend = RateFit::fit(&pts).ok();
    Ok(AnisotropyReport { rows, constant, trend })
}

/// Unit points of a convex planar cone whose face distances have ratios
/// spread logarithmically over `[min_ratio, max_ratio]`, on both sides.
pub fn anisotropy_samples(cone: &ConeSpec, min_ratio: f64, max_ratio: f64, count: usize) -> Result<Vec<Vector>> {
    if cone.k() != 2 || cone.dim() != 2 {
        return Err(Error::invalid("anisotropy samples are generated for planar wedges"));
    }
    if !(min_ratio >= 1.0 && max_ratio >= min_ratio) {
        return Err(Error::invalid(format!("bad ratio range [{min_ratio}, {max_ratio}]")));
    }
    let mut out = Vec::with_capacity(2 * count);
    for s in 0..count {
        let t = if count == 1 { 0.0 } else { s as f64 / (count - 1) as f64 };
        let rho = min_ratio * (max_ratio / min_ratio).powf(t);
        for d in [[1.0, rho], [rho, 1.0]] {
            let x = cone.point_from_distances(&Vector::from_vec(d.to_vec()))?;
            out.push(x.normalize());
        }
    }
    Ok(out)
}

/// Constants of the difference form, one per `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceReport {
    /// `(τ, max |u(x) − u(x*)|/(τ u(x)))`.
    pub constants: Vec<[f64; 2]>,
    pub pairs: usize,
}

impl DifferenceReport {
    /// Largest over smallest constant.
    pub fn spread(&self) -> f64 {
        let hi = self.constants.iter().map(|c| c[1]).fold(0.0, f64::max);
        let lo = self.constants.iter().map(|c| c[1]).fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// For each `τ`, perturbs every base point to `x*` with
/// `⟨x − x*, μ_i⟩ = τ s_i ⟨x, μ_i⟩`, `s_i` uniform in `[−1, 1]`, and records
/// the largest `|u(x) − u(x*)|/(τ u(x))`. Pairs leaving the cone are skipped.
pub fn difference_bound_check(
    u: &SolutionHandle,
    cone: &ConeSpec,
    base: &[Vector],
    taus: &[f64],
    pairs_per_point: usize,
    seed: u64,
) -> Result<DifferenceReport> {
    let mu = cone.edge_directions()?;
    let m = DMatrix::from_columns(&mu);
    let m_inv_t = m.transpose().try_inverse().ok_or(Error::DegenerateNormals { det: 0.0 })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut constants = Vec::with_capacity(taus.len());
    let mut pairs = 0;
    for &tau in taus {
        let mut worst: f64 = 0.0;
        for x in base {
            let ux = u.eval(x)?;
            let proj: Vec<f64> = mu.iter().map(|m| m.dot(x)).collect();
            for _ in 0..pairs_per_point {
                let c = Vector::from_iterator(mu.len(), proj.iter().map(|p| tau * rng.gen_range(-1.0..=1.0) * p));
                let xs = x - &m_inv_t * c;
                if !cone.membership(&xs).unwrap_or(false) {
                    continue;
                }
                worst = worst.max((ux - u.eval(&xs)?).abs() / (tau * ux));
                pairs += 1;
            }
        }
        constants.push([tau, worst]);
    }
    Ok(DifferenceReport { constants, pairs })
}

/// Scaled derivatives `d|Du|/u + d²|D²u|/u` at interior samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    /// `(d, value)` per sample.
    pub samples: Vec<[f64; 2]>,
    pub constant: f64,
    /// Fit of the values against `d`; a slope near zero means no trend.
    pub trend: Option<RateFit>,
}

/// Central differences with step `step_fraction · d` at each sample.
pub fn scaled_derivative_check(
    u: &SolutionHandle,
    boundary_distance: &dyn Fn(&Vector) -> f64,
    points: &[Vector],
    step_fraction: f64,
) -> Result<DerivativeReport> {
    let mut samples = Vec::with_capacity(points.len());
    for x in points {
        let d = boundary_distance(x);
        let h = step_fraction * d;
        let dim = x.len();
        let ux = u.eval(x)?;
        let unit = |i: usize| {
            let mut e = Vector::zeros(dim);
            e[i] = h;
            e
        };
        let mut grad2 = 0.0;
        let mut hess2 = 0.0;
        for i in 0..dim {
            let (p, m) = (u.eval(&(x + unit(i)))?, u.eval(&(x - unit(i)))?);
            grad2 += ((p - m) / (2.0 * h)).powi(2);
            hess2 += ((p - 2.0 * ux + m) / (h * h)).powi(2);
            for j in 0..i {
                let (ei, ej) = (unit(i), unit(j));
                let mixed = (u.eval(&(x + &ei + &ej))? - u.eval(&(x + &ei - &ej))? - u.eval(&(x - &ei + &ej))?
                    + u.eval(&(x - &ei - &ej))?)
                    / (4.0 * h * h);
                hess2 += 2.0 * mixed * mixed;
            }
        }
        samples.push([d, (d * grad2.sqrt() + d * d * hess2.sqrt()) / ux]);
    }
    let constant = samples.iter().map(|s| s[1]).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s[0], s[1])).collect();
    Ok(DerivativeReport { samples, constant, trend: RateFit::fit(&pts).ok() })
}

/// A point with a ball inside the domain and a ball outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierProbe {
    pub point: Vec<f64>,
    /// `(center, radius)` of a ball contained in the domain and containing
    /// the point.
    pub inner: Option<(Vec<f64>, f64)>,
    /// `(center, radius)` of a ball disjoint from the domain.
    pub outer: Option<(Vec<f64>, f64)>,
}

/// Worst relative excesses of the barrier comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    /// `max (u/u_inner − 1)`; should not be positive.
    pub upper_excess: f64,
    /// `max (1 − u/v_outer)`; should not be positive.
    pub lower_excess: f64,
    pub probes: usize,
}

fn embed(x: &[f64], n: usize) -> Vector {
    let mut v = Vector::zeros(n.max(x.len()));
    v.rows_mut(0, x.len()).copy_from_slice(x);
    v
}

/// Checks `v_outer ≤ u ≤ u_inner` at each probe within relative `tol`.
/// Cross-section points are embedded in `R^n` with zero trailing
/// coordinates.
pub fn barrier_check(u: &SolutionHandle, probes: &[BarrierProbe], tol: f64) -> Result<BarrierReport> {
    let n = u.equation().dim();
    let mut upper_excess = f64::NEG_INFINITY;
    let mut lower_excess = f64::NEG_INFINITY;
    for p in probes {
        let ux = u.eval(&Vector::from_vec(p.point.clone()))?;
        let x = embed(&p.point, n);
        if let Some((c, r)) = &p.inner {
            let b = ball_interior(n, *r, embed(c, n))?.eval(&x)?;
            let excess = ux / b - 1.0;
            upper_excess = upper_excess.max(excess);
            if excess > tol {
                return Err(Error::BoundViolated { at: p.point.clone(), message: format!("u = {ux} above inner barrier {b}") });
            }
        }
        if let Some((c, r)) = &p.outer {
            let v = ball_exterior(n, *r, embed(c, n))?.eval(&x)?;
            let excess = 1.0 - ux / v;
            lower_excess = lower_excess.max(excess);
            if excess > tol {
                return Err(Error::BoundViolated { at: p.point.clone(), message: format!("u = {ux} below outer barrier {v}") });
            }
        }
    }
    Ok(BarrierReport { upper_excess, lower_excess, probes: probes.len() })
}

/// Probes at `foot + d·normal` with the tangent balls of radii `inner` and
/// `outer` touching the boundary at `foot` from inside and outside.
pub fn tangent_ball_probes(foot: &[f64], normal: &[f64], inner: f64, outer: f64, distances: &[f64]) -> Vec<BarrierProbe> {
    let at = |t: f64| foot.iter().zip(normal).map(|(f, v)| f + t * v).collect::<Vec<_>>();
    distances
        .iter()
        .map(|&d| BarrierProbe {
            point: at(d),
            inner: (d < 2.0 * inner).then(|| (at(inner), inner)),
            outer: Some((at(-outer), outer)),
        })
        .collect()
}

/// One wedge pair of [`stability_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub perturbation: f64,
    pub sup_ratio_error: f64,
    pub normal_distance: f64,
}

impl StabilityRow {
    pub fn quotient(&self) -> f64 {
        self.sup_ratio_error / self.normal_distance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    /// Largest over smallest quotient.
    pub fn spread(&self) -> f64 {
        let hi = self.rows.iter().map(StabilityRow::quotient).fold(0.0, f64::max);
        let lo = self.rows.iter().map(StabilityRow::quotient).fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// Compares the wedge of opening `ω` with wedges of opening `ω + ε`:
/// `sup |f_1(d)/f_2(d) − 1|` over unit distance vectors, divided by the
/// distance between the normal matrices.
pub fn stability_check(n: usize, opening: f64, perturbations: &[f64], grid: usize, samples: usize) -> Result<StabilityReport> {
    let base = solve_wedge_profile_reciprocal(n, opening, grid)?;
    let rows = perturbations
        .iter()
        .map(|&eps| {
            let other = solve_wedge_profile_reciprocal(n, opening + eps, grid)?;
            let c = compare_cones(&base, &other, &wedge_map(opening, opening + eps), samples)?;
            Ok(StabilityRow { perturbation: eps, sup_ratio_error: c.sup_f, normal_distance: c.n_distance })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport { rows })
}
