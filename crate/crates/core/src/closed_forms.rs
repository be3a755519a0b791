//! Exact solutions in balls, ball complements and half-spaces, and the
//! constructions that combine them: sums (supersolutions) and conformal
//! pullbacks.

use crate::equation::Equation;
use crate::error::{Error, Result};
use crate::geometry::{conformal_factor, conformal_map, Hyperplane, Vector};
use std::fmt;
use std::sync::Arc;

/// A positive function on a domain, usually a solution or a barrier.
///
/// The point dimension may be smaller than the equation dimension: a
/// cross-section solution depends on two coordinates while the exponents
/// come from `n`.
pub trait Solution: Send + Sync {
    fn equation(&self) -> Equation;
    fn point_dim(&self) -> usize;
    fn contains(&self, x: &Vector) -> bool;
    /// Value at `x`; [`Error::OutsideDomain`] off the domain, including the
    /// boundary where the value would be infinite.
    fn eval(&self, x: &Vector) -> Result<f64>;
    fn describe(&self) -> String;
}

/// Shared, cheaply clonable handle to a [`Solution`].
#[derive(Clone)]
pub struct SolutionHandle(Arc<dyn Solution>);

impl fmt::Debug for SolutionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SolutionHandle({})", self.0.describe())
    }
}

impl SolutionHandle {
    pub fn new(s: impl Solution + 'static) -> Self {
        Self(Arc::new(s))
    }

    /// Wraps an arbitrary evaluator, for example an interpolated field.
    pub fn from_fn(
        equation: Equation,
        point_dim: usize,
        tag: impl Into<String>,
        eval: impl Fn(&Vector) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::new(FnSolution { equation, point_dim, tag: tag.into(), eval: Box::new(eval) })
    }

    pub fn equation(&self) -> Equation {
        self.0.equation()
    }

    pub fn point_dim(&self) -> usize {
        self.0.point_dim()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.point_dim() && self.0.contains(x)
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        if x.len() != self.point_dim() {
            return Err(Error::DimensionMismatch { expected: self.point_dim(), got: x.len() });
        }
        self.0.eval(x)
    }

    pub fn describe(&self) -> String {
        self.0.describe()
    }
}

struct FnSolution {
    equation: Equation,
    point_dim: usize,
    tag: String,
    eval: Box<dyn Fn(&Vector) -> Result<f64> + Send + Sync>,
}

impl Solution for FnSolution {
    fn equation(&self) -> Equation {
        self.equation
    }
    fn point_dim(&self) -> usize {
        self.point_dim
    }
    fn contains(&self, x: &Vector) -> bool {
        (self.eval)(x).is_ok()
    }
    fn eval(&self, x: &Vector) -> Result<f64> {
        (self.eval)(x)
    }
    fn describe(&self) -> String {
        self.tag.clone()
    }
}

/// `(2r / (r² − |x − x0|²))^{(n−2)/2}` on `B_r(x0)`.
#[derive(Debug, Clone)]
pub struct BallInterior {
    equation: Equation,
    radius: f64,
    center: Vector,
}

impl Solution for BallInterior {
    fn equation(&self) -> Equation {
        self.equation
    }
    fn point_dim(&self) -> usize {
        self.center.len()
    }
    fn contains(&self, x: &Vector) -> bool {
        (x - &self.center).norm() < self.radius
    }
    fn eval(&self, x: &Vector) -> Result<f64> {
        let gap = self.radius * self.radius - (x - &self.center).norm_squared();
        if !(gap > 0.0) {
            return Err(Error::OutsideDomain);
        }
        Ok((2.0 * self.radius / gap).powf(self.equation.decay()))
    }
    fn describe(&self) -> String {
        format!("ball interior r={} center={:?}", self.radius, self.center.as_slice())
    }
}

/// `(2r / (|x − x0|² − r²))^{(n−2)/2}` outside `B̄_r(x0)`.
#[derive(Debug, Clone)]
pub struct BallExterior {
    equation: Equation,
    radius: f64,
    center: Vector,
}

impl Solution for BallExterior {
    fn equation(&self) -> Equation {
        self.equation
    }
    fn point_dim(&self) -> usize {
        self.center.len()
    }
    fn contains(&self, x: &Vector) -> bool {
        (x - &self.center).norm() > self.radius
    }
    fn eval(&self, x: &Vector) -> Result<f64> {
        let gap = (x - &self.center).norm_squared() - self.radius * self.radius;
        if !(gap > 0.0) {
            return Err(Error::OutsideDomain);
        }
        Ok((2.0 * self.radius / gap).powf(self.equation.decay()))
    }
    fn describe(&self) -> String {
        format!("ball exterior r={} center={:?}", self.radius, self.center.as_slice())
    }
}

/// `d^{−(n−2)/2}` on the positive side of a hyperplane.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    equation: Equation,
    plane: Hyperplane,
}

impl Solution for HalfSpace {
    fn equation(&self) -> Equation {
        self.equation
    }
    fn point_dim(&self) -> usize {
        self.plane.dim()
    }
    fn contains(&self, x: &Vector) -> bool {
        self.plane.signed_distance(x) > 0.0
    }
    fn eval(&self, x: &Vector) -> Result<f64> {
        let d = self.plane.signed_distance(x);
        if !(d > 0.0) {
            return Err(Error::OutsideDomain);
        }
        Ok(d.powf(-self.equation.decay()))
    }
    fn describe(&self) -> String {
        format!("half-space normal={:?}", self.plane.normal().as_slice())
    }
}

struct Sum(SolutionHandle, SolutionHandle);

impl Solution for Sum {
    fn equation(&self) -> Equation {
        self.0.equation()
    }
    fn point_dim(&self) -> usize {
        self.0.point_dim()
    }
    fn contains(&self, x: &Vector) -> bool {
        self.0.contains(x) && self.1.contains(x)
    }
    fn eval(&self, x: &Vector) -> Result<f64> {
        Ok(self.0.eval(x)? + self.1.eval(x)?)
    }
    fn describe(&self) -> String {
        format!("sum of ({}) and ({})", self.0.describe(), self.1.describe())
    }
}

struct Pullback {
    a: f64,
    inner: SolutionHandle,
}

impl Solution for Pullback {
    fn equation(&self) -> Equation {
        self.inner.equation()
    }
    fn point_dim(&self) -> usize {
        self.inner.point_dim()
    }
    fn contains(&self, x: &Vector) -> bool {
        conformal_map(self.a, x).map_or(false, |y| self.inner.contains(&y))
    }
    fn eval(&self, x: &Vector) -> Result<f64> {
        let y = conformal_map(self.a, x)?;
        let lambda = conformal_factor(self.a, x)?;
        Ok(self.inner.eval(&y)? * lambda.powf(self.inner.equation().decay()))
    }
    fn describe(&self) -> String {
        format!("pullback a={} of ({})", self.a, self.inner.describe())
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

pub fn ball_interior(n: usize, r: f64, center: Vector) -> Result<SolutionHandle> {
    check_radius(r)?;
    Ok(SolutionHandle::new(BallInterior { equation: Equation::new(n)?, radius: r, center }))
}

pub fn ball_exterior(n: usize, r: f64, center: Vector) -> Result<SolutionHandle> {
    check_radius(r)?;
    Ok(SolutionHandle::new(BallExterior { equation: Equation::new(n)?, radius: r, center }))
}

/// Solution in `{x_n > 0}` of `ℝⁿ`.
pub fn half_space(n: usize) -> Result<SolutionHandle> {
    let mut nu = Vector::zeros(n);
    nu[n - 1] = 1.0;
    half_space_of(n, Hyperplane::through_origin(nu)?)
}

/// Solution on the side of `plane` its normal points to; the point
/// dimension is that of the plane.
pub fn half_space_of(n: usize, plane: Hyperplane) -> Result<SolutionHandle> {
    Ok(SolutionHandle::new(HalfSpace { equation: Equation::new(n)?, plane }))
}

/// `u_1 + u_2` on the common domain, a supersolution when both are solutions.
pub fn sum(u1: SolutionHandle, u2: SolutionHandle) -> Result<SolutionHandle> {
    if u1.equation() != u2.equation() || u1.point_dim() != u2.point_dim() {
        return Err(Error::invalid("summands must share the equation and point dimension"));
    }
    Ok(SolutionHandle::new(Sum(u1, u2)))
}

/// `x ↦ v(T_a x) λ(x)^{(n−2)/2}`, a solution wherever `v` is one.
pub fn pullback_solution(a: f64, v: SolutionHandle) -> Result<SolutionHandle> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("conformal parameter must be positive, got {a}")));
    }
    Ok(SolutionHandle::new(Pullback { a, inner: v }))
}

/// Default finite-difference step of [`pde_residual`].
pub const DEFAULT_STEP: f64 = 1e-3;

/// `Δ_h u(x) − ¼n(n−2) u(x)^{(n+2)/(n−2)}` with the fourth-order five-point
/// second difference along each coordinate axis of the point space.
pub fn pde_residual(u: &SolutionHandle, x: &Vector, step: f64) -> Result<f64> {
    let eq = u.equation();
    let u0 = u.eval(x)?;
    let mut lap = 0.0;
    for j in 0..x.len() {
        let at = |k: f64| {
            let mut y = x.clone();
            y[j] += k * step;
            u.eval(&y)
        };
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        lap += (-m2 + 16.0 * m1 - 30.0 * u0 + 16.0 * p1 - p2) / (12.0 * step * step);
    }
    Ok(lap - eq.source(u0))
}

/// [`pde_residual`] divided by the size of the nonlinear term.
pub fn relative_pde_residual(u: &SolutionHandle, x: &Vector, step: f64) -> Result<f64> {
    let r = pde_residual(u, x, step)?;
    Ok(r / u.equation().source(u.eval(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    #[test]
    fn ball_values() {
        let u = ball_interior(4, 1.0, v(&[0.0; 4])).unwrap();
        assert_eq!(u.eval(&v(&[0.0; 4])).unwrap(), 2.0);
        let u = ball_interior(3, 1.0, v(&[0.0; 3])).unwrap();
        assert!((u.eval(&v(&[0.0; 3])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(u.eval(&v(&[0.0, 0.0, 1.0 - 1e-9])).unwrap() > 1e4);
        assert!(matches!(u.eval(&v(&[0.0, 0.0, 1.0])), Err(Error::OutsideDomain)));
    }

    #[test]
    fn exterior_values() {
        let u = ball_exterior(4, 1.0, v(&[0.0; 4])).unwrap();
        assert!((u.eval(&v(&[3f64.sqrt(), 0.0, 0.0, 0.0])).unwrap() - 1.0).abs() < 1e-14);
        assert!((u.eval(&v(&[0.0, 2f64.sqrt(), 0.0, 0.0])).unwrap() - 2.0).abs() < 1e-14);
        assert!(u.eval(&v(&[1e6, 0.0, 0.0, 0.0])).unwrap() < 1e-11);
        assert!(matches!(u.eval(&v(&[0.5, 0.0, 0.0, 0.0])), Err(Error::OutsideDomain)));
    }

    #[test]
    fn half_space_values() {
        let u = half_space(4).unwrap();
        assert_eq!(u.eval(&v(&[0.3, -1.0, 2.0, 2.0])).unwrap(), 0.5);
        assert_eq!(u.eval(&v(&[0.0, 0.0, 0.0, 1.0])).unwrap(), 1.0);
        let u = half_space(6).unwrap();
        assert_eq!(u.eval(&v(&[0.0, 0.0, 0.0, 0.0, 0.0, 4.0])).unwrap(), 1.0 / 16.0);
        assert!(matches!(half_space(3).unwrap().eval(&v(&[0.0, 0.0, -1.0])), Err(Error::OutsideDomain)));
    }

    #[test]
    fn distance_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 3..7 {
            let beta = (n as f64 - 2.0) / 2.0;
            let r = 1.5;
            let c = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let inner = ball_interior(n, r, c.clone()).unwrap();
            let outer = ball_exterior(n, r, c.clone()).unwrap();
            for _ in 0..50 {
                let dir = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).normalize();
                let d: f64 = rng.gen_range(1e-3..1.0);
                let x_in = &c + &dir * (r - d);
                let x_out = &c + &dir * (r + d);
                let a = d.powf(-beta) * (1.0 - d / (2.0 * r)).powf(-beta);
                let b = d.powf(-beta) * (1.0 + d / (2.0 * r)).powf(-beta);
                assert!((inner.eval(&x_in).unwrap() / a - 1.0).abs() < 1e-12);
                assert!((outer.eval(&x_out).unwrap() / b - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residuals_of_exact_solutions_are_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [3, 4, 5] {
            let ball = ball_interior(n, 1.0, Vector::zeros(n)).unwrap();
            let hs = half_space(n).unwrap();
            for _ in 0..20 {
                let x = Vector::from_fn(n, |_, _| rng.gen_range(-0.4..0.4));
                assert!(relative_pde_residual(&ball, &x, DEFAULT_STEP).unwrap().abs() < 1e-6);
                let mut y = x.clone();
                y[n - 1] = rng.gen_range(0.2..2.0);
                assert!(relative_pde_residual(&hs, &y, DEFAULT_STEP).unwrap().abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sum_is_a_supersolution() {
        let n = 3;
        let a = ball_interior(n, 1.0, v(&[0.0, 0.0, 0.0])).unwrap();
        let b = ball_interior(n, 1.0, v(&[0.5, 0.0, 0.0])).unwrap();
        let s = sum(a, b).unwrap();
        for x in [v(&[0.25, 0.0, 0.0]), v(&[0.3, 0.4, -0.2]), v(&[0.1, -0.5, 0.3])] {
            let r = pde_residual(&s, &x, DEFAULT_STEP).unwrap();
            assert!(r < 0.0, "{r}");
        }
    }

    #[test]
    fn barriers_are_ordered_on_the_lens() {
        // v_{r,−q} ≤ u_{r,q} wherever both are defined
        let n = 3;
        let r = 1.0;
        let q = v(&[0.0, 0.0, r]);
        let inner = ball_interior(n, r, q.clone()).unwrap();
        let outer = ball_exterior(n, r, -q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut checked = 0;
        while checked < 500 {
            let x = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)) + v(&[0.0, 0.0, 1.0]);
            if inner.contains(&x) && outer.contains(&x) {
                assert!(outer.eval(&x).unwrap() <= inner.eval(&x).unwrap());
                checked += 1;
            }
        }
    }

    #[test]
    fn pullback_of_tilted_half_space_is_a_ball_solution() {
        // {⟨ν, y⟩ > 0} with ν_1 < 0 pulls back to the ball centred at
        // (0, −aν'/ν_1) with radius a/|ν_1|
        let n = 3;
        let a = 0.8;
        let nu = v(&[-0.6, 0.0, 0.8]);
        let plane = Hyperplane::through_origin(nu.clone()).unwrap();
        let pulled = pullback_solution(a, half_space_of(n, plane).unwrap()).unwrap();
        let center = v(&[0.0, 0.0, -a * nu[2] / nu[0]]);
        let ball = ball_interior(n, a / 0.6, center.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut checked = 0;
        while checked < 200 {
            let x = &center + Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)) * (a / 0.6);
            if !ball.contains(&x) {
                continue;
            }
            assert!(pulled.contains(&x));
            let (p, b) = (pulled.eval(&x).unwrap(), ball.eval(&x).unwrap());
            assert!((p / b - 1.0).abs() < 1e-11, "{p} vs {b}");
            checked += 1;
        }
    }

    #[test]
    fn pullback_scaling() {
        let n = 4;
        let u1 = pullback_solution(1.0, half_space(n).unwrap()).unwrap();
        let u2 = pullback_solution(2.0, half_space(n).unwrap()).unwrap();
        let x = v(&[0.1, 0.2, -0.3, 0.4]);
        let ratio = u2.eval(&(&x * 2.0)).unwrap() / u1.eval(&x).unwrap();
        assert!((ratio - 0.5).abs() < 1e-13);
        // the preimage of the vertex goes to the cone vertex, outside the half-space
        assert!(matches!(u1.eval(&v(&[1.0, 0.0, 0.0, 0.0])), Err(Error::OutsideDomain)));
    }
}
