//! Newton solves of three-point boundary value problems with a truncated
//! (finite) boundary value, shared by the angular and radial solvers.

use crate::equation::Equation;
use crate::error::{Error, Result};
use crate::linalg::{Assembly, SparseLu};
use std::ops::Range;

pub(crate) const NEWTON_RTOL: f64 = 1e-11;
pub(crate) const LEVEL_RTOL: f64 = 1e-6;
pub(crate) const MAX_NEWTON: usize = 200;

/// Three-point operator `a g_{i−1} + b g_i + c g_{i+1}` scaled by `h²`.
#[derive(Clone, Copy)]
pub(crate) struct Stencil {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

fn u_residual(eq: Equation, st: &[Stencil], g: &[f64], h: f64, range: &Range<usize>, out: &mut [f64]) {
    let c = eq.coefficient() * h * h;
    let p = eq.power();
    for i in range.clone() {
        let s = st[i];
        let left = if i == 0 { 0.0 } else { s.a * g[i - 1] };
        out[i] = left + s.b * g[i] + s.c * g[i + 1] - c * g[i].powf(p);
    }
}

fn max_abs(v: &[f64], range: &Range<usize>) -> f64 {
    range.clone().fold(0.0, |m, i| m.max(v[i].abs()))
}

/// Solves one truncation level in place; returns Newton iterations and the
/// final scaled residual.
pub(crate) fn solve_level(
    eq: Equation,
    st: &[Stencil],
    g: &mut [f64],
    h: f64,
    range: &Range<usize>,
    lu: &mut SparseLu,
) -> Result<(usize, f64)> {
    let c = eq.coefficient() * h * h;
    let p = eq.power();
    let first = range.start;
    let count = range.len();
    let mut res = vec![0.0; g.len()];
    let mut trial = g.to_vec();
    let mut trial_res = vec![0.0; g.len()];
    for iter in 0..MAX_NEWTON {
        u_residual(eq, st, g, h, range, &mut res);
        let rnorm = max_abs(&res, range);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(*v));
        if rnorm <= NEWTON_RTOL * (1.0 + gmax) {
            return Ok((iter, rnorm));
        }
        let mut jac = Assembly::new(count, 3);
        let mut rhs = vec![0.0; count];
        for i in range.clone() {
            let s = st[i];
            let row = i - first;
            if i > first {
                jac.add(row, row - 1, s.a);
            }
            jac.add(row, row, s.b - c * p * g[i].powf(p - 1.0));
            if i + 1 < range.end {
                jac.add(row, row + 1, s.c);
            }
            rhs[row] = -res[i];
        }
        let step = lu.solve(&jac, &rhs)?;
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-4 {
            for i in range.clone() {
                trial[i] = g[i] + t * step[i - first];
            }
            if range.clone().all(|i| trial[i] > 0.1 * g[i]) {
                u_residual(eq, st, &trial, h, range, &mut trial_res);
                if max_abs(&trial_res, range) < rnorm {
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if accepted {
            g[range.clone()].copy_from_slice(&trial[range.clone()]);
            continue;
        }
        // Picard step: (L − h²c g_old^{p−1}) g_new = 0 keeps g positive
        let mut lin = Assembly::new(count, 3);
        let mut rhs = vec![0.0; count];
        for i in range.clone() {
            let s = st[i];
            let row = i - first;
            if i > first {
                lin.add(row, row - 1, s.a);
            } else if i > 0 {
                rhs[row] -= s.a * g[i - 1];
            }
            lin.add(row, row, s.b - c * g[i].powf(p - 1.0));
            if i + 1 < range.end {
                lin.add(row, row + 1, s.c);
            } else {
                rhs[row] -= s.c * g[i + 1];
            }
        }
        let next = lu.solve(&lin, &rhs)?;
        if next.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NoConvergence("Picard step left the positive cone".into()));
        }
        g[range.clone()].copy_from_slice(&next);
    }
    Err(Error::NoConvergence(format!("Newton did not converge in {MAX_NEWTON} iterations")))
}

