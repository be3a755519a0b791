//! Sparse linear solves for the Newton iterations.

use crate::error::{Error, Result};
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Col;

/// Normwise backward error every linear solve must reach.
pub(crate) const LINEAR_RTOL: f64 = 1e-10;

/// Triplet accumulator for a square matrix. Duplicate entries are summed.
pub(crate) struct Assembly {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl Assembly {
    pub(crate) fn new(n: usize, per_row: usize) -> Self {
        Self { n, entries: Vec::with_capacity(n * per_row) }
    }

    #[inline]
    pub(crate) fn add(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push(Triplet::new(row, col, value));
    }

    /// `‖A‖_∞`, the largest absolute row sum.
    fn row_sum_norm(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        for t in &self.entries {
            rows[t.row] += t.val.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// `b − A x`.
    fn residual(&self, b: &[f64], x: &Col<f64>) -> Vec<f64> {
        let mut r = b.to_vec();
        for t in &self.entries {
            r[t.row] -= t.val * x[t.col];
        }
        r
    }
}

/// Sparse LU with the symbolic factorisation cached across Newton steps.
///
/// The sparsity pattern of a Newton Jacobian does not change between
/// iterations, so the column ordering is computed once.
#[derive(Default)]
pub(crate) struct SparseLu {
    symbolic: Option<(Vec<usize>, Vec<usize>, SymbolicLu<usize>)>,
}

impl SparseLu {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn solve(&mut self, assembly: &Assembly, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = assembly.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &assembly.entries)
            .map_err(|e| Error::NoConvergence(format!("matrix assembly failed: {e:?}")))?;
        let sym = a.symbolic();
        let reuse = matches!(
            &self.symbolic,
            Some((cp, ri, _)) if cp.as_slice() == sym.col_ptr() && ri.as_slice() == sym.row_idx()
        );
        if !reuse {
            let s = SymbolicLu::try_new(sym)
                .map_err(|e| Error::NoConvergence(format!("symbolic LU failed: {e:?}")))?;
            self.symbolic = Some((sym.col_ptr().to_vec(), sym.row_idx().to_vec(), s));
        }
        let symbolic = self.symbolic.as_ref().map(|(_, _, s)| s.clone()).expect("set above");
        let lu = Lu::try_new_with_symbolic(symbolic, a.as_ref())
            .map_err(|e| Error::NoConvergence(format!("numeric LU failed: {e:?}")))?;

        let b = Col::<f64>::from_fn(n, |i| rhs[i]);
        let mut x = lu.solve(&b);
        let bnorm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let anorm = assembly.row_sum_norm();
        let mut rel = f64::NAN;
        // one or two refinement sweeps if pivoting lost accuracy
        for _ in 0..4 {
            let r = assembly.residual(rhs, &x);
            // normwise backward error ‖r‖ / (‖A‖‖x‖ + ‖b‖)
            let xnorm = (0..n).fold(0.0f64, |m, i| m.max(x[i].abs()));
            let scale = (anorm * xnorm + bnorm).max(f64::MIN_POSITIVE);
            rel = r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
            if !rel.is_finite() || r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NoConvergence("singular Jacobian".into()));
            }
            if rel <= LINEAR_RTOL {
                return Ok((0..n).map(|i| x[i]).collect());
            }
            let dx = lu.solve(&Col::<f64>::from_fn(n, |i| r[i]));
            x += &dx;
        }
        Err(Error::NoConvergence(format!("linear solve residual {rel:.3e} above tolerance")))
    }
}
