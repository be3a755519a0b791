//! Exponents and coefficients of the equation in dimension `n`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The semilinear equation `Δu = c u^p` with `c = ¼n(n−2)` and
/// `p = (n+2)/(n−2)`, parameterised by the ambient dimension `n ≥ 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Equation {
    n: usize,
}

impl Equation {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("dimension n = {n} must be at least 3")));
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(n−2)/2`; solutions behave like `d^{−(n−2)/2}` near smooth boundaries.
    pub fn decay(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    /// `¼ n(n−2)`
    pub fn coefficient(&self) -> f64 {
        let n = self.n as f64;
        n * (n - 2.0) / 4.0
    }

    /// `(n+2)/(n−2)`
    pub fn power(&self) -> f64 {
        let n = self.n as f64;
        (n + 2.0) / (n - 2.0)
    }

    pub fn source(&self, u: f64) -> f64 {
        self.coefficient() * u.powf(self.power())
    }

    pub fn source_derivative(&self, u: f64) -> f64 {
        self.coefficient() * self.power() * u.powf(self.power() - 1.0)
    }

    /// `w = u^{−2/(n−2)}`, which vanishes linearly on the boundary.
    pub fn to_reciprocal(&self, u: f64) -> f64 {
        u.powf(-1.0 / self.decay())
    }

    /// Inverse of [`Equation::to_reciprocal`].
    pub fn from_reciprocal(&self, w: f64) -> f64 {
        w.powf(-self.decay())
    }
}

impl TryFrom<usize> for Equation {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Equation::new(n)
    }
}

impl From<Equation> for usize {
    fn from(eq: Equation) -> usize {
        eq.n
    }
}
