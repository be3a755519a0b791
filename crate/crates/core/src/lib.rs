//! Numerical solvers and verification checks for the boundary blow-up problem
//!
//! ```text
//! Δu = ¼ n(n−2) u^{(n+2)/(n−2)}   in Ω ⊂ ℝⁿ,
//!  u = +∞                          on ∂Ω,
//! ```
//!
//! whose solution gives the complete conformal metric `u^{4/(n−2)} |dx|²` of
//! constant scalar curvature `−n(n−1)`.
//!
//! The crate is organised by role:
//!
//! * [`geometry`]: hyperplanes, signed distances, sign-vector cones, corner
//!   charts and the map onto their tangent cones, sphere intersections and
//!   the conformal transforms that straighten spheres into planes.
//! * [`closed_forms`]: exact solutions in balls, ball complements and
//!   half-spaces, sums (supersolutions) and conformal pullbacks.
//! * [`cone_solver`]: the reduced problem on the sphere for cone solutions
//!   `u_V(x) = |x|^{−(n−2)/2} g(θ)`.
//! * [`field_solver`]: radial profiles and two-dimensional cross-section
//!   solves on Cartesian and conformally mapped grids.
//! * [`verifier`]: rate fits and bound checks turning the asymptotic
//!   estimates into pass/fail numbers.

pub mod closed_forms;
pub mod cone_solver;
pub mod equation;
pub mod error;
pub mod field_solver;
pub mod geometry;
pub mod verifier;

mod linalg;
mod ode;

pub use equation::Equation;
pub use error::{Error, Result};
