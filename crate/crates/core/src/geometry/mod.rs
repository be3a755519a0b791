//! Hyperplanes, cones, corner charts, sphere intersections and conformal maps.

pub mod chart;
pub mod cone;
pub mod conformal;
pub mod spheres;

pub use chart::{
    cone_sandwich_check, corner_map_t, line_arc_fixture, signed_distance_graph, tangent_cone,
    ChartFixture, CornerChart, GraphKind, SandwichReport, SurfaceGraph,
};
pub use cone::{make_cone, ConeSpec, SignVector};
pub use conformal::{conformal_factor, conformal_map};
pub use spheres::{circle_chord, spheres_second_intersection, SphereIntersection};

use crate::error::{Error, Result};
use nalgebra::DVector;

pub type Vector = DVector<f64>;

/// Tolerance on `|ν| = 1` for normals handed to the geometry routines.
pub const UNIT_TOL: f64 = 1e-12;

/// Normals count as linearly independent when `det(NᵀN)` is at least this.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// A hyperplane `{x : ⟨ν, x − anchor⟩ = 0}` with a unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    normal: Vector,
    anchor: Vector,
}

impl Hyperplane {
    pub fn new(normal: Vector, anchor: Vector) -> Result<Self> {
        if normal.len() != anchor.len() {
            return Err(Error::DimensionMismatch { expected: normal.len(), got: anchor.len() });
        }
        check_unit(&normal)?;
        Ok(Self { normal, anchor })
    }

    pub fn through_origin(normal: Vector) -> Result<Self> {
        let n = normal.len();
        Self::new(normal, Vector::zeros(n))
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Positive on the side `ν` points to, zero on the plane.
    pub fn signed_distance(&self, x: &Vector) -> f64 {
        self.normal.dot(&(x - &self.anchor))
    }
}

pub fn signed_distance_plane(x: &Vector, plane: &Hyperplane) -> f64 {
    plane.signed_distance(x)
}

pub(crate) fn check_unit(v: &Vector) -> Result<()> {
    let norm = v.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::invalid(format!("normal has length {norm}, expected 1")));
    }
    Ok(())
}

/// Matrix whose columns are the given vectors.
pub(crate) fn column_matrix(cols: &[Vector]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_columns(cols)
}
