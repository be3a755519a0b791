//! Intersections of circles and spheres passing through a common point.

use super::{check_unit, column_matrix, Vector, DEGENERACY_TOL};
use crate::error::{Error, Result};

/// Length of the common chord of two circles of radii `r1`, `r2` meeting at
/// `p`, where `alpha` is the angle between the segments from `p` to the
/// two centres.
pub fn circle_chord(r1: f64, r2: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
        return Err(Error::BadAngle(alpha));
    }
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::invalid("circle radii must be positive"));
    }
    let centres = (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * alpha.cos()).sqrt();
    Ok(2.0 * r1 * r2 * alpha.sin() / centres)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereIntersection {
    /// Second common point, in `p + span{ν_i}`.
    pub q: Vector,
    /// `|pq|`.
    pub chord: f64,
    /// Lower bound `r·√det(NᵀN) / 2^{k−2}`; strict for `k ≥ 2`, equality at `k = 1`.
    pub bound: f64,
}

impl SphereIntersection {
    pub fn bound_holds(&self) -> bool {
        self.chord >= self.bound
    }
}

/// The spheres `∂B_r(p + rν_i)` all pass through `p`; returns their other
/// common point in `p + span{ν_i}`.
///
/// Writing `q = p + y` with `y` in the span, each sphere gives
/// `|y|² = 2r⟨ν_i, y⟩`, so `Nᵀy` is a constant vector and
/// `y = t·N(NᵀN)⁻¹1` with `t = 2r / (1ᵀ(NᵀN)⁻¹1)`.
pub fn spheres_second_intersection(p: &Vector, normals: &[Vector], r: f64) -> Result<SphereIntersection> {
    let n = p.len();
    let k = normals.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 ≤ k ≤ n normals, got {k}")));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("sphere radius must be positive"));
    }
    for nu in normals {
        if nu.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: nu.len() });
        }
        check_unit(nu)?;
    }
    let nm = column_matrix(normals);
    let gram = nm.transpose() * &nm;
    let det = gram.determinant();
    if !(det >= DEGENERACY_TOL) {
        return Err(Error::DegenerateNormals { det });
    }
    let w = gram
        .clone()
        .cholesky()
        .ok_or(Error::DegenerateNormals { det })?
        .solve(&Vector::from_element(k, 1.0));
    let a = &nm * &w;
    let a2 = a.norm_squared();
    let y = a * (2.0 * r / a2);
    let chord = y.norm();
    Ok(SphereIntersection {
        q: p + y,
        chord,
        bound: r * det.sqrt() / 2f64.powi(k as i32 - 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    #[test]
    fn chord_values() {
        assert!((circle_chord(1.0, 1.0, PI / 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((circle_chord(1.0, 1.0, PI / 3.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        // unequal circles become tangent as the angle closes
        assert!(circle_chord(1.0, 2.0, 1e-9).unwrap() < 1e-8);
        assert!(matches!(circle_chord(1.0, 1.0, PI), Err(Error::BadAngle(_))));
        assert!(matches!(circle_chord(1.0, 1.0, 0.0), Err(Error::BadAngle(_))));
    }

    #[test]
    fn orthogonal_circles() {
        let s = spheres_second_intersection(&v(&[0.0, 0.0]), &[v(&[1.0, 0.0]), v(&[0.0, 1.0])], 1.0).unwrap();
        assert!((&s.q - v(&[1.0, 1.0])).norm() < 1e-15);
        assert!((s.chord - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.bound, 1.0);
        assert!(s.bound_holds());
    }

    #[test]
    fn single_sphere_gives_antipode() {
        let p = v(&[1.0, 2.0, 3.0]);
        let nu = v(&[0.0, 0.6, 0.8]);
        let s = spheres_second_intersection(&p, &[nu.clone()], 0.5).unwrap();
        assert!((&s.q - (&p + nu)).norm() < 1e-15);
        assert!((s.chord - 1.0).abs() < 1e-15);
    }

    #[test]
    fn q_lies_on_every_sphere() {
        let normals = [v(&[0.6, 0.0, 0.8]), v(&[0.0, 1.0, 0.0]), v(&[-0.8, 0.0, 0.6])];
        let p = v(&[0.1, -0.2, 0.3]);
        let s = spheres_second_intersection(&p, &normals, 2.0).unwrap();
        for nu in &normals {
            let c = &p + nu * 2.0;
            assert!(((&s.q - c).norm() - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn degenerate_normals_rejected() {
        let nu = v(&[1.0, 0.0]);
        assert!(matches!(
            spheres_second_intersection(&v(&[0.0, 0.0]), &[nu.clone(), nu], 1.0),
            Err(Error::DegenerateNormals { .. })
        ));
    }
}
