//! Infinite cones bounded by hyperplanes through a common vertex, described
//! by the sign vectors of their components.

use super::{check_unit, column_matrix, Vector, DEGENERACY_TOL};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Entry `l_i ∈ {−1, +1}` selects the side of the i-th hyperplane:
/// `+1` is the side the inner normal points to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.iter().any(|&l| l != 1 && l != -1) {
            return Err(Error::InvalidComponents(format!("{entries:?} has entries other than ±1")));
        }
        Ok(Self(entries))
    }

    pub fn all_positive(k: usize) -> Self {
        Self(vec![1; k])
    }

    pub fn all_negative(k: usize) -> Self {
        Self(vec![-1; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &SignVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn flipped_up(&self, i: usize) -> SignVector {
        let mut v = self.0.clone();
        v[i] = 1;
        SignVector(v)
    }
}

impl TryFrom<Vec<i8>> for SignVector {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        SignVector::new(v)
    }
}

impl From<SignVector> for Vec<i8> {
    fn from(s: SignVector) -> Vec<i8> {
        s.0
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|&l| if l > 0 { "+" } else { "-" }).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// An infinite cone `V = ∪_{l ∈ L} ∩_i H_i^{l_i}` with vertex `vertex`,
/// where `H_i^{+1} = {⟨ν_i, x − vertex⟩ > 0}` and `H_i^{−1}` its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    dim: usize,
    normals: Vec<Vector>,
    components: BTreeSet<SignVector>,
    vertex: Vector,
}

/// Validated cone with vertex at the origin.
pub fn make_cone(
    normals: Vec<Vector>,
    components: impl IntoIterator<Item = SignVector>,
    dim: usize,
) -> Result<ConeSpec> {
    ConeSpec::new(normals, components, Vector::zeros(dim))
}

impl ConeSpec {
    pub fn new(
        normals: Vec<Vector>,
        components: impl IntoIterator<Item = SignVector>,
        vertex: Vector,
    ) -> Result<Self> {
        let dim = vertex.len();
        let k = normals.len();
        if k == 0 || k > dim {
            return Err(Error::invalid(format!("need 1 ≤ k ≤ n normals, got k = {k}, n = {dim}")));
        }
        for nu in &normals {
            if nu.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: nu.len() });
            }
            check_unit(nu)?;
        }
        let det = gram(&normals).determinant();
        if !(det >= DEGENERACY_TOL) {
            return Err(Error::DegenerateNormals { det });
        }
        let components: BTreeSet<SignVector> = components.into_iter().collect();
        validate_components(&components, k)?;
        Ok(Self { dim, normals, components, vertex })
    }

    /// Same cone translated so its vertex sits at `vertex`.
    pub fn with_vertex(mut self, vertex: Vector) -> Result<Self> {
        if vertex.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: vertex.len() });
        }
        self.vertex = vertex;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.normals.len()
    }

    pub fn normals(&self) -> &[Vector] {
        &self.normals
    }

    pub fn components(&self) -> &BTreeSet<SignVector> {
        &self.components
    }

    pub fn vertex(&self) -> &Vector {
        &self.vertex
    }

    /// `N = (ν_1, …, ν_k)`, an `n × k` matrix.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        column_matrix(&self.normals)
    }

    pub fn gram(&self) -> DMatrix<f64> {
        gram(&self.normals)
    }

    pub fn is_convex(&self) -> bool {
        self.components.len() == 1
    }

    /// Signed distances `d_i = ⟨ν_i, x − vertex⟩` to the bounding planes.
    pub fn distances(&self, x: &Vector) -> Vector {
        let y = x - &self.vertex;
        Vector::from_iterator(self.k(), self.normals.iter().map(|nu| nu.dot(&y)))
    }

    pub fn sign_vector(&self, x: &Vector) -> Result<SignVector> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let y = x - &self.vertex;
        let scale = y.norm();
        let mut s = Vec::with_capacity(self.k());
        for (face, nu) in self.normals.iter().enumerate() {
            let d = nu.dot(&y);
            if scale == 0.0 || d.abs() < 1e-12 * scale {
                return Err(Error::OnBoundary { face });
            }
            s.push(if d > 0.0 { 1 } else { -1 });
        }
        Ok(SignVector(s))
    }

    pub fn membership(&self, x: &Vector) -> Result<bool> {
        Ok(self.components.contains(&self.sign_vector(x)?))
    }

    /// The point of `vertex + span{ν_i}` with signed distances `d`:
    /// `vertex + N(NᵀN)⁻¹ d`.
    pub fn point_from_distances(&self, d: &Vector) -> Result<Vector> {
        if d.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), got: d.len() });
        }
        let gram_inv = self.gram().try_inverse().ok_or(Error::DegenerateNormals { det: 0.0 })?;
        Ok(&self.vertex + self.normal_matrix() * (gram_inv * d))
    }

    /// `σ = ‖(NᵀN)⁻¹‖` in the spectral norm.
    pub fn sigma(&self) -> Result<f64> {
        let g = self.gram();
        let det = g.determinant();
        if !(det >= DEGENERACY_TOL) {
            return Err(Error::DegenerateNormals { det });
        }
        let eig = SymmetricEigen::new(g);
        let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(1.0 / lmin)
    }

    /// Unit edge vectors `μ_j` with `⟨ν_l, μ_j⟩ = 0` for `l ≠ j` and
    /// `⟨ν_j, μ_j⟩ > 0`; only defined for `k = n`.
    pub fn edge_directions(&self) -> Result<Vec<Vector>> {
        if self.k() != self.dim {
            return Err(Error::invalid(format!(
                "edge directions need k = n, got k = {}, n = {}",
                self.k(),
                self.dim
            )));
        }
        let n = self.normal_matrix();
        let det = n.determinant();
        if !(det * det >= DEGENERACY_TOL) {
            return Err(Error::DegenerateNormals { det: det * det });
        }
        let inv_t = n.transpose().try_inverse().ok_or(Error::DegenerateNormals { det: 0.0 })?;
        Ok((0..self.dim).map(|j| inv_t.column(j).normalize()).collect())
    }

    /// A unit vector `a` with `⟨ν_i, a⟩ > 0` for every face, namely the
    /// normalised `N(NᵀN)⁻¹(1, …, 1)`.
    pub fn standard_axis(&self) -> Vector {
        let ones = Vector::from_element(self.k(), 1.0);
        let gram_inv = self.gram().try_inverse().expect("validated at construction");
        (self.normal_matrix() * (gram_inv * ones)).normalize()
    }

    pub fn is_standardized(&self) -> bool {
        self.normals.iter().all(|nu| nu[self.dim - 1] > 0.0)
    }

    /// Rotated copy in standard position (`⟨ν_i, e_n⟩ > 0`) together with the
    /// orthogonal map `Q` taking old coordinates to new ones.
    pub fn standardized(&self) -> (ConeSpec, DMatrix<f64>) {
        let n = self.dim;
        let a = self.standard_axis();
        let mut en = Vector::zeros(n);
        en[n - 1] = 1.0;
        let v = &a - &en;
        let q = if v.norm() < 1e-14 {
            DMatrix::identity(n, n)
        } else {
            // Householder reflection swapping a and e_n
            DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared())
        };
        let normals = self.normals.iter().map(|nu| &q * nu).collect();
        let cone = ConeSpec {
            dim: n,
            normals,
            components: self.components.clone(),
            vertex: &q * &self.vertex,
        };
        (cone, q)
    }

    /// Euclidean distance from `x` to the face `F_i = ∂V ∩ P_i` of a convex
    /// cone with `k = n`. The face is the cone spanned by `μ_j`, `j ≠ i`.
    pub fn face_distance(&self, x: &Vector, i: usize) -> Result<f64> {
        if !self.is_convex() || self.k() != self.dim || i >= self.k() {
            return Err(Error::invalid("face distance needs a convex cone with k = n"));
        }
        let mu = self.edge_directions()?;
        let y = x - &self.vertex;
        let di = self.normals[i].dot(&y);
        let proj = &y - &self.normals[i] * di;
        // coordinates of the projection in the μ-basis: t_j = ⟨ν_j, proj⟩ / ⟨ν_j, μ_j⟩
        let inside_face = (0..self.k())
            .filter(|&j| j != i)
            .all(|j| self.normals[j].dot(&proj) / self.normals[j].dot(&mu[j]) >= 0.0);
        if inside_face {
            return Ok(di.abs());
        }
        if self.dim == 2 {
            let edge = &mu[1 - i];
            let t = edge.dot(&y).max(0.0);
            return Ok((&y - edge * t).norm());
        }
        Err(Error::invalid("face distance off the face interior is only implemented for n = 2"))
    }

    /// Sampled check that the cone is a graph over the hyperplane orthogonal
    /// to [`ConeSpec::standard_axis`]: moving a point of `V` along the axis
    /// keeps it in `V`. Necessary for the Lipschitz property, not sufficient.
    pub fn probe_graph_property(&self, samples: usize, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axis = self.standard_axis();
        for _ in 0..samples {
            let x = &self.vertex
                + Vector::from_iterator(self.dim, (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)));
            let Ok(inside) = self.membership(&x) else { continue };
            if !inside {
                continue;
            }
            for t in [0.1, 0.5, 1.0, 4.0] {
                match self.membership(&(&x + &axis * t)) {
                    Ok(false) => return false,
                    _ => {}
                }
            }
        }
        true
    }
}

fn gram(normals: &[Vector]) -> DMatrix<f64> {
    let n = column_matrix(normals);
    n.transpose() * n
}

/// Necessary conditions for `L` to describe a Lipschitz cone: it contains
/// `(+1,…,+1)`, excludes `(−1,…,−1)` and is closed upward.
fn validate_components(components: &BTreeSet<SignVector>, k: usize) -> Result<()> {
    if let Some(bad) = components.iter().find(|l| l.len() != k) {
        return Err(Error::InvalidComponents(format!("{bad} has length {}, expected {k}", bad.len())));
    }
    if !components.contains(&SignVector::all_positive(k)) {
        return Err(Error::InvalidComponents("missing the all-positive component".into()));
    }
    if components.contains(&SignVector::all_negative(k)) {
        return Err(Error::InvalidComponents("contains the all-negative component".into()));
    }
    for l in components {
        for i in 0..k {
            if l.0[i] < 0 && !components.contains(&l.flipped_up(i)) {
                return Err(Error::InvalidComponents(format!(
                    "not upward closed: {l} present but {} missing",
                    l.flipped_up(i)
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    fn sv(x: &[i8]) -> SignVector {
        SignVector::new(x.to_vec()).unwrap()
    }

    fn quadrant() -> ConeSpec {
        make_cone(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])], [sv(&[1, 1])], 2).unwrap()
    }

    /// Three independent normals with positive last component.
    fn four_component_cone() -> ConeSpec {
        let normals = vec![
            v(&[0.6, 0.0, 0.8]),
            v(&[-0.3, 0.5196152422706632, 0.8]),
            v(&[-0.3, -0.5196152422706632, 0.8]),
        ];
        make_cone(
            normals,
            [sv(&[1, 1, 1]), sv(&[-1, 1, 1]), sv(&[1, -1, 1]), sv(&[1, 1, -1])],
            3,
        )
        .unwrap()
    }

    #[test]
    fn first_quadrant() {
        let c = quadrant();
        assert!(c.membership(&v(&[1.0, 2.0])).unwrap());
        assert!(!c.membership(&v(&[-1.0, -1.0])).unwrap());
        assert!(matches!(c.membership(&v(&[0.0, 1.0])), Err(Error::OnBoundary { face: 0 })));
    }

    #[test]
    fn four_component_cone_is_accepted() {
        let c = four_component_cone();
        assert_eq!(c.components().len(), 4);
        assert!(c.is_standardized());
        assert!(c.probe_graph_property(2000, 7));
        // sign vector (−,−,+) is not among the four components
        let mu = c.edge_directions().unwrap();
        // x = −μ_1 − μ_2 + μ_3 has d = (−a, −b, +c)
        let x = -&mu[0] - &mu[1] + &mu[2];
        assert_eq!(c.sign_vector(&x).unwrap(), sv(&[-1, -1, 1]));
        assert!(!c.membership(&x).unwrap());
        let y = -&mu[0] + &mu[1] + &mu[2];
        assert!(c.membership(&y).unwrap());
    }

    #[test]
    fn invalid_component_sets() {
        let normals = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        assert!(matches!(
            make_cone(normals.clone(), [sv(&[-1, -1])], 2),
            Err(Error::InvalidComponents(_))
        ));
        assert!(matches!(
            make_cone(normals.clone(), [sv(&[1, 1]), sv(&[-1, -1])], 2),
            Err(Error::InvalidComponents(_))
        ));
        assert!(matches!(
            make_cone(normals, [sv(&[1, -1])], 2),
            Err(Error::InvalidComponents(_))
        ));
        // not upward closed: (−,−,+) without (+,−,+)
        let c = four_component_cone();
        let bad = make_cone(
            c.normals().to_vec(),
            [sv(&[1, 1, 1]), sv(&[-1, 1, 1]), sv(&[-1, -1, 1])],
            3,
        );
        assert!(matches!(bad, Err(Error::InvalidComponents(_))));
    }

    #[test]
    fn degenerate_normals() {
        let normals = vec![v(&[1.0, 0.0]), v(&[1.0, 0.0])];
        assert!(matches!(make_cone(normals, [sv(&[1, 1])], 2), Err(Error::DegenerateNormals { .. })));
        let eps: f64 = 1e-6;
        let normals = vec![v(&[1.0, 0.0]), v(&[(1.0 - eps * eps).sqrt(), eps])];
        assert!(matches!(make_cone(normals, [sv(&[1, 1])], 2), Err(Error::DegenerateNormals { .. })));
    }

    #[test]
    fn sigma_values() {
        assert!((quadrant().sigma().unwrap() - 1.0).abs() < 1e-14);
        // ⟨ν_1, ν_2⟩ = 1/2: Gram eigenvalues 1 ± 1/2
        let c = make_cone(
            vec![v(&[1.0, 0.0]), v(&[0.5, 0.75f64.sqrt()])],
            [sv(&[1, 1])],
            2,
        )
        .unwrap();
        assert!((c.sigma().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn edge_directions_basis_and_wedge() {
        let mu = quadrant().edge_directions().unwrap();
        assert!((&mu[0] - v(&[1.0, 0.0])).norm() < 1e-15);
        assert!((&mu[1] - v(&[0.0, 1.0])).norm() < 1e-15);

        // wedge of opening ω between the rays at angle 0 and ω
        let w: f64 = 1.1;
        let c = make_cone(vec![v(&[0.0, 1.0]), v(&[w.sin(), -w.cos()])], [sv(&[1, 1])], 2).unwrap();
        let mu = c.edge_directions().unwrap();
        // μ_1 ⊥ ν_2 with ⟨ν_1, μ_1⟩ > 0: the ray at angle ω
        assert!((&mu[0] - v(&[w.cos(), w.sin()])).norm() < 1e-14);
        assert!((&mu[1] - v(&[1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn standardization_rotates_axis_to_en() {
        let c = make_cone(
            vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])],
            [sv(&[1, 1])],
            3,
        )
        .unwrap();
        assert!(!c.is_standardized());
        let (s, q) = c.standardized();
        assert!(s.is_standardized());
        assert!((q.transpose() * &q - DMatrix::identity(3, 3)).norm() < 1e-14);
        let x = v(&[0.3, 0.7, -2.0]);
        assert_eq!(c.membership(&x).unwrap(), s.membership(&(&q * &x)).unwrap());
    }

    #[test]
    fn point_from_distances_recovers_projection() {
        let c = four_component_cone();
        let x = v(&[0.2, -0.4, 1.3]);
        let d = c.distances(&x);
        let y = c.point_from_distances(&d).unwrap();
        // k = n: the projection is the point itself
        assert!((&y - &x).norm() < 1e-13);
    }

    #[test]
    fn face_distance_in_wedge() {
        let c = quadrant();
        // near the x2 = 0 face, far from the x1 = 0 face
        let x = v(&[3.0, 0.5]);
        assert!((c.face_distance(&x, 0).unwrap() - 3.0).abs() < 1e-15);
        assert!((c.face_distance(&x, 1).unwrap() - 0.5).abs() < 1e-15);
        // obtuse wedge: projection can fall outside the face
        let w: f64 = 2.5;
        let c = make_cone(vec![v(&[0.0, 1.0]), v(&[w.sin(), -w.cos()])], [sv(&[1, 1])], 2).unwrap();
        let x = v(&[(w - 0.1).cos(), (w - 0.1).sin()]);
        let d0 = c.face_distance(&x, 0).unwrap();
        assert!((d0 - 1.0).abs() < 1e-14, "nearest point of the x1-axis ray is the vertex: {d0}");
    }

    fn unit_vec(n: usize) -> impl Strategy<Value = Vector> {
        prop::collection::vec(-1.0f64..1.0, n)
            .prop_filter("nonzero", |x| x.iter().map(|a| a * a).sum::<f64>() > 0.05)
            .prop_map(|x| Vector::from_vec(x).normalize())
    }

    proptest! {
        #[test]
        fn edge_direction_postconditions(
            normals in (2usize..6).prop_flat_map(|n| prop::collection::vec(unit_vec(n), n))
        ) {
            let n = normals.len();
            let det = { let m = column_matrix(&normals); (m.transpose() * m).determinant() };
            prop_assume!(det > 1e-3);
            let cone = make_cone(normals.clone(), [SignVector::all_positive(n)], n).unwrap();
            let mu = cone.edge_directions().unwrap();
            for j in 0..n {
                prop_assert!((mu[j].norm() - 1.0).abs() < 1e-10);
                prop_assert!(normals[j].dot(&mu[j]) > 0.0);
                for l in 0..n {
                    if l != j {
                        prop_assert!(normals[l].dot(&mu[j]).abs() < 1e-10);
                    }
                }
            }
        }

        #[test]
        fn membership_is_dilation_invariant(
            x in prop::collection::vec(-2.0f64..2.0, 3),
            lambda in 1e-3f64..1e3,
        ) {
            let cone = four_component_cone();
            let x = Vector::from_vec(x);
            if let Ok(inside) = cone.membership(&x) {
                prop_assert_eq!(cone.membership(&(&x * lambda)).unwrap(), inside);
            }
        }
    }
}
