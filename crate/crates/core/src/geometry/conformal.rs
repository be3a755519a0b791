//! The conformal map `T_a` sending spheres through `(±a, 0, …, 0)` to cones.

use super::Vector;
use crate::error::{Error, Result};

/// Below this relative size of `a² + 2a x_1 + |x|²` the point counts as the pole.
const POLE_TOL: f64 = 1e-14;

fn denominator(a: f64, x: &Vector) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("conformal parameter must be positive, got {a}")));
    }
    if x.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let d = a * a + 2.0 * a * x[0] + x.norm_squared();
    if d <= POLE_TOL * a * a {
        return Err(Error::Pole);
    }
    Ok(d)
}

/// `T_a x = (−a(a² − |x|²), 2a²x_2, …, 2a²x_n) / (a² + 2a x_1 + |x|²)`.
///
/// Sends `(a, 0, …, 0)` to the origin and `(−a, 0, …, 0)` to infinity.
pub fn conformal_map(a: f64, x: &Vector) -> Result<Vector> {
    let d = denominator(a, x)?;
    let mut y = x * (2.0 * a * a / d);
    y[0] = -a * (a * a - x.norm_squared()) / d;
    Ok(y)
}

/// The factor `λ(x) = 2a² / (a² + 2a x_1 + |x|²)` by which `T_a` scales lengths.
pub fn conformal_factor(a: f64, x: &Vector) -> Result<f64> {
    Ok(2.0 * a * a / denominator(a, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    #[test]
    fn special_points() {
        let a = 1.7;
        assert!(conformal_map(a, &v(&[a, 0.0, 0.0])).unwrap().norm() < 1e-15);
        assert!((conformal_map(a, &v(&[0.0, 0.0, 0.0])).unwrap() - v(&[-a, 0.0, 0.0])).norm() < 1e-15);
        assert_eq!(conformal_factor(a, &v(&[0.0, 0.0])).unwrap(), 2.0);
        assert!((conformal_factor(a, &v(&[a, 0.0])).unwrap() - 0.5).abs() < 1e-15);
        let far = conformal_map(a, &v(&[-a + 1e-6, 0.0])).unwrap();
        assert!(far.norm() > 1e5);
        assert!(matches!(conformal_map(a, &v(&[-a, 0.0])), Err(Error::Pole)));
    }

    #[test]
    fn jacobian_is_conformal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(2..6);
            let a = rng.gen_range(0.5..2.0);
            let x = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let lam = conformal_factor(a, &x).unwrap();
            let h = 1e-5;
            let mut j = DMatrix::zeros(n, n);
            for c in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let col = (conformal_map(a, &xp).unwrap() - conformal_map(a, &xm).unwrap()) / (2.0 * h);
                j.set_column(c, &col);
            }
            let err = (j.transpose() * &j - DMatrix::identity(n, n) * lam * lam).norm();
            assert!(err <= 1e-6 * (1.0 + lam * lam), "{err}");
        }
    }

    #[test]
    fn spheres_through_both_poles_become_planes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = 1.3;
        for _ in 0..20 {
            // centre on the bisecting plane x_1 = 0
            let c = v(&[0.0, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            let rad = (a * a + c.norm_squared()).sqrt();
            let mut pts = Vec::new();
            while pts.len() < 50 {
                let dir = Vector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
                if dir.norm() < 0.1 {
                    continue;
                }
                let x = &c + dir.normalize() * rad;
                if (&x + v(&[a, 0.0, 0.0])).norm() < 0.3 {
                    continue;
                }
                pts.push(conformal_map(a, &x).unwrap());
            }
            // the image plane passes through T_a(a e_1) = 0; fit its normal
            let m = DMatrix::from_fn(pts.len(), 3, |i, j| pts[i][j]);
            let svd = (m.transpose() * &m).symmetric_eigen();
            let (imin, _) = svd.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &e)| {
                if e < b.1 { (i, e) } else { b }
            });
            let normal = svd.eigenvectors.column(imin).into_owned();
            let worst = pts.iter().map(|p| normal.dot(p).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-8, "{worst}");
        }
    }
}
