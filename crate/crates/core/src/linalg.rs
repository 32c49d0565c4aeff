//! Planar vectors and 2x2 matrices.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Smallest eigenvalue allowed in a covariance after numerical cleanup.
pub const EIGEN_FLOOR: f64 = 1e-12;

pub fn is_finite_mat(m: &Mat2) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn is_finite_vec(v: &Vec2) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Symmetric and both eigenvalues strictly positive.
pub fn is_spd(m: &Mat2) -> bool {
    if !is_finite_mat(m) {
        return false;
    }
    let asym = (m[(0, 1)] - m[(1, 0)]).abs();
    let scale = m[(0, 0)].abs().max(m[(1, 1)].abs()).max(1e-300);
    if asym > 1e-9 * scale {
        return false;
    }
    // Sylvester's criterion on the symmetric part.
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    m[(0, 0)] > 0.0 && m[(0, 0)] * m[(1, 1)] - off * off > 0.0
}

pub fn symmetrize(m: &Mat2) -> Mat2 {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Mat2::new(m[(0, 0)], off, off, m[(1, 1)])
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &Mat2) -> f64 {
    let s = symmetrize(m);
    let half_tr = 0.5 * (s[(0, 0)] + s[(1, 1)]);
    let half_diff = 0.5 * (s[(0, 0)] - s[(1, 1)]);
    half_tr + (half_diff * half_diff + s[(0, 1)] * s[(0, 1)]).sqrt()
}

/// Unit eigenvector for the largest eigenvalue of a symmetric matrix.
pub fn max_eigenvector(m: &Mat2) -> Vec2 {
    let s = symmetrize(m);
    let lambda = max_eigenvalue(&s);
    // (S - lambda I) v = 0; pick the better-conditioned row.
    let a = s[(0, 0)] - lambda;
    let b = s[(0, 1)];
    let d = s[(1, 1)] - lambda;
    let v = if a.abs() + b.abs() >= b.abs() + d.abs() {
        Vec2::new(-b, a)
    } else {
        Vec2::new(d, -b)
    };
    let n = v.norm();
    if n < 1e-300 {
        // Isotropic: every direction is an eigenvector.
        Vec2::new(1.0, 0.0)
    } else {
        v / n
    }
}

/// Symmetrize and lift eigenvalues to at least [`EIGEN_FLOOR`].
///
/// Matrices that are already symmetric with eigenvalues above the floor
/// come back bit-identical.
pub fn clean_covariance(m: &Mat2) -> Mat2 {
    let s = symmetrize(m);
    let off = s[(0, 1)];
    let det = s[(0, 0)] * s[(1, 1)] - off * off;
    let half_tr = 0.5 * (s[(0, 0)] + s[(1, 1)]);
    let min_eig = half_tr - ((0.5 * (s[(0, 0)] - s[(1, 1)])).powi(2) + off * off).sqrt();
    if min_eig >= EIGEN_FLOOR && det > 0.0 {
        return s;
    }
    let eig = SymmetricEigen::new(s);
    let vals = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let v = eig.eigenvectors;
    symmetrize(&(v * Mat2::from_diagonal(&vals) * v.transpose()))
}

pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}
