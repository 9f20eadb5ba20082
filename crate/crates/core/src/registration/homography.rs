//! Projective transforms and normalized DLT estimation.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LandmarkSet;

const DET_EPS: f64 = 1e-12;

/// 3×3 projective map from moving-image to fixed-image pixel coordinates,
/// normalized so `h[2][2] = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    pub h: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self { h: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    /// Normalizes by `h[2][2]` and checks invertibility.
    pub fn new(h: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix(&Matrix3::from_fn(|r, c| h[r][c]))
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { h: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]] }
    }

    pub(crate) fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        let s = m[(2, 2)];
        if !s.is_finite() || s.abs() < DET_EPS {
            return Err(Error::Degenerate("h[2][2] vanishes; cannot normalize".into()));
        }
        let n = m / s;
        if !n.iter().all(|v| v.is_finite()) || n.determinant().abs() <= DET_EPS {
            return Err(Error::NotInvertible);
        }
        Ok(Self { h: std::array::from_fn(|r| std::array::from_fn(|c| n[(r, c)])) })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.h[r][c])
    }

    pub fn determinant(&self) -> f64 {
        self.matrix().determinant()
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.matrix().try_inverse().ok_or(Error::NotInvertible)?;
        Self::from_matrix(&inv)
    }

    /// Maps a point; `None` where the point goes to infinity.
    #[inline]
    pub fn apply(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let h = &self.h;
        let w = h[2][0] * p[0] + h[2][1] * p[1] + h[2][2];
        if w.abs() < 1e-15 {
            return None;
        }
        Some([
            (h[0][0] * p[0] + h[0][1] * p[1] + h[0][2]) / w,
            (h[1][0] * p[0] + h[1][1] * p[1] + h[1][2]) / w,
        ])
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Homography) -> Result<Self> {
        Self::from_matrix(&(self.matrix() * first.matrix()))
    }

    pub fn max_abs_diff(&self, other: &Homography) -> f64 {
        (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .map(|(r, c)| (self.h[r][c] - other.h[r][c]).abs())
            .fold(0.0, f64::max)
    }
}

/// Hartley normalization: centroid to origin, mean distance √2.
fn normalizing_transform(pts: &[[f64; 2]]) -> Result<Matrix3<f64>> {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean_dist = pts.iter().map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()).sum::<f64>() / n;
    if !(mean_dist > 0.0) || !mean_dist.is_finite() {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn transform(t: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    let v = t * Vector3::new(p[0], p[1], 1.0);
    [v[0] / v[2], v[1] / v[2]]
}

fn has_collinear_triple(pts: &[[f64; 2]]) -> bool {
    let scale = pts
        .iter()
        .flat_map(|a| pts.iter().map(move |b| (a[0] - b[0]).hypot(a[1] - b[1])))
        .fold(0.0, f64::max);
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (pts[i], pts[j], pts[k]);
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if cross.abs() <= 1e-9 * scale * scale {
                    return true;
                }
            }
        }
    }
    false
}

/// Least-squares normalized DLT. Exact on noiseless input; minimizes
/// algebraic error otherwise.
pub fn estimate_homography(lm: &LandmarkSet) -> Result<Homography> {
    let n = lm.len();
    if n < 4 {
        return Err(Error::InsufficientCorrespondences(n));
    }
    lm.validate()?;
    let src: Vec<[f64; 2]> = lm.moving().collect();
    let dst: Vec<[f64; 2]> = lm.fixed().collect();
    if n == 4 && (has_collinear_triple(&dst) || has_collinear_triple(&src)) {
        return Err(Error::Degenerate("three of four points are collinear".into()));
    }

    let t_src = normalizing_transform(&src)?;
    let t_dst = normalizing_transform(&dst)?;

    // Two rows per pair; padded with a zero row when n = 4 so the SVD is square.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (&s, &d)) in src.iter().zip(&dst).enumerate() {
        let [x, y] = transform(&t_src, s);
        let [u, v] = transform(&t_dst, d);
        let r0 = 2 * i;
        let r1 = r0 + 1;
        a[(r0, 0)] = -x;
        a[(r0, 1)] = -y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = u * x;
        a[(r0, 7)] = u * y;
        a[(r0, 8)] = u;
        a[(r1, 3)] = -x;
        a[(r1, 4)] = -y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = v * x;
        a[(r1, 7)] = v * y;
        a[(r1, 8)] = v;
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Degenerate("svd failed".into()))?;
    let sv = &svd.singular_values;
    // nalgebra sorts singular values in descending order.
    let second = sv[7];
    if second <= 1e-10 * sv[0] {
        return Err(Error::Degenerate(format!(
            "rank-deficient system (singular values {second:e} / {:e})",
            sv[0]
        )));
    }
    let h = v_t.row(8);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst.try_inverse().ok_or(Error::NotInvertible)?;
    Homography::from_matrix(&(t_dst_inv * hn * t_src))
}
