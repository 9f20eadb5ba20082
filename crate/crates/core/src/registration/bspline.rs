//! Cubic B-spline free-form deformation.
//!
//! Control point `(i, j)` sits at pixel `((i-1)·s, (j-1)·s)`, so a domain of
//! width `w` needs `ceil(w/s) + 3` control points per row for full cubic
//! support. The dense field at a pixel is the tensor-product interpolation
//! of the sixteen surrounding control displacements, and warping is by
//! inverse mapping: `out(p) = in(p + d(p))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Sample};
use crate::rng::StainRng;

use super::warp::sample_bilinear;

#[inline]
pub(crate) fn basis(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let omt = 1.0 - t;
    [
        omt * omt * omt / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Per-coordinate support along one axis: first control index and weights.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisSupport {
    pub base: usize,
    pub w: [f64; 4],
}

/// Support along an axis for full-resolution coordinate `x`.
#[inline]
pub(crate) fn axis_support(x: f64, spacing: f64, n_ctrl: usize) -> AxisSupport {
    let u = (x / spacing).max(0.0);
    let cell = (u.floor() as usize).min(n_ctrl - 4);
    let t = (u - cell as f64).clamp(0.0, 1.0 + 1e-12);
    AxisSupport { base: cell, w: basis(t) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationGrid {
    pub spacing: usize,
    pub nx: usize,
    pub ny: usize,
    /// Row-major `(dx, dy)` per control point, pixels.
    pub disp: Vec<[f64; 2]>,
    pub domain: (usize, usize),
}

impl DeformationGrid {
    pub fn control_dims(domain: (usize, usize), spacing: usize) -> (usize, usize) {
        (domain.0.div_ceil(spacing) + 3, domain.1.div_ceil(spacing) + 3)
    }

    pub fn zeros(domain: (usize, usize), spacing: usize) -> Result<Self> {
        Self::uniform(domain, spacing, [0.0, 0.0])
    }

    /// Every control point displaced by `d`; by partition of unity the dense
    /// field is `d` everywhere.
    pub fn uniform(domain: (usize, usize), spacing: usize, d: [f64; 2]) -> Result<Self> {
        if spacing == 0 || domain.0 == 0 || domain.1 == 0 {
            return Err(Error::InvalidInput("grid spacing and domain must be positive".into()));
        }
        let (nx, ny) = Self::control_dims(domain, spacing);
        Ok(Self { spacing, nx, ny, disp: vec![d; nx * ny], domain })
    }

    /// Control displacements drawn uniformly, then scaled so the largest
    /// dense displacement over the domain has magnitude `max_disp`.
    pub fn random(domain: (usize, usize), spacing: usize, max_disp: f64, rng: &mut StainRng) -> Result<Self> {
        let mut g = Self::zeros(domain, spacing)?;
        for d in &mut g.disp {
            *d = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        }
        let m = g.max_magnitude();
        if m > 0.0 {
            let k = max_disp / m;
            g.disp.iter_mut().for_each(|d| *d = [d[0] * k, d[1] * k]);
        }
        Ok(g)
    }

    #[inline]
    pub(crate) fn eval_support(&self, sx: &AxisSupport, sy: &AxisSupport) -> [f64; 2] {
        let mut acc = [0.0, 0.0];
        for (l, wy) in sy.w.iter().enumerate() {
            let row = (sy.base + l) * self.nx + sx.base;
            let mut rx = [0.0, 0.0];
            for (k, wx) in sx.w.iter().enumerate() {
                let d = self.disp[row + k];
                rx[0] += wx * d[0];
                rx[1] += wx * d[1];
            }
            acc[0] += wy * rx[0];
            acc[1] += wy * rx[1];
        }
        acc
    }

    /// Dense displacement at a (possibly fractional) pixel position.
    pub fn displacement_at(&self, x: f64, y: f64) -> [f64; 2] {
        let s = self.spacing as f64;
        self.eval_support(&axis_support(x, s, self.nx), &axis_support(y, s, self.ny))
    }

    /// Row-major dense field over the domain.
    pub fn dense(&self) -> Vec<[f64; 2]> {
        let s = self.spacing as f64;
        let xs: Vec<AxisSupport> = (0..self.domain.0).map(|x| axis_support(x as f64, s, self.nx)).collect();
        let mut out = Vec::with_capacity(self.domain.0 * self.domain.1);
        for y in 0..self.domain.1 {
            let sy = axis_support(y as f64, s, self.ny);
            out.extend(xs.iter().map(|sx| self.eval_support(sx, &sy)));
        }
        out
    }

    pub fn mean_magnitude(&self) -> f64 {
        let d = self.dense();
        d.iter().map(|v| v[0].hypot(v[1])).sum::<f64>() / d.len() as f64
    }

    pub fn max_magnitude(&self) -> f64 {
        self.dense().iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }
}

/// Inverse-mapped bilinear warp through the grid's dense field; out-of-domain
/// preimages are exactly 0.
pub fn apply_deformation<T: Sample>(img: &ImageBuffer<T>, g: &DeformationGrid) -> Result<ImageBuffer<T>> {
    if img.dims() != g.domain {
        return Err(Error::DimensionMismatch(format!(
            "image {:?} vs grid domain {:?}",
            img.dims(),
            g.domain
        )));
    }
    let (w, h) = g.domain;
    let c = img.channels();
    let field = g.dense();
    let mut data = vec![T::from_raw(0.0); w * h * c];
    let mut px = vec![0.0; c];
    for y in 0..h {
        for x in 0..w {
            let d = field[y * w + x];
            if sample_bilinear(img, x as f64 + d[0], y as f64 + d[1], &mut px) {
                let base = (y * w + x) * c;
                for k in 0..c {
                    data[base + k] = T::from_raw(px[k]);
                }
            }
        }
    }
    ImageBuffer::new(w, h, c, data)
}
