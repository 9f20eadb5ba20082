//! Multi-resolution B-spline registration driven by normalized cross-correlation.
//!
//! Both images are reduced to inverted, σ=2 smoothed luminance. The moving
//! image is resampled through the grid's dense field and the negative NCC
//! against the fixed image is minimized by gradient descent on the control
//! displacements, coarse to fine. The gradient is analytic: NCC with
//! respect to each warped sample, times the bilinear image gradient, times
//! the B-spline weight of each control point. A trial step that does not
//! lower the objective is rejected and the step halved, so the accepted
//! objective sequence at each level is strictly decreasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{downsample2, preprocess};
use crate::image::{ImageBuffer, Plane, Sample};
use crate::rng::rng_new;

use super::bspline::{axis_support, AxisSupport, DeformationGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeformableConfig {
    /// Control-point spacing at full resolution, pixels.
    pub spacing: usize,
    pub pyramid_levels: usize,
    /// Maximum accepted iterations per level.
    pub iterations: usize,
    /// Initial step: largest control-point move per iteration, in pixels of
    /// the current level.
    pub step: f64,
    /// Level is finished once the step has been halved below this.
    pub min_step: f64,
    /// Fraction of pixels sampled per level; below 1 a seeded random subset
    /// is drawn once per level.
    pub sample_fraction: f64,
    pub seed: u64,
}

impl Default for DeformableConfig {
    fn default() -> Self {
        Self { spacing: 64, pyramid_levels: 3, iterations: 200, step: 0.5, min_step: 0.01, sample_fraction: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    /// Downscale factor of this level.
    pub factor: usize,
    /// Objective (negative NCC) before the first and after each accepted iteration.
    pub objective: Vec<f64>,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformableOutcome {
    pub grid: DeformationGrid,
    /// NCC of the preprocessed pair at full resolution with zero displacement.
    pub ncc_initial: f64,
    pub ncc_final: f64,
    pub levels: Vec<LevelTrace>,
}

struct Level {
    factor: f64,
    fixed: Plane,
    moving: Plane,
    xs: Vec<AxisSupport>,
    ys: Vec<AxisSupport>,
    /// Sampled pixel indices; `None` means every pixel.
    samples: Option<Vec<usize>>,
}

impl Level {
    fn new(fixed: Plane, moving: Plane, factor: usize, grid: &DeformationGrid, samples: Option<Vec<usize>>) -> Self {
        let f = factor as f64;
        let s = grid.spacing as f64;
        // level pixel centre x maps to full-resolution f·x + (f−1)/2
        let off = (f - 1.0) / 2.0;
        let xs = (0..fixed.width).map(|x| axis_support(f * x as f64 + off, s, grid.nx)).collect();
        let ys = (0..fixed.height).map(|y| axis_support(f * y as f64 + off, s, grid.ny)).collect();
        Self { factor: f, fixed, moving, xs, ys, samples }
    }

    fn pixel_count(&self) -> usize {
        self.samples.as_ref().map_or(self.fixed.data.len(), Vec::len)
    }

    fn pixel(&self, i: usize) -> usize {
        self.samples.as_ref().map_or(i, |s| s[i])
    }

    /// Objective `−NCC` and, optionally, its gradient w.r.t. control displacements.
    fn evaluate(&self, grid: &DeformationGrid, want_grad: bool) -> (f64, Option<Vec<[f64; 2]>>) {
        let n = self.pixel_count();
        let w = self.fixed.width;
        let mut warped = Vec::with_capacity(n);
        let mut grads = if want_grad { Vec::with_capacity(n) } else { Vec::new() };
        for i in 0..n {
            let p = self.pixel(i);
            let (x, y) = (p % w, p / w);
            let d = grid.eval_support(&self.xs[x], &self.ys[y]);
            let (v, gx, gy) = self
                .moving
                .sample_grad_clamped(x as f64 + d[0] / self.factor, y as f64 + d[1] / self.factor);
            warped.push(v);
            if want_grad {
                grads.push([gx, gy]);
            }
        }
        let nf = n as f64;
        let mf = (0..n).map(|i| self.fixed.data[self.pixel(i)]).sum::<f64>() / nf;
        let mm = warped.iter().sum::<f64>() / nf;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (i, &m) in warped.iter().enumerate() {
            let a = self.fixed.data[self.pixel(i)] - mf;
            let b = m - mm;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        if saa <= 0.0 || sbb <= 1e-18 {
            return (0.0, want_grad.then(|| vec![[0.0, 0.0]; grid.disp.len()]));
        }
        let norm = (saa * sbb).sqrt();
        let ncc = sab / norm;
        if !want_grad {
            return (-ncc, None);
        }
        let mut g = vec![[0.0, 0.0]; grid.disp.len()];
        for (i, &m) in warped.iter().enumerate() {
            let p = self.pixel(i);
            let (x, y) = (p % w, p / w);
            let a = self.fixed.data[p] - mf;
            let b = m - mm;
            // d(−NCC)/dm
            let dj = -(a / norm - ncc * b / sbb);
            let coef = dj / self.factor;
            let [gx, gy] = grads[i];
            if gx == 0.0 && gy == 0.0 {
                continue;
            }
            let (sx, sy) = (&self.xs[x], &self.ys[y]);
            for (l, wy) in sy.w.iter().enumerate() {
                let row = (sy.base + l) * grid.nx + sx.base;
                for (k, wx) in sx.w.iter().enumerate() {
                    let c = coef * wy * wx;
                    let cell = &mut g[row + k];
                    cell[0] += c * gx;
                    cell[1] += c * gy;
                }
            }
        }
        (-ncc, Some(g))
    }
}

fn build_pyramid(p: Plane, levels: usize) -> Vec<Plane> {
    let mut out = vec![p];
    while out.len() < levels {
        let last = out.last().unwrap();
        if last.width / 2 < 16 || last.height / 2 < 16 {
            break;
        }
        let next = downsample2(last);
        out.push(next);
    }
    out
}

fn draw_samples(len: usize, fraction: f64, seed: u64) -> Option<Vec<usize>> {
    if fraction >= 1.0 {
        return None;
    }
    let k = ((len as f64 * fraction).ceil() as usize).clamp(1, len);
    let mut rng = rng_new(seed);
    // partial Fisher-Yates, then sorted for cache-friendly access
    let mut idx: Vec<usize> = (0..len).collect();
    for i in 0..k {
        let j = i + rng.below((len - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx.sort_unstable();
    Some(idx)
}

fn optimize_level(level: &Level, grid: &mut DeformationGrid, cfg: &DeformableConfig) -> LevelTrace {
    let mut step = cfg.step;
    let (mut obj, g0) = level.evaluate(grid, true);
    let mut grad = g0.expect("gradient requested");
    let mut trace = LevelTrace { factor: level.factor as usize, objective: vec![obj], rejected: 0 };
    let mut accepted = 0;
    while accepted < cfg.iterations && step >= cfg.min_step {
        let gmax = grad.iter().map(|g| g[0].hypot(g[1])).fold(0.0, f64::max);
        if !(gmax > 1e-12) || !gmax.is_finite() {
            break;
        }
        let scale = step * level.factor / gmax;
        let mut cand = grid.clone();
        for (d, g) in cand.disp.iter_mut().zip(&grad) {
            d[0] -= scale * g[0];
            d[1] -= scale * g[1];
        }
        let (cobj, cgrad) = level.evaluate(&cand, true);
        if cobj < obj {
            *grid = cand;
            obj = cobj;
            grad = cgrad.unwrap();
            accepted += 1;
            trace.objective.push(obj);
        } else {
            step *= 0.5;
            trace.rejected += 1;
        }
    }
    trace
}

/// Registers `moving` onto `fixed`; the returned grid warps `moving` into
/// the fixed frame via [`super::apply_deformation`].
pub fn register_deformable<T: Sample>(
    moving: &ImageBuffer<T>,
    fixed: &ImageBuffer<T>,
    cfg: &DeformableConfig,
) -> Result<DeformableOutcome> {
    if moving.dims() != fixed.dims() {
        return Err(Error::DimensionMismatch(format!(
            "moving {:?} vs fixed {:?}",
            moving.dims(),
            fixed.dims()
        )));
    }
    if cfg.spacing == 0 || cfg.pyramid_levels == 0 || !(cfg.step > 0.0) {
        return Err(Error::InvalidInput("spacing, pyramid_levels and step must be positive".into()));
    }
    if !(cfg.sample_fraction > 0.0) {
        return Err(Error::InvalidInput("sample_fraction must be positive".into()));
    }
    let (w, h) = fixed.dims();
    if w < 2 || h < 2 {
        return Err(Error::InvalidInput("images must be at least 2×2".into()));
    }
    let pf = preprocess(fixed);
    let pm = preprocess(moving);
    if pf.variance() <= 1e-12 {
        return Err(Error::ZeroVariance("fixed image is constant; NCC undefined".into()));
    }

    let mut grid = DeformationGrid::zeros((w, h), cfg.spacing)?;
    let full = Level::new(pf.clone(), pm.clone(), 1, &grid, None);
    let ncc_initial = -full.evaluate(&grid, false).0;

    let fixed_pyr = build_pyramid(pf, cfg.pyramid_levels);
    let moving_pyr = build_pyramid(pm, cfg.pyramid_levels);
    let mut levels = Vec::new();
    for (li, (fp, mp)) in fixed_pyr.into_iter().zip(moving_pyr).enumerate().rev() {
        let samples = draw_samples(fp.data.len(), cfg.sample_fraction, cfg.seed.wrapping_add(li as u64));
        let level = Level::new(fp, mp, 1 << li, &grid, samples);
        levels.push(optimize_level(&level, &mut grid, cfg));
    }
    let ncc_final = -full.evaluate(&grid, false).0;
    Ok(DeformableOutcome { grid, ncc_initial, ncc_final, levels })
}
