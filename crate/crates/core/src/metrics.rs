//! Full-reference image quality: MSE, PSNR, global and windowed SSIM, and
//! a Laplacian-variance blur score.
//!
//! All arithmetic is on the 8-bit level scale in 64-bit reals, whatever the
//! sample type. SSIM and the blur score operate on Rec. 601 luminance; MSE
//! and PSNR use every channel.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::load_image;
use crate::error::{Error, Result};
use crate::filter::gaussian_kernel;
use crate::image::{ImageBuffer, Plane, Sample};
use crate::json::nonfinite;

/// Image files considered by directory-level evaluation.
pub const IMAGE_EXTENSIONS: [&str; 2] = ["png", "til"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsimDenominator {
    /// `σx² + σy² + C2`.
    #[default]
    Standard,
    /// `σx²·σy² + C2`, the product form, kept for auditing published values.
    PrintedProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub window: usize,
    pub sigma: f64,
    pub denominator: SsimDenominator,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self { k1: 0.01, k2: 0.03, dynamic_range: 255.0, window: 11, sigma: 1.5, denominator: SsimDenominator::Standard }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// SSIM from first and second moments.
    pub fn combine(&self, mx: f64, my: f64, vx: f64, vy: f64, cov: f64) -> f64 {
        let (c1, c2) = (self.c1(), self.c2());
        let contrast = match self.denominator {
            SsimDenominator::Standard => vx + vy + c2,
            SsimDenominator::PrintedProduct => vx * vy + c2,
        };
        (2.0 * mx * my + c1) * (2.0 * cov + c2) / ((mx * mx + my * my + c1) * contrast)
    }
}

pub fn mse<T: Sample>(x: &ImageBuffer<T>, y: &ImageBuffer<T>) -> Result<f64> {
    x.check_same_shape(y)?;
    let n = x.data().len() as f64;
    Ok(x.data().iter().zip(y.data()).map(|(a, b)| (a.level() - b.level()).powi(2)).sum::<f64>() / n)
}

/// PSNR in dB against a 255 peak; `+inf` for identical images.
pub fn psnr<T: Sample>(x: &ImageBuffer<T>, y: &ImageBuffer<T>) -> Result<f64> {
    let m = mse(x, y)?;
    Ok(if m == 0.0 { f64::INFINITY } else { 10.0 * (255.0f64 * 255.0 / m).log10() })
}

/// One SSIM value from whole-image luminance statistics (population moments).
pub fn ssim_global<T: Sample>(x: &ImageBuffer<T>, y: &ImageBuffer<T>, p: &SsimParams) -> Result<f64> {
    x.check_same_shape(y)?;
    Ok(ssim_global_planes(&x.luminance_levels(), &y.luminance_levels(), p))
}

pub fn ssim_global_planes(a: &Plane, b: &Plane, p: &SsimParams) -> f64 {
    let n = a.data.len() as f64;
    let (ma, mb) = (a.mean(), b.mean());
    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.data.iter().zip(&b.data) {
        let (dx, dy) = (x - ma, y - mb);
        va += dx * dx;
        vb += dy * dy;
        cov += dx * dy;
    }
    p.combine(ma, mb, va / n, vb / n, cov / n)
}

/// Valid-region separable correlation with a symmetric kernel.
fn filter_valid(src: &Plane, k: &[f64]) -> Plane {
    let r = k.len();
    let (w, h) = (src.width, src.height);
    let (ow, oh) = (w + 1 - r, h + 1 - r);
    let mut tmp = Plane::zeros(ow, h);
    for y in 0..h {
        let row = &src.data[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp.data[y * ow + x] = k.iter().zip(&row[x..x + r]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = Plane::zeros(ow, oh);
    for y in 0..oh {
        let dst = &mut out.data[y * ow..(y + 1) * ow];
        for (i, kv) in k.iter().enumerate() {
            let s = &tmp.data[(y + i) * ow..(y + i + 1) * ow];
            for (d, v) in dst.iter_mut().zip(s) {
                *d += kv * v;
            }
        }
    }
    out
}

/// Mean of local SSIM over every fully contained Gaussian window.
pub fn ssim_windowed<T: Sample>(x: &ImageBuffer<T>, y: &ImageBuffer<T>, p: &SsimParams) -> Result<f64> {
    x.check_same_shape(y)?;
    ssim_windowed_planes(&x.luminance_levels(), &y.luminance_levels(), p)
}

pub fn ssim_windowed_planes(a: &Plane, b: &Plane, p: &SsimParams) -> Result<f64> {
    if p.window == 0 || p.window % 2 == 0 {
        return Err(Error::InvalidInput(format!("SSIM window must be odd, got {}", p.window)));
    }
    if a.width < p.window || a.height < p.window {
        return Err(Error::InvalidInput(format!(
            "image {}x{} smaller than the {}x{} SSIM window",
            a.width, a.height, p.window, p.window
        )));
    }
    let k = gaussian_kernel(p.sigma, p.window / 2);
    let prod = |f: fn(f64, f64) -> f64| Plane {
        width: a.width,
        height: a.height,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    };
    let mx = filter_valid(a, &k);
    let my = filter_valid(b, &k);
    let mxx = filter_valid(&prod(|x, _| x * x), &k);
    let myy = filter_valid(&prod(|_, y| y * y), &k);
    let mxy = filter_valid(&prod(|x, y| x * y), &k);
    let n = mx.data.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ux, uy) = (mx.data[i], my.data[i]);
            p.combine(ux, uy, mxx.data[i] - ux * ux, myy.data[i] - uy * uy, mxy.data[i] - ux * uy)
        })
        .sum();
    Ok(total / n as f64)
}

/// Population variance of the 3×3 Laplacian response (centre 4, cross −1)
/// over the interior of the luminance plane.
pub fn blur_score<T: Sample>(img: &ImageBuffer<T>) -> f64 {
    let l = img.luminance_levels();
    let (w, h) = (l.width, l.height);
    if w < 3 || h < 3 {
        return 0.0;
    }
    let resp: Vec<f64> = (1..h - 1)
        .flat_map(|y| {
            let l = &l;
            (1..w - 1).map(move |x| {
                4.0 * l.at(x, y) - l.at(x - 1, y) - l.at(x + 1, y) - l.at(x, y - 1) - l.at(x, y + 1)
            })
        })
        .collect();
    let n = resp.len() as f64;
    let m = resp.iter().sum::<f64>() / n;
    resp.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SsimMode {
    #[default]
    Windowed,
    Global,
}

impl FromStr for SsimMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "windowed" => Ok(Self::Windowed),
            "global" => Ok(Self::Global),
            other => Err(Error::InvalidInput(format!("unknown SSIM mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub id: String,
    #[serde(with = "nonfinite")]
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedItem {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Mean over finite PSNR values; `inf` when every scored image is identical.
    #[serde(with = "nonfinite")]
    pub mean_psnr_db: f64,
    #[serde(with = "nonfinite")]
    pub mean_ssim: f64,
    pub count: usize,
    pub psnr_inf_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team: Option<String>,
    pub ssim_mode: SsimMode,
    pub per_image: Vec<ImageScore>,
    #[serde(default)]
    pub flagged: Vec<FlaggedItem>,
    pub aggregate: Aggregate,
}

impl MetricReport {
    /// Aggregates in the given order with plain 64-bit sums.
    pub fn from_scores(per_image: Vec<ImageScore>, flagged: Vec<FlaggedItem>, ssim_mode: SsimMode) -> Self {
        let finite: Vec<f64> = per_image.iter().map(|s| s.psnr_db).filter(|v| v.is_finite()).collect();
        let psnr_inf_count = per_image.iter().filter(|s| s.psnr_db == f64::INFINITY).count();
        let mean_psnr_db = if !finite.is_empty() {
            finite.iter().sum::<f64>() / finite.len() as f64
        } else if psnr_inf_count > 0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
        let mean_ssim = if per_image.is_empty() {
            f64::NAN
        } else {
            per_image.iter().map(|s| s.ssim).sum::<f64>() / per_image.len() as f64
        };
        let count = per_image.len();
        Self {
            team: None,
            ssim_mode,
            per_image,
            flagged,
            aggregate: Aggregate { mean_psnr_db, mean_ssim, count, psnr_inf_count },
        }
    }
}

pub fn score_pair<T: Sample>(
    id: &str,
    pred: &ImageBuffer<T>,
    gt: &ImageBuffer<T>,
    mode: SsimMode,
    p: &SsimParams,
) -> Result<ImageScore> {
    let psnr_db = psnr(pred, gt)?;
    let ssim = match mode {
        SsimMode::Windowed => ssim_windowed(pred, gt, p)?,
        SsimMode::Global => ssim_global(pred, gt, p)?,
    };
    Ok(ImageScore { id: id.to_string(), psnr_db, ssim })
}

/// Image files in `dir`, keyed by file name, sorted.
pub fn list_images(dir: &Path) -> Result<BTreeMap<String, std::path::PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in rd {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if path.is_file() && is_image {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                out.insert(name.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// Scores every prediction against the ground truth of the same file name.
/// Per-item problems (no counterpart, unreadable file, size mismatch) are
/// flagged and skipped; only directory-level failures are errors.
pub fn evaluate_set(pred_dir: &Path, gt_dir: &Path, mode: SsimMode, p: &SsimParams) -> Result<MetricReport> {
    let preds = list_images(pred_dir)?;
    let gts = list_images(gt_dir)?;
    let mut flagged = Vec::new();
    for name in gts.keys().filter(|k| !preds.contains_key(*k)) {
        flagged.push(FlaggedItem { id: name.clone(), reason: "missing prediction".into() });
    }
    let jobs: Vec<(&String, &std::path::PathBuf)> = preds.iter().collect();
    let results: Vec<std::result::Result<ImageScore, FlaggedItem>> = jobs
        .par_iter()
        .map(|(name, path)| {
            let flag = |reason: String| FlaggedItem { id: (*name).clone(), reason };
            let gt_path = gts.get(*name).ok_or_else(|| flag("no ground truth with this name".into()))?;
            let pred = load_image(path).map_err(|e| flag(format!("unreadable prediction: {e}")))?;
            let gt = load_image(gt_path).map_err(|e| flag(format!("unreadable ground truth: {e}")))?;
            score_pair(name, &pred, &gt, mode, p).map_err(|e| flag(e.to_string()))
        })
        .collect();
    let mut scores = Vec::new();
    for r in results {
        match r {
            Ok(s) => scores.push(s),
            Err(f) => flagged.push(f),
        }
    }
    flagged.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(MetricReport::from_scores(scores, flagged, mode))
}
