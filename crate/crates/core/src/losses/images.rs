//! Losses over image pairs and discriminator score maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Plane, Sample};
use crate::metrics::{ssim_windowed, SsimParams};

use super::{neg_log, LossValue};

/// Mean absolute difference in native sample units.
fn mean_abs<T: Sample>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<f64> {
    a.check_same_shape(b)?;
    let n = a.data().len() as f64;
    Ok(a.data().iter().zip(b.data()).map(|(x, y)| (x.raw() - y.raw()).abs()).sum::<f64>() / n)
}

/// Content term over a full-resolution pair and a low-resolution pair:
/// the sum of the two per-element mean absolute errors.
pub fn mae_content<T: Sample>(
    pred_full: &ImageBuffer<T>,
    gt_full: &ImageBuffer<T>,
    pred_low: &ImageBuffer<T>,
    gt_low: &ImageBuffer<T>,
) -> Result<f64> {
    Ok(mean_abs(pred_full, gt_full)? + mean_abs(pred_low, gt_low)?)
}

/// `1 − SSIM` with windowed SSIM and default parameters.
pub fn ssim_loss<T: Sample>(pred: &ImageBuffer<T>, gt: &ImageBuffer<T>) -> Result<f64> {
    Ok(1.0 - ssim_windowed(pred, gt, &SsimParams::default())?)
}

pub fn cycle_l1<T: Sample>(original: &ImageBuffer<T>, reconstructed: &ImageBuffer<T>) -> Result<f64> {
    mean_abs(original, reconstructed)
}

/// `−ln D(fake) + λ·mean|gt − pred|`.
pub fn pix2pix_gen_loss<T: Sample>(d_fake: f64, pred: &ImageBuffer<T>, gt: &ImageBuffer<T>, lambda: f64) -> Result<LossValue> {
    if !(0.0..=1.0).contains(&d_fake) {
        return Err(Error::InvalidInput("discriminator output must lie in [0, 1]".into()));
    }
    let (bce, clamped) = neg_log(d_fake);
    Ok(LossValue { value: bce + lambda * mean_abs(pred, gt)?, clamped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GanSide {
    Generator,
    Discriminator,
}

/// Discriminator score maps at one input scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleScores {
    /// Scores on real images; unused on the generator side.
    pub real: Option<Plane>,
    pub fake: Plane,
}

fn mean_sq_dev(p: &Plane, target: f64) -> f64 {
    p.data.iter().map(|v| (v - target).powi(2)).sum::<f64>() / p.data.len() as f64
}

/// Least-squares PatchGAN objective at full and half input resolution,
/// each scale weighted 0.5. Generator: `mean (D(fake) − 1)²`;
/// discriminator: `½[mean (D(real) − 1)² + mean D(fake)²]`.
pub fn patchgan_ms_loss(scales: &[ScaleScores], side: GanSide) -> Result<f64> {
    if scales.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "multi-scale PatchGAN takes exactly two scales (full, half), got {}",
            scales.len()
        )));
    }
    let mut total = 0.0;
    for (i, s) in scales.iter().enumerate() {
        if s.fake.data.is_empty() {
            return Err(Error::InvalidInput(format!("scale {i}: empty score map")));
        }
        let term = match side {
            GanSide::Generator => mean_sq_dev(&s.fake, 1.0),
            GanSide::Discriminator => {
                let real = s
                    .real
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput(format!("scale {i}: discriminator side needs real scores")))?;
                if (real.width, real.height) != (s.fake.width, s.fake.height) {
                    return Err(Error::DimensionMismatch(format!(
                        "scale {i}: real {}x{} vs fake {}x{}",
                        real.width, real.height, s.fake.width, s.fake.height
                    )));
                }
                0.5 * (mean_sq_dev(real, 1.0) + mean_sq_dev(&s.fake, 0.0))
            }
        };
        total += 0.5 * term;
    }
    Ok(total)
}
