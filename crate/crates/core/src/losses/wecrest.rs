//! Sampling weight for histogram-balanced style sampling.

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Sample};

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
    }
}

/// 256-bin L1-normalized histogram of rounded luminance levels.
pub fn luminance_histogram<T: Sample>(img: &ImageBuffer<T>) -> Vec<f64> {
    let lum = img.luminance_levels();
    let mut h = vec![0.0; 256];
    for v in &lum.data {
        h[(v.round().clamp(0.0, 255.0)) as usize] += 1.0;
    }
    let n = lum.data.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

/// `Qᵢ = (1 + ρ(Sᵢ, Tᵢ)) / √(Σⱼ Hᵢ·Hⱼ)`, with ρ the Pearson correlation of
/// luminance and `Hⱼ` 256-bin normalized histograms.
pub fn wecrest_qi<T: Sample>(source: &ImageBuffer<T>, target: &ImageBuffer<T>, histograms: &[Vec<f64>], i: usize) -> Result<f64> {
    source.check_same_shape(target)?;
    if histograms.is_empty() {
        return Err(Error::InvalidInput("histogram set is empty".into()));
    }
    if i >= histograms.len() {
        return Err(Error::InvalidInput(format!("histogram index {i} out of range for {}", histograms.len())));
    }
    for (j, h) in histograms.iter().enumerate() {
        if h.len() != 256 {
            return Err(Error::DimensionMismatch(format!("histogram {j} has {} bins, expected 256", h.len())));
        }
        let s: f64 = h.iter().sum();
        if h.iter().any(|v| !(*v >= 0.0)) || (s - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!("histogram {j} is not L1-normalized")));
        }
    }
    let rho = pearson(&source.luminance_levels().data, &target.luminance_levels().data);
    let hi = &histograms[i];
    let denom: f64 = histograms.iter().map(|hj| hi.iter().zip(hj).map(|(a, b)| a * b).sum::<f64>()).sum();
    Ok((1.0 + rho) / denom.sqrt())
}
