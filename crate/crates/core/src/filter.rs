//! Smoothing, pyramid and correlation helpers on [`Plane`]s.

use crate::image::{ImageBuffer, Plane, Sample};

/// Normalized 1-D Gaussian of the given radius.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur, clamp-to-edge, radius `ceil(3σ)`.
pub fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    if sigma <= 0.0 {
        return p.clone();
    }
    let r = (3.0 * sigma).ceil() as usize;
    let k = gaussian_kernel(sigma, r);
    let (w, h) = (p.width, p.height);
    let mut tmp = Plane::zeros(w, h);
    for y in 0..h {
        let row = &p.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let xi = (x as isize + i as isize - r as isize).clamp(0, w as isize - 1) as usize;
                acc += kv * row[xi];
            }
            tmp.data[y * w + x] = acc;
        }
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for (i, kv) in k.iter().enumerate() {
            let yi = (y as isize + i as isize - r as isize).clamp(0, h as isize - 1) as usize;
            let src = &tmp.data[yi * w..(yi + 1) * w];
            let dst = &mut out.data[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += kv * s;
            }
        }
    }
    out
}

/// 2×2 box average; odd trailing rows/columns are dropped.
pub fn downsample2(p: &Plane) -> Plane {
    let (w, h) = (p.width / 2, p.height / 2);
    Plane::from_fn(w, h, |x, y| {
        0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1))
    })
}

/// Inverted unit-range luminance smoothed with σ = 2. Dark hematoxylin
/// structure becomes bright in both stains.
pub fn preprocess<T: Sample>(img: &ImageBuffer<T>) -> Plane {
    let mut lum = img.luminance_levels();
    lum.data.iter_mut().for_each(|v| *v = 1.0 - *v / 255.0);
    gaussian_blur(&lum, 2.0)
}

/// Zero-normalized cross-correlation; `None` when either side is constant.
pub fn ncc(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    let denom = (saa * sbb).sqrt();
    if saa <= 1e-12 * n || sbb <= 1e-12 * n || denom == 0.0 {
        None
    } else {
        Some(sab / denom)
    }
}
