//! Single-level orthonormal 2-D Haar transform.
//!
//! For each 2×2 block `[a b; c d]`:
//! `LL = (a+b+c+d)/2`, `LH = (a−b+c−d)/2` (column differences),
//! `HL = (a+b−c−d)/2` (row differences), `HH = (a−b−c+d)/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Plane, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DwtMode {
    /// Rec. 601 luminance, giving four sub-band channels.
    #[default]
    Luminance,
    /// Every input channel separately, four sub-bands each.
    PerChannel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarBands {
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
}

impl HaarBands {
    pub fn planes(&self) -> [&Plane; 4] {
        [&self.ll, &self.lh, &self.hl, &self.hh]
    }

    pub fn energy(&self) -> f64 {
        self.planes().iter().map(|p| p.energy()).sum()
    }
}

pub fn dwt_haar_plane(p: &Plane) -> Result<HaarBands> {
    if p.width % 2 != 0 || p.height % 2 != 0 || p.width == 0 || p.height == 0 {
        return Err(Error::InvalidInput(format!("Haar transform needs even dimensions, got {}x{}", p.width, p.height)));
    }
    let (w, h) = (p.width / 2, p.height / 2);
    let band = |f: fn(f64, f64, f64, f64) -> f64| {
        Plane::from_fn(w, h, |x, y| {
            let (a, b) = (p.at(2 * x, 2 * y), p.at(2 * x + 1, 2 * y));
            let (c, d) = (p.at(2 * x, 2 * y + 1), p.at(2 * x + 1, 2 * y + 1));
            f(a, b, c, d)
        })
    };
    Ok(HaarBands {
        ll: band(|a, b, c, d| (a + b + c + d) / 2.0),
        lh: band(|a, b, c, d| (a - b + c - d) / 2.0),
        hl: band(|a, b, c, d| (a + b - c - d) / 2.0),
        hh: band(|a, b, c, d| (a - b - c + d) / 2.0),
    })
}

pub fn idwt_haar_plane(bands: &HaarBands) -> Result<Plane> {
    let (w, h) = (bands.ll.width, bands.ll.height);
    if bands.planes().iter().any(|p| (p.width, p.height) != (w, h)) {
        return Err(Error::DimensionMismatch("sub-bands differ in size".into()));
    }
    let mut out = Plane::zeros(2 * w, 2 * h);
    for y in 0..h {
        for x in 0..w {
            let (ll, lh, hl, hh) = (bands.ll.at(x, y), bands.lh.at(x, y), bands.hl.at(x, y), bands.hh.at(x, y));
            *out.at_mut(2 * x, 2 * y) = (ll + lh + hl + hh) / 2.0;
            *out.at_mut(2 * x + 1, 2 * y) = (ll - lh + hl - hh) / 2.0;
            *out.at_mut(2 * x, 2 * y + 1) = (ll + lh - hl - hh) / 2.0;
            *out.at_mut(2 * x + 1, 2 * y + 1) = (ll - lh - hl + hh) / 2.0;
        }
    }
    Ok(out)
}

/// Sub-bands in native sample units: one [`HaarBands`] for luminance mode,
/// one per channel otherwise.
pub fn dwt_haar<T: Sample>(img: &ImageBuffer<T>, mode: DwtMode) -> Result<Vec<HaarBands>> {
    match mode {
        DwtMode::Luminance => Ok(vec![dwt_haar_plane(&img.luminance_raw())?]),
        DwtMode::PerChannel => (0..img.channels()).map(|c| dwt_haar_plane(&img.channel_plane(c))).collect(),
    }
}

/// Inverse of [`dwt_haar`]: one reconstructed plane per band set.
pub fn idwt_haar(bands: &[HaarBands]) -> Result<Vec<Plane>> {
    bands.iter().map(idwt_haar_plane).collect()
}
