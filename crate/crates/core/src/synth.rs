//! Procedural stained-tissue textures and synthetic registration cases.
//!
//! Textures are continuous functions of position (multi-octave value
//! noise), so a warped copy can be rendered exactly by evaluating the
//! texture at mapped coordinates instead of resampling pixels.

use crate::error::Result;
use crate::image::ImageBuffer;
use crate::model::LandmarkSet;
use crate::registration::{DeformationGrid, Homography};
use crate::rng::rng_new;

#[inline]
fn hash2(ix: i64, iy: i64, salt: u64) -> f64 {
    let mut z = (ix as u64).wrapping_mul(0x9e3779b97f4a7c15)
        ^ (iy as u64).wrapping_mul(0xc2b2ae3d27d4eb4f)
        ^ salt.wrapping_mul(0x165667b19e3779f9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Smooth value noise in `[0, 1]` with lattice period `period`.
fn value_noise(x: f64, y: f64, period: f64, salt: u64) -> f64 {
    let (u, v) = (x / period, y / period);
    let (fx, fy) = (u.floor(), v.floor());
    let (ix, iy) = (fx as i64, fy as i64);
    let (tx, ty) = (fade(u - fx), fade(v - fy));
    let a = hash2(ix, iy, salt);
    let b = hash2(ix + 1, iy, salt);
    let c = hash2(ix, iy + 1, salt);
    let d = hash2(ix + 1, iy + 1, salt);
    (a * (1.0 - tx) + b * tx) * (1.0 - ty) + (c * (1.0 - tx) + d * tx) * ty
}

/// Layered noise fields shared by the H&E and IHC renderings of one tissue;
/// the two stains differ only in how the fields are colored.
#[derive(Debug, Clone, Copy)]
pub struct StainTexture {
    seed: u64,
}

impl StainTexture {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn octaves(&self, x: f64, y: f64, salt: u64, periods: &[(f64, f64)]) -> f64 {
        let total: f64 = periods.iter().map(|p| p.1).sum();
        periods
            .iter()
            .enumerate()
            .map(|(i, &(p, w))| w * value_noise(x, y, p, self.seed.wrapping_mul(31).wrapping_add(salt * 7 + i as u64)))
            .sum::<f64>()
            / total
    }

    /// Nuclear density in `[0, 1]`: the structure visible in both stains.
    pub fn structure(&self, x: f64, y: f64) -> f64 {
        let v = self.octaves(x, y, 1, &[(64.0, 1.0), (24.0, 0.9), (10.0, 0.8), (5.0, 0.5)]);
        ((v - 0.5) * 2.2 + 0.5).clamp(0.0, 1.0)
    }

    fn stroma(&self, x: f64, y: f64, salt: u64) -> f64 {
        self.octaves(x, y, salt, &[(96.0, 1.0), (32.0, 0.6)])
    }

    pub fn he_rgb(&self, x: f64, y: f64) -> [f64; 3] {
        let s = self.structure(x, y);
        let t = self.stroma(x, y, 2);
        [
            (0.97 - 0.25 * t - 0.45 * s).clamp(0.0, 1.0),
            (0.95 - 0.55 * t - 0.60 * s).clamp(0.0, 1.0),
            (0.97 - 0.15 * t - 0.25 * s).clamp(0.0, 1.0),
        ]
    }

    pub fn ihc_rgb(&self, x: f64, y: f64) -> [f64; 3] {
        let s = self.structure(x, y);
        let t = self.stroma(x, y, 2);
        [
            (0.96 - 0.30 * t - 0.50 * s).clamp(0.0, 1.0),
            (0.95 - 0.45 * t - 0.50 * s).clamp(0.0, 1.0),
            (0.93 - 0.60 * t - 0.35 * s).clamp(0.0, 1.0),
        ]
    }

    /// Renders `rgb(map(x, y))` for every pixel, 8-bit.
    pub fn render_u8(
        &self,
        w: usize,
        h: usize,
        rgb: impl Fn(&Self, f64, f64) -> [f64; 3],
        map: impl Fn(f64, f64) -> [f64; 2],
    ) -> ImageBuffer<u8> {
        let mut data = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let [u, v] = map(x as f64, y as f64);
                data.extend(rgb(self, u, v).iter().map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8));
            }
        }
        ImageBuffer::new(w, h, 3, data).expect("consistent dims")
    }
}

/// Unit-range H&E-like rendering (`channels` 3) or its luminance (`channels` 1).
pub fn value_noise_image(w: usize, h: usize, channels: usize, seed: u64) -> ImageBuffer<f64> {
    let tex = StainTexture::new(seed);
    let mut data = Vec::with_capacity(w * h * channels);
    for y in 0..h {
        for x in 0..w {
            let c = tex.he_rgb(x as f64, y as f64);
            if channels == 1 {
                data.push(0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]);
            } else {
                data.extend_from_slice(&c);
            }
        }
    }
    ImageBuffer::new(w, h, channels, data).expect("consistent dims")
}

/// A moving/fixed pair related by a known dense warp:
/// `fixed(x) = moving(x + u(x))`.
pub struct DeformableCase {
    pub moving: ImageBuffer<u8>,
    pub fixed: ImageBuffer<u8>,
    pub truth: DeformationGrid,
}

pub fn deformable_case(size: usize, spacing: usize, max_disp: f64, seed: u64) -> Result<DeformableCase> {
    let tex = StainTexture::new(seed);
    let truth = DeformationGrid::random((size, size), spacing, max_disp, &mut rng_new(seed ^ 0xdef0))?;
    let moving = tex.render_u8(size, size, StainTexture::he_rgb, |x, y| [x, y]);
    let fixed = tex.render_u8(size, size, StainTexture::he_rgb, |x, y| {
        let d = truth.displacement_at(x, y);
        [x + d[0], y + d[1]]
    });
    Ok(DeformableCase { moving, fixed, truth })
}

/// `n × n` evaluation points at cell centres of a regular grid.
pub fn landmark_grid(w: usize, h: usize, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .flat_map(|j| (0..n).map(move |i| [(i as f64 + 0.5) * w as f64 / n as f64, (j as f64 + 0.5) * h as f64 / n as f64]))
        .collect()
}

/// Whole-slide-like H&E/IHC pair with a known global projective and local
/// B-spline misalignment. The true fixed→moving map is
/// `φ(x) = H⁻¹(x + u(x))`, and the IHC image is `ihc(φ(x))`.
pub struct SyntheticPair {
    pub he: ImageBuffer<u8>,
    pub ihc: ImageBuffer<u8>,
    pub homography: Homography,
    pub field: DeformationGrid,
    pub landmarks: LandmarkSet,
}

impl SyntheticPair {
    pub fn true_moving_point(&self, x: [f64; 2]) -> [f64; 2] {
        let d = self.field.displacement_at(x[0], x[1]);
        let inv = self.homography.inverse().expect("invertible by construction");
        inv.apply([x[0] + d[0], x[1] + d[1]]).expect("finite")
    }
}

pub fn synthetic_pair(size: usize, seed: u64) -> Result<SyntheticPair> {
    let mut rng = rng_new(seed);
    let tex = StainTexture::new(seed);
    let s = size as f64;
    let c = s / 2.0;
    // similarity about the centre plus a mild perspective term and offset
    let theta = rng.uniform(1.2, 1.8).to_radians() * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
    let scale = rng.uniform(1.015, 1.03);
    let (tx, ty) = (rng.uniform(8.0, 14.0), rng.uniform(-14.0, -8.0));
    let (cs, sn) = (scale * theta.cos(), scale * theta.sin());
    let p = 4e-6 * 2048.0 / s;
    let homography = Homography::new([
        [cs, -sn, c - cs * c + sn * c + tx],
        [sn, cs, c - sn * c - cs * c + ty],
        [p, -p, 1.0],
    ])?;
    let field_spacing = (size / 8).max(16);
    let field = DeformationGrid::random((size, size), field_spacing, 8.0, &mut rng)?;
    let inv = homography.inverse()?;

    let he = tex.render_u8(size, size, StainTexture::he_rgb, |x, y| [x, y]);
    let ihc = tex.render_u8(size, size, StainTexture::ihc_rgb, |x, y| {
        let d = field.displacement_at(x, y);
        inv.apply([x + d[0], y + d[1]]).unwrap_or([x, y])
    });

    let mut pair = SyntheticPair { he, ihc, homography, field, landmarks: LandmarkSet::default() };
    let anchors = [[0.15, 0.15], [0.85, 0.12], [0.88, 0.86], [0.14, 0.83], [0.5, 0.3], [0.32, 0.6], [0.7, 0.55], [0.5, 0.78]];
    pair.landmarks = LandmarkSet::new(
        anchors
            .iter()
            .map(|a| {
                let fixed = [a[0] * s, a[1] * s];
                (pair.true_moving_point(fixed), fixed)
            })
            .collect(),
    );
    Ok(pair)
}
