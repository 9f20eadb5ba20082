//! Raster containers.
//!
//! [`ImageBuffer`] is the carrier for slides, patches and metric inputs. It
//! is generic over the sample type: `u8` for 8-bit data as loaded from disk,
//! `f64` for unit-interval reals produced by warping and filtering.
//! [`Plane`] is a single-channel `f64` raster without range restrictions,
//! used for luminance, filter responses and wavelet sub-bands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rec. 601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Srgb,
    Grayscale,
}

/// A pixel sample type.
pub trait Sample: Copy + PartialEq + Send + Sync + std::fmt::Debug + 'static {
    /// The value in the sample's native units.
    fn raw(self) -> f64;
    /// The value on the 8-bit level scale `[0, 255]`.
    fn level(self) -> f64;
    /// Converts a native-unit value back, rounding and clamping where needed.
    fn from_raw(v: f64) -> Self;
    fn is_zero(self) -> bool;
    /// Smallest positive representable sample, used when a fill must not be black.
    fn min_positive() -> Self;
}

impl Sample for u8 {
    fn raw(self) -> f64 {
        self as f64
    }
    fn level(self) -> f64 {
        self as f64
    }
    fn from_raw(v: f64) -> Self {
        // round half up
        (v + 0.5).floor().clamp(0.0, 255.0) as u8
    }
    fn is_zero(self) -> bool {
        self == 0
    }
    fn min_positive() -> Self {
        1
    }
}

impl Sample for f64 {
    fn raw(self) -> f64 {
        self
    }
    fn level(self) -> f64 {
        self * 255.0
    }
    fn from_raw(v: f64) -> Self {
        v
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn min_positive() -> Self {
        f64::MIN_POSITIVE
    }
}

/// Row-major interleaved raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer<T = u8> {
    width: usize,
    height: usize,
    channels: usize,
    colorspace: ColorSpace,
    data: Vec<T>,
}

impl<T: Sample> ImageBuffer<T> {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        let colorspace = match channels {
            1 => ColorSpace::Grayscale,
            3 => ColorSpace::Srgb,
            c => return Err(Error::UnsupportedChannels(format!("{c} (expected 1 or 3)"))),
        };
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "data length {} != {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(Self { width, height, channels, colorspace, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: T) {
        let i = (y * self.width + x) * self.channels + c;
        self.data[i] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[T] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn same_shape<U: Sample>(&self, other: &ImageBuffer<U>) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_same_shape<U: Sample>(&self, other: &ImageBuffer<U>) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    /// Copies out the rectangle `[x0, x0+w) × [y0, y0+h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::DimensionMismatch(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Self::new(w, h, c, data)
    }

    /// Writes `src` into this image with its top-left corner at `(x0, y0)`.
    pub fn paste(&mut self, src: &Self, x0: usize, y0: usize) -> Result<()> {
        if src.channels != self.channels
            || x0 + src.width > self.width
            || y0 + src.height > self.height
        {
            return Err(Error::DimensionMismatch(format!(
                "paste {}x{}x{} at ({x0},{y0}) into {}x{}x{}",
                src.width, src.height, src.channels, self.width, self.height, self.channels
            )));
        }
        let c = self.channels;
        for y in 0..src.height {
            let dst = ((y0 + y) * self.width + x0) * c;
            let s = y * src.width * c;
            self.data[dst..dst + src.width * c].copy_from_slice(&src.data[s..s + src.width * c]);
        }
        Ok(())
    }

    /// Luminance on the 8-bit level scale (Rec. 601 for RGB).
    pub fn luminance_levels(&self) -> Plane {
        self.luminance_with(Sample::level)
    }

    /// Luminance in the sample's native units.
    pub fn luminance_raw(&self) -> Plane {
        self.luminance_with(Sample::raw)
    }

    fn luminance_with(&self, conv: impl Fn(T) -> f64) -> Plane {
        let data = if self.channels == 1 {
            self.data.iter().map(|&v| conv(v)).collect()
        } else {
            self.data
                .chunks_exact(3)
                .map(|p| {
                    LUMA_WEIGHTS[0] * conv(p[0])
                        + LUMA_WEIGHTS[1] * conv(p[1])
                        + LUMA_WEIGHTS[2] * conv(p[2])
                })
                .collect()
        };
        Plane { width: self.width, height: self.height, data }
    }

    /// Extracts one channel in native units.
    pub fn channel_plane(&self, c: usize) -> Plane {
        let data = self.data.iter().skip(c).step_by(self.channels).map(|v| v.raw()).collect();
        Plane { width: self.width, height: self.height, data }
    }
}

impl ImageBuffer<u8> {
    /// `x / 255` per sample.
    pub fn to_unit(&self) -> ImageBuffer<f64> {
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            colorspace: self.colorspace,
            data: self.data.iter().map(|&v| v as f64 / 255.0).collect(),
        }
    }
}

impl ImageBuffer<f64> {
    /// `round(x · 255)` per sample, clamped to `[0, 255]`.
    pub fn to_u8(&self) -> ImageBuffer<u8> {
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: self.channels,
            colorspace: self.colorspace,
            data: self.data.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect(),
        }
    }
}

/// Single-channel real raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "plane data length {} != {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize) -> &mut f64 {
        &mut self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Bilinear sample with clamp-to-edge addressing.
    #[inline]
    pub fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = (xc.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (yc.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f64;
        let fy = yc - y0 as f64;
        let a = self.at(x0, y0);
        let b = self.at(x1, y0);
        let c = self.at(x0, y1);
        let d = self.at(x1, y1);
        (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy
    }

    /// Bilinear sample and its spatial gradient, clamp-to-edge. The gradient
    /// is zero along an axis where the coordinate was clamped.
    #[inline]
    pub fn sample_grad_clamped(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let maxx = (self.width - 1) as f64;
        let maxy = (self.height - 1) as f64;
        let xc = x.clamp(0.0, maxx);
        let yc = y.clamp(0.0, maxy);
        let x0 = (xc.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (yc.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f64;
        let fy = yc - y0 as f64;
        let a = self.at(x0, y0);
        let b = self.at(x1, y0);
        let c = self.at(x0, y1);
        let d = self.at(x1, y1);
        let v = (a * (1.0 - fx) + b * fx) * (1.0 - fy) + (c * (1.0 - fx) + d * fx) * fy;
        let gx = if x < 0.0 || x > maxx { 0.0 } else { (b - a) * (1.0 - fy) + (d - c) * fy };
        let gy = if y < 0.0 || y > maxy { 0.0 } else { (c - a) * (1.0 - fx) + (d - b) * fx };
        (v, gx, gy)
    }
}
