//! File codecs: PNG, the tiled raster container, and raw tensor files.
//!
//! The tiled container stands in for vendor whole-slide formats. Layout,
//! all integers little-endian:
//!
//! ```text
//! magic "TIL1" | width u32 | height u32 | channels u32 | tile u32
//! tiles in row-major tile order, each its clipped rectangle as row-major u8
//! ```
//!
//! Tensor files carry loss inputs:
//!
//! ```text
//! magic "TSR1" | ndim u32 | dims[ndim] u32 | payload f32 × product(dims)
//! ```

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];
pub const TILED_MAGIC: &[u8; 4] = b"TIL1";
pub const TENSOR_MAGIC: &[u8; 4] = b"TSR1";

/// Loads a PNG or tiled container, chosen by magic bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer<u8>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer<u8>> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(TILED_MAGIC) {
        decode_tiled(bytes)
    } else {
        Err(Error::Corrupt("unrecognized image signature".into()))
    }
}

pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer<u8>> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| Error::Corrupt(e.to_string()))?;
    let info = reader.info();
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(format!("{:?}", info.bit_depth)));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(Error::UnsupportedChannels(format!("{other:?}"))),
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Corrupt("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| Error::Corrupt(e.to_string()))?;
    buf.truncate(frame.buffer_size());
    if buf.len() != w * h * channels {
        return Err(Error::Corrupt("unexpected decoded size".into()));
    }
    ImageBuffer::new(w, h, channels, buf)
}

pub fn encode_png(img: &ImageBuffer<u8>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(if img.channels() == 1 { png::ColorType::Grayscale } else { png::ColorType::Rgb });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Corrupt(e.to_string()))?;
        writer.write_image_data(img.data()).map_err(|e| Error::Corrupt(e.to_string()))?;
        writer.finish().map_err(|e| Error::Corrupt(e.to_string()))?;
    }
    Ok(out)
}

pub fn save_png(img: &ImageBuffer<u8>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_png(img)?).map_err(|e| Error::io(path, e))
}

pub fn encode_tiled(img: &ImageBuffer<u8>, tile: usize) -> Result<Vec<u8>> {
    if tile == 0 {
        return Err(Error::InvalidInput("tile side must be positive".into()));
    }
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut out = Vec::with_capacity(20 + img.data().len());
    out.extend_from_slice(TILED_MAGIC);
    for v in [w, h, c, tile] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for ty in (0..h).step_by(tile) {
        for tx in (0..w).step_by(tile) {
            let tw = tile.min(w - tx);
            let th = tile.min(h - ty);
            for y in ty..ty + th {
                let start = (y * w + tx) * c;
                out.extend_from_slice(&img.data()[start..start + tw * c]);
            }
        }
    }
    Ok(out)
}

pub fn decode_tiled(bytes: &[u8]) -> Result<ImageBuffer<u8>> {
    if bytes.len() < 20 {
        return Err(Error::Corrupt("tiled header truncated".into()));
    }
    if &bytes[..4] != TILED_MAGIC {
        return Err(Error::BadMagic {
            expected: "TIL1".into(),
            found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
        });
    }
    let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (w, h, c, tile) = (field(0), field(1), field(2), field(3));
    if c != 1 && c != 3 {
        return Err(Error::UnsupportedChannels(c.to_string()));
    }
    if tile == 0 {
        return Err(Error::Corrupt("zero tile side".into()));
    }
    let expected = w
        .checked_mul(h)
        .and_then(|v| v.checked_mul(c))
        .ok_or_else(|| Error::Corrupt("dimensions overflow".into()))?;
    if bytes.len() - 20 != expected {
        return Err(Error::Corrupt(format!(
            "tiled payload has {} bytes, expected {expected}",
            bytes.len() - 20
        )));
    }
    let mut data = vec![0u8; expected];
    let mut pos = 20;
    for ty in (0..h).step_by(tile) {
        for tx in (0..w).step_by(tile) {
            let tw = tile.min(w - tx);
            let th = tile.min(h - ty);
            for y in ty..ty + th {
                let start = (y * w + tx) * c;
                data[start..start + tw * c].copy_from_slice(&bytes[pos..pos + tw * c]);
                pos += tw * c;
            }
        }
    }
    ImageBuffer::new(w, h, c, data)
}

pub fn save_tiled(img: &ImageBuffer<u8>, tile: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tiled(img, tile)?).map_err(|e| Error::io(path, e))
}

/// Writes to `path` as PNG unless the extension is `.til`.
pub fn save_image(img: &ImageBuffer<u8>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("til") => save_tiled(img, 512, path),
        _ => save_png(img, path),
    }
}

/// An n-dimensional `f32` array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<u32>, data: Vec<f32>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 4 {
            return Err(Error::InvalidInput(format!("ndim {} outside [1,4]", dims.len())));
        }
        let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d as usize));
        if n != Some(data.len()) {
            return Err(Error::DimensionMismatch(format!(
                "dims {dims:?} do not match payload length {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn vector(data: Vec<f32>) -> Self {
        Self { dims: vec![data.len() as u32], data }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(TENSOR_MAGIC);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Corrupt("tensor header truncated".into()));
        }
        if &bytes[..4] != TENSOR_MAGIC {
            return Err(Error::BadMagic {
                expected: "TSR1".into(),
                found: String::from_utf8_lossy(&bytes[..4]).into_owned(),
            });
        }
        let ndim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        if !(1..=4).contains(&ndim) {
            return Err(Error::InvalidInput(format!("ndim {ndim} outside [1,4]")));
        }
        let header = 8 + 4 * ndim;
        if bytes.len() < header {
            return Err(Error::Corrupt("tensor dims truncated".into()));
        }
        let dims: Vec<u32> = bytes[8..header]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or_else(|| Error::Corrupt("tensor size overflow".into()))?;
        let payload = &bytes[header..];
        if Some(payload.len()) != n.checked_mul(4) {
            return Err(Error::Corrupt(format!(
                "tensor payload has {} bytes, expected {}",
                payload.len(),
                n.saturating_mul(4)
            )));
        }
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { dims, data })
    }
}

pub fn write_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, t.encode()).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::decode(&bytes)
}
