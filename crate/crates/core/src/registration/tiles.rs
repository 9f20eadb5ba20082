//! Fixed 4×4 tiling of a slide for per-tile deformable registration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Sample};

/// Pixel rectangle `[x, x+w) × [y, y+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl TileRect {
    pub fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.x as f64 && px < (self.x + self.w) as f64 && py >= self.y as f64 && py < (self.y + self.h) as f64
    }
}

/// Row-major grid of tiles. Boundaries sit at `floor(i·W/cols)` and
/// `floor(j·H/rows)`, so the tiles cover the image exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileLayout {
    pub width: usize,
    pub height: usize,
    pub rows: usize,
    pub cols: usize,
    pub rects: Vec<TileRect>,
}

impl TileLayout {
    pub const ROWS: usize = 4;
    pub const COLS: usize = 4;

    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::with_grid(width, height, Self::ROWS, Self::COLS)
    }

    pub fn with_grid(width: usize, height: usize, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || width < cols || height < rows {
            return Err(Error::InvalidInput(format!("cannot tile {width}x{height} into {rows}x{cols}")));
        }
        let xb: Vec<usize> = (0..=cols).map(|i| i * width / cols).collect();
        let yb: Vec<usize> = (0..=rows).map(|j| j * height / rows).collect();
        let rects = (0..rows)
            .flat_map(|j| {
                let (xb, yb) = (&xb, &yb);
                (0..cols).map(move |i| TileRect { x: xb[i], y: yb[j], w: xb[i + 1] - xb[i], h: yb[j + 1] - yb[j] })
            })
            .collect();
        Ok(Self { width, height, rows, cols, rects })
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    /// Index of the tile holding the (possibly fractional) point.
    pub fn tile_of(&self, px: f64, py: f64) -> Option<usize> {
        self.rects.iter().position(|r| r.contains(px, py))
    }

    pub fn split<T: Sample>(&self, img: &ImageBuffer<T>) -> Result<Vec<ImageBuffer<T>>> {
        if img.dims() != (self.width, self.height) {
            return Err(Error::DimensionMismatch(format!(
                "image {:?} vs layout {:?}",
                img.dims(),
                (self.width, self.height)
            )));
        }
        self.rects.iter().map(|r| img.crop(r.x, r.y, r.w, r.h)).collect()
    }

    /// Places tiles back at their original positions, without blending.
    pub fn stitch<T: Sample>(&self, tiles: &[ImageBuffer<T>]) -> Result<ImageBuffer<T>> {
        if tiles.len() != self.rects.len() {
            return Err(Error::InvalidInput(format!("expected {} tiles, got {}", self.rects.len(), tiles.len())));
        }
        let c = tiles[0].channels();
        let mut out = ImageBuffer::filled(self.width, self.height, c, T::from_raw(0.0))?;
        for (t, r) in tiles.iter().zip(&self.rects) {
            if t.dims() != (r.w, r.h) {
                return Err(Error::DimensionMismatch(format!("tile {:?} vs slot {}x{}", t.dims(), r.w, r.h)));
            }
            out.paste(t, r.x, r.y)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_tiles_cover_exactly() {
        let l = TileLayout::new(103, 77).unwrap();
        assert_eq!(l.len(), 16);
        let mut hits = vec![0u8; 103 * 77];
        for r in &l.rects {
            for y in r.y..r.y + r.h {
                for x in r.x..r.x + r.w {
                    hits[y * 103 + x] += 1;
                }
            }
        }
        assert!(hits.iter().all(|&h| h == 1));
    }

    #[test]
    fn stitch_split_identity() {
        let img = ImageBuffer::<u8>::from_fn(37, 29, 3, |x, y, c| ((x * 7 + y * 3 + c) % 256) as u8).unwrap();
        let l = TileLayout::new(37, 29).unwrap();
        assert_eq!(l.stitch(&l.split(&img).unwrap()).unwrap(), img);
    }

    #[test]
    fn too_small_rejected() {
        assert!(TileLayout::new(3, 10).is_err());
    }

    #[test]
    fn tile_lookup() {
        let l = TileLayout::new(400, 400).unwrap();
        assert_eq!(l.tile_of(0.0, 0.0), Some(0));
        assert_eq!(l.tile_of(399.5, 399.5), Some(15));
        assert_eq!(l.tile_of(150.0, 50.0), Some(1));
        assert_eq!(l.tile_of(400.0, 0.0), None);
    }
}
