//! Whole-slide orchestration: global projective alignment from landmarks,
//! per-tile deformable refinement, stitching and border refinement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Sample};
use crate::json::nonfinite;
use crate::model::LandmarkSet;

use super::border::refine_borders;
use super::bspline::{apply_deformation, DeformationGrid};
use super::deformable::{register_deformable, DeformableConfig};
use super::homography::{estimate_homography, Homography};
use super::tiles::{TileLayout, TileRect};
use super::warp::warp_projective;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationConfig {
    pub deformable: DeformableConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileStatus {
    Registered,
    /// The fixed tile has no texture; identity kept.
    ZeroVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileReport {
    pub index: usize,
    pub rect: TileRect,
    pub status: TileStatus,
    #[serde(with = "nonfinite")]
    pub ncc_initial: f64,
    #[serde(with = "nonfinite")]
    pub ncc_final: f64,
    pub mean_disp: f64,
    pub max_disp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationReport {
    pub homography: Homography,
    pub tiles: Vec<TileReport>,
}

#[derive(Debug, Clone)]
pub struct WsiRegistration<T: Sample> {
    /// Moving slide resampled into the fixed frame.
    pub image: ImageBuffer<T>,
    pub report: RegistrationReport,
    pub layout: TileLayout,
    pub grids: Vec<DeformationGrid>,
}

impl<T: Sample> WsiRegistration<T> {
    /// Moving-image position shown at fixed-frame point `p`:
    /// `H⁻¹(p + d_tile(p − tile origin))`.
    pub fn map_fixed_to_moving(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let t = self.layout.tile_of(p[0], p[1])?;
        let r = self.layout.rects[t];
        let d = self.grids[t].displacement_at(p[0] - r.x as f64, p[1] - r.y as f64);
        self.report.homography.inverse().ok()?.apply([p[0] + d[0], p[1] + d[1]])
    }
}

fn check_bounds(lm: &LandmarkSet, moving: (usize, usize), fixed: (usize, usize)) -> Result<()> {
    let inside = |p: [f64; 2], d: (usize, usize)| {
        p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= (d.0 - 1) as f64 && p[1] <= (d.1 - 1) as f64
    };
    for (i, (m, f)) in lm.pairs.iter().enumerate() {
        if !inside(*m, moving) {
            return Err(Error::LandmarkOutOfBounds(format!("pair {i}: moving point {m:?} outside {moving:?}")));
        }
        if !inside(*f, fixed) {
            return Err(Error::LandmarkOutOfBounds(format!("pair {i}: fixed point {f:?} outside {fixed:?}")));
        }
    }
    Ok(())
}

/// Aligns `he` (moving) onto `ihc` (fixed). Tiles are registered in
/// parallel on the ambient rayon pool and combined in fixed order, so the
/// result does not depend on the worker count.
pub fn register_wsi_pair<T: Sample>(
    he: &ImageBuffer<T>,
    ihc: &ImageBuffer<T>,
    lm: &LandmarkSet,
    cfg: &RegistrationConfig,
) -> Result<WsiRegistration<T>> {
    if he.channels() != ihc.channels() {
        return Err(Error::DimensionMismatch(format!(
            "channel counts differ: {} vs {}",
            he.channels(),
            ihc.channels()
        )));
    }
    lm.validate()?;
    check_bounds(lm, he.dims(), ihc.dims())?;
    let homography = estimate_homography(lm)?;
    let warped = warp_projective(he, &homography, ihc.dims())?;

    let layout = TileLayout::new(ihc.width(), ihc.height())?;
    let moving_tiles = layout.split(&warped)?;
    let fixed_tiles = layout.split(ihc)?;

    let results: Vec<Result<(ImageBuffer<T>, DeformationGrid, TileReport)>> = moving_tiles
        .par_iter()
        .zip(fixed_tiles.par_iter())
        .enumerate()
        .map(|(index, (m, f))| {
            let rect = layout.rects[index];
            match register_deformable(m, f, &cfg.deformable) {
                Ok(out) => {
                    let aligned = apply_deformation(m, &out.grid)?;
                    let report = TileReport {
                        index,
                        rect,
                        status: TileStatus::Registered,
                        ncc_initial: out.ncc_initial,
                        ncc_final: out.ncc_final,
                        mean_disp: out.grid.mean_magnitude(),
                        max_disp: out.grid.max_magnitude(),
                    };
                    Ok((aligned, out.grid, report))
                }
                Err(Error::ZeroVariance(_)) => {
                    let grid = DeformationGrid::zeros(m.dims(), cfg.deformable.spacing)?;
                    let report = TileReport {
                        index,
                        rect,
                        status: TileStatus::ZeroVariance,
                        ncc_initial: f64::NAN,
                        ncc_final: f64::NAN,
                        mean_disp: 0.0,
                        max_disp: 0.0,
                    };
                    Ok((m.clone(), grid, report))
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut aligned = Vec::with_capacity(layout.len());
    let mut grids = Vec::with_capacity(layout.len());
    let mut tiles = Vec::with_capacity(layout.len());
    for r in results {
        let (a, g, t) = r?;
        aligned.push(a);
        grids.push(g);
        tiles.push(t);
    }
    let stitched = layout.stitch(&aligned)?;
    let image = refine_borders(&stitched)?;
    Ok(WsiRegistration { image, report: RegistrationReport { homography, tiles }, layout, grids })
}
