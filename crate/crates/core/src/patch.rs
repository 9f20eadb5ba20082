//! Cutting registered slide pairs into patches, quality filtering, and
//! manifest construction.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{ncc, preprocess};
use crate::image::{ImageBuffer, Sample};
use crate::model::{Her2Level, ManifestEntry, PatchManifest, QcFlags, Split};

pub const DEFAULT_PATCH_SIZE: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair<T: Sample = u8> {
    pub he: ImageBuffer<T>,
    pub ihc: ImageBuffer<T>,
    /// Top-left corner `(x, y)` in the registered slide.
    pub origin: [usize; 2],
}

/// Origins of all full patches, row-major.
pub fn patch_origins(width: usize, height: usize, size: usize, stride: usize) -> Result<Vec<[usize; 2]>> {
    if size == 0 || stride == 0 {
        return Err(Error::InvalidInput("patch size and stride must be positive".into()));
    }
    if size > width || size > height {
        return Err(Error::InvalidInput(format!("patch size {size} exceeds image {width}x{height}")));
    }
    let nx = (width - size) / stride + 1;
    let ny = (height - size) / stride + 1;
    Ok((0..ny).flat_map(|j| (0..nx).map(move |i| [i * stride, j * stride])).collect())
}

/// Cuts both slides on the same grid; partial edge patches are dropped.
pub fn patchify<T: Sample>(
    he: &ImageBuffer<T>,
    ihc: &ImageBuffer<T>,
    size: usize,
    stride: usize,
) -> Result<Vec<PatchPair<T>>> {
    if he.dims() != ihc.dims() {
        return Err(Error::DimensionMismatch(format!("H&E {:?} vs IHC {:?}", he.dims(), ihc.dims())));
    }
    let origins = patch_origins(he.width(), he.height(), size, stride)?;
    origins
        .par_iter()
        .map(|&[x, y]| {
            Ok(PatchPair { he: he.crop(x, y, size, size)?, ihc: ihc.crop(x, y, size, size)?, origin: [x, y] })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TissueConfig {
    pub sat_thresh: f64,
    pub frac_thresh: f64,
}

impl Default for TissueConfig {
    fn default() -> Self {
        Self { sat_thresh: 0.07, frac_thresh: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub pass: bool,
    /// Tissue fraction or alignment NCC, depending on the filter.
    pub score: f64,
}

/// Fraction of pixels with HSV saturation above `sat_thresh` and value
/// below 0.95; passes when the fraction reaches `frac_thresh`.
pub fn tissue_filter<T: Sample>(patch: &ImageBuffer<T>, cfg: &TissueConfig) -> Result<FilterResult> {
    if patch.channels() != 3 {
        return Err(Error::UnsupportedChannels(format!(
            "tissue filter needs RGB, got {} channel(s)",
            patch.channels()
        )));
    }
    let positive = patch
        .data()
        .chunks_exact(3)
        .filter(|px| {
            let [r, g, b] = [px[0].level(), px[1].level(), px[2].level()];
            let max = r.max(g).max(b);
            let min = r.min(g).min(b);
            let sat = if max > 0.0 { (max - min) / max } else { 0.0 };
            sat > cfg.sat_thresh && max / 255.0 < 0.95
        })
        .count();
    let fraction = positive as f64 / (patch.width() * patch.height()) as f64;
    Ok(FilterResult { pass: fraction >= cfg.frac_thresh, score: fraction })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignmentConfig {
    pub ncc_thresh: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self { ncc_thresh: 0.2 }
    }
}

/// NCC of the preprocessed patches; a constant patch scores 0 and fails.
pub fn alignment_filter<T: Sample>(he: &ImageBuffer<T>, ihc: &ImageBuffer<T>, cfg: &AlignmentConfig) -> Result<FilterResult> {
    if he.dims() != ihc.dims() {
        return Err(Error::DimensionMismatch(format!("H&E {:?} vs IHC {:?}", he.dims(), ihc.dims())));
    }
    match ncc(&preprocess(he).data, &preprocess(ihc).data) {
        Some(score) => Ok(FilterResult { pass: score >= cfg.ncc_thresh, score }),
        None => Ok(FilterResult { pass: false, score: 0.0 }),
    }
}

/// Input to manifest construction: one cut patch and its QC outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRecord {
    pub wsi_id: String,
    pub origin: [usize; 2],
    pub qc: QcFlags,
}

pub fn patch_id(wsi_id: &str, origin: [usize; 2]) -> String {
    format!("{wsi_id}_{}_{}", origin[0], origin[1])
}

/// Runs both filters on every pair.
pub fn qc_flags<T: Sample>(pairs: &[PatchPair<T>], tissue: &TissueConfig, align: &AlignmentConfig) -> Result<Vec<QcFlags>> {
    pairs
        .par_iter()
        .map(|p| {
            Ok(QcFlags {
                tissue_pass: tissue_filter(&p.he, tissue)?.pass,
                alignment_pass: alignment_filter(&p.he, &p.ihc, align)?.pass,
            })
        })
        .collect()
}

pub fn build_manifest(
    patches: &[PatchRecord],
    size: usize,
    stride: usize,
    labels: &BTreeMap<String, Her2Level>,
    splits: &BTreeMap<String, Split>,
) -> Result<PatchManifest> {
    let entries = patches
        .iter()
        .map(|p| {
            let her2 = *labels
                .get(&p.wsi_id)
                .ok_or_else(|| Error::InvalidInput(format!("missing HER2 label for {:?}", p.wsi_id)))?;
            let split = *splits
                .get(&p.wsi_id)
                .ok_or_else(|| Error::InvalidInput(format!("missing split for {:?}", p.wsi_id)))?;
            Ok(ManifestEntry {
                patch_id: patch_id(&p.wsi_id, p.origin),
                wsi_id: p.wsi_id.clone(),
                origin: [p.origin[0] as u64, p.origin[1] as u64],
                size: size as u64,
                her2,
                split,
                qc: p.qc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PatchManifest::new(size as u64, stride as u64, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(w: usize, h: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> ImageBuffer<u8> {
        ImageBuffer::from_fn(w, h, 3, |x, y, c| f(x, y)[c]).unwrap()
    }

    #[test]
    fn counts_and_order() {
        let img = ImageBuffer::<u8>::filled(2048, 1024, 1, 9).unwrap();
        let p = patchify(&img, &img, 1024, 1024).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].origin, [1024, 0]);
        assert!(patchify(&ImageBuffer::<u8>::filled(1000, 1000, 1, 0).unwrap(), &ImageBuffer::<u8>::filled(1000, 1000, 1, 0).unwrap(), 1024, 1024).is_err());
        let o = patch_origins(100, 70, 30, 20).unwrap();
        assert_eq!(o.len(), ((100 - 30) / 20 + 1) * ((70 - 30) / 20 + 1));
        assert_eq!(o[..5], [[0, 0], [20, 0], [40, 0], [60, 0], [0, 20]]);
    }

    #[test]
    fn patches_match_crops() {
        let img = ImageBuffer::<u8>::from_fn(64, 48, 3, |x, y, c| (x * 3 + y * 5 + c) as u8).unwrap();
        for p in patchify(&img, &img, 16, 16).unwrap() {
            assert_eq!(p.he.get(3, 2, 1), img.get(p.origin[0] + 3, p.origin[1] + 2, 1));
        }
    }

    #[test]
    fn tissue_cases() {
        let cfg = TissueConfig::default();
        let white = rgb(10, 10, |_, _| [255, 255, 255]);
        assert_eq!(tissue_filter(&white, &cfg).unwrap(), FilterResult { pass: false, score: 0.0 });
        let magenta = rgb(10, 10, |_, _| [200, 0, 200]);
        assert_eq!(tissue_filter(&magenta, &cfg).unwrap(), FilterResult { pass: true, score: 1.0 });
        let half = rgb(10, 10, |x, _| if x < 5 { [255, 255, 255] } else { [230, 120, 180] });
        assert_eq!(tissue_filter(&half, &cfg).unwrap(), FilterResult { pass: true, score: 0.5 });
        assert!(tissue_filter(&ImageBuffer::<u8>::filled(4, 4, 1, 3).unwrap(), &cfg).is_err());
    }

    #[test]
    fn alignment_cases() {
        let cfg = AlignmentConfig::default();
        let tex = crate::synth::value_noise_image(128, 128, 3, 3).to_u8();
        let same = alignment_filter(&tex, &tex, &cfg).unwrap();
        assert!(same.pass && (same.score - 1.0).abs() < 1e-9);
        let flat = ImageBuffer::<u8>::filled(128, 128, 3, 200).unwrap();
        assert_eq!(alignment_filter(&flat, &tex, &cfg).unwrap(), FilterResult { pass: false, score: 0.0 });
    }

    #[test]
    fn manifest_construction() {
        let records: Vec<PatchRecord> = patch_origins(4096, 4096, 1024, 1024)
            .unwrap()
            .into_iter()
            .map(|o| PatchRecord { wsi_id: "s1".into(), origin: o, qc: QcFlags { tissue_pass: true, alignment_pass: true } })
            .collect();
        let labels = BTreeMap::from([("s1".to_string(), Her2Level::Two)]);
        let splits = BTreeMap::from([("s1".to_string(), Split::Train)]);
        let m = build_manifest(&records, 1024, 1024, &labels, &splits).unwrap();
        assert_eq!(m.entries.len(), 16);
        assert!(m.entries.iter().all(|e| e.her2 == Her2Level::Two));
        assert_eq!(m.entries[1].patch_id, "s1_1024_0");
        assert!(build_manifest(&records, 1024, 1024, &BTreeMap::new(), &splits).is_err());
        let dup = vec![records[0].clone(), records[0].clone()];
        assert!(build_manifest(&dup, 1024, 1024, &labels, &splits).is_err());
    }
}
