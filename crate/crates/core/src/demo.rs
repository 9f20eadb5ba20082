//! End-to-end run on a synthetic slide pair with known ground truth.
//!
//! The pair is rendered from one procedural tissue: the IHC slide shows it
//! through a known projective map composed with a smooth B-spline field.
//! The moving H&E slide is registered with the exact landmarks of eight
//! anchor points, and accuracy is measured as the distance between the
//! recovered and true fixed→moving maps on a 10×10 grid of points.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::patch::{patch_origins, patchify, qc_flags, AlignmentConfig, TissueConfig};
use crate::registration::{count_border_black, register_wsi_pair, DeformableConfig, RegistrationConfig, RegistrationReport};
use crate::synth::{landmark_grid, synthetic_pair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub seed: u64,
    pub size: usize,
    pub patch_size: usize,
    pub registration: RegistrationConfig,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            size: 2048,
            patch_size: 512,
            registration: RegistrationConfig {
                deformable: DeformableConfig { sample_fraction: 0.25, ..Default::default() },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub seed: u64,
    pub size: usize,
    /// Mean distance between grid points and their true moving positions.
    pub landmark_error_initial: f64,
    /// Mean distance after the projective stage alone.
    pub landmark_error_projective: f64,
    pub landmark_error_final: f64,
    pub border_black_pixels: usize,
    pub patch_size: usize,
    pub patch_count: usize,
    pub expected_patch_count: usize,
    pub tissue_pass: usize,
    pub alignment_pass: usize,
    pub registration: RegistrationReport,
}

pub fn run_demo(cfg: &DemoConfig) -> Result<DemoReport> {
    let pair = synthetic_pair(cfg.size, cfg.seed)?;
    let reg = register_wsi_pair(&pair.he, &pair.ihc, &pair.landmarks, &cfg.registration)?;
    let inv = reg.report.homography.inverse()?;

    let pts = landmark_grid(cfg.size, cfg.size, 10);
    let dist = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let (mut e0, mut ep, mut e1) = (0.0, 0.0, 0.0);
    for &p in &pts {
        let truth = pair.true_moving_point(p);
        e0 += dist(truth, p);
        ep += inv.apply(p).map_or(f64::INFINITY, |q| dist(truth, q));
        e1 += reg.map_fixed_to_moving(p).map_or(f64::INFINITY, |q| dist(truth, q));
    }
    let n = pts.len() as f64;

    let stride = cfg.patch_size;
    let patches = patchify(&reg.image, &pair.ihc, cfg.patch_size, stride)?;
    let flags = qc_flags(&patches, &TissueConfig::default(), &AlignmentConfig::default())?;
    Ok(DemoReport {
        seed: cfg.seed,
        size: cfg.size,
        landmark_error_initial: e0 / n,
        landmark_error_projective: ep / n,
        landmark_error_final: e1 / n,
        border_black_pixels: count_border_black(&reg.image),
        patch_size: cfg.patch_size,
        patch_count: patches.len(),
        expected_patch_count: patch_origins(cfg.size, cfg.size, cfg.patch_size, stride)?.len(),
        tissue_pass: flags.iter().filter(|f| f.tissue_pass).count(),
        alignment_pass: flags.iter().filter(|f| f.alignment_pass).count(),
        registration: reg.report,
    })
}
