//! Registration, patch extraction, evaluation and reference loss functionals
//! for paired H&E / IHC whole-slide image benchmarks.

pub mod codec;
pub mod demo;
pub mod error;
pub mod filter;
pub mod harness;
pub mod image;
pub mod json;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod patch;
pub mod registration;
pub mod rng;
pub mod synth;

pub use codec::{load_image, read_tensor, save_image, save_png, write_tensor, Tensor};
pub use error::{Error, Result};
pub use harness::{rank_teams, validate_submission, Leaderboard, LeaderboardRow, TeamEntry, ValidationConfig, Verdict};
pub use image::{ColorSpace, ImageBuffer, Plane, Sample};
pub use metrics::{evaluate_set, psnr, ssim_global, ssim_windowed, MetricReport, SsimMode, SsimParams};
pub use model::{Her2Level, LandmarkSet, ManifestEntry, PatchManifest, QcFlags, Split, SplitCounts};
pub use registration::{
    estimate_homography, register_deformable, register_wsi_pair, DeformableConfig, DeformationGrid, Homography,
    RegistrationConfig, RegistrationReport, TileLayout,
};
pub use rng::{rng_new, StainRng};
