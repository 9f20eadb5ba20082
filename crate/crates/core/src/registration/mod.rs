//! Two-stage slide alignment: projective transform from landmarks, then
//! tiled B-spline refinement, then black-border inpainting.

pub mod border;
pub mod bspline;
pub mod deformable;
pub mod homography;
pub mod overlay;
pub mod pipeline;
pub mod tiles;
pub mod warp;

pub use border::{border_black_mask, count_border_black, refine_borders};
pub use bspline::{apply_deformation, DeformationGrid};
pub use deformable::{register_deformable, DeformableConfig, DeformableOutcome, LevelTrace};
pub use homography::{estimate_homography, Homography};
pub use overlay::render_overlay;
pub use pipeline::{register_wsi_pair, RegistrationConfig, RegistrationReport, TileReport, TileStatus, WsiRegistration};
pub use tiles::{TileLayout, TileRect};
pub use warp::warp_projective;
