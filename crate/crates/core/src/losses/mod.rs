//! Forward-only reference implementations of the loss functionals used by
//! the challenge's stain-translation methods, plus the Haar wavelet front
//! end. Every function is a pure scalar map over supplied arrays.
//!
//! Natural logarithms of probabilities are clamped below at
//! [`LOG_CLAMP`]; functions that can hit the clamp report it through
//! [`LossValue::clamped`].

mod combine;
mod dwt;
mod images;
mod vectors;
mod wecrest;

pub use combine::{combine_weighted, LossWeights, PNCE_MULTISCALE_PRESET};
pub use dwt::{dwt_haar, dwt_haar_plane, idwt_haar, idwt_haar_plane, DwtMode, HaarBands};
pub use images::{cycle_l1, mae_content, patchgan_ms_loss, pix2pix_gen_loss, ssim_loss, GanSide, ScaleScores};
pub use vectors::{
    cosine_sim_loss, focal_loss, infonce_loss, pix2pix_dis_loss, softmax_probs, style_adversarial_loss, FocalParams,
    DEFAULT_TAU,
};
pub use wecrest::{luminance_histogram, pearson, wecrest_qi};

use serde::{Deserialize, Serialize};

pub const LOG_CLAMP: f64 = 1e-12;

/// A loss value and whether any probability hit the log clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: f64,
    pub clamped: bool,
}

/// `−ln p` with `p` clamped at [`LOG_CLAMP`]; the flag reports clamping.
pub(crate) fn neg_log(p: f64) -> (f64, bool) {
    if p < LOG_CLAMP {
        (-LOG_CLAMP.ln(), true)
    } else {
        (-p.ln(), false)
    }
}
