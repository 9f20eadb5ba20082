use crate::error::Result;
use crate::image::{ImageBuffer, Sample};

use super::homography::Homography;

const EDGE_EPS: f64 = 1e-9;

/// Bilinear sample of every channel at `(x, y)`; `false` when the point lies
/// outside the pixel-center domain `[0, w-1] × [0, h-1]`.
#[inline]
pub(crate) fn sample_bilinear<T: Sample>(img: &ImageBuffer<T>, x: f64, y: f64, out: &mut [f64]) -> bool {
    let (w, h) = (img.width(), img.height());
    let maxx = (w - 1) as f64;
    let maxy = (h - 1) as f64;
    if !(x >= -EDGE_EPS && x <= maxx + EDGE_EPS && y >= -EDGE_EPS && y <= maxy + EDGE_EPS) {
        return false;
    }
    let xc = x.clamp(0.0, maxx);
    let yc = y.clamp(0.0, maxy);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = xc - x0 as f64;
    let fy = yc - y0 as f64;
    let (w00, w10, w01, w11) = ((1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy);
    let c = img.channels();
    let d = img.data();
    let (i00, i10, i01, i11) = ((y0 * w + x0) * c, (y0 * w + x1) * c, (y1 * w + x0) * c, (y1 * w + x1) * c);
    for (k, o) in out.iter_mut().enumerate().take(c) {
        *o = d[i00 + k].raw() * w00 + d[i10 + k].raw() * w10 + d[i01 + k].raw() * w01 + d[i11 + k].raw() * w11;
    }
    true
}

/// Inverse-mapped bilinear warp of the moving image into the fixed frame.
/// Pixels whose preimage falls outside the source are exactly 0.
pub fn warp_projective<T: Sample>(img: &ImageBuffer<T>, h: &Homography, out_size: (usize, usize)) -> Result<ImageBuffer<T>> {
    let inv = h.inverse()?;
    let (ow, oh) = out_size;
    let c = img.channels();
    let mut data = vec![T::from_raw(0.0); ow * oh * c];
    let mut px = vec![0.0; c];
    for y in 0..oh {
        for x in 0..ow {
            let Some([sx, sy]) = inv.apply([x as f64, y as f64]) else { continue };
            if sample_bilinear(img, sx, sy, &mut px) {
                let base = (y * ow + x) * c;
                for k in 0..c {
                    data[base + k] = T::from_raw(px[k]);
                }
            }
        }
    }
    ImageBuffer::new(ow, oh, c, data)
}
