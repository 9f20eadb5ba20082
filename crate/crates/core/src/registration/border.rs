//! Inpainting of the black margins left by warping.
//!
//! A pixel is black when every channel is exactly zero. Only black pixels
//! 4-connected to the image border are filled; interior black content is
//! kept. Filling proceeds in synchronous passes: each masked pixel with at
//! least one valid 8-neighbor takes the per-channel mean of those
//! neighbors, where valid means an original non-black pixel or one filled
//! in an earlier pass.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Sample};

fn is_black<T: Sample>(px: &[T]) -> bool {
    px.iter().all(|v| v.is_zero())
}

/// Mask of black pixels reachable from the border through black pixels.
pub fn border_black_mask<T: Sample>(img: &ImageBuffer<T>) -> Vec<bool> {
    let (w, h) = img.dims();
    let mut mask = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |x: usize, y: usize, mask: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
        if !mask[y * w + x] && is_black(img.pixel(x, y)) {
            mask[y * w + x] = true;
            queue.push_back((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut mask, &mut queue);
        seed(x, h - 1, &mut mask, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut mask, &mut queue);
        seed(w - 1, y, &mut mask, &mut queue);
    }
    while let Some((x, y)) = queue.pop_front() {
        if x > 0 {
            seed(x - 1, y, &mut mask, &mut queue);
        }
        if x + 1 < w {
            seed(x + 1, y, &mut mask, &mut queue);
        }
        if y > 0 {
            seed(x, y - 1, &mut mask, &mut queue);
        }
        if y + 1 < h {
            seed(x, y + 1, &mut mask, &mut queue);
        }
    }
    mask
}

pub fn count_border_black<T: Sample>(img: &ImageBuffer<T>) -> usize {
    border_black_mask(img).iter().filter(|&&m| m).count()
}

pub fn refine_borders<T: Sample>(img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
    if img.data().chunks_exact(img.channels()).all(is_black) {
        return Err(Error::AllBlack);
    }
    let (w, h) = img.dims();
    let c = img.channels();
    let mut pending = border_black_mask(img);
    let mut todo: Vec<usize> = (0..w * h).filter(|&i| pending[i]).collect();
    let mut out = img.clone();
    let mut acc = vec![0.0; c];
    let mut fills: Vec<(usize, Vec<T>)> = Vec::new();
    while !todo.is_empty() {
        fills.clear();
        for &i in &todo {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut n = 0usize;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if pending[j] {
                        continue;
                    }
                    let px = out.pixel(nx as usize, ny as usize);
                    if is_black(px) {
                        continue;
                    }
                    for (a, v) in acc.iter_mut().zip(px) {
                        *a += v.raw();
                    }
                    n += 1;
                }
            }
            if n == 0 {
                continue;
            }
            let mut v: Vec<T> = acc.iter().map(|a| T::from_raw(a / n as f64)).collect();
            if is_black(&v) {
                // rounding collapsed a dark fill to black; keep it distinguishable
                let k = (0..c).max_by(|&a, &b| acc[a].total_cmp(&acc[b])).unwrap_or(0);
                v[k] = T::min_positive();
            }
            fills.push((i, v));
        }
        debug_assert!(!fills.is_empty(), "every border component touches a non-black pixel");
        if fills.is_empty() {
            break;
        }
        for (i, v) in &fills {
            let (x, y) = (i % w, i / w);
            for (k, s) in v.iter().enumerate() {
                out.set(x, y, k, *s);
            }
            pending[*i] = false;
        }
        todo.retain(|&i| pending[i]);
    }
    Ok(out)
}
