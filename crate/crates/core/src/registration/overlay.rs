use crate::error::Result;
use crate::image::{ImageBuffer, Sample};

/// 50/50 blend for visual alignment checks. 8-bit results round half up,
/// so black over white gives 128.
pub fn render_overlay<T: Sample>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
    a.check_same_shape(b)?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| T::from_raw((x.raw() + y.raw()) / 2.0)).collect();
    ImageBuffer::new(a.width(), a.height(), a.channels(), data)
}
