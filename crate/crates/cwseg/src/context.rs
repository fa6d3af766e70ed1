//! Context-window extraction: the w x w neighborhood around a pixel,
//! flattened row-major (channel-minor for RGB) and normalized to [-1, 1].
//!
//! Windows that overhang the frame are filled by replicate padding, so a
//! border pixel still yields a full-length feature vector.

use crate::error::{Error, Result};
use crate::image::RasterImage;

/// Flattened, normalized window intensities for one center pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextWindow {
    pub center: (usize, usize),
    pub size: usize,
    pub channels: usize,
    pub features: Vec<f64>,
}

/// Maps a raw intensity to the feature range: 0 -> -1, 255 -> +1.
pub fn normalize_intensity(v: u8) -> f64 {
    f64::from(v) / 127.5 - 1.0
}

/// Feature-vector length of a window: size^2 * channels.
pub fn window_length(size: usize, channels: usize) -> Result<usize> {
    if size.is_multiple_of(2) {
        return Err(Error::invalid(format!("window size {size} must be odd")));
    }
    Ok(size * size * channels)
}

/// Gathers the size x size neighborhood of `center`, clamping coordinates
/// at the image edges, and normalizes every intensity.
pub fn extract_window(
    image: &RasterImage,
    center: (usize, usize),
    size: usize,
) -> Result<ContextWindow> {
    if size.is_multiple_of(2) || size < 3 {
        return Err(Error::invalid(format!(
            "window size {size} must be odd and at least 3"
        )));
    }
    let (cx, cy) = center;
    if !image.in_bounds(cx, cy) {
        return Err(Error::invalid(format!(
            "window center ({cx}, {cy}) is outside a {}x{} image",
            image.width(),
            image.height()
        )));
    }

    let radius = (size / 2) as isize;
    let max_x = (image.width() - 1) as isize;
    let max_y = (image.height() - 1) as isize;
    let mut features = Vec::with_capacity(size * size * image.channels());
    for dy in -radius..=radius {
        let sy = (cy as isize + dy).clamp(0, max_y) as usize;
        for dx in -radius..=radius {
            let sx = (cx as isize + dx).clamp(0, max_x) as usize;
            for &v in image.pixel(sx, sy) {
                features.push(normalize_intensity(v));
            }
        }
    }

    Ok(ContextWindow {
        center,
        size,
        channels: image.channels(),
        features,
    })
}
