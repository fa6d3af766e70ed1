//! Synthetic scenes shared by the integration suites.

#![allow(dead_code)]

use cwseg::image::{GroundTruthMask, Label, RasterImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 128x128 scene: a centered 64x64 object square of vertical stripes on a
/// brighter background of horizontal stripes, both with mild uniform noise.
pub fn two_texture_scene(seed: u64) -> (RasterImage, GroundTruthMask) {
    let (w, h) = (128usize, 128usize);
    let mask = GroundTruthMask::from_fn(w, h, |x, y| {
        if (32..96).contains(&x) && (32..96).contains(&y) {
            Label::Object
        } else {
            Label::Background
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let base: i32 = if mask.label_at(x, y) == Label::Object {
                if x % 4 < 2 {
                    95
                } else {
                    45
                }
            } else if y % 4 < 2 {
                205
            } else {
                165
            };
            let noise: i32 = rng.random_range(-10..=10);
            data.push((base + noise).clamp(0, 255) as u8);
        }
    }
    (RasterImage::new(w, h, 1, data).unwrap(), mask)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 in (0, 1] avoids ln(0)
    let u1: f64 = 1.0 - rng.random_range(0.0..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// 64x64 scene of two Gaussian intensity classes split left/right:
/// N(90, 20) on the object half, N(170, 20) on the background half.
pub fn gaussian_texture_scene(seed: u64) -> (RasterImage, GroundTruthMask) {
    let (w, h) = (64usize, 64usize);
    let mask = GroundTruthMask::from_fn(w, h, |x, _| {
        if x < w / 2 {
            Label::Object
        } else {
            Label::Background
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mean = if mask.label_at(x, y) == Label::Object {
                90.0
            } else {
                170.0
            };
            let v = mean + 20.0 * gaussian(&mut rng);
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    (RasterImage::new(w, h, 1, data).unwrap(), mask)
}

/// 128x128 scene: vertical stripes of period 4 on the left half, uniform
/// mid-gray on the right. Used by the Gabor layout-agreement check.
pub fn stripes_vs_uniform_scene() -> (RasterImage, GroundTruthMask) {
    let (w, h) = (128usize, 128usize);
    let mask = GroundTruthMask::from_fn(w, h, |x, _| {
        if x < w / 2 {
            Label::Object
        } else {
            Label::Background
        }
    });
    let image = RasterImage::from_fn(w, h, |x, _| {
        if x < w / 2 {
            if x % 4 < 2 {
                80
            } else {
                176
            }
        } else {
            128
        }
    })
    .unwrap();
    (image, mask)
}
