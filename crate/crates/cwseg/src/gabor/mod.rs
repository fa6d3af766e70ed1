//! Unsupervised Gabor-filter-bank segmentation baseline.
//!
//! An even-symmetric (cosine) filter bank responds to oriented texture;
//! responses go through |tanh(0.25 r)|, per-filter Gaussian smoothing and
//! per-channel standardization, and 2-means splits the pixels. The cluster
//! with the higher mean smoothed energy is named the object.

use crate::context::normalize_intensity;
use crate::error::{Error, Result};
use crate::image::{GroundTruthMask, Label, RasterImage};

mod kmeans;

pub use kmeans::{kmeans2, KMeansResult};

/// Magnitude nonlinearity scale applied to raw filter responses.
const RESPONSE_GAIN: f64 = 0.25;

/// Filter-bank parameters. `sigma` and `kernel_radius` default per filter
/// to 0.56/frequency and ceil(3 sigma) when unset.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborSpec {
    pub orientations_deg: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub sigma: Option<f64>,
    pub kernel_radius: Option<usize>,
}

impl Default for GaborSpec {
    fn default() -> Self {
        GaborSpec {
            orientations_deg: vec![0.0, 45.0, 90.0, 135.0],
            frequencies: vec![0.125, 0.25],
            sigma: None,
            kernel_radius: None,
        }
    }
}

/// One concrete bank entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborFilter {
    pub orientation_deg: f64,
    pub frequency: f64,
    pub sigma: f64,
    pub radius: usize,
}

impl GaborSpec {
    pub fn filters(&self) -> Result<Vec<GaborFilter>> {
        if self.orientations_deg.is_empty() || self.frequencies.is_empty() {
            return Err(Error::invalid("the filter bank may not be empty"));
        }
        for &f in &self.frequencies {
            if !(0.0 < f && f < 0.5) {
                return Err(Error::invalid(format!(
                    "radial frequency {f} must lie in (0, 0.5)"
                )));
            }
        }
        for (i, &a) in self.orientations_deg.iter().enumerate() {
            for &b in &self.orientations_deg[..i] {
                if (a - b).rem_euclid(180.0).abs() < 1e-9 || (b - a).rem_euclid(180.0).abs() < 1e-9
                {
                    return Err(Error::invalid(format!(
                        "orientations {a} and {b} coincide modulo 180 degrees"
                    )));
                }
            }
        }
        let mut filters = Vec::new();
        for &frequency in &self.frequencies {
            for &orientation_deg in &self.orientations_deg {
                let sigma = self.sigma.unwrap_or(0.56 / frequency);
                let radius = self.kernel_radius.unwrap_or((3.0 * sigma).ceil() as usize);
                filters.push(GaborFilter {
                    orientation_deg,
                    frequency,
                    sigma,
                    radius,
                });
            }
        }
        Ok(filters)
    }
}

/// Square kernel of side 2 * radius + 1, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub radius: usize,
    pub data: Vec<f64>,
}

impl Kernel {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }
}

/// Even-symmetric Gabor kernel: a cosine-modulated isotropic Gaussian,
/// DC-corrected so its entries sum to zero.
pub fn gabor_kernel(filter: &GaborFilter) -> Kernel {
    let theta = filter.orientation_deg.to_radians();
    let (sin_t, cos_t) = theta.sin_cos();
    let r = filter.radius as isize;
    let side = (2 * r + 1) as usize;
    let mut data = Vec::with_capacity(side * side);
    for y in -r..=r {
        for x in -r..=r {
            let xr = x as f64 * cos_t + y as f64 * sin_t;
            let yr = -(x as f64) * sin_t + y as f64 * cos_t;
            let envelope = (-(xr * xr + yr * yr) / (2.0 * filter.sigma * filter.sigma)).exp();
            let carrier = (2.0 * std::f64::consts::PI * filter.frequency * xr).cos();
            data.push(envelope * carrier);
        }
    }
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    for v in &mut data {
        *v -= mean;
    }
    Kernel {
        radius: filter.radius,
        data,
    }
}

/// Convolves the normalized gray image with a kernel under replicate
/// padding. Returns one response per pixel, row-major.
pub fn apply_kernel(image: &RasterImage, kernel: &Kernel) -> Result<Vec<f64>> {
    if image.channels() != 1 {
        return Err(Error::invalid("gabor filtering requires a gray image"));
    }
    let (w, h) = (image.width(), image.height());
    let grid: Vec<f64> = image
        .data()
        .iter()
        .map(|&v| normalize_intensity(v))
        .collect();
    let r = kernel.radius as isize;
    let side = kernel.side() as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for ky in -r..=r {
                let sy = (y + ky).clamp(0, h as isize - 1) as usize;
                for kx in -r..=r {
                    let sx = (x + kx).clamp(0, w as isize - 1) as usize;
                    let kv = kernel.data[((ky + r) * side + (kx + r)) as usize];
                    acc += kv * grid[sy * w + sx];
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    Ok(out)
}

/// Separable Gaussian blur with replicate padding.
fn gaussian_smooth(grid: &[f64], w: usize, h: usize, std: f64) -> Vec<f64> {
    let radius = (3.0 * std).ceil() as isize;
    let mut taps = Vec::with_capacity((2 * radius + 1) as usize);
    for i in -radius..=radius {
        taps.push((-(i * i) as f64 / (2.0 * std * std)).exp());
    }
    let norm: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= norm;
    }

    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                let sx = (x + i as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += t * grid[y * w + sx];
            }
            tmp[y * w + x as usize] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, t) in taps.iter().enumerate() {
                let sy = (y + i as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += t * tmp[sy * w + x];
            }
            out[y as usize * w + x] = acc;
        }
    }
    out
}

/// Per-filter feature channels after the nonlinearity and smoothing,
/// before standardization.
#[derive(Debug, Clone)]
pub struct FeatureStack {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Vec<f64>>,
}

impl FeatureStack {
    /// The feature vector of one pixel.
    pub fn feature(&self, x: usize, y: usize) -> Vec<f64> {
        self.channels
            .iter()
            .map(|c| c[y * self.width + x])
            .collect()
    }
}

/// Filters the image with every bank entry, applies |tanh(0.25 r)| and
/// smooths each channel with a Gaussian of std 3 * sigma.
pub fn feature_stack(image: &RasterImage, spec: &GaborSpec) -> Result<FeatureStack> {
    let (w, h) = (image.width(), image.height());
    let mut channels = Vec::new();
    for filter in spec.filters()? {
        let kernel = gabor_kernel(&filter);
        let mut response = apply_kernel(image, &kernel)?;
        for v in &mut response {
            *v = (RESPONSE_GAIN * *v).tanh().abs();
        }
        channels.push(gaussian_smooth(&response, w, h, 3.0 * filter.sigma));
    }
    Ok(FeatureStack {
        width: w,
        height: h,
        channels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaborStatus {
    Ok,
    /// The image had no texture contrast; the labeling is all background.
    DegenerateConstant,
}

#[derive(Debug, Clone)]
pub struct GaborSegmentation {
    pub mask: GroundTruthMask,
    pub status: GaborStatus,
}

/// Unsupervised two-cluster segmentation of a gray image.
pub fn segment_gabor(
    image: &RasterImage,
    spec: &GaborSpec,
    seed: u64,
) -> Result<GaborSegmentation> {
    let stack = feature_stack(image, spec)?;
    let (w, h) = (stack.width, stack.height);
    let n = w * h;

    // per-pixel total smoothed energy, used to name the object cluster
    let energy: Vec<f64> = (0..n)
        .map(|i| stack.channels.iter().map(|c| c[i]).sum())
        .collect();

    // standardize each channel; constant channels carry no signal
    let mut standardized = stack.channels.clone();
    for channel in &mut standardized {
        let mean = channel.iter().sum::<f64>() / n as f64;
        let var = channel.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std < 1e-12 {
            channel.iter_mut().for_each(|v| *v = 0.0);
        } else {
            channel.iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
    }

    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| standardized.iter().map(|c| c[i]).collect())
        .collect();

    let all_background =
        || GroundTruthMask::new(w, h, vec![Label::Background; n]).expect("shape is consistent");

    let Some(clusters) = kmeans2(&points, seed, 100) else {
        return Ok(GaborSegmentation {
            mask: all_background(),
            status: GaborStatus::DegenerateConstant,
        });
    };

    let mut energy_sum = [0.0; 2];
    let mut counts = [0usize; 2];
    for (&a, &e) in clusters.assignments.iter().zip(&energy) {
        energy_sum[a] += e;
        counts[a] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Ok(GaborSegmentation {
            mask: all_background(),
            status: GaborStatus::DegenerateConstant,
        });
    }
    let mean0 = energy_sum[0] / counts[0] as f64;
    let mean1 = energy_sum[1] / counts[1] as f64;
    let object_cluster = if mean0 >= mean1 { 0 } else { 1 };

    let labels: Vec<Label> = clusters
        .assignments
        .iter()
        .map(|&a| {
            if a == object_cluster {
                Label::Object
            } else {
                Label::Background
            }
        })
        .collect();

    Ok(GaborSegmentation {
        mask: GroundTruthMask::new(w, h, labels)?,
        status: GaborStatus::Ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stripes_vs_uniform(shift: i32) -> RasterImage {
        RasterImage::from_fn(96, 64, |x, _| {
            let base: i32 = if x < 48 {
                if x % 4 < 2 {
                    80
                } else {
                    176
                }
            } else {
                128
            };
            (base + shift) as u8
        })
        .unwrap()
    }

    #[test]
    fn kernel_is_symmetric_at_zero_orientation() {
        let filter = GaborFilter {
            orientation_deg: 0.0,
            frequency: 0.25,
            sigma: 2.24,
            radius: 7,
        };
        let kernel = gabor_kernel(&filter);
        let side = kernel.side();
        for y in 0..side {
            for x in 0..side {
                let mirrored = kernel.data[(side - 1 - y) * side + x];
                assert!((kernel.data[y * side + x] - mirrored).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_sums_to_zero_and_center_value_checks_out() {
        let filter = GaborFilter {
            orientation_deg: 45.0,
            frequency: 0.2,
            sigma: 1.5,
            radius: 3,
        };
        let kernel = gabor_kernel(&filter);
        let sum: f64 = kernel.data.iter().sum();
        assert!(sum.abs() < 1e-12, "kernel sum {sum}");

        // center entry = exp(0) * cos(0) - mean, hand-recomputed on the grid
        let mut raw = Vec::new();
        for y in -3i32..=3 {
            for x in -3i32..=3 {
                let theta = 45.0f64.to_radians();
                let xr = x as f64 * theta.cos() + y as f64 * theta.sin();
                let yr = -(x as f64) * theta.sin() + y as f64 * theta.cos();
                let v = (-(xr * xr + yr * yr) / (2.0 * 1.5 * 1.5)).exp()
                    * (2.0 * std::f64::consts::PI * 0.2 * xr).cos();
                raw.push(v);
            }
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let center = kernel.data[kernel.data.len() / 2];
        assert!((center - (1.0 - mean)).abs() < 1e-12);
    }

    #[test]
    fn constant_image_has_zero_response_and_degenerates() {
        let image = RasterImage::from_fn(32, 32, |_, _| 137).unwrap();
        for filter in GaborSpec::default().filters().unwrap() {
            let response = apply_kernel(&image, &gabor_kernel(&filter)).unwrap();
            assert!(response.iter().all(|v| v.abs() < 1e-9));
        }
        let seg = segment_gabor(&image, &GaborSpec::default(), 1).unwrap();
        assert_eq!(seg.status, GaborStatus::DegenerateConstant);
        assert!(seg.mask.labels().iter().all(|&l| l == Label::Background));
    }

    #[test]
    fn separates_stripes_from_uniform() {
        let image = stripes_vs_uniform(0);
        let seg = segment_gabor(&image, &GaborSpec::default(), 7).unwrap();
        assert_eq!(seg.status, GaborStatus::Ok);
        let mut agree = 0;
        for y in 0..64 {
            for x in 0..96 {
                let expected = if x < 48 {
                    Label::Object
                } else {
                    Label::Background
                };
                if seg.mask.label_at(x, y) == expected {
                    agree += 1;
                }
            }
        }
        let frac = agree as f64 / (96.0 * 64.0);
        assert!(frac >= 0.9, "layout agreement {frac}");
    }

    #[test]
    fn labeling_survives_global_intensity_shift() {
        let a = segment_gabor(&stripes_vs_uniform(0), &GaborSpec::default(), 3).unwrap();
        let b = segment_gabor(&stripes_vs_uniform(30), &GaborSpec::default(), 3).unwrap();
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn same_seed_is_reproducible() {
        let image = stripes_vs_uniform(0);
        let a = segment_gabor(&image, &GaborSpec::default(), 11).unwrap();
        let b = segment_gabor(&image, &GaborSpec::default(), 11).unwrap();
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn spec_validation() {
        let bad_freq = GaborSpec {
            frequencies: vec![0.6],
            ..GaborSpec::default()
        };
        assert!(bad_freq.filters().is_err());
        let dup = GaborSpec {
            orientations_deg: vec![10.0, 190.0],
            ..GaborSpec::default()
        };
        assert!(dup.filters().is_err());
        assert_eq!(GaborSpec::default().filters().unwrap().len(), 8);
    }
}
