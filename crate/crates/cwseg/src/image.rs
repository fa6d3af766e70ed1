//! Raster images, ground-truth masks and binary PGM/PPM I/O.
//!
//! Only binary netpbm variants are supported: `P5` for gray, `P6` for RGB,
//! maxval exactly 255. Comment lines starting with `#` may appear between
//! header tokens, before the maxval.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Pixel class: the two segmentation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Object,
    Background,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Object => "OBJECT",
            Label::Background => "BACKGROUND",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "OBJECT" => Ok(Label::Object),
            "BACKGROUND" => Ok(Label::Background),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Row-major 8-bit image, 1 (gray) or 3 (RGB, channel-interleaved) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be at least 1x1"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a gray image from a per-pixel intensity function.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        RasterImage::new(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn in_bounds(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }

    /// Channel values of the pixel at (x, y).
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }
}

/// Per-pixel object/background labeling with the same geometry as its image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthMask {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl GroundTruthMask {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::invalid(format!(
                "label count {} does not match {width}x{height}",
                labels.len()
            )));
        }
        Ok(GroundTruthMask {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> Label) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        GroundTruthMask {
            width,
            height,
            labels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_at(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }
}

/// Reads a binary PGM (`P5`) or PPM (`P6`) file with maxval 255.
pub fn read_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pnm(&bytes).map_err(|detail| Error::format(Some(path.to_path_buf()), detail))
}

fn parse_pnm(bytes: &[u8]) -> std::result::Result<RasterImage, String> {
    let mut pos = 0;

    let magic = next_token(bytes, &mut pos).ok_or("missing magic number")?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(format!("magic number {other:?} is not P5 or P6")),
    };

    let width: usize = parse_header_field(bytes, &mut pos, "width")?;
    let height: usize = parse_header_field(bytes, &mut pos, "height")?;
    let maxval: usize = parse_header_field(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(format!("dimensions {width}x{height} are not positive"));
    }
    if maxval != 255 {
        return Err(format!("maxval {maxval} is not 255"));
    }

    // Exactly one whitespace byte separates the maxval from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("missing whitespace after maxval".to_string()),
    }

    let expected = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(format!(
            "truncated payload: expected {expected} bytes, found {}",
            payload.len()
        ));
    }
    if payload.len() > expected {
        return Err(format!(
            "payload has {} trailing bytes beyond the expected {expected}",
            payload.len() - expected
        ));
    }

    RasterImage::new(width, height, channels, payload.to_vec()).map_err(|e| e.to_string())
}

fn parse_header_field(
    bytes: &[u8],
    pos: &mut usize,
    field: &str,
) -> std::result::Result<usize, String> {
    let token = next_token(bytes, pos).ok_or_else(|| format!("missing {field}"))?;
    token
        .parse::<usize>()
        .map_err(|_| format!("{field} token {token:?} is not a non-negative integer"))
}

/// Next whitespace-delimited header token, skipping `#` comment lines.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

/// Writes `P5` (gray) or `P6` (RGB) with maxval 255.
pub fn write_image(image: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let magic = if image.channels == 1 { "P5" } else { "P6" };
    let mut out = Vec::with_capacity(image.data.len() + 32);
    write!(out, "{magic}\n{} {}\n255\n", image.width, image.height).expect("vec write");
    out.extend_from_slice(&image.data);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// BT.601 luminance, rounded half away from zero.
pub fn rgb_to_gray(image: &RasterImage) -> Result<RasterImage> {
    if image.channels != 3 {
        return Err(Error::invalid(format!(
            "rgb_to_gray requires 3 channels, got {}",
            image.channels
        )));
    }
    let data = image
        .data
        .chunks_exact(3)
        .map(|px| {
            let y = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    RasterImage::new(image.width, image.height, 1, data)
}

/// Interprets a gray image as a mask: 255 is object, 0 is background.
pub fn image_to_mask(image: &RasterImage) -> Result<GroundTruthMask> {
    if image.channels != 1 {
        return Err(Error::invalid(format!(
            "masks must be single-channel, got {} channels",
            image.channels
        )));
    }
    let mut labels = Vec::with_capacity(image.data.len());
    for (i, &v) in image.data.iter().enumerate() {
        labels.push(match v {
            255 => Label::Object,
            0 => Label::Background,
            other => {
                return Err(Error::MaskValue {
                    x: i % image.width,
                    y: i / image.width,
                    value: other,
                })
            }
        });
    }
    GroundTruthMask::new(image.width, image.height, labels)
}

/// Renders a mask as a 0/255 gray image, the inverse of [`image_to_mask`].
pub fn mask_to_image(mask: &GroundTruthMask) -> RasterImage {
    let data = mask
        .labels
        .iter()
        .map(|l| match l {
            Label::Object => 255,
            Label::Background => 0,
        })
        .collect();
    RasterImage {
        width: mask.width,
        height: mask.height,
        channels: 1,
        data,
    }
}

/// Reads a P5 file whose pixels are all 0 or 255 as a mask.
pub fn read_mask(path: impl AsRef<Path>) -> Result<GroundTruthMask> {
    image_to_mask(&read_image(path)?)
}
