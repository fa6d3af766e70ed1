//! Classification-efficiency reports and whole-image segmentation.
//!
//! Efficiency is 100 * correct / total, rounded half away from zero to
//! exactly two decimals.

use crate::context::{extract_window, window_length};
use crate::error::{Error, Result};
use crate::image::{mask_to_image, rgb_to_gray, GroundTruthMask, Label, RasterImage};
use crate::mlp::{classify, MLPModel};
use crate::nn::{classify_1nn, NNModel};
use crate::sampler::LabeledSample;

/// Which half of the dataset a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    pub split: Split,
    pub total: usize,
    pub correct: usize,
    pub efficiency: f64,
}

impl EfficiencyReport {
    /// One `split,total,correct,efficiency` text line.
    pub fn line(&self) -> String {
        format!(
            "{},{},{},{:.2}",
            self.split, self.total, self.correct, self.efficiency
        )
    }
}

/// 100 * correct / total as a percentage with exactly two decimals,
/// rounded half away from zero.
pub fn efficiency(correct: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::invalid("efficiency needs a non-zero total"));
    }
    if correct > total {
        return Err(Error::invalid(format!(
            "correct {correct} exceeds total {total}"
        )));
    }
    Ok((correct as f64 * 10000.0 / total as f64).round() / 100.0)
}

/// Anything that labels a flattened context window.
pub trait Classifier {
    fn feature_width(&self) -> usize;
    fn classify_features(&self, features: &[f64]) -> Result<Label>;
}

impl Classifier for MLPModel {
    fn feature_width(&self) -> usize {
        self.spec().input_width()
    }

    fn classify_features(&self, features: &[f64]) -> Result<Label> {
        classify(self, features)
    }
}

impl Classifier for NNModel {
    fn feature_width(&self) -> usize {
        self.width()
    }

    fn classify_features(&self, features: &[f64]) -> Result<Label> {
        classify_1nn(self, features)
    }
}

/// Counts correct classifications over one dataset split.
pub fn evaluate<C: Classifier + ?Sized>(
    classifier: &C,
    samples: &[LabeledSample],
    split: Split,
) -> Result<EfficiencyReport> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty split"));
    }
    let width = classifier.feature_width();
    if samples.iter().any(|s| s.features.len() != width) {
        return Err(Error::invalid(format!(
            "sample feature width does not match classifier width {width}"
        )));
    }
    let mut correct = 0;
    for s in samples {
        if classifier.classify_features(&s.features)? == s.label {
            correct += 1;
        }
    }
    Ok(EfficiencyReport {
        split,
        total: samples.len(),
        correct,
        efficiency: efficiency(correct, samples.len())?,
    })
}

/// Classifies every pixel of `image` through its context window and returns
/// the binary mask (object = 255) plus the gray image with background
/// pixels zeroed.
pub fn segment_image<C: Classifier + ?Sized>(
    classifier: &C,
    image: &RasterImage,
    window: usize,
) -> Result<(RasterImage, RasterImage)> {
    let expected = window_length(window, image.channels())?;
    if classifier.feature_width() != expected {
        return Err(Error::invalid(format!(
            "classifier width {} does not match window {window} over {} channels (needs {expected})",
            classifier.feature_width(),
            image.channels()
        )));
    }

    let gray = if image.channels() == 3 {
        rgb_to_gray(image)?
    } else {
        image.clone()
    };

    let mut mask = Vec::with_capacity(image.width() * image.height());
    for y in 0..image.height() {
        for x in 0..image.width() {
            let cw = extract_window(image, (x, y), window)?;
            mask.push(classifier.classify_features(&cw.features)?);
        }
    }
    let mask = GroundTruthMask::new(image.width(), image.height(), mask)?;
    let mask_img = mask_to_image(&mask);
    let masked: Vec<u8> = gray
        .data()
        .iter()
        .zip(mask_img.data())
        .map(|(&g, &m)| if m == 255 { g } else { 0 })
        .collect();
    let gray_masked = RasterImage::new(image.width(), image.height(), 1, masked)?;
    Ok((mask_img, gray_masked))
}

/// Whole-image agreement between a predicted and a reference mask, as a
/// two-decimal percentage. This is distinct from split efficiency: it runs
/// over every pixel of an image, not over sampled windows.
pub fn pixel_accuracy(predicted: &GroundTruthMask, truth: &GroundTruthMask) -> Result<f64> {
    if predicted.width() != truth.width() || predicted.height() != truth.height() {
        return Err(Error::invalid("mask dimensions differ"));
    }
    let correct = predicted
        .labels()
        .iter()
        .zip(truth.labels())
        .filter(|(a, b)| a == b)
        .count();
    efficiency(correct, truth.labels().len())
}
