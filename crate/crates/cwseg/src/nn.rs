//! 1-nearest-neighbor baseline: a query takes the label of the minimally
//! distant stored context window (Euclidean distance, ties broken by the
//! lowest stored index). The implementation is the exhaustive scan itself.

use crate::error::{Error, Result};
use crate::image::Label;
use crate::sampler::LabeledSample;

#[derive(Debug, Clone, PartialEq)]
pub struct NNModel {
    samples: Vec<(Vec<f64>, Label)>,
    width: usize,
}

impl NNModel {
    pub fn new(samples: Vec<(Vec<f64>, Label)>) -> Result<Self> {
        let width = match samples.first() {
            Some((f, _)) => f.len(),
            None => return Err(Error::invalid("nearest-neighbor model needs samples")),
        };
        if samples.iter().any(|(f, _)| f.len() != width) {
            return Err(Error::invalid(
                "all stored feature vectors must have the same width",
            ));
        }
        Ok(NNModel { samples, width })
    }

    /// Builds a model from labeled samples, usually a dataset's train split.
    pub fn from_samples(samples: &[LabeledSample]) -> Result<Self> {
        NNModel::new(
            samples
                .iter()
                .map(|s| (s.features.clone(), s.label))
                .collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn classify_1nn(model: &NNModel, query: &[f64]) -> Result<Label> {
    if query.len() != model.width {
        return Err(Error::invalid(format!(
            "query width {} does not match model width {}",
            query.len(),
            model.width
        )));
    }
    let mut best = (f64::INFINITY, Label::Background);
    for (features, label) in &model.samples {
        let d2: f64 = features
            .iter()
            .zip(query)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        // strict comparison keeps the earliest index on ties
        if d2 < best.0 {
            best = (d2, *label);
        }
    }
    Ok(best.1)
}
