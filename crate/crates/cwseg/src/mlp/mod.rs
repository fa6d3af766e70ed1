//! Four-layer feedforward network with tansig units on every layer,
//! including the output pair (O1, O2) that drives the object/background
//! decision: object iff O1 > O2.
//!
//! The default shape is 81-18-10-2, matching a 9x9 gray context window.
//! Training is full-batch Levenberg-Marquardt (see [`train_lm`]); a plain
//! gradient-descent trainer ([`train_gd`]) exists as a correctness
//! cross-check, not as the method of record.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::Label;

mod gradient;
mod train;

pub use gradient::{backprop_gradient, Gradient};
pub use train::{batch_mse, train_gd, train_lm, LogRow, TrainConfig, TrainOutcome, TrainStatus};

/// Number of weight layers (input->h1, h1->h2, h2->out).
const WEIGHT_LAYERS: usize = 3;

/// Layer widths [n_in, h1, h2, n_out]. The output width is always 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    sizes: [usize; 4],
}

impl LayerSpec {
    pub fn new(sizes: [usize; 4]) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::invalid("layer sizes must be at least 1"));
        }
        if sizes[3] != 2 {
            return Err(Error::invalid(format!(
                "output layer must have 2 neurons, got {}",
                sizes[3]
            )));
        }
        Ok(LayerSpec { sizes })
    }

    /// Default hidden shape (18, 10) with a caller-chosen input width.
    pub fn with_input(n_in: usize) -> Result<Self> {
        LayerSpec::new([n_in, 18, 10, 2])
    }

    pub fn sizes(&self) -> [usize; 4] {
        self.sizes
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    /// Total number of weights and biases.
    pub fn param_count(&self) -> usize {
        (0..WEIGHT_LAYERS)
            .map(|l| self.sizes[l + 1] * (self.sizes[l] + 1))
            .sum()
    }
}

impl Default for LayerSpec {
    fn default() -> Self {
        LayerSpec {
            sizes: [81, 18, 10, 2],
        }
    }
}

/// Weights W1/W2/W3 (each h_out x h_in) and biases b1/b2/b3.
#[derive(Debug, Clone, PartialEq)]
pub struct MLPModel {
    spec: LayerSpec,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

impl MLPModel {
    pub fn new(
        spec: LayerSpec,
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if weights.len() != WEIGHT_LAYERS || biases.len() != WEIGHT_LAYERS {
            return Err(Error::invalid("expected 3 weight and 3 bias layers"));
        }
        let sizes = spec.sizes;
        for l in 0..WEIGHT_LAYERS {
            if weights[l].nrows() != sizes[l + 1] || weights[l].ncols() != sizes[l] {
                return Err(Error::invalid(format!(
                    "W{} must be {}x{}, got {}x{}",
                    l + 1,
                    sizes[l + 1],
                    sizes[l],
                    weights[l].nrows(),
                    weights[l].ncols()
                )));
            }
            if biases[l].len() != sizes[l + 1] {
                return Err(Error::invalid(format!(
                    "b{} must have {} entries, got {}",
                    l + 1,
                    sizes[l + 1],
                    biases[l].len()
                )));
            }
        }
        Ok(MLPModel {
            spec,
            weights,
            biases,
        })
    }

    pub fn spec(&self) -> LayerSpec {
        self.spec
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    /// Flattens all parameters, layer by layer: W row-major, then b.
    pub fn to_param_vec(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.spec.param_count());
        for l in 0..WEIGHT_LAYERS {
            let w = &self.weights[l];
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    v.push(w[(r, c)]);
                }
            }
            v.extend(self.biases[l].iter().copied());
        }
        DVector::from_vec(v)
    }

    /// Inverse of [`MLPModel::to_param_vec`].
    pub fn from_param_vec(spec: LayerSpec, params: &DVector<f64>) -> Result<Self> {
        if params.len() != spec.param_count() {
            return Err(Error::invalid(format!(
                "parameter vector length {} does not match the layer shape ({})",
                params.len(),
                spec.param_count()
            )));
        }
        let sizes = spec.sizes;
        let mut weights = Vec::with_capacity(WEIGHT_LAYERS);
        let mut biases = Vec::with_capacity(WEIGHT_LAYERS);
        let mut off = 0;
        for l in 0..WEIGHT_LAYERS {
            let (rows, cols) = (sizes[l + 1], sizes[l]);
            let w = DMatrix::from_fn(rows, cols, |r, c| params[off + r * cols + c]);
            off += rows * cols;
            let b = DVector::from_fn(rows, |r, _| params[off + r]);
            off += rows;
            weights.push(w);
            biases.push(b);
        }
        MLPModel::new(spec, weights, biases)
    }
}

/// Hyperbolic-tangent sigmoid, 2/(1 + e^(-2x)) - 1, computed as tanh(x)
/// so it saturates instead of overflowing.
pub fn tansig(x: f64) -> f64 {
    x.tanh()
}

/// Object/background from the output pair; ties go to background.
pub fn decide(o1: f64, o2: f64) -> Label {
    if o1 > o2 {
        Label::Object
    } else {
        Label::Background
    }
}

/// Target vectors: object (1, -1), background (-1, 1).
pub fn target_encoding(label: Label) -> [f64; 2] {
    match label {
        Label::Object => [1.0, -1.0],
        Label::Background => [-1.0, 1.0],
    }
}

/// All layer activations of one forward pass; `activations[0]` is the
/// input, `activations[3]` the output pair.
#[derive(Debug, Clone)]
pub struct Forward {
    pub activations: Vec<DVector<f64>>,
}

impl Forward {
    pub fn outputs(&self) -> (f64, f64) {
        let out = &self.activations[WEIGHT_LAYERS];
        (out[0], out[1])
    }
}

pub fn forward(model: &MLPModel, features: &[f64]) -> Result<Forward> {
    if features.len() != model.spec.input_width() {
        return Err(Error::invalid(format!(
            "feature width {} does not match network input width {}",
            features.len(),
            model.spec.input_width()
        )));
    }
    let mut activations = Vec::with_capacity(WEIGHT_LAYERS + 1);
    activations.push(DVector::from_column_slice(features));
    for l in 0..WEIGHT_LAYERS {
        let z = &model.weights[l] * activations.last().unwrap() + &model.biases[l];
        activations.push(z.map(tansig));
    }
    Ok(Forward { activations })
}

pub fn classify(model: &MLPModel, features: &[f64]) -> Result<Label> {
    let (o1, o2) = forward(model, features)?.outputs();
    Ok(decide(o1, o2))
}

/// Mean of (desired - actual)^2 over every scalar output component.
pub fn mse(predictions: &[[f64; 2]], targets: &[[f64; 2]]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(Error::invalid(
            "mse needs equal, non-empty prediction and target lists",
        ));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (t[0] - p[0]).powi(2) + (t[1] - p[1]).powi(2))
        .sum();
    Ok(sum / (2 * predictions.len()) as f64)
}

/// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer, from a
/// seeded generator; the draw order is W row-major then b, layer by layer.
pub fn init_weights(spec: LayerSpec, seed: u64) -> MLPModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = spec.sizes;
    let mut weights = Vec::with_capacity(WEIGHT_LAYERS);
    let mut biases = Vec::with_capacity(WEIGHT_LAYERS);
    for l in 0..WEIGHT_LAYERS {
        let bound = 1.0 / (sizes[l] as f64).sqrt();
        let (rows, cols) = (sizes[l + 1], sizes[l]);
        let mut w = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                w[(r, c)] = rng.random_range(-bound..=bound);
            }
        }
        let mut b = DVector::zeros(rows);
        for r in 0..rows {
            b[r] = rng.random_range(-bound..=bound);
        }
        weights.push(w);
        biases.push(b);
    }
    MLPModel::new(spec, weights, biases).expect("shapes match by construction")
}

/// Text model format: layer sizes on line 1, then W1, W2, W3, b1, b2, b3,
/// one matrix row per line, 17 significant digits.
pub fn save_model(model: &MLPModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let sizes = model.spec.sizes;
    out.push_str(&format!(
        "{} {} {} {}\n",
        sizes[0], sizes[1], sizes[2], sizes[3]
    ));
    for w in &model.weights {
        for r in 0..w.nrows() {
            let row: Vec<String> = (0..w.ncols())
                .map(|c| format!("{:.16e}", w[(r, c)]))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    for b in &model.biases {
        let row: Vec<String> = b.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MLPModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());

    let header = lines
        .next()
        .ok_or_else(|| Error::format(Some(path.into()), "empty model file"))?;
    let sizes: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::format(Some(path.into()), format!("bad layer size {t:?}")))
        })
        .collect::<Result<_>>()?;
    if sizes.len() != 4 {
        return Err(Error::format(
            Some(path.into()),
            format!("expected 4 layer sizes, found {}", sizes.len()),
        ));
    }
    let spec = LayerSpec::new([sizes[0], sizes[1], sizes[2], sizes[3]])?;

    let rows: Vec<&str> = lines.collect();
    let expected_rows = sizes[1] + sizes[2] + sizes[3] + WEIGHT_LAYERS;
    if rows.len() != expected_rows {
        return Err(Error::format(
            Some(path.into()),
            format!("expected {expected_rows} matrix rows, found {}", rows.len()),
        ));
    }

    let parse_row = |line: &str, want: usize, what: &str| -> Result<Vec<f64>> {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::format(Some(path.into()), format!("bad value {t:?} in {what}"))
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != want {
            return Err(Error::format(
                Some(path.into()),
                format!("{what}: expected {want} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    };

    let mut cursor = 0;
    let mut weights = Vec::with_capacity(WEIGHT_LAYERS);
    for l in 0..WEIGHT_LAYERS {
        let (nrows, ncols) = (sizes[l + 1], sizes[l]);
        let mut w = DMatrix::zeros(nrows, ncols);
        for r in 0..nrows {
            let vals = parse_row(rows[cursor], ncols, &format!("W{} row {r}", l + 1))?;
            cursor += 1;
            for (c, v) in vals.into_iter().enumerate() {
                w[(r, c)] = v;
            }
        }
        weights.push(w);
    }
    let mut biases = Vec::with_capacity(WEIGHT_LAYERS);
    for l in 0..WEIGHT_LAYERS {
        let vals = parse_row(rows[cursor], sizes[l + 1], &format!("b{}", l + 1))?;
        cursor += 1;
        biases.push(DVector::from_vec(vals));
    }

    MLPModel::new(spec, weights, biases)
}
