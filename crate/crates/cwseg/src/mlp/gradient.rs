//! Reverse-accumulation gradients and output Jacobian rows.
//!
//! The tansig derivative is computed from the activation as 1 - a^2, so a
//! forward pass provides everything the backward passes need.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::mlp::{forward, Forward, MLPModel};

/// Per-parameter gradient with the same shape as the model.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Gradient {
    /// Flattened in the model's parameter order.
    pub fn to_param_vec(&self) -> DVector<f64> {
        let mut v = Vec::new();
        for l in 0..self.weights.len() {
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
}

/// Backward deltas for every weight layer, given the seed vector
/// d(quantity)/d(z_out) at the output layer.
fn backward_deltas(
    model: &MLPModel,
    fwd: &Forward,
    output_seed: DVector<f64>,
) -> Vec<DVector<f64>> {
    let layers = model.weights().len();
    let mut deltas = vec![DVector::zeros(0); layers];
    deltas[layers - 1] = output_seed;
    for l in (0..layers - 1).rev() {
        let back = model.weights()[l + 1].tr_mul(&deltas[l + 1]);
        let a = &fwd.activations[l + 1];
        deltas[l] = back.zip_map(a, |g, a| g * (1.0 - a * a));
    }
    deltas
}

/// Exact gradient of the per-sample MSE, mean((target - output)^2), with
/// respect to every weight and bias.
pub fn backprop_gradient(model: &MLPModel, features: &[f64], target: [f64; 2]) -> Result<Gradient> {
    let fwd = forward(model, features)?;
    let out = &fwd.activations[model.weights().len()];
    let n_out = out.len() as f64;
    // d(mse)/d(z_out_k) = (-2 e_k / n_out) * (1 - a_k^2)
    let seed = DVector::from_fn(out.len(), |k, _| {
        let e = target[k] - out[k];
        (-2.0 * e / n_out) * (1.0 - out[k] * out[k])
    });
    let deltas = backward_deltas(model, &fwd, seed);

    let mut weights = Vec::with_capacity(deltas.len());
    let mut biases = Vec::with_capacity(deltas.len());
    for (l, delta) in deltas.iter().enumerate() {
        weights.push(delta * fwd.activations[l].transpose());
        biases.push(delta.clone());
    }
    Ok(Gradient { weights, biases })
}

/// Writes d(output_k)/d(theta) into `row` (length = param count), using the
/// flattened parameter order of [`MLPModel::to_param_vec`].
pub(crate) fn output_jacobian_row(model: &MLPModel, fwd: &Forward, k: usize, row: &mut [f64]) {
    let layers = model.weights().len();
    let out = &fwd.activations[layers];
    let mut seed = DVector::zeros(out.len());
    seed[k] = 1.0 - out[k] * out[k];
    let deltas = backward_deltas(model, fwd, seed);

    let mut off = 0;
    for (l, delta) in deltas.iter().enumerate() {
        let a_prev = &fwd.activations[l];
        let cols = a_prev.len();
        for r in 0..delta.len() {
            let d = delta[r];
            let chunk = &mut row[off + r * cols..off + (r + 1) * cols];
            for (c, slot) in chunk.iter_mut().enumerate() {
                *slot = d * a_prev[c];
            }
        }
        off += delta.len() * cols;
        for r in 0..delta.len() {
            row[off + r] = delta[r];
        }
        off += delta.len();
    }
    debug_assert_eq!(off, row.len());
}
