//! Full-batch Levenberg-Marquardt training, plus a fixed-step gradient
//! descent trainer used only as a correctness cross-check.
//!
//! Each epoch assembles the residual vector r (every scalar error, two per
//! sample) and the output Jacobian J, then solves
//! (J^T J + lambda I) delta = J^T r and keeps the step only if the batch
//! MSE decreases. lambda shrinks on acceptance, grows on rejection, and a
//! singular system is treated like a rejection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mlp::gradient::{backprop_gradient, output_jacobian_row};
use crate::mlp::{forward, target_encoding, MLPModel};
use crate::sampler::LabeledSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub mse_goal: f64,
    pub lambda0: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 200,
            mse_goal: 1e-3,
            lambda0: 1e-3,
            lambda_up: 10.0,
            lambda_down: 10.0,
            lambda_max: 1e10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda0 <= 0.0 {
            return Err(Error::invalid("lambda0 must be positive"));
        }
        if self.lambda_up <= 1.0 || self.lambda_down <= 1.0 {
            return Err(Error::invalid("lambda_up and lambda_down must exceed 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainStatus {
    /// Batch MSE reached the configured goal.
    MseGoalReached,
    /// Epoch budget exhausted before the goal.
    MaxEpochsReached,
    /// lambda exceeded lambda_max; the best model so far is returned.
    LambdaOverflow,
}

impl TrainStatus {
    pub fn is_failure(self) -> bool {
        self == TrainStatus::LambdaOverflow
    }
}

/// One candidate-step evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub epoch: usize,
    pub mse: f64,
    pub lambda: f64,
    pub accepted: bool,
}

impl LogRow {
    pub fn line(&self) -> String {
        format!(
            "{},{:.9e},{:.3e},{}",
            self.epoch, self.mse, self.lambda, self.accepted
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MLPModel,
    /// MSE before training, then after each accepted epoch; non-increasing.
    pub history: Vec<f64>,
    pub status: TrainStatus,
    pub log: Vec<LogRow>,
}

impl TrainOutcome {
    pub fn final_mse(&self) -> f64 {
        *self.history.last().expect("history is never empty")
    }

    /// Renders the training log as `epoch,mse,lambda,accepted` rows.
    pub fn log_text(&self) -> String {
        let mut out = String::from("epoch,mse,lambda,accepted\n");
        for row in &self.log {
            out.push_str(&row.line());
            out.push('\n');
        }
        out
    }
}

/// Batch MSE over every scalar output component of every sample.
pub fn batch_mse(model: &MLPModel, samples: &[LabeledSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("batch MSE needs at least one sample"));
    }
    let mut sum = 0.0;
    for s in samples {
        let (o1, o2) = forward(model, &s.features)?.outputs();
        let t = target_encoding(s.label);
        sum += (t[0] - o1).powi(2) + (t[1] - o2).powi(2);
    }
    Ok(sum / (2 * samples.len()) as f64)
}

fn check_training_inputs(model: &MLPModel, samples: &[LabeledSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let width = model.spec().input_width();
    if samples.iter().any(|s| s.features.len() != width) {
        return Err(Error::invalid(format!(
            "sample feature width does not match network input width {width}"
        )));
    }
    Ok(())
}

/// Residuals r[2s + k] = target_k - output_k and the matching Jacobian rows
/// d(output_k)/d(theta).
fn fill_system(
    model: &MLPModel,
    samples: &[LabeledSample],
    jacobian: &mut DMatrix<f64>,
    residuals: &mut DVector<f64>,
    row_buf: &mut [f64],
) -> Result<()> {
    for (s, sample) in samples.iter().enumerate() {
        let fwd = forward(model, &sample.features)?;
        let out = &fwd.activations[3];
        let target = target_encoding(sample.label);
        for k in 0..2 {
            residuals[2 * s + k] = target[k] - out[k];
            output_jacobian_row(model, &fwd, k, row_buf);
            for (c, v) in row_buf.iter().enumerate() {
                jacobian[(2 * s + k, c)] = *v;
            }
        }
    }
    Ok(())
}

/// J^T J exploiting symmetry: columns of J are contiguous, so every entry
/// is one dot product of two column slices.
fn gram(jacobian: &DMatrix<f64>) -> DMatrix<f64> {
    let p = jacobian.ncols();
    let mut h = DMatrix::zeros(p, p);
    for i in 0..p {
        let ci = jacobian.column(i);
        for k in i..p {
            let v = ci.dot(&jacobian.column(k));
            h[(i, k)] = v;
            h[(k, i)] = v;
        }
    }
    h
}

/// Solves (h + lambda I) delta = g; None if the damped system is still not
/// positive definite.
pub(crate) fn lm_solve(h: &DMatrix<f64>, g: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut a = h.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    a.cholesky().map(|chol| chol.solve(g))
}

/// Levenberg-Marquardt over the full training batch.
pub fn train_lm(
    model: MLPModel,
    samples: &[LabeledSample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    check_training_inputs(&model, samples)?;

    let spec = model.spec();
    let p = spec.param_count();
    let m = 2 * samples.len();

    let mut current = model;
    let mut current_mse = batch_mse(&current, samples)?;
    let mut history = vec![current_mse];
    let mut log = Vec::new();

    if current_mse <= config.mse_goal {
        return Ok(TrainOutcome {
            model: current,
            history,
            status: TrainStatus::MseGoalReached,
            log,
        });
    }

    let mut theta = current.to_param_vec();
    let mut lambda = config.lambda0;
    let mut jacobian = DMatrix::zeros(m, p);
    let mut residuals = DVector::zeros(m);
    let mut row_buf = vec![0.0; p];

    for epoch in 1..=config.max_epochs {
        fill_system(
            &current,
            samples,
            &mut jacobian,
            &mut residuals,
            &mut row_buf,
        )?;
        let g = jacobian.tr_mul(&residuals);
        let h = gram(&jacobian);

        loop {
            if lambda > config.lambda_max {
                return Ok(TrainOutcome {
                    model: current,
                    history,
                    status: TrainStatus::LambdaOverflow,
                    log,
                });
            }
            let Some(delta) = lm_solve(&h, &g, lambda) else {
                lambda *= config.lambda_up;
                continue;
            };
            let cand_theta = &theta + &delta;
            let cand_model = MLPModel::from_param_vec(spec, &cand_theta)?;
            let cand_mse = batch_mse(&cand_model, samples)?;
            let accepted = cand_mse < current_mse;
            log.push(LogRow {
                epoch,
                mse: cand_mse,
                lambda,
                accepted,
            });
            if accepted {
                theta = cand_theta;
                current = cand_model;
                current_mse = cand_mse;
                lambda /= config.lambda_down;
                history.push(current_mse);
                break;
            }
            lambda *= config.lambda_up;
        }

        if current_mse <= config.mse_goal {
            return Ok(TrainOutcome {
                model: current,
                history,
                status: TrainStatus::MseGoalReached,
                log,
            });
        }
    }

    Ok(TrainOutcome {
        model: current,
        history,
        status: TrainStatus::MaxEpochsReached,
        log,
    })
}

/// Fixed-step (0.01) full-batch gradient descent with the same stopping
/// rules as [`train_lm`]; a cross-check oracle, not the method of record.
pub fn train_gd(
    model: MLPModel,
    samples: &[LabeledSample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    const STEP: f64 = 0.01;
    check_training_inputs(&model, samples)?;

    let spec = model.spec();
    let mut current = model;
    let mut current_mse = batch_mse(&current, samples)?;
    let mut history = vec![current_mse];
    let mut log = Vec::new();

    for epoch in 1..=config.max_epochs {
        if current_mse <= config.mse_goal {
            return Ok(TrainOutcome {
                model: current,
                history,
                status: TrainStatus::MseGoalReached,
                log,
            });
        }
        let mut grad = DVector::zeros(spec.param_count());
        for s in samples {
            let g = backprop_gradient(&current, &s.features, target_encoding(s.label))?;
            grad += g.to_param_vec();
        }
        grad /= samples.len() as f64;
        let theta = current.to_param_vec() - STEP * grad;
        current = MLPModel::from_param_vec(spec, &theta)?;
        current_mse = batch_mse(&current, samples)?;
        history.push(current_mse);
        log.push(LogRow {
            epoch,
            mse: current_mse,
            lambda: 0.0,
            accepted: true,
        });
    }

    let status = if current_mse <= config.mse_goal {
        TrainStatus::MseGoalReached
    } else {
        TrainStatus::MaxEpochsReached
    };
    Ok(TrainOutcome {
        model: current,
        history,
        status,
        log,
    })
}
