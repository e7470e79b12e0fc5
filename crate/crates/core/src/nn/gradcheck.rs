//! Central finite-difference verification of analytic gradients.

use super::mlp::MlpParams;
use crate::error::Result;

/// Scalar loss applied to a network output.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    /// `sum_j w_j y_j`.
    Linear(Vec<f64>),
    /// `0.5 * |y - target|^2`.
    HalfSquared(Vec<f64>),
}

impl LossSpec {
    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            LossSpec::Linear(w) => w.iter().zip(y).map(|(a, b)| a * b).sum(),
            LossSpec::HalfSquared(t) => 0.5 * y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
        }
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match self {
            LossSpec::Linear(w) => w.clone(),
            LossSpec::HalfSquared(t) => y.iter().zip(t).map(|(a, b)| a - b).collect(),
        }
    }
}

pub const FD_STEP: f64 = 1e-5;

/// Relative error with a small absolute floor so that two gradients that are
/// both zero up to roundoff compare equal.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Maximum relative error between the supplied analytic gradients and central
/// differences of `loss(net(x))` over every parameter and input.
pub fn compare_gradients(
    params: &MlpParams,
    x: &[f64],
    loss: &LossSpec,
    param_grads: &[f64],
    input_grads: &[f64],
) -> Result<f64> {
    let eval = |p: &MlpParams, x: &[f64]| -> Result<f64> { Ok(loss.value(&p.predict(x)?)) };
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for i in 0..params.theta.len() {
        let orig = probe.theta[i];
        probe.theta[i] = orig + FD_STEP;
        let up = eval(&probe, x)?;
        probe.theta[i] = orig - FD_STEP;
        let down = eval(&probe, x)?;
        probe.theta[i] = orig;
        worst = worst.max(relative_error(param_grads[i], (up - down) / (2.0 * FD_STEP)));
    }
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + FD_STEP;
        let up = eval(params, &xp)?;
        xp[i] = orig - FD_STEP;
        let down = eval(params, &xp)?;
        xp[i] = orig;
        worst = worst.max(relative_error(input_grads[i], (up - down) / (2.0 * FD_STEP)));
    }
    Ok(worst)
}

/// Checks [`MlpParams::backward`] against central differences.
pub fn grad_check(params: &MlpParams, x: &[f64], loss: &LossSpec) -> Result<f64> {
    let (y, cache) = params.forward(x)?;
    let (g, dx) = params.backward(&cache, &loss.gradient(&y))?;
    compare_gradients(params, x, loss, &g, &dx)
}
