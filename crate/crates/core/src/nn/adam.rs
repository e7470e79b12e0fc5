use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bias-corrected adaptive-moment optimizer state for one parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grads: &[f64]) -> Result<()> {
        if theta.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "optimizer tracks {} parameters, got {} params / {} grads",
                self.m.len(),
                theta.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!("non-finite gradient at index {i}")));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, &g), m), v) in theta.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
