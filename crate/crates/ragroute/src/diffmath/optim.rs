//! Adaptive optimizer with decoupled weight decay.

use crate::error::{Error, Result};

/// Optimizer hyperparameters.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct OptConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// First/second moment accumulators plus the step counter.
#[derive(Clone, Debug)]
pub struct OptState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub cfg: OptConfig,
}

impl OptState {
    pub fn new(num_params: usize, cfg: OptConfig) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
            cfg,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update: decays weights by `lr * weight_decay` separately from
    /// the bias-corrected adaptive gradient term.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "optimizer holds {} parameters, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let OptConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.cfg;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let decay = 1.0 - lr * weight_decay;

        for i in 0..params.len() {
            params[i] *= decay;
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
