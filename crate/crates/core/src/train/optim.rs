//! AdamW, linear learning-rate decay and global-norm clipping.

use serde::{Deserialize, Serialize};

use crate::model::{GradientSet, ParamGroup};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    #[default]
    Linear,
}

/// Linear decay from `lr_peak` at step 0 to zero at `total_steps`.
pub fn lr_at(step: usize, total_steps: usize, lr_peak: f64) -> f64 {
    if total_steps == 0 {
        return lr_peak;
    }
    let step = step.min(total_steps);
    lr_peak * (total_steps - step) as f64 / total_steps as f64
}

/// Rescales `grad` in place so its L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_flat(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Global-norm clipping across every group.
pub fn clip_gradients(mut g: GradientSet, max_norm: f64) -> GradientSet {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = g.global_norm();
    if norm > max_norm {
        g.scale(max_norm / norm);
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamW {
    pub fn new(n_params: usize) -> Self {
        AdamW { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update: decoupled decay `w -= lr*wd*w`, then the bias-corrected
    /// Adam step.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, weight_decay: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let decay = 1.0 - lr * weight_decay;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] = params[i] * decay - lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }

    /// Same update driven by a grouped gradient.
    pub fn step_grouped(
        &mut self,
        params: &mut [f64],
        groups: &[ParamGroup],
        grads: &GradientSet,
        lr: f64,
        weight_decay: f64,
    ) -> Result<()> {
        let mut flat = vec![0.0; params.len()];
        grads.scatter(groups, &mut flat)?;
        self.step(params, &flat, lr, weight_decay);
        Ok(())
    }
}
