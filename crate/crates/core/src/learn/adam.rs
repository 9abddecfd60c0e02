use serde::{Deserialize, Serialize};

use super::ModelState;
use crate::error::Result;
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    /// L2 penalty added to the gradient before the moment updates.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments for every parameter of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
}

impl OptimizerState {
    pub fn new(model: &ModelState, config: AdamConfig) -> Self {
        let zeros = || {
            model
                .params
                .iter()
                .map(|p| DenseMatrix::zeros(p.value.rows(), p.value.cols()))
                .collect()
        };
        Self {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update using the accumulated gradients, which are
/// cleared afterwards.
pub fn adam_step(opt: &mut OptimizerState, model: &mut ModelState) -> Result<()> {
    let AdamConfig {
        lr,
        weight_decay,
        beta1,
        beta2,
        eps,
    } = opt.config;
    opt.step += 1;
    let t = opt.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (k, p) in model.params.iter_mut().enumerate() {
        let m = opt.m[k].data_mut();
        let v = opt.v[k].data_mut();
        let w = p.value.data_mut();
        for (((w, g), m), v) in w.iter_mut().zip(p.grad.data()).zip(m).zip(v) {
            let g = g + weight_decay * *w;
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
        p.zero_grad();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_closed_form() {
        let mut model = ModelState::mlp(&[2, 2], 0).unwrap();
        let before = model.clone();
        let grads = [0.5, -2.0, 0.0, 1e-3];
        model.params[0].grad = DenseMatrix::from_vec(2, 2, grads.to_vec()).unwrap();
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut opt = OptimizerState::new(&model, cfg);
        adam_step(&mut opt, &mut model).unwrap();
        for (k, &g) in grads.iter().enumerate().take(4) {
            let expected = before.params[0].value.data()[k] - 0.01 * g / (g.abs() + 1e-8);
            assert!((model.params[0].value.data()[k] - expected).abs() < 1e-15);
        }
        assert!(model.params[0].grad.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut model = ModelState::mlp(&[3, 2], 4).unwrap();
        let before = model.clone();
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut opt = OptimizerState::new(&model, cfg);
        for _ in 0..3 {
            adam_step(&mut opt, &mut model).unwrap();
        }
        assert_eq!(model, before);
    }

    #[test]
    fn weight_decay_shrinks_weights() {
        let mut model = ModelState::mlp(&[3, 2], 4).unwrap();
        let before = model.clone();
        let mut opt = OptimizerState::new(&model, AdamConfig::default());
        adam_step(&mut opt, &mut model).unwrap();
        for (a, b) in model.params[0].value.data().iter().zip(before.params[0].value.data()) {
            assert!(a.abs() < b.abs());
        }
    }
}
