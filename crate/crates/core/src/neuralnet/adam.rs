use super::dense::Dense;
use super::objective::Gradients;
use super::scalar::Scalar;
use super::{RffModel, TrainConfig};

/// One bias-corrected Adam update of `params` in place. `step` is 1-based.
pub fn adam_update<T: Scalar>(params: &mut [T], grads: &[T], m: &mut [T], v: &mut [T], step: u64, cfg: &TrainConfig) {
    let b1 = T::of(cfg.adam_beta1);
    let b2 = T::of(cfg.adam_beta2);
    let one = T::one();
    let bc1 = one - b1.powi(step as i32);
    let bc2 = one - b2.powi(step as i32);
    let lr = T::of(cfg.learning_rate);
    let eps = T::of(cfg.adam_epsilon);
    for (((p, &g), mi), vi) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *mi = b1 * *mi + (one - b1) * g;
        *vi = b2 * *vi + (one - b2) * g * g;
        let m_hat = *mi / bc1;
        let v_hat = *vi / bc2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// First and second moment estimates for every trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub step: u64,
    first: Vec<Dense<T>>,
    second: Vec<Dense<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &RffModel<T>) -> Self {
        let zeros: Vec<Dense<T>> = model.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect();
        AdamState { step: 0, first: zeros.clone(), second: zeros }
    }

    pub fn apply(&mut self, model: &mut RffModel<T>, grads: &Gradients<T>, cfg: &TrainConfig) {
        self.step += 1;
        for (((layer, g), m), v) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            adam_update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights, self.step, cfg);
            adam_update(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias, self.step, cfg);
        }
    }
}
