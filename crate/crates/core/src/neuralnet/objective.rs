//! Misalignment cost `1 − (1/B)·Σ |wᴴh|² / ‖h‖²` and its exact gradient.
//!
//! Channels enter pre-normalized and stacked as `[Re h, Im h]`, which makes
//! the cost and every gradient invariant to per-sample channel scaling.

use super::dense::Dense;
use super::scalar::Scalar;
use super::RffModel;
use crate::error::{Error, Result};
use crate::scene::{ChannelVector, Location};

/// Floor of the head's normalization denominator.
pub const HEAD_EPSILON: f64 = 1e-12;

/// Gradient of the batch cost with respect to every trainable layer, laid
/// out like [`RffModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub cost: f64,
    pub layers: Vec<Dense<T>>,
}

/// `h / ‖h‖` stacked as `[re..., im...]`.
pub(crate) fn stacked_unit_channel(h: &ChannelVector, index: usize) -> Result<Vec<f64>> {
    let n = h.norm();
    if n == 0.0 {
        return Err(Error::ZeroNormChannel { index });
    }
    let a = h.len();
    let mut out = vec![0.0; 2 * a];
    for (k, z) in h.0.iter().enumerate() {
        out[k] = z.re / n;
        out[a + k] = z.im / n;
    }
    Ok(out)
}

/// Per-sample head: returns `η = |wᴴh|²` for unit `h` and writes
/// `scale · ∂η/∂raw` into `d_raw`.
fn head<T: Scalar>(raw: &[T], h: &[T], scale: T, d_raw: &mut [T]) -> T {
    let a = raw.len() / 2;
    let (vr, vi) = raw.split_at(a);
    let (hr, hi) = h.split_at(a);
    let norm = raw.iter().map(|&x| x * x).sum::<T>().sqrt();
    let eps = T::of(HEAD_EPSILON);
    let den = if norm > eps { norm } else { eps };

    // s = wᴴh with w = v / den
    let mut sr = T::zero();
    let mut si = T::zero();
    for k in 0..a {
        let (wr, wi) = (vr[k] / den, vi[k] / den);
        sr = sr + wr * hr[k] + wi * hi[k];
        si = si + wr * hi[k] - wi * hr[k];
    }
    let eta = sr * sr + si * si;

    // g = ∂η/∂w
    let two = T::of(2.0);
    let (gr, gi) = d_raw.split_at_mut(a);
    for k in 0..a {
        gr[k] = two * (sr * hr[k] + si * hi[k]);
        gi[k] = two * (sr * hi[k] - si * hr[k]);
    }
    if norm > eps {
        // ∂η/∂v = (g − w·⟨w, g⟩) / ‖v‖
        let wg = raw.iter().zip(d_raw.iter()).map(|(&v, &g)| v * g).sum::<T>() / norm;
        for (d, &v) in d_raw.iter_mut().zip(raw) {
            *d = scale * (*d - v / norm * wg) / norm;
        }
    } else {
        for d in d_raw.iter_mut() {
            *d = scale * *d / eps;
        }
    }
    eta
}

/// Batch cost and `∂cost/∂raw` for raw outputs and unit stacked targets.
pub(crate) fn batch_objective<T: Scalar>(raw: &[T], targets: &[T], out_dim: usize) -> (f64, Vec<T>) {
    let batch = raw.len() / out_dim;
    let scale = -T::one() / T::of(batch as f64);
    let mut d_raw = vec![T::zero(); raw.len()];
    let mut eta_sum = 0.0;
    for b in 0..batch {
        let r = b * out_dim..(b + 1) * out_dim;
        eta_sum += head(&raw[r.clone()], &targets[r.clone()], scale, &mut d_raw[r]).f64();
    }
    (1.0 - eta_sum / batch as f64, d_raw)
}

/// Cost and gradients for encoded inputs and stacked unit targets.
pub(crate) fn encoded_gradients<T: Scalar>(model: &RffModel<T>, inputs: &[T], targets: &[T]) -> Gradients<T> {
    let acts = model.forward_batch(inputs);
    let n_layers = model.layers.len();
    let (cost, mut d) = batch_objective(&acts[n_layers - 1], targets, model.mlp.output_dim);
    let mut layers: Vec<Dense<T>> = model.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect();
    for l in (0..n_layers).rev() {
        let layer = &model.layers[l];
        if l + 1 < n_layers {
            for (g, &y) in d.iter_mut().zip(&acts[l]) {
                if y <= T::zero() {
                    *g = T::zero();
                }
            }
        }
        let x = if l == 0 { inputs } else { &acts[l - 1] };
        layer.accumulate_grads(x, &d, &mut layers[l]);
        if l > 0 {
            let mut dx = vec![T::zero(); d.len() / layer.outputs * layer.inputs];
            layer.backward_input(&d, &mut dx);
            d = dx;
        }
    }
    Gradients { cost, layers }
}

pub(crate) fn encode_batch<T: Scalar>(
    model: &RffModel<T>,
    batch: &[(Location, ChannelVector)],
) -> Result<(Vec<T>, Vec<T>)> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let mut inputs = Vec::with_capacity(batch.len() * model.input_width());
    let mut targets = Vec::with_capacity(batch.len() * model.mlp.output_dim);
    for (i, (l, h)) in batch.iter().enumerate() {
        if l.dim() != model.dim {
            return Err(Error::DimensionMismatch(format!("location {i} has {} coordinates", l.dim())));
        }
        if 2 * h.len() != model.mlp.output_dim {
            return Err(Error::DimensionMismatch(format!("channel {i} has {} entries", h.len())));
        }
        inputs.extend(model.encode(&l.0));
        targets.extend(stacked_unit_channel(h, i)?.into_iter().map(T::of));
    }
    Ok((inputs, targets))
}

/// Mean misalignment of the model's precoders over `batch`, in `[0, 1]`.
pub fn cost<T: Scalar>(model: &RffModel<T>, batch: &[(Location, ChannelVector)]) -> Result<f64> {
    let (inputs, targets) = encode_batch(model, batch)?;
    let acts = model.forward_batch(&inputs);
    Ok(batch_objective(acts.last().unwrap(), &targets, model.mlp.output_dim).0)
}

/// Exact gradients of [`cost`] with respect to all trainable parameters.
pub fn backward<T: Scalar>(model: &RffModel<T>, batch: &[(Location, ChannelVector)]) -> Result<Gradients<T>> {
    let (inputs, targets) = encode_batch(model, batch)?;
    Ok(encoded_gradients(model, &inputs, &targets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_output_costs_zero() {
        let h = [0.6, 0.0, 0.0, 0.8];
        let (c, _) = batch_objective(&[1.2, 0.0, 0.0, 1.6], &h, 4);
        assert!(c.abs() < 1e-15);
    }

    #[test]
    fn orthogonal_output_costs_one() {
        let h = [1.0, 0.0, 0.0, 0.0];
        let (c, _) = batch_objective(&[0.0, 1.0, 0.0, 0.0], &h, 4);
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_correlation() {
        // w = (1, 0), h ∝ (1, 1)
        let s = 1.0 / 2f64.sqrt();
        let (c, _) = batch_objective(&[1.0, 0.0, 0.0, 0.0], &[s, s, 0.0, 0.0], 4);
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn head_gradient_matches_differences() {
        let raw = [0.3, -1.2, 0.7, 0.1, 0.5, -0.4];
        let h = {
            let v = [0.2, 0.9, -0.3, 0.4, -0.1, 0.25];
            let n = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            v.map(|x| x / n)
        };
        let (_, g) = batch_objective(&raw, &h, 6);
        for k in 0..6 {
            let step = 1e-6;
            let mut p = raw;
            p[k] += step;
            let mut m = raw;
            m[k] -= step;
            let fd = (batch_objective(&p, &h, 6).0 - batch_objective(&m, &h, 6).0) / (2.0 * step);
            assert!((fd - g[k]).abs() < 1e-8, "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn zero_channel_is_an_error() {
        let err = stacked_unit_channel(&ChannelVector::zeros(3), 4).unwrap_err();
        assert!(matches!(err, Error::ZeroNormChannel { index: 4 }));
    }
}
