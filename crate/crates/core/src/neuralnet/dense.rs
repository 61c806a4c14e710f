//! Fully connected layers over row-major minibatches.
//!
//! Every output element is produced by one thread with a fixed summation
//! order, so results are bit-identical for any rayon pool size.

use rayon::prelude::*;

use super::scalar::Scalar;

/// Rows per rayon task; keeps tiny batches on one thread.
const MIN_ROWS_PER_TASK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs × inputs`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn row(&self, o: usize) -> &[T] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    /// `out[b] = W·x[b] + bias`, optionally followed by ReLU.
    pub fn forward(&self, x: &[T], out: &mut [T], relu: bool) {
        debug_assert_eq!(x.len() % self.inputs, 0);
        out.par_chunks_mut(self.outputs)
            .zip(x.par_chunks(self.inputs))
            .with_min_len(MIN_ROWS_PER_TASK)
            .for_each(|(y, xb)| {
                for (o, yo) in y.iter_mut().enumerate() {
                    let z = dot(self.row(o), xb) + self.bias[o];
                    *yo = if relu && z <= T::zero() { T::zero() } else { z };
                }
            });
    }

    /// Accumulates parameter gradients for upstream gradient `dz` (batch ×
    /// outputs) and layer input `x` (batch × inputs) into `grad`.
    pub fn accumulate_grads(&self, x: &[T], dz: &[T], grad: &mut Dense<T>) {
        let batch = dz.len() / self.outputs;
        let (ins, outs) = (self.inputs, self.outputs);
        grad.weights
            .par_chunks_mut(ins)
            .zip(grad.bias.par_iter_mut())
            .enumerate()
            .with_min_len(MIN_ROWS_PER_TASK)
            .for_each(|(o, (gw, gb))| {
                for b in 0..batch {
                    let g = dz[b * outs + o];
                    if g != T::zero() {
                        axpy(gw, g, &x[b * ins..(b + 1) * ins]);
                    }
                    *gb = *gb + g;
                }
            });
    }

    /// `dx[b] = Wᵀ·dz[b]`.
    pub fn backward_input(&self, dz: &[T], dx: &mut [T]) {
        dx.par_chunks_mut(self.inputs)
            .zip(dz.par_chunks(self.outputs))
            .with_min_len(MIN_ROWS_PER_TASK)
            .for_each(|(dxb, dzb)| {
                dxb.iter_mut().for_each(|v| *v = T::zero());
                for (o, &g) in dzb.iter().enumerate() {
                    if g != T::zero() {
                        axpy(dxb, g, self.row(o));
                    }
                }
            });
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail = tail + *x * *y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `y += alpha·x`
#[inline]
pub fn axpy<T: Scalar>(y: &mut [T], alpha: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}
