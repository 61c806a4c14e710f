use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::objective::{encoded_gradients, stacked_unit_channel};
use super::scalar::Scalar;
use super::{ModelSpec, RffModel, TrainConfig};
use crate::dataset::{LabeledDataset, Split};
use crate::error::{Error, Result};

/// Encoded inputs and unit stacked channels for a fixed set of records.
/// The feature layer is frozen, so encoding happens once up front.
#[derive(Debug, Clone)]
pub struct TrainingSet<T> {
    pub inputs: Vec<T>,
    pub targets: Vec<T>,
    pub len: usize,
    pub input_width: usize,
    pub output_width: usize,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn encode(model: &RffModel<T>, ds: &LabeledDataset, indices: &[usize]) -> Result<Self> {
        let input_width = model.input_width();
        let output_width = model.mlp.output_dim;
        let mut inputs = Vec::with_capacity(indices.len() * input_width);
        let mut targets = Vec::with_capacity(indices.len() * output_width);
        for &i in indices {
            let r = &ds.records[i];
            inputs.extend(model.encode(&r.location.0));
            targets.extend(stacked_unit_channel(&r.channel, i)?.into_iter().map(T::of));
        }
        Ok(TrainingSet { inputs, targets, len: indices.len(), input_width, output_width })
    }

    fn gather(&self, rows: &[usize], inputs: &mut Vec<T>, targets: &mut Vec<T>) {
        inputs.clear();
        targets.clear();
        for &r in rows {
            inputs.extend_from_slice(&self.inputs[r * self.input_width..(r + 1) * self.input_width]);
            targets.extend_from_slice(&self.targets[r * self.output_width..(r + 1) * self.output_width]);
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T = f32> {
    pub model: RffModel<T>,
    /// Mean training cost over each epoch's minibatches.
    pub cost_trace: Vec<f64>,
    /// Optimizer steps taken.
    pub steps: u64,
    pub seconds: f64,
}

/// Trains in `f32`.
pub fn train(ds: &LabeledDataset, split: &Split, spec: &ModelSpec, cfg: &TrainConfig) -> Result<TrainOutcome<f32>> {
    train_generic(ds, split, spec, cfg)
}

/// Minibatch Adam on the misalignment cost over `split.train_indices`.
///
/// Zero-norm channels are skipped. Inputs are centered on the mean training
/// location. Each epoch reshuffles with a ChaCha stream derived from
/// `cfg.rng_seed`; the final partial batch is kept. Given fixed seeds the
/// trajectory is bit-reproducible for any thread count.
pub fn train_generic<T: Scalar>(
    ds: &LabeledDataset,
    split: &Split,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let started = Instant::now();
    let rows: Vec<usize> = split
        .train_indices
        .iter()
        .copied()
        .filter(|&i| !ds.records[i].channel.is_zero())
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if cfg.batch_size > rows.len() {
        return Err(Error::InvalidConfig(format!(
            "batch size {} exceeds the {} usable training samples",
            cfg.batch_size,
            rows.len()
        )));
    }

    let mut centroid = vec![0.0; ds.dim];
    for &i in &rows {
        for (c, x) in centroid.iter_mut().zip(&ds.records[i].location.0) {
            *c += x;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= rows.len() as f64);

    let mut model = RffModel::<T>::new(ds.array_cfg, ds.dim, spec, centroid, cfg.rng_seed)?;
    let set = TrainingSet::encode(&model, ds, &rows)?;
    let mut adam = AdamState::new(&model);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    shuffle_rng.set_stream(1);

    let mut order: Vec<usize> = (0..set.len).collect();
    let (mut inputs, mut targets) = (Vec::new(), Vec::new());
    let mut cost_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            set.gather(chunk, &mut inputs, &mut targets);
            let grads = encoded_gradients(&model, &inputs, &targets);
            weighted += grads.cost * chunk.len() as f64;
            adam.apply(&mut model, &grads, cfg);
        }
        let epoch_cost = weighted / set.len as f64;
        debug!("epoch {:>3}: cost {epoch_cost:.5}", epoch + 1);
        cost_trace.push(epoch_cost);
    }
    let seconds = started.elapsed().as_secs_f64();
    info!(
        "trained {:?} model ({} params) on {} samples: cost {:.4} -> {:.4} in {seconds:.1}s",
        spec.arch,
        model.num_params(),
        set.len,
        cost_trace.first().copied().unwrap_or(f64::NAN),
        cost_trace.last().copied().unwrap_or(f64::NAN),
    );
    Ok(TrainOutcome { model, cost_trace, steps: adam.step, seconds })
}
