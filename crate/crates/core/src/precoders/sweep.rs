use log::info;
use serde::{Deserialize, Serialize};

use super::evaluate;
use crate::array::ArrayConfig;
use crate::dataset::{build_dataset, Split};
use crate::error::{Error, Result};
use crate::neuralnet::{train, ModelSpec, TrainConfig};
use crate::scene::Scene;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub eval_size: usize,
    /// Training set for size `N` is drawn with seed `data_seed + N`.
    pub data_seed: u64,
    pub eval_seed: u64,
    pub spec: ModelSpec,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    /// Nonzero training channels actually used.
    pub train_samples: usize,
    pub steps: u64,
    /// Wall-clock training time; not reproducible.
    pub train_seconds: f64,
}

/// Trains one model per training-set size on fresh datasets and scores all
/// of them on one shared held-out set.
pub fn n_sweep(scene: &Scene, array_cfg: &ArrayConfig, cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.n_values.is_empty() {
        return Err(Error::InvalidConfig("n_values must not be empty".into()));
    }
    let eval_ds = build_dataset(scene, array_cfg, cfg.eval_size, cfg.eval_seed)?;
    let eval_indices: Vec<usize> = (0..eval_ds.len()).collect();
    let mut rows = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let ds = build_dataset(scene, array_cfg, n, cfg.data_seed.wrapping_add(n as u64))?;
        let split = Split::all_train(&ds);
        let mut train_cfg = cfg.train;
        train_cfg.batch_size = train_cfg.batch_size.min(split.train_indices.len().max(1));
        let outcome = train(&ds, &split, &cfg.spec, &train_cfg)?;
        let report = evaluate(&outcome.model, &eval_ds, &eval_indices)?;
        info!("N = {n}: median {:.4}, mean {:.4}", report.median, report.mean);
        rows.push(SweepRow {
            n,
            median: report.median,
            mean: report.mean,
            train_samples: split.train_indices.len(),
            steps: outcome.steps,
            train_seconds: outcome.seconds,
        });
    }
    Ok(rows)
}
