use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{correlation, PrecodingFunction, SpatialMap};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Per-sample correlations of one precoding function with their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Dataset index of each evaluated (nonzero) sample.
    pub indices: Vec<usize>,
    /// `η` per evaluated sample, aligned with `indices`.
    pub correlations: Vec<f64>,
    pub median: f64,
    pub mean: f64,
    /// Right-continuous empirical CDF as `(η, F(η))`, one pair per distinct η.
    pub cdf: Vec<(f64, f64)>,
    /// Zero-norm samples, for which η is undefined.
    pub excluded_count: usize,
    pub spatial: Option<SpatialMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub median: f64,
    pub mean: f64,
    pub count: usize,
    pub excluded_count: usize,
}

impl EvalReport {
    pub fn from_correlations(indices: Vec<usize>, correlations: Vec<f64>, excluded_count: usize) -> Self {
        let (median, mean) = if correlations.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (median(&correlations), correlations.iter().sum::<f64>() / correlations.len() as f64)
        };
        let cdf = empirical_cdf(&correlations);
        EvalReport { indices, correlations, median, mean, cdf, excluded_count, spatial: None }
    }

    pub fn summary(&self) -> EvalSummary {
        EvalSummary {
            median: self.median,
            mean: self.mean,
            count: self.correlations.len(),
            excluded_count: self.excluded_count,
        }
    }

    /// `F(x)`: fraction of samples with `η ≤ x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        match self.cdf.partition_point(|&(v, _)| v <= x) {
            0 => 0.0,
            k => self.cdf[k - 1].1,
        }
    }
}

/// Median; the mean of the two central order statistics for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Step points of the empirical CDF: sorted distinct values with the
/// fraction of samples at or below each.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = f,
            _ => out.push((*x, f)),
        }
    }
    out
}

/// Correlation of `precoder` on `ds` records `indices`; zero-norm channels
/// are counted in `excluded_count` instead.
pub fn evaluate<P: PrecodingFunction + ?Sized>(precoder: &P, ds: &LabeledDataset, indices: &[usize]) -> Result<EvalReport> {
    if indices.is_empty() {
        return Err(Error::InvalidConfig("nothing to evaluate".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::InvalidConfig(format!("index {bad} out of range")));
    }
    let per_sample: Vec<Option<f64>> = indices
        .par_iter()
        .map(|&i| {
            let r = &ds.records[i];
            if r.channel.is_zero() {
                return None;
            }
            let w = precoder.precode(&r.location, &r.channel);
            correlation(&w, &r.channel).ok()
        })
        .collect();
    let mut kept = Vec::with_capacity(indices.len());
    let mut etas = Vec::with_capacity(indices.len());
    for (&i, eta) in indices.iter().zip(per_sample) {
        if let Some(eta) = eta {
            kept.push(i);
            etas.push(eta);
        }
    }
    let excluded = indices.len() - kept.len();
    Ok(EvalReport::from_correlations(kept, etas, excluded))
}
