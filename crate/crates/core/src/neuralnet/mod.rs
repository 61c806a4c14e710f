//! Location → precoder networks.
//!
//! The RFF variant encodes a centered location with a frozen random Fourier
//! feature layer, the plain variant with a trainable affine + ReLU layer of
//! the same width. Both continue with ReLU layers of width `M` and end in an
//! affine layer of width `2A` whose output (real parts, then imaginary parts)
//! is normalized to a unit-norm complex precoder.

mod adam;
mod dense;
mod io;
mod objective;
mod rff;
mod scalar;
mod train;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use crate::precoders::{Precoder, PrecodingFunction};
use crate::scene::{ChannelVector, Location};

pub use adam::{adam_update, AdamState};
pub use dense::Dense;
pub use io::{MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use objective::{backward, cost, Gradients, HEAD_EPSILON};
pub use rff::{rff_features, sample_frequencies};
pub use scalar::Scalar;
pub use train::{train, train_generic, TrainOutcome, TrainingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// Frozen random Fourier features in front of the MLP.
    Rff,
    /// Plain MLP: the feature layer is a trainable affine layer + ReLU.
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RffConfig {
    /// Number of frequencies `R`; the feature vector has `2R` entries.
    pub num_frequencies: usize,
    /// Standard deviation of the frequency entries, in cycles per meter.
    pub sigma: f64,
    pub seed: u64,
}

impl RffConfig {
    /// Frequencies with standard deviation `1 / length_scale` (meters).
    pub fn with_length_scale(num_frequencies: usize, length_scale: f64, seed: u64) -> Self {
        RffConfig { num_frequencies, sigma: 1.0 / length_scale, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_frequencies == 0 {
            return Err(Error::InvalidConfig("number of Fourier features must be >= 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig("RFF sigma must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Number of weight layers after the feature layer (`Q`).
    pub depth: usize,
    /// Hidden width (`M`).
    pub width: usize,
    /// Output width, `2A`.
    pub output_dim: usize,
}

impl MlpConfig {
    pub fn new(depth: usize, width: usize, array_cfg: &ArrayConfig) -> Self {
        MlpConfig { depth, width, output_dim: 2 * array_cfg.num_antennas() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width == 0 {
            return Err(Error::InvalidConfig("MLP depth and width must be >= 1".into()));
        }
        if self.output_dim == 0 || self.output_dim % 2 != 0 {
            return Err(Error::InvalidConfig("MLP output width must be even and nonzero".into()));
        }
        Ok(())
    }
}

/// Architecture description shared by training, sweeps and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Arch,
    pub rff: RffConfig,
    pub mlp: MlpConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Seeds weight initialization and per-epoch shuffling.
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 100,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        if !((0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2)) {
            return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::InvalidConfig("Adam epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// A location-to-precoder network.
#[derive(Debug, Clone, PartialEq)]
pub struct RffModel<T = f32> {
    pub array_cfg: ArrayConfig,
    pub arch: Arch,
    pub rff: RffConfig,
    pub mlp: MlpConfig,
    /// Location dimension `D`.
    pub dim: usize,
    /// Locations are mapped to `(l − offset) / scale` before encoding.
    pub input_offset: Vec<f64>,
    pub input_scale: Vec<f64>,
    /// Frozen `R × D` frequency matrix (row-major); empty for [`Arch::Mlp`].
    pub frequencies: Vec<f64>,
    /// Trainable layers in order. For [`Arch::Mlp`] the first one is the
    /// `D → 2R` input layer.
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> RffModel<T> {
    /// Freshly initialized network. Hidden layers use `U(±√(6/fan_in))`, the
    /// output layer the same scaled by 0.1; biases start at zero.
    pub fn new(
        array_cfg: ArrayConfig,
        dim: usize,
        spec: &ModelSpec,
        input_offset: Vec<f64>,
        init_seed: u64,
    ) -> Result<Self> {
        array_cfg.validate()?;
        spec.rff.validate()?;
        spec.mlp.validate()?;
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidConfig(format!("location dimension {dim} not in {{2, 3}}")));
        }
        if input_offset.len() != dim {
            return Err(Error::InvalidConfig("input offset length differs from D".into()));
        }
        if spec.mlp.output_dim != 2 * array_cfg.num_antennas() {
            return Err(Error::InvalidConfig(format!(
                "output width {} does not match 2A = {}",
                spec.mlp.output_dim,
                2 * array_cfg.num_antennas()
            )));
        }
        let r = spec.rff.num_frequencies;
        let frequencies = match spec.arch {
            Arch::Rff => sample_frequencies(r, dim, spec.rff.sigma, spec.rff.seed),
            Arch::Mlp => Vec::new(),
        };

        let mut widths = Vec::new();
        if spec.arch == Arch::Mlp {
            widths.push(dim);
        }
        widths.push(2 * r);
        widths.extend(std::iter::repeat_n(spec.mlp.width, spec.mlp.depth - 1));
        widths.push(spec.mlp.output_dim);

        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let n_layers = widths.len() - 1;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let mut bound = (6.0 / fan_in as f64).sqrt();
                if i + 1 == n_layers {
                    bound *= 0.1;
                }
                let mut layer = Dense::zeros(fan_in, fan_out);
                for v in layer.weights.iter_mut() {
                    *v = T::of(rng.random_range(-bound..bound));
                }
                layer
            })
            .collect();

        Ok(RffModel {
            array_cfg,
            arch: spec.arch,
            rff: spec.rff,
            mlp: spec.mlp,
            dim,
            input_scale: vec![1.0; dim],
            input_offset,
            frequencies,
            layers,
        })
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec { arch: self.arch, rff: self.rff, mlp: self.mlp }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    /// Width of the encoded input fed to the first trainable layer.
    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    /// Normalized location followed by the fixed feature map.
    pub fn encode(&self, location: &[f64]) -> Vec<T> {
        let x: Vec<f64> = location
            .iter()
            .zip(self.input_offset.iter().zip(&self.input_scale))
            .map(|(l, (o, s))| (l - o) / s)
            .collect();
        match self.arch {
            Arch::Rff => rff_features(&self.frequencies, &x).into_iter().map(T::of).collect(),
            Arch::Mlp => x.into_iter().map(T::of).collect(),
        }
    }

    /// Runs the layers over a batch of encoded inputs and returns every
    /// layer's output; the last entry is the raw `2A`-wide head input.
    pub fn forward_batch(&self, inputs: &[T]) -> Vec<Vec<T>> {
        let batch = inputs.len() / self.input_width();
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let x = if i == 0 { inputs } else { &acts[i - 1] };
            let mut y = vec![T::zero(); batch * layer.outputs];
            layer.forward(x, &mut y, i + 1 < self.layers.len());
            acts.push(y);
        }
        acts
    }

    /// Raw `2A` head input for one location.
    pub fn raw_output(&self, location: &Location) -> Vec<T> {
        let x = self.encode(&location.0);
        self.forward_batch(&x).pop().expect("at least one layer")
    }

    /// Unit-norm precoder for `location`; the zero vector if the raw output
    /// vanishes.
    pub fn forward(&self, location: &Location) -> Precoder {
        let raw: Vec<f64> = self.raw_output(location).into_iter().map(T::f64).collect();
        precoder_from_stacked(&raw)
    }

    /// Same network in another precision.
    pub fn cast<U: Scalar>(&self) -> RffModel<U> {
        RffModel {
            array_cfg: self.array_cfg,
            arch: self.arch,
            rff: self.rff,
            mlp: self.mlp,
            dim: self.dim,
            input_offset: self.input_offset.clone(),
            input_scale: self.input_scale.clone(),
            frequencies: self.frequencies.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: l.weights.iter().map(|w| U::of(w.f64())).collect(),
                    bias: l.bias.iter().map(|w| U::of(w.f64())).collect(),
                })
                .collect(),
        }
    }
}

/// Interprets `[re₀..re_{A−1}, im₀..im_{A−1}]` as a complex vector and scales
/// it to unit norm with denominator `max(‖v‖, HEAD_EPSILON)`.
pub fn precoder_from_stacked(raw: &[f64]) -> Precoder {
    let a = raw.len() / 2;
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    let den = norm.max(HEAD_EPSILON);
    Precoder((0..a).map(|k| Complex64::new(raw[k] / den, raw[a + k] / den)).collect())
}

impl<T: Scalar> PrecodingFunction for RffModel<T> {
    fn precode(&self, location: &Location, _channel: &ChannelVector) -> Precoder {
        self.forward(location)
    }
}
