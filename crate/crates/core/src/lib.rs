//! Location based beamforming workbench.
//!
//! Learns a direct mapping from a user's location to a unit-norm massive-MIMO
//! precoder with a random-Fourier-feature network, trained on multipath
//! channels produced by a procedural image-method ray model, and compares it
//! against direction-based beamforming and a plain MLP.
//!
//! Module map:
//! - [`array`]: uniform planar array geometry and steering vectors.
//! - [`scene`]: 2.5D urban scenes, ray tracing, channel synthesis, user sampling.
//! - [`dataset`]: labeled `(location, channel)` databases, the `LBBD` format,
//!   splits and CSV ingestion.
//! - [`neuralnet`]: the RFF / plain MLP precoding networks, hand-written
//!   backpropagation, Adam and the training loop.
//! - [`precoders`]: correlation metric, baselines, evaluation reports,
//!   spatial maps and N-sweeps.

pub mod array;
pub mod dataset;
pub mod error;
pub mod neuralnet;
pub mod precoders;
pub mod scene;

pub use array::{ArrayConfig, Direction};
pub use dataset::{LabeledDataset, Split};
pub use error::{Error, Result};
pub use neuralnet::{Arch, MlpConfig, RffConfig, RffModel, TrainConfig};
pub use precoders::{EvalReport, Precoder, PrecodingFunction};
pub use scene::{ChannelVector, Location, Path, Scene};

/// Version of this library and the command-line tool.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
