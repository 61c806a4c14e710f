//! Precoders, the correlation metric, baselines and the evaluation suite.

mod eval;
mod export;
mod spatial;
mod sweep;

use num_complex::Complex64;

use crate::array::{steering_vector, ArrayConfig, Direction};
use crate::dataset::BsPose;
use crate::error::{Error, Result};
use crate::scene::{ChannelVector, Location};

pub use eval::{empirical_cdf, evaluate, median, EvalReport, EvalSummary};
pub use export::{heatmap_csv, heatmap_svg, report_cdf_csv, sweep_csv};
pub use spatial::{spatial_map, MapCell, SpatialMap};
pub use sweep::{n_sweep, SweepConfig, SweepRow};

/// Transmit weights, unit norm unless degenerate (all zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder(pub Vec<Complex64>);

impl Precoder {
    /// Scales `v` to unit norm; the zero vector stays zero.
    pub fn normalized(v: Vec<Complex64>) -> Self {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Precoder(v);
        }
        Precoder(v.into_iter().map(|z| z / n).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// `wᴴh`
    pub fn apply(&self, h: &ChannelVector) -> Complex64 {
        self.0.iter().zip(&h.0).map(|(w, h)| w.conj() * h).sum()
    }
}

/// A location based precoding function `l ↦ w`.
///
/// The channel is passed only so that genie baselines ([`ChannelOracle`],
/// [`OrthogonalOracle`]) can share the evaluation path; location based
/// implementations ignore it.
pub trait PrecodingFunction: Sync {
    fn precode(&self, location: &Location, channel: &ChannelVector) -> Precoder;
}

/// Normalized correlation `|wᴴh|² / ‖h‖²`.
pub fn correlation(w: &Precoder, h: &ChannelVector) -> Result<f64> {
    let n2 = h.norm_sqr();
    if n2 == 0.0 {
        return Err(Error::ZeroNormChannel { index: 0 });
    }
    Ok(w.apply(h).norm_sqr() / n2)
}

/// Single-user spectral efficiency `log₂(1 + η·SNR_opt)` in bit/s/Hz.
pub fn capacity(eta: f64, snr_opt: f64) -> f64 {
    (1.0 + eta * snr_opt).log2()
}

/// Steering vector towards the user's true geometric direction, over `√A`.
pub fn direction_lbb(array_cfg: &ArrayConfig, bs: &BsPose, user: &Location) -> Result<Precoder> {
    let p = user.ground();
    let (dx, dy) = (p[0] - bs.position[0], p[1] - bs.position[1]);
    if dx.hypot(dy) < 1e-9 {
        return Err(Error::DegenerateGeometry("user stands at the base station position".into()));
    }
    let dz = user.height().unwrap_or(bs.user_height) - bs.height;
    let a = steering_vector(array_cfg, &Direction::from_vector(dx, dy, dz));
    let scale = 1.0 / (array_cfg.num_antennas() as f64).sqrt();
    Ok(Precoder(a.0.into_iter().map(|z| z * scale).collect()))
}

/// Direction based LBB baseline: beams towards the user's line-of-sight
/// direction, assuming azimuth and elevation are known exactly.
#[derive(Debug, Clone, Copy)]
pub struct DirectionLbb {
    pub array_cfg: ArrayConfig,
    pub bs: BsPose,
}

impl PrecodingFunction for DirectionLbb {
    fn precode(&self, location: &Location, _channel: &ChannelVector) -> Precoder {
        direction_lbb(&self.array_cfg, &self.bs, location)
            .unwrap_or_else(|_| Precoder(vec![Complex64::new(0.0, 0.0); self.array_cfg.num_antennas()]))
    }
}

/// Genie precoder `w = h / ‖h‖` (perfect CSI upper bound).
#[derive(Debug, Clone, Copy, Default)]
pub struct ChannelOracle;

impl PrecodingFunction for ChannelOracle {
    fn precode(&self, _location: &Location, channel: &ChannelVector) -> Precoder {
        Precoder::normalized(channel.0.clone())
    }
}

/// Genie precoder orthogonal to the channel (worst case, `η = 0`).
#[derive(Debug, Clone, Copy, Default)]
pub struct OrthogonalOracle;

impl PrecodingFunction for OrthogonalOracle {
    fn precode(&self, _location: &Location, channel: &ChannelVector) -> Precoder {
        let h = &channel.0;
        let n2 = channel.norm_sqr();
        if h.len() < 2 || n2 == 0.0 {
            return Precoder(vec![Complex64::new(0.0, 0.0); h.len()]);
        }
        // Project the basis vector where h is weakest off h.
        let k = (0..h.len())
            .min_by(|&i, &j| h[i].norm_sqr().total_cmp(&h[j].norm_sqr()))
            .unwrap();
        let coef = h[k].conj() / n2;
        let mut v: Vec<Complex64> = h.iter().map(|z| -z * coef).collect();
        v[k] += 1.0;
        // One re-orthogonalization pass to push η down to rounding level.
        let r = v.iter().zip(h).map(|(a, b)| b.conj() * a).sum::<Complex64>() / n2;
        for (vi, hi) in v.iter_mut().zip(h) {
            *vi -= hi * r;
        }
        Precoder::normalized(v)
    }
}
