//! Square uniform planar array (UPA) geometry and far-field steering vectors.
//!
//! The array lies in the y–z plane with broadside along +x. Element `(m, n)`
//! sits at `(0, m·d, n·d)` and is stored at flat index `n·side + m`, i.e. rows
//! of constant height with the y index running fastest.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::ChannelVector;

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub antennas_per_side: u32,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
    /// Inter-element spacing in meters.
    pub element_spacing: f64,
}

impl ArrayConfig {
    /// Half-wavelength spaced square array.
    pub fn half_wavelength(antennas_per_side: u32, carrier_frequency: f64) -> Self {
        ArrayConfig {
            antennas_per_side,
            carrier_frequency,
            element_spacing: SPEED_OF_LIGHT / carrier_frequency / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas_per_side == 0 {
            return Err(Error::InvalidConfig("antennas_per_side must be >= 1".into()));
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::InvalidConfig("carrier_frequency must be > 0".into()));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(Error::InvalidConfig("element_spacing must be > 0".into()));
        }
        Ok(())
    }

    /// Number of antennas `A = side²`.
    pub fn num_antennas(&self) -> usize {
        let side = self.antennas_per_side as usize;
        side * side
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }
}

/// Departure direction. Azimuth is measured in the ground (x–y) plane from
/// +x, elevation from the ground plane towards +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    /// Builds a direction, wrapping azimuth into (−π, π] and clamping
    /// elevation into [−π/2, π/2].
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        let mut az = azimuth.rem_euclid(2.0 * PI);
        if az > PI {
            az -= 2.0 * PI;
        }
        Direction {
            azimuth: az,
            elevation: elevation.clamp(-PI / 2.0, PI / 2.0),
        }
    }

    /// Direction of the vector `(dx, dy, dz)`.
    pub fn from_vector(dx: f64, dy: f64, dz: f64) -> Self {
        let ground = dx.hypot(dy);
        Direction::new(dy.atan2(dx), dz.atan2(ground))
    }

    /// Propagation unit vector `(cos el·cos az, cos el·sin az, sin el)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (sa, ca) = self.azimuth.sin_cos();
        let (se, ce) = self.elevation.sin_cos();
        [ce * ca, ce * sa, se]
    }
}

pub fn element_positions(cfg: &ArrayConfig) -> Vec<[f64; 3]> {
    let side = cfg.antennas_per_side as usize;
    let d = cfg.element_spacing;
    let mut out = Vec::with_capacity(side * side);
    for n in 0..side {
        for m in 0..side {
            out.push([0.0, m as f64 * d, n as f64 * d]);
        }
    }
    out
}

/// Unnormalized array response: entry `i` is `exp(j·k·⟨pᵢ, u⟩)`.
pub fn steering_vector(cfg: &ArrayConfig, dir: &Direction) -> ChannelVector {
    let k = cfg.wavenumber();
    let u = dir.unit_vector();
    let side = cfg.antennas_per_side as usize;
    let d = cfg.element_spacing;
    // The x coordinate of every element is zero, so only u_y and u_z matter.
    let step_m = k * d * u[1];
    let step_n = k * d * u[2];
    let mut entries = Vec::with_capacity(side * side);
    for n in 0..side {
        for m in 0..side {
            let phase = m as f64 * step_m + n as f64 * step_n;
            entries.push(Complex64::from_polar(1.0, phase));
        }
    }
    ChannelVector(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_at_origin() {
        let cfg = ArrayConfig::half_wavelength(1, 3.5e9);
        assert_eq!(element_positions(&cfg), vec![[0.0, 0.0, 0.0]]);
    }

    #[test]
    fn two_by_two_grid() {
        // λ = 2 m  =>  spacing 1 m at half wavelength.
        let cfg = ArrayConfig::half_wavelength(2, SPEED_OF_LIGHT / 2.0);
        assert_eq!(cfg.element_spacing, 1.0);
        let pos = element_positions(&cfg);
        assert_eq!(
            pos,
            vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 1.0]]
        );
    }

    #[test]
    fn eight_by_eight_extent_at_3_5_ghz() {
        let cfg = ArrayConfig::half_wavelength(8, 3.5e9);
        let pos = element_positions(&cfg);
        assert_eq!(pos.len(), 64);
        assert!((cfg.wavelength() - 0.085_654_988_000_000_00).abs() < 1e-15);
        let span = pos.iter().map(|p| p[1]).fold(0.0, f64::max);
        // 7·λ/2 = c / 1e9
        assert!((span - 0.299_792_458).abs() < 1e-12);
    }

    #[test]
    fn broadside_is_all_ones() {
        let cfg = ArrayConfig::half_wavelength(4, 3.5e9);
        let a = steering_vector(&cfg, &Direction::new(0.0, 0.0));
        for z in &a.0 {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn endfire_along_y_alternates_sign() {
        let cfg = ArrayConfig::half_wavelength(2, 3.5e9);
        let a = steering_vector(&cfg, &Direction::new(PI / 2.0, 0.0));
        // index = n·2 + m; phase = π·m
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (z, e) in a.0.iter().zip(expect) {
            assert!((z - Complex64::new(e, 0.0)).norm() < 1e-12, "{z} vs {e}");
        }
    }

    #[test]
    fn azimuth_wraps_into_half_open_interval() {
        assert_eq!(Direction::new(-PI, 0.0).azimuth, PI);
        assert!((Direction::new(3.0 * PI / 2.0, 0.0).azimuth + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_config() {
        let mut cfg = ArrayConfig::half_wavelength(0, 3.5e9);
        assert!(cfg.validate().is_err());
        cfg.antennas_per_side = 2;
        cfg.element_spacing = 0.0;
        assert!(cfg.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn unit_modulus_and_norm(az in -PI..PI, el in -PI / 2.0..PI / 2.0, side in 1u32..10) {
                let cfg = ArrayConfig::half_wavelength(side, 3.5e9);
                let a = steering_vector(&cfg, &Direction::new(az, el));
                for z in &a.0 {
                    prop_assert!((z.norm() - 1.0).abs() < 1e-14);
                }
                let n2 = a.norm_sqr();
                let big_a = cfg.num_antennas() as f64;
                prop_assert!(((n2 - big_a) / big_a).abs() < 1e-12);
            }

            #[test]
            fn mirrored_azimuth_conjugates(az in -3.0f64..3.0, side in 1u32..9) {
                let cfg = ArrayConfig::half_wavelength(side, 3.5e9);
                let a = steering_vector(&cfg, &Direction::new(az, 0.0));
                let b = steering_vector(&cfg, &Direction::new(-az, 0.0));
                for (x, y) in a.0.iter().zip(&b.0) {
                    prop_assert!((x - y.conj()).norm() < 1e-12);
                }
            }
        }
    }
}
