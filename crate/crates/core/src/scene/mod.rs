//! Procedural 2.5D urban scenes and the image-method ray model.
//!
//! Buildings are axis-aligned rectangular footprints extruded to full height,
//! so blockage reduces to a 2D segment/rectangle test. Walls are vertical, so
//! a reflected path keeps a constant slope and its 3D length follows from the
//! unfolded 2D length and the BS/user height difference.

pub mod geometry;
mod sampling;
mod trace;

use std::fs;
use std::ops::{Add, Index};
use std::path::Path as FsPath;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::Direction;
use crate::error::{Error, Result};
use geometry::{Point, Rect};

pub use sampling::{free_area, grid_points, sample_grid, sample_users, Grid};
pub use trace::{synthesize_channel, trace_paths, Tracer};

/// Scene file schema understood by this build.
pub const SCENE_SCHEMA_VERSION: u32 = 1;

const DESK_SCENE: &str = include_str!("../../scenes/desk.toml");

/// User location in meters. Two coordinates on the ground plane, or three
/// when the third carries the user height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location(pub Vec<f64>);

impl Location {
    pub fn new_2d(x: f64, y: f64) -> Self {
        Location(vec![x, y])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn ground(&self) -> Point {
        [self.0[0], self.0[1]]
    }

    /// Height coordinate, if this is a 3D location.
    pub fn height(&self) -> Option<f64> {
        self.0.get(2).copied()
    }
}

impl From<Point> for Location {
    fn from(p: Point) -> Self {
        Location(p.to_vec())
    }
}

/// Complex baseband channel between the array and one user.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelVector(pub Vec<Complex64>);

impl ChannelVector {
    pub fn zeros(len: usize) -> Self {
        ChannelVector(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        ChannelVector(self.0.iter().map(|z| z * c).collect())
    }

    /// Hermitian inner product `selfᴴ·other`.
    pub fn inner(&self, other: &ChannelVector) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    /// Rounds every component through `f32`, the precision stored on disk.
    pub fn quantized(&self) -> Self {
        ChannelVector(
            self.0
                .iter()
                .map(|z| Complex64::new(z.re as f32 as f64, z.im as f32 as f64))
                .collect(),
        )
    }
}

impl Index<usize> for ChannelVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl Add for &ChannelVector {
    type Output = ChannelVector;

    fn add(self, rhs: &ChannelVector) -> ChannelVector {
        ChannelVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

/// One propagation path from the base station to a user.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Unfolded 3D length in meters.
    pub length: f64,
    pub bounces: u32,
    pub departure: Direction,
    /// Complex path coefficient `λ·Γ/(4π·length)·exp(−j·2π·length/λ)`.
    pub gain: Complex64,
    /// Product of the reflectivities of the walls hit.
    pub reflectivity: f64,
    /// Ground-plane reflection points, BS side first.
    pub reflection_points: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub min: Point,
    pub max: Point,
    /// Amplitude reflection coefficient of all four walls.
    #[serde(default = "default_reflectivity")]
    pub reflectivity: f64,
}

impl Building {
    pub fn rect(&self) -> Rect {
        Rect { min: self.min, max: self.max }
    }
}

/// Scene extent. Its four sides act as reflecting walls facing inwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
    #[serde(default = "default_reflectivity")]
    pub reflectivity: f64,
}

impl Bounds {
    pub fn rect(&self) -> Rect {
        Rect { min: self.min, max: self.max }
    }

    pub fn centroid(&self) -> Point {
        [0.5 * (self.min[0] + self.max[0]), 0.5 * (self.min[1] + self.max[1])]
    }
}

fn default_reflectivity() -> f64 {
    0.6
}

fn default_bs_height() -> f64 {
    6.0
}

fn default_user_height() -> f64 {
    1.5
}

fn default_max_paths() -> u32 {
    5
}

fn default_max_bounces() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub schema_version: u32,
    pub bounds: Bounds,
    #[serde(default)]
    pub buildings: Vec<Building>,
    pub bs_position: Point,
    #[serde(default = "default_bs_height")]
    pub bs_height: f64,
    #[serde(default = "default_user_height")]
    pub user_height: f64,
    #[serde(default = "default_max_paths")]
    pub max_paths: u32,
    #[serde(default = "default_max_bounces")]
    pub max_bounces: u32,
}

impl Scene {
    /// Scene with no buildings and default heights, path and bounce limits.
    pub fn empty(min: Point, max: Point, bs_position: Point) -> Self {
        Scene {
            schema_version: SCENE_SCHEMA_VERSION,
            bounds: Bounds { min, max, reflectivity: default_reflectivity() },
            buildings: Vec::new(),
            bs_position,
            bs_height: default_bs_height(),
            user_height: default_user_height(),
            max_paths: default_max_paths(),
            max_bounces: default_max_bounces(),
        }
    }

    /// The 200 m × 150 m urban scene shipped with the crate.
    pub fn desk() -> Self {
        Scene::from_toml_str(DESK_SCENE).expect("bundled desk scene is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scene: Scene =
            toml::from_str(text).map_err(|e| Error::InvalidScene(e.message().to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scene serializes")
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        Scene::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScene(msg));
        if self.schema_version != SCENE_SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCENE_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let bounds = self.bounds.rect();
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return bad("bounds must have positive extent".into());
        }
        if !(0.0..=1.0).contains(&self.bounds.reflectivity) {
            return bad("bounds reflectivity must lie in [0, 1]".into());
        }
        for (i, b) in self.buildings.iter().enumerate() {
            let r = b.rect();
            if !(r.width() > 0.0 && r.height() > 0.0) {
                return bad(format!("building {i} has non-positive extent"));
            }
            if !bounds.contains_rect(&r) {
                return bad(format!("building {i} extends outside the bounds"));
            }
            if !(0.0..=1.0).contains(&b.reflectivity) {
                return bad(format!("building {i} reflectivity must lie in [0, 1]"));
            }
        }
        if !bounds.contains(self.bs_position) {
            return bad("bs_position lies outside the bounds".into());
        }
        if let Some(i) = self.building_at(self.bs_position) {
            return bad(format!("bs_position lies inside building {i}"));
        }
        if self.max_paths < 1 {
            return bad("max_paths must be >= 1".into());
        }
        if self.max_bounces > 2 {
            return bad("max_bounces must be 0, 1 or 2".into());
        }
        if !(self.bs_height.is_finite() && self.user_height.is_finite()) {
            return bad("heights must be finite".into());
        }
        Ok(())
    }

    /// Index of the building whose open footprint contains `p`.
    pub fn building_at(&self, p: Point) -> Option<usize> {
        self.buildings.iter().position(|b| b.rect().contains_strict(p))
    }

    /// Whether the ground segment `p → q` is free of buildings.
    pub fn segment_clear(&self, p: Point, q: Point) -> bool {
        !self.buildings.iter().any(|b| b.rect().segment_enters(p, q))
    }

    /// Whether `user` sees the base station directly.
    pub fn has_line_of_sight(&self, user: Point) -> bool {
        self.segment_clear(self.bs_position, user)
    }
}
