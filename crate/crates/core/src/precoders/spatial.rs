use rayon::prelude::*;

use super::{correlation, PrecodingFunction};
use crate::array::ArrayConfig;
use crate::error::Result;
use crate::scene::geometry::Point;
use crate::scene::{grid_points, synthesize_channel, Grid, Location, Scene, Tracer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapCell {
    /// Lattice point inside a building footprint.
    Building,
    /// No propagation path reaches the point (zero-norm channel).
    NoChannel,
    Value { eta: f64, los: bool },
}

impl MapCell {
    pub fn eta(&self) -> Option<f64> {
        match self {
            MapCell::Value { eta, .. } => Some(*eta),
            _ => None,
        }
    }
}

/// Correlation over a regular lattice covering the scene, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMap {
    pub grid: Grid,
    pub cells: Vec<MapCell>,
    pub bs_position: Point,
}

impl SpatialMap {
    pub fn cell(&self, ix: usize, iy: usize) -> MapCell {
        self.cells[iy * self.grid.nx + ix]
    }

    /// Lattice points paired with their cells.
    pub fn iter(&self) -> impl Iterator<Item = (Point, MapCell)> + '_ {
        self.grid.points().zip(self.cells.iter().copied())
    }

    /// Mean η over the valued cells accepted by `keep`, with their count.
    pub fn mean_where(&self, mut keep: impl FnMut(Point, bool) -> bool) -> (f64, usize) {
        let (mut sum, mut n) = (0.0, 0usize);
        for (p, c) in self.iter() {
            if let MapCell::Value { eta, los } = c {
                if keep(p, los) {
                    sum += eta;
                    n += 1;
                }
            }
        }
        (if n == 0 { f64::NAN } else { sum / n as f64 }, n)
    }
}

/// Evaluates `precoder` at every lattice point of the scene bounds, tracing
/// a fresh channel per point.
pub fn spatial_map<P: PrecodingFunction + ?Sized>(
    precoder: &P,
    scene: &Scene,
    array_cfg: &ArrayConfig,
    pitch: f64,
) -> Result<SpatialMap> {
    let grid = grid_points(&scene.bounds.rect(), pitch)?;
    let tracer = Tracer::new(scene, array_cfg);
    let points: Vec<Point> = grid.points().collect();
    let cells = points
        .par_iter()
        .map(|&p| {
            if scene.building_at(p).is_some() {
                return MapCell::Building;
            }
            let loc = Location::from(p);
            let paths = tracer.trace(&loc).expect("point checked to be outside buildings");
            let h = synthesize_channel(&paths, array_cfg);
            if h.is_zero() {
                return MapCell::NoChannel;
            }
            let w = precoder.precode(&loc, &h);
            let eta = correlation(&w, &h).expect("nonzero channel");
            MapCell::Value { eta, los: scene.has_line_of_sight(p) }
        })
        .collect();
    Ok(SpatialMap { grid, cells, bs_position: scene.bs_position })
}
