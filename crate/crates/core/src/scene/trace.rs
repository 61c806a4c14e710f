use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::geometry::{dist, exterior_walls, interior_walls, Point, Rect, Wall, EPS};
use super::{ChannelVector, Location, Path, Scene};
use crate::array::{steering_vector, ArrayConfig, Direction};
use crate::error::{Error, Result};

/// Precomputed wall list for repeated tracing in one scene.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    scene: &'a Scene,
    rects: Vec<Rect>,
    walls: Vec<Wall>,
    wavelength: f64,
}

impl<'a> Tracer<'a> {
    pub fn new(scene: &'a Scene, array_cfg: &ArrayConfig) -> Self {
        let rects: Vec<Rect> = scene.buildings.iter().map(|b| b.rect()).collect();
        let mut walls: Vec<Wall> = scene
            .buildings
            .iter()
            .flat_map(|b| exterior_walls(&b.rect(), b.reflectivity))
            .collect();
        walls.extend(interior_walls(&scene.bounds.rect(), scene.bounds.reflectivity));
        Tracer {
            scene,
            rects,
            walls,
            wavelength: array_cfg.wavelength(),
        }
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    /// Paths from the base station to `user`, strongest first.
    pub fn trace(&self, user: &Location) -> Result<Vec<Path>> {
        let p = user.ground();
        if let Some(building) = self.scene.building_at(p) {
            return Err(Error::UserInsideBuilding { x: p[0], y: p[1], building });
        }
        let user_height = user.height().unwrap_or(self.scene.user_height);
        Ok(self.trace_between(self.scene.bs_position, self.scene.bs_height, p, user_height))
    }

    /// Paths between arbitrary transmitter and receiver positions. Departure
    /// directions are taken at the transmitter.
    pub fn trace_between(&self, tx: Point, tx_h: f64, rx: Point, rx_h: f64) -> Vec<Path> {
        let dh = rx_h - tx_h;
        let mut paths = Vec::new();

        if self.clear(tx, rx) {
            if let Some(p) = self.make_path(tx, rx, dist(tx, rx), dh, 1.0, Vec::new()) {
                paths.push(p);
            }
        }

        if self.scene.max_bounces >= 1 {
            for w in &self.walls {
                if w.reflectivity == 0.0 || w.side(tx) <= EPS || w.side(rx) <= EPS {
                    continue;
                }
                let image = w.mirror(tx);
                let Some(hit) = w.hit(image, rx) else { continue };
                if !(self.clear(tx, hit) && self.clear(hit, rx)) {
                    continue;
                }
                if let Some(p) =
                    self.make_path(tx, hit, dist(image, rx), dh, w.reflectivity, vec![hit])
                {
                    paths.push(p);
                }
            }
        }

        if self.scene.max_bounces >= 2 {
            for (i, w1) in self.walls.iter().enumerate() {
                if w1.reflectivity == 0.0 || w1.side(tx) <= EPS {
                    continue;
                }
                let image1 = w1.mirror(tx);
                for (j, w2) in self.walls.iter().enumerate() {
                    if i == j || w2.reflectivity == 0.0 || w2.side(rx) <= EPS {
                        continue;
                    }
                    let image2 = w2.mirror(image1);
                    let Some(hit2) = w2.hit(image2, rx) else { continue };
                    if w1.side(hit2) <= EPS {
                        continue;
                    }
                    let Some(hit1) = w1.hit(image1, hit2) else { continue };
                    if w2.side(hit1) <= EPS {
                        continue;
                    }
                    if !(self.clear(tx, hit1) && self.clear(hit1, hit2) && self.clear(hit2, rx)) {
                        continue;
                    }
                    let gamma = w1.reflectivity * w2.reflectivity;
                    if let Some(p) =
                        self.make_path(tx, hit1, dist(image2, rx), dh, gamma, vec![hit1, hit2])
                    {
                        paths.push(p);
                    }
                }
            }
        }

        paths.sort_by(|a, b| {
            b.gain
                .norm()
                .total_cmp(&a.gain.norm())
                .then(a.length.total_cmp(&b.length))
                .then(a.bounces.cmp(&b.bounces))
                .then_with(|| cmp_points(&a.reflection_points, &b.reflection_points))
        });
        paths.truncate(self.scene.max_paths as usize);
        paths
    }

    fn clear(&self, p: Point, q: Point) -> bool {
        !self.rects.iter().any(|r| r.segment_enters(p, q))
    }

    fn make_path(
        &self,
        tx: Point,
        first: Point,
        unfolded: f64,
        dh: f64,
        reflectivity: f64,
        reflection_points: Vec<Point>,
    ) -> Option<Path> {
        let length = unfolded.hypot(dh);
        if length <= EPS {
            return None;
        }
        let azimuth = (first[1] - tx[1]).atan2(first[0] - tx[0]);
        let elevation = dh.atan2(unfolded);
        let amplitude = self.wavelength * reflectivity / (4.0 * PI * length);
        let phase = -2.0 * PI * length / self.wavelength;
        Some(Path {
            length,
            bounces: reflection_points.len() as u32,
            departure: Direction::new(azimuth, elevation),
            gain: Complex64::from_polar(amplitude, phase),
            reflectivity,
            reflection_points,
        })
    }
}

fn cmp_points(a: &[Point], b: &[Point]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        let o = p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1]));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Traces up to `max_paths` specular paths from the scene's base station to
/// `user`: the line-of-sight path when unobstructed plus first and (when
/// enabled) second order wall reflections found with the image method.
pub fn trace_paths(scene: &Scene, array_cfg: &ArrayConfig, user: &Location) -> Result<Vec<Path>> {
    Tracer::new(scene, array_cfg).trace(user)
}

/// `h = Σ gainₚ · a(departureₚ)`; the zero vector for an empty path list.
pub fn synthesize_channel(paths: &[Path], array_cfg: &ArrayConfig) -> ChannelVector {
    let mut h = ChannelVector::zeros(array_cfg.num_antennas());
    for p in paths {
        let a = steering_vector(array_cfg, &p.departure);
        for (hi, ai) in h.0.iter_mut().zip(&a.0) {
            *hi += p.gain * ai;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Building;

    fn cfg() -> ArrayConfig {
        ArrayConfig::half_wavelength(4, 3.5e9)
    }

    #[test]
    fn empty_scene_los_is_strongest() {
        let scene = Scene::empty([0.0, 0.0], [100.0, 80.0], [5.0, 40.0]);
        let paths = trace_paths(&scene, &cfg(), &Location::new_2d(60.0, 30.0)).unwrap();
        assert_eq!(paths.len(), 5);
        assert_eq!(paths[0].bounces, 0);
        assert!(paths[1..].iter().all(|p| p.bounces > 0));

        let mut single = scene.clone();
        single.max_bounces = 1;
        single.max_paths = 100;
        let paths = trace_paths(&single, &cfg(), &Location::new_2d(60.0, 30.0)).unwrap();
        // LOS plus one reflection per boundary wall
        assert_eq!(paths.len(), 5);
        assert_eq!(paths[0].bounces, 0);
    }

    #[test]
    fn blocked_user_without_reflections_has_no_paths() {
        let mut scene = Scene::empty([0.0, 0.0], [100.0, 100.0], [10.0, 50.0]);
        scene.buildings.push(Building { min: [40.0, 20.0], max: [60.0, 80.0], reflectivity: 0.6 });
        scene.max_bounces = 0;
        let paths = trace_paths(&scene, &cfg(), &Location::new_2d(90.0, 50.0)).unwrap();
        assert!(paths.is_empty());
        let h = synthesize_channel(&paths, &cfg());
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn user_inside_building_is_rejected() {
        let mut scene = Scene::empty([0.0, 0.0], [100.0, 100.0], [10.0, 50.0]);
        scene.buildings.push(Building { min: [40.0, 20.0], max: [60.0, 80.0], reflectivity: 0.6 });
        let err = trace_paths(&scene, &cfg(), &Location::new_2d(50.0, 50.0)).unwrap_err();
        assert!(matches!(err, Error::UserInsideBuilding { building: 0, .. }));
    }

    #[test]
    fn gains_follow_free_space_law() {
        let scene = Scene::desk();
        let c = cfg();
        let lambda = c.wavelength();
        let tracer = Tracer::new(&scene, &c);
        for (x, y) in [(20.0, 75.0), (80.0, 140.0), (150.0, 5.0), (195.0, 100.0)] {
            let loc = Location::new_2d(x, y);
            if scene.building_at(loc.ground()).is_some() {
                continue;
            }
            for p in tracer.trace(&loc).unwrap() {
                let amp = lambda * p.reflectivity / (4.0 * PI * p.length);
                assert!((p.gain.norm() - amp).abs() <= 1e-12 * amp);
                let expect = Complex64::from_polar(1.0, -2.0 * PI * p.length / lambda);
                assert!((p.gain / p.gain.norm() - expect).norm() < 1e-9);
                assert_eq!(p.bounces as usize, p.reflection_points.len());
            }
        }
    }
}
