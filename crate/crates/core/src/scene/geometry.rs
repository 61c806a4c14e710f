//! Planar primitives used by the ray model: points, axis-aligned rectangles
//! and reflecting wall segments.

pub type Point = [f64; 2];

/// Slack for side and on-segment tests, in meters.
pub(crate) const EPS: f64 = 1e-9;

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Strict interior test; boundary points are outside.
    pub fn contains_strict(&self, p: Point) -> bool {
        p[0] > self.min[0] + EPS
            && p[0] < self.max[0] - EPS
            && p[1] > self.min[1] + EPS
            && p[1] < self.max[1] - EPS
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    /// Whether the segment `p → q` passes through the open interior.
    ///
    /// Clips the segment against the closed rectangle (Liang–Barsky) and
    /// tests the midpoint of the clipped chord: for a convex polygon the chord
    /// only avoids the interior when it lies on the boundary.
    pub fn segment_enters(&self, p: Point, q: Point) -> bool {
        let d = sub(q, p);
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for axis in 0..2 {
            if d[axis] == 0.0 {
                if p[axis] < self.min[axis] || p[axis] > self.max[axis] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d[axis];
            let mut ta = (self.min[axis] - p[axis]) * inv;
            let mut tb = (self.max[axis] - p[axis]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        let tm = 0.5 * (t0 + t1);
        self.contains_strict([p[0] + tm * d[0], p[1] + tm * d[1]])
    }
}

/// A reflecting wall segment. `normal` is the unit normal pointing into the
/// half-plane from which the wall can be hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub a: Point,
    pub b: Point,
    pub normal: Point,
    pub reflectivity: f64,
}

impl Wall {
    /// Signed distance of `p` from the wall line, positive on the reflecting side.
    #[inline]
    pub fn side(&self, p: Point) -> f64 {
        dot(sub(p, self.a), self.normal)
    }

    /// Mirror image of `p` across the wall line.
    #[inline]
    pub fn mirror(&self, p: Point) -> Point {
        let s = 2.0 * self.side(p);
        [p[0] - s * self.normal[0], p[1] - s * self.normal[1]]
    }

    /// Intersection of segment `s → t` with the wall line, if it falls on the
    /// wall segment itself.
    pub fn hit(&self, s: Point, t: Point) -> Option<Point> {
        let ds = self.side(s);
        let dt = self.side(t);
        let denom = ds - dt;
        if denom.abs() < EPS * EPS {
            return None;
        }
        let alpha = ds / denom;
        if !(-EPS..=1.0 + EPS).contains(&alpha) {
            return None;
        }
        let x = [s[0] + alpha * (t[0] - s[0]), s[1] + alpha * (t[1] - s[1])];
        let ab = sub(self.b, self.a);
        let len2 = dot(ab, ab);
        let tau = dot(sub(x, self.a), ab) / len2;
        let slack = EPS / len2.sqrt();
        if (-slack..=1.0 + slack).contains(&tau) {
            Some(x)
        } else {
            None
        }
    }

    /// Point at wall parameter `tau ∈ [0, 1]`.
    pub fn at(&self, tau: f64) -> Point {
        [
            self.a[0] + tau * (self.b[0] - self.a[0]),
            self.a[1] + tau * (self.b[1] - self.a[1]),
        ]
    }
}

/// Four walls of a building footprint, normals pointing outwards.
pub fn exterior_walls(r: &Rect, reflectivity: f64) -> [Wall; 4] {
    let [x0, y0] = r.min;
    let [x1, y1] = r.max;
    [
        Wall { a: [x0, y0], b: [x1, y0], normal: [0.0, -1.0], reflectivity },
        Wall { a: [x1, y0], b: [x1, y1], normal: [1.0, 0.0], reflectivity },
        Wall { a: [x1, y1], b: [x0, y1], normal: [0.0, 1.0], reflectivity },
        Wall { a: [x0, y1], b: [x0, y0], normal: [-1.0, 0.0], reflectivity },
    ]
}

/// Four walls of the scene boundary, normals pointing into the scene.
pub fn interior_walls(r: &Rect, reflectivity: f64) -> [Wall; 4] {
    exterior_walls(r, reflectivity).map(|w| Wall {
        normal: [-w.normal[0], -w.normal[1]],
        ..w
    })
}
