use nalgebra::{Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::Pose;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: Point3::from(Vector3::repeat(f64::INFINITY)),
            max: Point3::from(Vector3::repeat(f64::NEG_INFINITY)),
        }
    }

    pub fn from_center_half(center: Point3<f64>, half: Vector3<f64>) -> Self {
        Self::new(center - half, center + half)
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point3<f64>>) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.grow(p);
        }
        b
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn grow(&mut self, p: &Point3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb::new(self.min.inf(&o.min), self.max.sup(&o.max))
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extents().norm()
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extents();
        e.x * e.y * e.z
    }

    pub fn contains_point(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        (0..3).all(|i| o.min[i] >= self.min[i] && o.max[i] <= self.max[i])
    }

    pub fn intersection(&self, o: &Aabb) -> Aabb {
        Aabb::new(self.min.sup(&o.min), self.max.inf(&o.max))
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= o.max[i] && o.min[i] <= self.max[i])
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        Aabb::new(
            self.min - Vector3::repeat(margin),
            self.max + Vector3::repeat(margin),
        )
    }

    pub fn corners(&self) -> [Point3<f64>; 8] {
        let (a, b) = (self.min, self.max);
        [
            Point3::new(a.x, a.y, a.z),
            Point3::new(b.x, a.y, a.z),
            Point3::new(a.x, b.y, a.z),
            Point3::new(b.x, b.y, a.z),
            Point3::new(a.x, a.y, b.z),
            Point3::new(b.x, a.y, b.z),
            Point3::new(a.x, b.y, b.z),
            Point3::new(b.x, b.y, b.z),
        ]
    }

    /// World AABB of this box after a rigid transform.
    pub fn transformed(&self, pose: &Pose) -> Aabb {
        let mut b = Aabb::empty();
        for c in self.corners() {
            b.grow(&pose.transform_point(&c));
        }
        b
    }

    pub fn footprint(&self) -> Rect {
        Rect {
            min: [self.min.x, self.min.y],
            max: [self.max.x, self.max.y],
        }
    }

    /// Slab test; returns the entry/exit parameters when the ray hits.
    pub fn ray_interval(&self, origin: &Point3<f64>, inv_dir: &Vector3<f64>) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf keeps the previous bound
            if lo > t0 {
                t0 = lo;
            }
            if hi < t1 {
                t1 = hi;
            }
        }
        (t0 <= t1 && t1 >= 0.0).then_some((t0, t1))
    }
}

/// Oriented box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Point3<f64>,
    pub half_extents: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Obb {
    pub fn corners(&self) -> [Point3<f64>; 8] {
        let local = Aabb::from_center_half(Point3::origin(), self.half_extents).corners();
        local.map(|c| self.center + self.rotation * c.coords)
    }
}

/// Axis-aligned rectangle on the floor plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]).max(0.0) * (self.max[1] - self.min[1]).max(0.0)
    }

    pub fn intersection_area(&self, o: &Rect) -> f64 {
        let w = self.max[0].min(o.max[0]) - self.min[0].max(o.min[0]);
        let h = self.max[1].min(o.max[1]) - self.min[1].max(o.min[1]);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Open-interior overlap (touching edges do not count).
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.min[0] < o.max[0] && o.min[0] < self.max[0] && self.min[1] < o.max[1] && o.min[1] < self.max[1]
    }

    /// Euclidean gap between the rectangles; 0 when they overlap or touch.
    pub fn gap(&self, o: &Rect) -> f64 {
        let dx = (o.min[0] - self.max[0]).max(self.min[0] - o.max[0]).max(0.0);
        let dy = (o.min[1] - self.max[1]).max(self.min[1] - o.max[1]).max(0.0);
        dx.hypot(dy)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}
