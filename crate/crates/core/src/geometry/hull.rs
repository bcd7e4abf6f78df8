//! Convex primitives and their triangle meshes.
//!
//! Every link is a union of convex parts. Each part is meshed into a closed,
//! outward-wound triangle soup; the renderer intersects those triangles while
//! collision queries use the parts as convex polytopes.

use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use super::{Aabb, Pose};

/// Parametric solid in its own local frame, centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Cuboid { half: Vector3<f64> },
    /// Regular prism approximating a cylinder; axis along local z.
    Cylinder {
        radius: f64,
        half_height: f64,
        segments: u32,
    },
}

/// A shape placed in a link frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part {
    pub shape: Shape,
    pub pose: Pose,
}

impl Part {
    pub fn cuboid(center: [f64; 3], size: [f64; 3]) -> Self {
        Self {
            shape: Shape::Cuboid {
                half: Vector3::new(size[0], size[1], size[2]) * 0.5,
            },
            pose: Pose::from_translation(Vector3::from(center)),
        }
    }

    pub fn cylinder(center: [f64; 3], radius: f64, height: f64, segments: u32) -> Self {
        Self {
            shape: Shape::Cylinder {
                radius,
                half_height: height * 0.5,
                segments,
            },
            pose: Pose::from_translation(Vector3::from(center)),
        }
    }

    pub fn with_pose(mut self, pose: Pose) -> Self {
        self.pose = pose;
        self
    }
}

/// Convex polytope with its outward-wound triangulation and the directions
/// needed for separating-axis tests.
#[derive(Debug, Clone)]
pub struct Hull {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Arc<[[u32; 3]]>,
    /// Distinct face normals (up to sign).
    pub face_axes: Vec<Vector3<f64>>,
    /// Distinct edge directions (up to sign).
    pub edge_axes: Vec<Vector3<f64>>,
    pub aabb: Aabb,
}

impl Hull {
    pub fn from_part(part: &Part) -> Hull {
        let (verts, tris, faces, edges) = match part.shape {
            Shape::Cuboid { half } => cuboid_mesh(half),
            Shape::Cylinder {
                radius,
                half_height,
                segments,
            } => prism_mesh(radius, half_height, segments.max(3)),
        };
        let local = Hull::assemble(verts, tris, faces, edges);
        local.transformed(&part.pose)
    }

    fn assemble(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[u32; 3]>,
        face_axes: Vec<Vector3<f64>>,
        edge_axes: Vec<Vector3<f64>>,
    ) -> Hull {
        let centroid = vertices.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / vertices.len() as f64;
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                let n = (b - a).cross(&(c - a));
                if n.dot(&(a.coords - centroid)) < 0.0 {
                    [t[0], t[2], t[1]]
                } else {
                    t
                }
            })
            .collect();
        let aabb = Aabb::from_points(vertices.iter());
        Hull {
            vertices,
            triangles: triangles.into(),
            face_axes,
            edge_axes,
            aabb,
        }
    }

    pub fn transformed(&self, pose: &Pose) -> Hull {
        let vertices: Vec<_> = self.vertices.iter().map(|v| pose.transform_point(v)).collect();
        let aabb = Aabb::from_points(vertices.iter());
        Hull {
            vertices,
            triangles: self.triangles.clone(),
            face_axes: self.face_axes.iter().map(|a| pose.transform_vector(a)).collect(),
            edge_axes: self.edge_axes.iter().map(|a| pose.transform_vector(a)).collect(),
            aabb,
        }
    }

    pub fn triangle(&self, i: usize) -> [Point3<f64>; 3] {
        self.triangles[i].map(|k| self.vertices[k as usize])
    }

    pub fn triangles(&self) -> impl Iterator<Item = [Point3<f64>; 3]> + '_ {
        (0..self.triangles.len()).map(|i| self.triangle(i))
    }

    /// True when `p` is inside the hull grown by `margin` along every face
    /// normal.
    pub fn contains_point(&self, p: &Point3<f64>, margin: f64) -> bool {
        if !self.aabb.expanded(margin).contains_point(p) {
            return false;
        }
        self.triangles().all(|[a, b, c]| {
            let n = (b - a).cross(&(c - a));
            let len = n.norm();
            len < 1e-15 || n.dot(&(p - a)) / len <= margin
        })
    }

    fn project(&self, axis: &Vector3<f64>) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.vertices {
            let d = v.coords.dot(axis);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    /// Penetration depth by the separating-axis theorem: the smallest overlap
    /// over face normals and edge-edge cross products. Zero when separated or
    /// merely touching.
    pub fn penetration_depth(&self, other: &Hull) -> f64 {
        if !self.aabb.overlaps(&other.aabb) {
            return 0.0;
        }
        let mut depth = f64::INFINITY;
        let mut test = |axis: &Vector3<f64>| -> bool {
            let (a0, a1) = self.project(axis);
            let (b0, b1) = other.project(axis);
            let overlap = (a1 - b0).min(b1 - a0);
            if overlap <= 0.0 {
                depth = 0.0;
                return false;
            }
            depth = depth.min(overlap);
            true
        };
        for a in self.face_axes.iter().chain(other.face_axes.iter()) {
            if !test(a) {
                return 0.0;
            }
        }
        for ea in &self.edge_axes {
            for eb in &other.edge_axes {
                let c = ea.cross(eb);
                let n = c.norm();
                if n < 1e-9 {
                    continue;
                }
                if !test(&(c / n)) {
                    return 0.0;
                }
            }
        }
        depth
    }
}

type MeshParts = (Vec<Point3<f64>>, Vec<[u32; 3]>, Vec<Vector3<f64>>, Vec<Vector3<f64>>);

fn cuboid_mesh(h: Vector3<f64>) -> MeshParts {
    let verts = Aabb::from_center_half(Point3::origin(), h).corners().to_vec();
    // corner index bits: x = 1, y = 2, z = 4
    let quads: [[u32; 4]; 6] = [
        [0, 2, 6, 4], // -x
        [1, 3, 7, 5], // +x
        [0, 1, 5, 4], // -y
        [2, 3, 7, 6], // +y
        [0, 1, 3, 2], // -z
        [4, 5, 7, 6], // +z
    ];
    let tris = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    let axes = vec![Vector3::x(), Vector3::y(), Vector3::z()];
    (verts, tris, axes.clone(), axes)
}

fn prism_mesh(radius: f64, hh: f64, n: u32) -> MeshParts {
    let offset = std::f64::consts::PI / n as f64;
    let ring: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = offset + std::f64::consts::TAU * k as f64 / n as f64;
            (radius * a.cos(), radius * a.sin())
        })
        .collect();
    let mut verts = Vec::with_capacity(2 * n as usize);
    for &(x, y) in &ring {
        verts.push(Point3::new(x, y, -hh));
    }
    for &(x, y) in &ring {
        verts.push(Point3::new(x, y, hh));
    }
    let mut tris = Vec::new();
    for k in 1..n - 1 {
        tris.push([0, k, k + 1]);
        tris.push([n, n + k, n + k + 1]);
    }
    let mut faces = vec![Vector3::z()];
    let mut edges = vec![Vector3::z()];
    for k in 0..n {
        let j = (k + 1) % n;
        tris.push([k, j, n + j]);
        tris.push([k, n + j, n + k]);
        let (x0, y0) = ring[k as usize];
        let (x1, y1) = ring[j as usize];
        let e = Vector3::new(x1 - x0, y1 - y0, 0.0).normalize();
        let f = Vector3::new(e.y, -e.x, 0.0);
        // parallel pairs (even n) are redundant for SAT
        if !faces.iter().any(|a| a.cross(&f).norm() < 1e-9) {
            faces.push(f);
        }
        if !edges.iter().any(|a| a.cross(&e).norm() < 1e-9) {
            edges.push(e);
        }
    }
    (verts, tris, faces, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box_at(x: f64) -> Hull {
        Hull::from_part(&Part::cuboid([x, 0.0, 0.0], [1.0, 1.0, 1.0]))
    }

    #[test]
    fn triangles_are_outward() {
        let h = Hull::from_part(&Part::cylinder([0.0, 0.0, 0.5], 0.3, 1.0, 12));
        let c = h.aabb.center();
        for [a, b, d] in h.triangles() {
            let n = (b - a).cross(&(d - a));
            let mid = (a.coords + b.coords + d.coords) / 3.0;
            assert!(n.dot(&(mid - c.coords)) > 0.0);
        }
        assert_eq!(h.triangles.len(), 2 * 10 + 2 * 12);
    }

    #[test]
    fn sat_depth_for_overlapping_boxes() {
        let a = unit_box_at(0.0);
        assert!((a.penetration_depth(&unit_box_at(0.8)) - 0.2).abs() < 1e-12);
        assert_eq!(a.penetration_depth(&unit_box_at(1.0)), 0.0);
        assert_eq!(a.penetration_depth(&unit_box_at(1.5)), 0.0);
    }

    #[test]
    fn sat_detects_edge_separation() {
        // two boxes rotated 45 degrees about z, separated only along a diagonal
        let rot = Pose::from_yaw(Vector3::new(1.1, 1.1, 0.0), std::f64::consts::FRAC_PI_4);
        let b = Hull::from_part(&Part::cuboid([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]).with_pose(rot));
        let a = unit_box_at(0.0);
        assert!(a.aabb.overlaps(&b.aabb));
        assert_eq!(a.penetration_depth(&b), 0.0);
    }
}
