use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;

/// Pinhole intrinsics with square pixels (fy = fx).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    /// Principal point at the image center.
    pub fn new(width: u32, height: u32, fx: f64) -> Self {
        Self {
            width,
            height,
            fx,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        }
    }

    pub fn from_hfov(width: u32, height: u32, hfov: f64) -> Self {
        Self::new(width, height, width as f64 / 2.0 / (hfov / 2.0).tan())
    }

    pub fn hfov(&self) -> f64 {
        2.0 * (self.width as f64 / (2.0 * self.fx)).atan()
    }

    pub fn with_fx(&self, fx: f64) -> Self {
        Self { fx, ..*self }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_valid(&self) -> bool {
        let fov = self.hfov().to_degrees();
        self.width >= 16 && self.height >= 16 && self.fx > 0.0 && self.fx.is_finite() && fov > 1.0 && fov < 179.0
    }

    /// Unit ray through the center of pixel `(u, v)` in the camera frame
    /// (looking along -z, +y up, image rows growing downward).
    #[inline]
    pub fn pixel_ray(&self, u: u32, v: u32) -> Vector3<f64> {
        self.ray_at(u as f64 + 0.5, v as f64 + 0.5)
    }

    #[inline]
    pub fn ray_at(&self, px: f64, py: f64) -> Vector3<f64> {
        Vector3::new((px - self.cx) / self.fx, -(py - self.cy) / self.fx, -1.0).normalize()
    }

    /// Continuous pixel coordinates and ray distance of a camera-frame point,
    /// or `None` when it lies behind the image plane.
    #[inline]
    pub fn project_camera(&self, p: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        if p.z >= -1e-9 {
            return None;
        }
        let z = -p.z;
        Some((self.cx + self.fx * p.x / z, self.cy - self.fx * p.y / z, p.norm()))
    }

    pub fn project(&self, pose: &Pose, world: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let local = pose.inverse().transform_point(world);
        self.project_camera(&local.coords)
    }
}

/// Camera-to-world pose looking from `eye` toward `target` with world +z up.
pub fn look_at(eye: Point3<f64>, target: Point3<f64>) -> Pose {
    let f = (target - eye).normalize();
    let mut right = f.cross(&Vector3::z());
    if right.norm() < 1e-9 {
        right = Vector3::x();
    }
    let right = right.normalize();
    let up = right.cross(&f);
    let m = Matrix3::from_columns(&[right, up, -f]);
    Pose::new(eye.coords, UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m)))
}

/// Camera-to-world pose from a heading about +z and an elevation angle
/// (positive looks up).
pub fn yaw_pitch_pose(position: Point3<f64>, yaw: f64, pitch: f64) -> Pose {
    let f = Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin());
    look_at(position, position + f)
}

/// Viewing direction of a camera pose.
pub fn forward(pose: &Pose) -> Vector3<f64> {
    pose.rotation * -Vector3::z()
}

/// (yaw, pitch) of the viewing direction.
pub fn yaw_pitch(pose: &Pose) -> (f64, f64) {
    let f = forward(pose);
    (f.y.atan2(f.x), f.z.clamp(-1.0, 1.0).asin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_inverts_pixel_ray() {
        let k = CameraIntrinsics::new(64, 48, 50.0);
        let pose = yaw_pitch_pose(Point3::new(1.0, 2.0, 1.2), 0.7, -0.2);
        for (u, v) in [(0, 0), (10, 40), (63, 47)] {
            let d = pose.transform_vector(&k.pixel_ray(u, v));
            let w = pose.transform_point(&Point3::origin()) + d * 3.0;
            let (px, py, dist) = k.project(&pose, &w).unwrap();
            assert!((px - (u as f64 + 0.5)).abs() < 1e-9 && (py - (v as f64 + 0.5)).abs() < 1e-9);
            assert!((dist - 3.0).abs() < 1e-9);
        }
        let (yaw, pitch) = yaw_pitch(&pose);
        assert!((yaw - 0.7).abs() < 1e-12 && (pitch + 0.2).abs() < 1e-12);
    }

    #[test]
    fn fov_bounds() {
        assert!(CameraIntrinsics::new(640, 480, 554.0).is_valid());
        assert!(!CameraIntrinsics::new(8, 480, 554.0).is_valid());
        let k = CameraIntrinsics::from_hfov(640, 480, 60f64.to_radians());
        assert!((k.hfov().to_degrees() - 60.0).abs() < 1e-9);
    }
}
