use nalgebra::Point3;

use super::{trace, CameraIntrinsics, FrameLabels};
use crate::geometry::{Pose, PosedScene};

/// Re-projected depth may differ from the second view by this much before a
/// pixel counts as occluded.
pub const FLOW_OCCLUSION_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: u32,
    pub height: u32,
    /// Pixel displacement from the first view to the second.
    pub flow: Vec<[f32; 2]>,
    pub valid: Vec<bool>,
}

/// Forward optical flow of a static scene between two camera poses.
pub fn flow(scene: &PosedScene, pose_t: &Pose, pose_t1: &Pose, k: &CameraIntrinsics) -> FlowField {
    let a = trace(scene, pose_t, k, None);
    let b = trace(scene, pose_t1, k, None);
    let n = k.pixel_count();
    let inv1 = pose_t1.inverse();
    let mut flow = vec![[0f32; 2]; n];
    let mut valid = vec![false; n];
    let w = k.width as usize;
    for i in 0..n {
        if a.instance[i] == u32::MAX {
            continue;
        }
        let (u, v) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
        let p = a.hit_point(i);
        let Some((px, py, dist)) = k.project_camera(&inv1.transform_point(&p).coords) else {
            continue;
        };
        flow[i] = [(px - u) as f32, (py - v) as f32];
        if px < 0.0 || py < 0.0 || px >= k.width as f64 || py >= k.height as f64 {
            continue;
        }
        let j = py.floor() as usize * w + px.floor() as usize;
        valid[i] = b.instance[j] != u32::MAX && (b.distance[j] - dist).abs() <= FLOW_OCCLUSION_TOL;
    }
    FlowField {
        width: k.width,
        height: k.height,
        flow,
        valid,
    }
}

/// World points of every pixel with depth, in row-major order.
pub fn point_cloud(frame: &FrameLabels, pose: &Pose, k: &CameraIntrinsics) -> Vec<Point3<f64>> {
    unproject_depth(&frame.depth, pose, k, 1)
}

/// World points of the pixels with depth on every `stride`-th row and
/// column of a ray-distance raster.
pub fn unproject_depth(depth: &[f32], pose: &Pose, k: &CameraIntrinsics, stride: usize) -> Vec<Point3<f64>> {
    let origin = Point3::from(pose.translation);
    let (w, stride) = (k.width as usize, stride.max(1));
    depth
        .iter()
        .enumerate()
        .filter(|(i, &d)| d > 0.0 && (i % w) % stride == 0 && (i / w) % stride == 0)
        .map(|(i, &d)| {
            let ray = pose.transform_vector(&k.pixel_ray((i % w) as u32, (i / w) as u32));
            origin + ray * d as f64
        })
        .collect()
}
