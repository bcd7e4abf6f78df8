use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CameraIntrinsics;
use crate::geometry::{Obb, Pose, PosedScene, RayFilter};
use crate::scene::{InstanceId, LightSource};

pub const AMBIENT: f64 = 0.05;
const NO_HIT: u32 = u32::MAX;

/// Tight pixel bounds (inclusive) of one instance's mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Box2d {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    pub pixel_count: u64,
}

impl Box2d {
    /// Continuous `[x0, y0, x1, y1]` covering whole pixels.
    pub fn to_xyxy(&self) -> [f64; 4] {
        [self.x0 as f64, self.y0 as f64, self.x1 as f64 + 1.0, self.y1 as f64 + 1.0]
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0 + 1
    }
}

/// All per-pixel label modalities of one view.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabels {
    pub width: u32,
    pub height: u32,
    /// Interleaved 8-bit RGB.
    pub rgb: Vec<u8>,
    /// Ray distance in meters, 0 where nothing was hit.
    pub depth: Vec<f32>,
    /// World-frame unit normals facing the camera, zero where nothing was hit.
    pub normals: Vec<[f32; 3]>,
    pub instance_seg: Vec<u16>,
    pub semantic_seg: Vec<u16>,
    pub boxes2d: BTreeMap<InstanceId, Box2d>,
    pub boxes3d: BTreeMap<InstanceId, Obb>,
}

impl FrameLabels {
    pub fn pixel_count(&self, id: InstanceId) -> u64 {
        self.boxes2d.get(&id).map_or(0, |b| b.pixel_count)
    }

    pub fn background_count(&self) -> u64 {
        self.instance_seg.iter().filter(|&&i| i == 0).count() as u64
    }

    pub fn mean_luminance(&self) -> f64 {
        let s: f64 = self
            .rgb
            .chunks_exact(3)
            .map(|p| 0.2126 * p[0] as f64 + 0.7152 * p[1] as f64 + 0.0722 * p[2] as f64)
            .sum();
        s / (self.width as f64 * self.height as f64)
    }
}

/// Boxes recomputed from an instance raster.
pub fn boxes_from_seg(width: u32, seg: &[u16]) -> BTreeMap<InstanceId, Box2d> {
    let mut out: BTreeMap<InstanceId, Box2d> = BTreeMap::new();
    for (i, &id) in seg.iter().enumerate() {
        if id == 0 {
            continue;
        }
        let (x, y) = ((i % width as usize) as u32, (i / width as usize) as u32);
        out.entry(id as InstanceId)
            .and_modify(|b| {
                b.x0 = b.x0.min(x);
                b.x1 = b.x1.max(x);
                b.y0 = b.y0.min(y);
                b.y1 = b.y1.max(y);
                b.pixel_count += 1;
            })
            .or_insert(Box2d {
                x0: x,
                y0: y,
                x1: x,
                y1: y,
                pixel_count: 1,
            });
    }
    out
}

/// Primary-ray hits for one view, before shading.
#[derive(Debug, Clone)]
pub struct GeometryPass {
    pub intrinsics: CameraIntrinsics,
    pub pose: Pose,
    /// Index into `PosedScene::instances`, `u32::MAX` for background.
    pub instance: Vec<u32>,
    pub distance: Vec<f64>,
    /// Camera-facing unit normals.
    pub normal: Vec<Vector3<f64>>,
    pub albedo: Vec<[f64; 3]>,
}

impl GeometryPass {
    pub fn hit_point(&self, i: usize) -> Point3<f64> {
        let k = &self.intrinsics;
        let (u, v) = ((i % k.width as usize) as u32, (i / k.width as usize) as u32);
        let d = self.pose.transform_vector(&k.pixel_ray(u, v));
        Point3::from(self.pose.translation) + d * self.distance[i]
    }
}

/// Casts one primary ray per pixel center.
pub fn trace(scene: &PosedScene, pose: &Pose, k: &CameraIntrinsics, skip: RayFilter<'_>) -> GeometryPass {
    let w = k.width as usize;
    let n = k.pixel_count();
    let mut instance = vec![NO_HIT; n];
    let mut distance = vec![0.0; n];
    let mut normal = vec![Vector3::zeros(); n];
    let mut albedo = vec![[0.0; 3]; n];
    let origin = Point3::from(pose.translation);
    instance
        .par_chunks_mut(w)
        .zip(distance.par_chunks_mut(w))
        .zip(normal.par_chunks_mut(w))
        .zip(albedo.par_chunks_mut(w))
        .enumerate()
        .for_each(|(v, (((inst, dist), nrm), alb))| {
            for u in 0..w {
                let d = pose.transform_vector(&k.pixel_ray(u as u32, v as u32));
                if let Some(h) = scene.cast(&origin, &d, skip) {
                    inst[u] = h.instance_index as u32;
                    dist[u] = h.distance;
                    nrm[u] = if h.normal.dot(&d) > 0.0 { -h.normal } else { h.normal };
                    alb[u] = h.albedo;
                }
            }
        });
    GeometryPass {
        intrinsics: *k,
        pose: *pose,
        instance,
        distance,
        normal,
        albedo,
    }
}

/// Instance indices hit inside a pixel window `[u0, u1) × [v0, v1)`.
pub fn trace_window(
    scene: &PosedScene,
    pose: &Pose,
    k: &CameraIntrinsics,
    skip: RayFilter<'_>,
    (u0, v0, u1, v1): (u32, u32, u32, u32),
) -> Vec<u32> {
    let origin = Point3::from(pose.translation);
    let w = (u1 - u0) as usize;
    let mut out = vec![NO_HIT; w * (v1 - v0) as usize];
    if w == 0 {
        return out;
    }
    out.par_chunks_mut(w).enumerate().for_each(|(r, row)| {
        let v = v0 + r as u32;
        for (c, slot) in row.iter_mut().enumerate() {
            let d = pose.transform_vector(&k.pixel_ray(u0 + c as u32, v));
            if let Some(h) = scene.cast(&origin, &d, skip) {
                *slot = h.instance_index as u32;
            }
        }
    });
    out
}

#[inline]
fn to_u8(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Lambert shading with inverse-square point lights and no shadows.
pub fn shade(pass: &GeometryPass, lights: &[LightSource], light_scale: f64) -> Vec<u8> {
    let n = pass.instance.len();
    let mut rgb = vec![0u8; 3 * n];
    let w = pass.intrinsics.width as usize;
    rgb.par_chunks_mut(3 * w).enumerate().for_each(|(v, row)| {
        for u in 0..w {
            let i = v * w + u;
            if pass.instance[i] == NO_HIT {
                continue;
            }
            let p = pass.hit_point(i);
            let nrm = pass.normal[i];
            let mut direct = 0.0;
            for l in lights {
                let to = l.position - p;
                let d2 = to.norm_squared();
                if d2 <= 0.0 {
                    continue;
                }
                let cos = nrm.dot(&to) / d2.sqrt();
                direct += cos.max(0.0) * l.base_power / d2;
            }
            let s = (AMBIENT + light_scale * direct).clamp(0.0, 1.0);
            let a = pass.albedo[i];
            row[3 * u] = to_u8(a[0] * s);
            row[3 * u + 1] = to_u8(a[1] * s);
            row[3 * u + 2] = to_u8(a[2] * s);
        }
    });
    rgb
}

/// Assembles label rasters from a geometry pass and shaded colors.
pub fn assemble(scene: &PosedScene, pass: &GeometryPass, rgb: Vec<u8>) -> FrameLabels {
    let k = &pass.intrinsics;
    let n = k.pixel_count();
    let mut depth = vec![0f32; n];
    let mut normals = vec![[0f32; 3]; n];
    let mut instance_seg = vec![0u16; n];
    let mut semantic_seg = vec![0u16; n];
    for i in 0..n {
        let ii = pass.instance[i];
        if ii == NO_HIT {
            continue;
        }
        let pi = &scene.instances[ii as usize];
        depth[i] = pass.distance[i] as f32;
        let nn = pass.normal[i];
        normals[i] = [nn.x as f32, nn.y as f32, nn.z as f32];
        instance_seg[i] = u16::try_from(pi.instance_id).expect("instance id exceeds 16-bit raster");
        semantic_seg[i] = pi.semantic_id;
    }
    let boxes2d = boxes_from_seg(k.width, &instance_seg);
    let boxes3d = boxes2d
        .keys()
        .filter_map(|id| scene.get(*id).map(|p| (*id, p.obb())))
        .collect();
    FrameLabels {
        width: k.width,
        height: k.height,
        rgb,
        depth,
        normals,
        instance_seg,
        semantic_seg,
        boxes2d,
        boxes3d,
    }
}

/// Renders all label modalities of one view.
pub fn render(scene: &PosedScene, lights: &[LightSource], pose: &Pose, k: &CameraIntrinsics, light_scale: f64) -> FrameLabels {
    let pass = trace(scene, pose, k, None);
    let rgb = shade(&pass, lights, light_scale);
    assemble(scene, &pass, rgb)
}
