//! Deterministic raycasting renderer with dense labels.
//!
//! One primary ray per pixel center, Lambert shading from point lights with
//! inverse-square falloff and a fixed ambient term. Rows may be traced in
//! parallel; every pixel depends only on its own ray, so output is bit-exact
//! regardless of scheduling.

mod camera;
mod files;
mod flow;
mod raster;
mod visibility;

use thiserror::Error;

pub use camera::{forward, look_at, yaw_pitch, yaw_pitch_pose, CameraIntrinsics};
pub use files::{
    decode_dpth, decode_png_gray16, decode_png_rgb8, encode_dpth, encode_png_gray16, encode_png_rgb8, read_dpth, write_dpth,
};
pub use flow::{flow, point_cloud, unproject_depth, FlowField, FLOW_OCCLUSION_TOL};
pub use raster::{assemble, boxes_from_seg, render, shade, trace, trace_window, Box2d, FrameLabels, GeometryPass, AMBIENT};
pub use visibility::{projected_window, visibility_alone, visibility_counts, visibility_ratio};

use crate::scene::InstanceId;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("unknown instance {0}")]
    UnknownInstance(InstanceId),
    #[error("bad raster data: {0}")]
    Format(String),
}
