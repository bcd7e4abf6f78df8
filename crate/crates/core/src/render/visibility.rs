use super::{trace_window, CameraIntrinsics, RenderError};
use crate::geometry::{Pose, PosedScene};
use crate::scene::InstanceId;

/// Pixel window `[u0, u1) × [v0, v1)` that contains every pixel the instance
/// can cover: the bounds of its projected vertices, or the full image when
/// any vertex is behind the camera.
pub fn projected_window(scene: &PosedScene, index: usize, pose: &Pose, k: &CameraIntrinsics) -> Option<(u32, u32, u32, u32)> {
    let inv = pose.inverse();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let pi = &scene.instances[index];
    let fluid = pi.fluid.iter();
    for h in pi.hulls.iter().map(|(_, h)| h).chain(fluid) {
        for v in &h.vertices {
            let c = inv.transform_point(v).coords;
            match k.project_camera(&c) {
                Some((px, py, _)) => {
                    x0 = x0.min(px);
                    y0 = y0.min(py);
                    x1 = x1.max(px);
                    y1 = y1.max(py);
                }
                None => return Some((0, 0, k.width, k.height)),
            }
        }
    }
    let clamp_lo = |v: f64, hi: u32| (v.floor() - 1.0).clamp(0.0, hi as f64) as u32;
    let clamp_hi = |v: f64, hi: u32| (v.ceil() + 1.0).clamp(0.0, hi as f64) as u32;
    let w = (clamp_lo(x0, k.width), clamp_lo(y0, k.height), clamp_hi(x1, k.width), clamp_hi(y1, k.height));
    (w.0 < w.2 && w.1 < w.3).then_some(w)
}

/// Target pixels in the full view and with `occluders` removed.
pub fn visibility_counts(
    scene: &PosedScene,
    target: InstanceId,
    occluders: &[InstanceId],
    pose: &Pose,
    k: &CameraIntrinsics,
) -> Result<(u64, u64), RenderError> {
    let ti = scene.index_of(target).ok_or(RenderError::UnknownInstance(target))?;
    for &o in occluders {
        if o == target || scene.index_of(o).is_none() {
            return Err(RenderError::UnknownInstance(o));
        }
    }
    let Some(win) = projected_window(scene, ti, pose, k) else {
        return Ok((0, 0));
    };
    let full = trace_window(scene, pose, k, None, win);
    let mask = scene.mask_hiding(occluders);
    let open = trace_window(scene, pose, k, Some(&mask), win);
    let count = |v: &[u32]| v.iter().filter(|&&i| i as usize == ti).count() as u64;
    Ok((count(&full), count(&open)))
}

/// Visible target pixels over target pixels once the occluders are removed;
/// 0 when the target covers no pixels either way.
pub fn visibility_ratio(
    scene: &PosedScene,
    target: InstanceId,
    occluders: &[InstanceId],
    pose: &Pose,
    k: &CameraIntrinsics,
) -> Result<f64, RenderError> {
    let (vis, total) = visibility_counts(scene, target, occluders, pose, k)?;
    Ok(if total == 0 { 0.0 } else { vis as f64 / total as f64 })
}

/// Visibility against every other instance, i.e. relative to the target
/// rendered alone.
pub fn visibility_alone(scene: &PosedScene, target: InstanceId, pose: &Pose, k: &CameraIntrinsics) -> Result<f64, RenderError> {
    let others: Vec<InstanceId> = scene
        .instances
        .iter()
        .map(|p| p.instance_id)
        .filter(|&i| i != target)
        .collect();
    visibility_ratio(scene, target, &others, pose, k)
}
