//! Per-axis clip checks shared by the axis tests and the acceptance run.
//! Each check recomputes what a clip should contain from first principles
//! and returns human-readable failures instead of panicking, so a long run
//! can report all of them.

use nalgebra::{Point3, UnitQuaternion};
use serde_json::Value;
use synthscene_core::axes::{Axis, ClipFrame, ClipPlan, ClipSink, AxisError};
use synthscene_core::geometry::PosedScene;
use synthscene_core::labels::{ClipLabels, FrameRecord};
use synthscene_core::render::{visibility_ratio, yaw_pitch};
use synthscene_core::scene::JointKind;

/// Visibility at the hidden end of a visibility clip.
pub const OCCLUDED_MAX: f64 = 0.02;
/// Visibility at the revealed end.
pub const REVEALED_MIN: f64 = 0.98;
/// Camera distance and yaw drift allowed along orbit and pitch clips.
pub const GEOM_TOL: f64 = 1e-6;
/// Pinhole check: relative spread of box width over focal length.
pub const PINHOLE_TOL: f64 = 0.02;
/// Boxes narrower than this are too quantized for the pinhole check.
pub const PINHOLE_MIN_PX: u32 = 150;
pub const ZOOM_FILL_MIN: f64 = 0.8;
pub const ZOOM_SMALL_MAX: f64 = 0.05;

/// Collects frames of accepted clips and checks each one as it closes.
#[derive(Default)]
pub struct CheckSink {
    pub records: Vec<FrameRecord>,
    pub luminance: Vec<f64>,
    /// Full frames, kept only when `keep_frames` is set.
    pub frames: Vec<ClipFrame>,
    pub keep_frames: bool,
    pub header: Option<ClipLabels>,
    pub checked: usize,
    pub dropped: usize,
    pub failures: Vec<String>,
}

impl ClipSink for CheckSink {
    fn begin(&mut self, _plan: &ClipPlan, header: &ClipLabels) -> Result<(), AxisError> {
        self.records.clear();
        self.luminance.clear();
        self.frames.clear();
        self.header = Some(header.clone());
        Ok(())
    }

    fn frame(&mut self, _plan: &ClipPlan, frame: ClipFrame) -> Result<(), AxisError> {
        self.luminance.push(frame.labels.mean_luminance());
        self.records.push(frame.record.clone());
        if self.keep_frames {
            self.frames.push(frame);
        }
        Ok(())
    }

    fn end(&mut self, plan: &ClipPlan, accepted: bool) -> Result<(), AxisError> {
        if !accepted {
            self.dropped += 1;
            return Ok(());
        }
        self.checked += 1;
        let header = self.header.as_ref().expect("begin before end");
        let found = check_clip(plan, header, &self.records, &self.luminance);
        self.failures.extend(found.into_iter().map(|f| format!("{}: {f}", plan.clip_id)));
        Ok(())
    }
}

/// Everything a single-factor clip must satisfy.
pub fn check_clip(plan: &ClipPlan, header: &ClipLabels, records: &[FrameRecord], luminance: &[f64]) -> Vec<String> {
    let mut out = Vec::new();
    let n = records.len();
    if n != plan.frames.len() || n < 2 {
        out.push(format!("{n} records for {} planned frames", plan.frames.len()));
        return out;
    }
    if header.target != Some(plan.target) {
        out.push(format!("header target {:?}, plan target {}", header.target, plan.target));
    }
    if header.axis.as_deref() != Some(plan.axis.name()) {
        out.push(format!("header axis {:?}", header.axis));
    }
    for (i, r) in records.iter().enumerate() {
        if r.index as usize != i {
            out.push(format!("frame {i} has index {}", r.index));
        }
        if !(0.0..=1.0).contains(&r.intensity) {
            out.push(format!("frame {i} intensity {} outside [0, 1]", r.intensity));
        }
        if r.visibility_ratio.is_none() {
            out.push(format!("frame {i} has no visibility"));
        }
    }
    if records.windows(2).any(|w| w[1].intensity < w[0].intensity) {
        out.push("intensity decreases".into());
    }
    if plan.axis != Axis::Visibility {
        // evenly spaced schedule, exact at both ends
        for (i, r) in records.iter().enumerate() {
            let want = i as f64 / (n - 1) as f64;
            if (r.intensity - want).abs() > 1e-12 {
                out.push(format!("frame {i} intensity {} != {want}", r.intensity));
            }
        }
    }
    out.extend(isolation_failures(plan.axis, records));
    out.extend(match plan.axis {
        Axis::Articulation => check_articulation(plan, records),
        Axis::Lighting => check_lighting(records, luminance),
        Axis::Visibility => check_visibility(plan, records),
        Axis::Zoom => check_zoom(plan, records),
        Axis::Pitch => check_pitch(plan, records),
    });
    out
}

/// The record fields a clip along `axis` is allowed to vary, beyond the
/// per-frame outputs every clip varies.
fn moving_fields(axis: Axis) -> &'static [&'static [&'static str]] {
    match axis {
        Axis::Articulation => &[&["target_joints"]],
        Axis::Lighting => &[&["light_scale"]],
        Axis::Visibility | Axis::Pitch => &[&["camera", "pos"], &["camera", "q"]],
        Axis::Zoom => &[&["camera", "fx"]],
    }
}

fn remove_path(v: &mut Value, path: &[&str]) -> Option<Value> {
    let (last, head) = path.split_last()?;
    let mut cur = v;
    for p in head {
        cur = cur.get_mut(*p)?;
    }
    cur.as_object_mut()?.remove(*last)
}

/// Every record must equal frame 0 once outputs and the axis's own field
/// are stripped, and the axis field must actually move.
pub fn isolation_failures(axis: Axis, records: &[FrameRecord]) -> Vec<String> {
    let strip = |r: &FrameRecord| {
        let mut v = serde_json::to_value(r).expect("record serializes");
        let mut moved = Vec::new();
        for f in ["index", "intensity", "boxes2d", "boxes3d", "visibility_ratio", "scene_graph"] {
            v.as_object_mut().unwrap().remove(f);
        }
        for path in moving_fields(axis) {
            moved.push(remove_path(&mut v, path));
        }
        (v, moved)
    };
    let (base, base_moved) = strip(&records[0]);
    let mut out = Vec::new();
    let mut varied = false;
    for (i, r) in records.iter().enumerate().skip(1) {
        let (v, moved) = strip(r);
        if v != base {
            out.push(format!("frame {i} changes more than the {axis} factor"));
        }
        varied |= moved != base_moved;
    }
    if !varied {
        out.push(format!("the {axis} factor never changes"));
    }
    out
}

fn check_articulation(plan: &ClipPlan, records: &[FrameRecord]) -> Vec<String> {
    let mut out = Vec::new();
    let inst = plan.scene.instance(plan.target).expect("target in scene");
    let model = plan.scene.model_of(inst);
    let first = &records[0].target_joints;
    let last = &records[records.len() - 1].target_joints;
    if first.len() != model.joints.len() {
        out.push(format!("{} of {} joints recorded", first.len(), model.joints.len()));
        return out;
    }
    let mut opened = 0;
    for j in &model.joints {
        let [lo, hi] = j.limits;
        if first[&j.joint_id] != lo {
            out.push(format!("joint {} starts at {}, not its lower limit", j.joint_id, first[&j.joint_id]));
        }
        let end = last[&j.joint_id];
        if end == hi {
            opened += 1;
        } else if end != lo {
            out.push(format!("joint {} ends at {end}, neither limit", j.joint_id));
        }
    }
    if opened == 0 {
        out.push("no joint reaches its upper limit".into());
    }

    // forward kinematics at the middle frame, against the closed frame 0
    let mid = records.len() / 2;
    let s = records[mid].intensity;
    let posed_at = |r: &FrameRecord| {
        let mut sc = plan.scene.clone();
        sc.instance_mut(plan.target).unwrap().joint_state = r.target_joints.clone();
        PosedScene::new(&sc)
    };
    let (p0, pm) = (posed_at(&records[0]), posed_at(&records[mid]));
    let (l0, lm) = (&p0.get(plan.target).unwrap().link_world, &pm.get(plan.target).unwrap().link_world);
    let r_inst = inst.pose.rotation;
    for j in &model.joints {
        let [lo, hi] = j.limits;
        let dq = if last[&j.joint_id] == hi { s * (hi - lo) } else { 0.0 };
        if (records[mid].target_joints[&j.joint_id] - (lo + dq)).abs() > 1e-12 {
            out.push(format!("joint {} at the middle frame is off the linear schedule", j.joint_id));
        }
        let li = model.links.iter().position(|l| l.link_id == j.child).unwrap();
        let axis_w = r_inst * j.axis.into_inner();
        match j.kind {
            JointKind::Prismatic => {
                let moved = lm[li].translation - l0[li].translation;
                let want = axis_w * dq;
                if (moved - want).norm() > 1e-9 {
                    out.push(format!("link {} moved {moved:?}, expected {want:?}", j.child));
                }
            }
            JointKind::Revolute => {
                let rel: UnitQuaternion<f64> = lm[li].rotation * l0[li].rotation.inverse();
                let want = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis_w), dq);
                if rel.angle_to(&want) > 1e-9 {
                    out.push(format!("link {} turned {:.6} rad, expected {dq:.6}", j.child, rel.angle()));
                }
            }
        }
    }
    out
}

fn check_lighting(records: &[FrameRecord], luminance: &[f64]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.light_scale != r.intensity {
            out.push(format!("frame {i} light scale {} at intensity {}", r.light_scale, r.intensity));
        }
    }
    if luminance.windows(2).any(|w| w[1] < w[0]) {
        out.push("mean luminance decreases as the light brightens".into());
    }
    if luminance.len() == records.len() && luminance.first() >= luminance.last() {
        out.push("the lit end is no brighter than the dark end".into());
    }
    out
}

fn target_center(plan: &ClipPlan) -> Point3<f64> {
    PosedScene::new(&plan.scene).get(plan.target).unwrap().obb().center
}

fn camera_distance(r: &FrameRecord, c: &Point3<f64>) -> f64 {
    (Point3::from(r.camera.pos) - c).norm()
}

fn check_visibility(plan: &ClipPlan, records: &[FrameRecord]) -> Vec<String> {
    let mut out = Vec::new();
    let Some(occ) = plan.occluder else {
        return vec!["visibility clip without an occluder".into()];
    };
    let vis: Vec<f64> = records.iter().map(|r| r.visibility_ratio.unwrap_or(f64::NAN)).collect();
    if vis[0] > OCCLUDED_MAX {
        out.push(format!("first frame {:.4} visible", vis[0]));
    }
    if vis[vis.len() - 1] < REVEALED_MIN {
        out.push(format!("last frame only {:.4} visible", vis[vis.len() - 1]));
    }
    if vis.windows(2).any(|w| w[1] < w[0]) {
        out.push("visibility decreases".into());
    }
    let posed = PosedScene::new(&plan.scene);
    let c = posed.get(plan.target).unwrap().obb().center;
    let d0 = camera_distance(&records[0], &c);
    // recompute at the ends and the middle; the whole clip in the unit tests
    let probe: Vec<usize> = if records.len() <= 16 {
        (0..records.len()).collect()
    } else {
        vec![0, records.len() / 2, records.len() - 1]
    };
    for (i, r) in records.iter().enumerate() {
        if (camera_distance(r, &c) - d0).abs() > GEOM_TOL {
            out.push(format!("frame {i} camera distance drifts"));
        }
        if r.intensity != vis[i] {
            out.push(format!("frame {i} intensity {} != visibility {}", r.intensity, vis[i]));
        }
    }
    for i in probe {
        let r = &records[i];
        let pose = r.camera.pose().unwrap();
        let again = visibility_ratio(&posed, plan.target, &[occ], &pose, &r.camera.intrinsics()).unwrap();
        if again != vis[i] {
            out.push(format!("frame {i} visibility {} recomputes to {again}", vis[i]));
        }
    }
    out
}

fn check_zoom(plan: &ClipPlan, records: &[FrameRecord]) -> Vec<String> {
    let mut out = Vec::new();
    let n = records.len();
    let (f0, f1) = (records[0].camera.fx, records[n - 1].camera.fx);
    if f1 >= f0 {
        out.push(format!("focal length {f0} -> {f1} does not zoom out"));
    }
    for (i, r) in records.iter().enumerate() {
        let s = r.intensity;
        let want = f0 + s * (f1 - f0);
        if (r.camera.fx - want).abs() > 1e-9 * f0 {
            out.push(format!("frame {i} fx {} off the linear schedule {want}", r.camera.fx));
        }
    }
    let (w, h) = (records[0].camera.w as f64, records[0].camera.h as f64);
    let Some(b0) = records[0].boxes2d.get(&plan.target) else {
        out.push("target invisible when zoomed in".into());
        return out;
    };
    let fill = (b0.width() as f64 / w).max(b0.height() as f64 / h);
    if fill < ZOOM_FILL_MIN {
        out.push(format!("zoomed-in target spans {fill:.3} of the image"));
    }
    match records[n - 1].boxes2d.get(&plan.target) {
        Some(b) if b.width() as f64 / w >= ZOOM_SMALL_MAX => {
            out.push(format!("zoomed-out target is {:.3} of the width", b.width() as f64 / w))
        }
        _ => {}
    }
    // pinhole: unclipped box width is proportional to fx
    let (iw, ih) = (records[0].camera.w, records[0].camera.h);
    let ratios: Vec<(usize, f64)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            let b = r.boxes2d.get(&plan.target)?;
            let inside = b.x0 > 0 && b.y0 > 0 && b.x1 + 1 < iw && b.y1 + 1 < ih;
            (inside && b.width() >= PINHOLE_MIN_PX).then(|| (i, b.width() as f64 / r.camera.fx))
        })
        .collect();
    if let Some(&(_, r0)) = ratios.first() {
        for &(i, r) in &ratios {
            if (r / r0 - 1.0).abs() > PINHOLE_TOL {
                out.push(format!("frame {i} box width over fx is {:.4} of frame {}", r / r0, ratios[0].0));
            }
        }
    }
    out
}

fn check_pitch(plan: &ClipPlan, records: &[FrameRecord]) -> Vec<String> {
    let mut out = Vec::new();
    let c = target_center(plan);
    let pose0 = records[0].camera.pose().unwrap();
    let (yaw0, pitch0) = yaw_pitch(&pose0);
    let pitch_end = yaw_pitch(&records[records.len() - 1].camera.pose().unwrap()).1;
    if pitch_end >= pitch0 {
        out.push("camera does not tilt downward".into());
    }
    let d0 = camera_distance(&records[0], &c);
    for (i, r) in records.iter().enumerate() {
        let pose = r.camera.pose().unwrap();
        let (yaw, pitch) = yaw_pitch(&pose);
        let want = pitch0 + r.intensity * (pitch_end - pitch0);
        if (pitch - want).abs() > GEOM_TOL {
            out.push(format!("frame {i} pitch {pitch:.6} off the linear schedule {want:.6}"));
        }
        let dyaw = (yaw - yaw0 + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        if dyaw.abs() > GEOM_TOL {
            out.push(format!("frame {i} yaw drifts by {dyaw}"));
        }
        if (camera_distance(r, &c) - d0).abs() > GEOM_TOL {
            out.push(format!("frame {i} camera distance drifts"));
        }
        // the camera keeps looking at the target center
        let f = synthscene_core::render::forward(&pose);
        let to_c = (c - Point3::from(r.camera.pos)).normalize();
        if (f - to_c).norm() > GEOM_TOL {
            out.push(format!("frame {i} camera looks away from the target"));
        }
    }
    out
}
