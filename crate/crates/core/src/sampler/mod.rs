//! Predicate-conditioned sampling of object placements, joint states,
//! attributes and camera poses. Every sampler is rejection based and draws
//! all randomness from an explicit seed.

mod request;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{point_in_polygon, pose_instance, Aabb, OccupancyGrid, Pose, PosedInstance, PosedScene};
use crate::labels::{Evaluator, PredicateKind};
use crate::render::{forward, look_at, visibility_alone, visibility_ratio, CameraIntrinsics};
use crate::scene::{insert_object, InstanceId, ObjectInstance, Scene, SceneError};

pub use request::{apply_request, PredicateRequest, Sampled};

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("no valid sample after {attempts} attempts")]
    Unsatisfiable { attempts: u32 },
    #[error("instance {0} has no joints")]
    NoJoints(InstanceId),
    #[error("instance {0} has no fillable volume")]
    NotFillable(InstanceId),
    #[error("unknown instance {0}")]
    UnknownInstance(InstanceId),
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("predicate {0:?} cannot be sampled here")]
    UnsupportedPredicate(PredicateKind),
    #[error("value {0} outside [0, 1]")]
    InvalidValue(f64),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("target {0} is not visible from the camera")]
    TargetNotVisible(InstanceId),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub max_attempts: u32,
    /// Allowed penetration depth and the float height above supports.
    pub clearance: f64,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            max_attempts: 200,
            clearance: 0.005,
            seed: 0,
        }
    }
}

impl SampleConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

fn probe_instance(scene: &Scene, model_id: &str, pose: Pose) -> PosedInstance {
    let inst = ObjectInstance {
        instance_id: scene.next_instance_id(),
        model_id: model_id.to_string(),
        category: scene.model(model_id).map(|m| m.category.clone()).unwrap_or_default(),
        pose,
        joint_state: BTreeMap::new(),
        filled_fraction: 0.0,
        folded: false,
        room: String::new(),
    };
    pose_instance(scene, &inst)
}

/// Rest bounds of a model after a yaw about +z.
fn yawed_bounds(rest: &Aabb, yaw: f64) -> Aabb {
    rest.transformed(&Pose::from_yaw(Vector3::zeros(), yaw))
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        (lo + hi) / 2.0
    }
}

/// Inserts `subject_model` so that `predicate(subject, base)` holds and the
/// subject penetrates nothing deeper than `cfg.clearance`.
pub fn sample_placement(
    scene: &Scene,
    subject_model: &str,
    predicate: PredicateKind,
    base: InstanceId,
    cfg: &SampleConfig,
) -> Result<(Scene, InstanceId), SampleError> {
    let model = scene
        .model(subject_model)
        .ok_or_else(|| SampleError::UnknownModel(subject_model.to_string()))?;
    let posed = PosedScene::new(scene);
    let b = posed.get(base).ok_or(SampleError::UnknownInstance(base))?;
    if !matches!(predicate, PredicateKind::OnTop | PredicateKind::Inside | PredicateKind::Under) {
        return Err(SampleError::UnsupportedPredicate(predicate));
    }
    if predicate == PredicateKind::Inside && b.model.fillable_volume.is_none() {
        return Err(SampleError::NotFillable(base));
    }
    let rest = model.rest_aabb();
    let ev = Evaluator::new(scene, &posed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.max_attempts {
        let yaw = rng.random_range(0.0..TAU);
        let r = yawed_bounds(&rest, yaw);
        let pose = match predicate {
            PredicateKind::OnTop | PredicateKind::Under => {
                let fp = b.aabb.footprint();
                let (hx, hy) = (r.extents().x / 2.0, r.extents().y / 2.0);
                let off = r.center();
                // keep the whole subject over the base when it fits
                let (sx, sy) = if fp.max[0] - fp.min[0] > 2.0 * hx && fp.max[1] - fp.min[1] > 2.0 * hy {
                    (hx, hy)
                } else {
                    (0.0, 0.0)
                };
                let cx = uniform(&mut rng, fp.min[0] + sx, fp.max[0] - sx);
                let cy = uniform(&mut rng, fp.min[1] + sy, fp.max[1] - sy);
                let (x, y) = (cx - off.x, cy - off.y);
                let ground = if predicate == PredicateKind::OnTop {
                    let probe = probe_instance(scene, subject_model, Pose::from_yaw(Vector3::new(x, y, 0.0), yaw));
                    match ev.support_plane(&probe, b) {
                        Some(z) => z,
                        None => continue,
                    }
                } else {
                    0.0
                };
                Pose::from_yaw(Vector3::new(x, y, ground + cfg.clearance - rest.min.z), yaw)
            }
            PredicateKind::Inside => {
                let fv = b.model.fillable_volume.expect("checked above");
                let e = r.extents();
                let off = r.center();
                if e.x > fv.extents().x || e.y > fv.extents().y || e.z + cfg.clearance > fv.extents().z {
                    continue;
                }
                let cx = uniform(&mut rng, fv.min.x + e.x / 2.0, fv.max.x - e.x / 2.0);
                let cy = uniform(&mut rng, fv.min.y + e.y / 2.0, fv.max.y - e.y / 2.0);
                let local = Pose::from_yaw(Vector3::new(cx - off.x, cy - off.y, fv.min.z + cfg.clearance - r.min.z), yaw);
                b.pose.compose(&local)
            }
            _ => unreachable!(),
        };
        let probe = probe_instance(scene, subject_model, pose);
        if posed.penetration_against(&probe.hulls, &[]) > cfg.clearance {
            continue;
        }
        let ok = match predicate {
            PredicateKind::OnTop => ev.on_top(&probe, b),
            PredicateKind::Inside => ev.inside(&probe, b),
            _ => ev.under(&probe, b),
        };
        if ok {
            return Ok(insert_object(scene, subject_model, pose, BTreeMap::new())?);
        }
    }
    Err(SampleError::Unsatisfiable {
        attempts: cfg.max_attempts,
    })
}

/// Number of intermediate poses checked along a joint sweep.
pub const SWEEP_STEPS: usize = 8;

/// Opens a random nonempty subset of the instance's joints to
/// `target_openness` and closes the rest. Fails when a moving link would
/// pass through another instance on the way.
pub fn sample_joint_state(
    scene: &Scene,
    instance: InstanceId,
    target_openness: f64,
    joint_subset_seed: u64,
) -> Result<Scene, SampleError> {
    if !(0.0..=1.0).contains(&target_openness) {
        return Err(SampleError::InvalidValue(target_openness));
    }
    let inst = scene.instance(instance).ok_or(SampleError::UnknownInstance(instance))?;
    let model = scene.model_of(inst);
    let n = model.joints.len();
    if n == 0 {
        return Err(SampleError::NoJoints(instance));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(joint_subset_seed);
    let chosen: Vec<bool> = loop {
        let pick: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if pick.iter().any(|&p| p) {
            break pick;
        }
    };
    let state_at = |t: f64| -> BTreeMap<String, f64> {
        model
            .joints
            .iter()
            .zip(&chosen)
            .map(|(j, &c)| (j.joint_id.clone(), if c { j.value_at(t * target_openness) } else { j.limits[0] }))
            .collect()
    };
    let posed = PosedScene::new(scene);
    let clearance = SampleConfig::default().clearance;
    let moving: Vec<usize> = model
        .links
        .iter()
        .enumerate()
        .filter(|(_, l)| {
            model
                .joints
                .iter()
                .zip(&chosen)
                .any(|(j, &c)| c && j.child == l.link_id)
        })
        .map(|(i, _)| i)
        .collect();
    for step in 1..=SWEEP_STEPS {
        let mut probe = inst.clone();
        probe.joint_state = state_at(step as f64 / SWEEP_STEPS as f64);
        let p = pose_instance(scene, &probe);
        let hulls: Vec<_> = p.hulls.into_iter().filter(|(l, _)| moving.contains(l)).collect();
        if posed.penetration_against(&hulls, &[instance]) > clearance {
            return Err(SampleError::Unsatisfiable { attempts: 1 });
        }
    }
    let mut out = scene.clone();
    out.instance_mut(instance).expect("present").joint_state = state_at(1.0);
    Ok(out)
}

/// Sets a fill level or the folded flag.
pub fn sample_attribute(scene: &Scene, instance: InstanceId, kind: PredicateKind, value: f64) -> Result<Scene, SampleError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(SampleError::InvalidValue(value));
    }
    let mut out = scene.clone();
    let model = {
        let inst = out.instance(instance).ok_or(SampleError::UnknownInstance(instance))?;
        out.model_of(inst)
    };
    let inst = out.instance_mut(instance).expect("present");
    match kind {
        PredicateKind::Filled => {
            if model.fillable_volume.is_none() {
                return Err(SampleError::NotFillable(instance));
            }
            inst.filled_fraction = value;
        }
        PredicateKind::Folded => inst.folded = value > 0.5,
        other => return Err(SampleError::UnsupportedPredicate(other)),
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConstraints {
    /// Distance range as multiples of the target's box diagonal.
    pub dist_range: [f64; 2],
    /// Pitch range in radians; negative looks down.
    pub pitch_range: [f64; 2],
    pub require_unoccluded: bool,
    pub intrinsics: CameraIntrinsics,
    /// Cell size of the occupancy grid the camera must stand on.
    pub cell_size: f64,
    /// Highest allowed camera height.
    pub max_height: f64,
}

impl Default for CameraConstraints {
    fn default() -> Self {
        Self {
            dist_range: [1.5, 3.0],
            pitch_range: [-0.6, -0.1],
            require_unoccluded: false,
            intrinsics: CameraIntrinsics::from_hfov(640, 480, 60f64.to_radians()),
            cell_size: 0.1,
            max_height: 2.3,
        }
    }
}

/// Fraction of visible target pixels the unoccluded camera requires.
pub const UNOCCLUDED_MIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraSample {
    pub pose: Pose,
    pub intrinsics: CameraIntrinsics,
    pub yaw: f64,
    pub pitch: f64,
    pub distance: f64,
}

/// Draws a camera that looks at the target's box center from a free spot.
pub fn sample_camera_for_target(
    scene: &Scene,
    target: InstanceId,
    cfg: &SampleConfig,
    constraints: &CameraConstraints,
) -> Result<CameraSample, SampleError> {
    let posed = PosedScene::new(scene);
    let grid = OccupancyGrid::build_posed(scene, &posed, constraints.cell_size)
        .map_err(|_| SampleError::Unsatisfiable { attempts: 0 })?;
    sample_camera_in(scene, &posed, &grid, target, cfg, constraints)
}

/// Like [`sample_camera_for_target`] with the posed scene and grid supplied.
pub fn sample_camera_in(
    scene: &Scene,
    posed: &PosedScene,
    grid: &OccupancyGrid,
    target: InstanceId,
    cfg: &SampleConfig,
    constraints: &CameraConstraints,
) -> Result<CameraSample, SampleError> {
    let t = posed.get(target).ok_or(SampleError::UnknownInstance(target))?;
    let center = t.obb().center;
    let diam = t.aabb.diagonal();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.max_attempts {
        let distance = uniform(&mut rng, constraints.dist_range[0], constraints.dist_range[1]) * diam;
        let yaw = rng.random_range(0.0..TAU);
        let pitch = uniform(&mut rng, constraints.pitch_range[0], constraints.pitch_range[1]);
        let dir = Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin());
        let eye = center - dir * distance;
        if eye.z <= 0.05 || eye.z > constraints.max_height {
            continue;
        }
        if !point_in_polygon(&scene.floor_polygon, eye.x, eye.y) {
            continue;
        }
        match grid.cell_of(eye.x, eye.y) {
            Some(c) if grid.is_traversable(c) => {}
            _ => continue,
        }
        if posed.instances.iter().any(|p| p.aabb.contains_point(&eye)) {
            continue;
        }
        let pose = look_at(eye, center);
        if constraints.require_unoccluded {
            let v = visibility_alone(posed, target, &pose, &constraints.intrinsics).map_err(|_| SampleError::UnknownInstance(target))?;
            if v < UNOCCLUDED_MIN {
                continue;
            }
        }
        return Ok(CameraSample {
            pose,
            intrinsics: constraints.intrinsics,
            yaw,
            pitch,
            distance,
        });
    }
    Err(SampleError::Unsatisfiable {
        attempts: cfg.max_attempts,
    })
}

/// Largest visibility ratio a placed occluder may leave.
pub const OCCLUDED_MAX: f64 = 0.02;
/// Occluder position as a fraction of the camera to target segment,
/// measured from the camera.
pub const OCCLUDER_FRACTION: [f64; 2] = [0.25, 0.40];

/// Grounds `occluder_model` on the camera to target segment, facing the
/// camera, so that the target ends up hidden.
pub fn place_occluder_between(
    scene: &Scene,
    target: InstanceId,
    camera_pose: &Pose,
    intrinsics: &CameraIntrinsics,
    occluder_model: &str,
    cfg: &SampleConfig,
) -> Result<(Scene, InstanceId), SampleError> {
    let model = scene
        .model(occluder_model)
        .ok_or_else(|| SampleError::UnknownModel(occluder_model.to_string()))?;
    let posed = PosedScene::new(scene);
    let t = posed.get(target).ok_or(SampleError::UnknownInstance(target))?;
    let (vis, _) = crate::render::visibility_counts(&posed, target, &[], camera_pose, intrinsics)
        .map_err(|_| SampleError::UnknownInstance(target))?;
    if vis == 0 {
        return Err(SampleError::TargetNotVisible(target));
    }
    let cam = Point3::from(camera_pose.translation);
    let goal = t.obb().center;
    let rest = model.rest_aabb();
    let off = rest.center();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let [f0, f1] = OCCLUDER_FRACTION;
    for attempt in 0..cfg.max_attempts {
        // a fixed sweep first, random fractions after
        let f = if attempt < 4 {
            f0 + (f1 - f0) * attempt as f64 / 3.0
        } else {
            rng.random_range(f0..=f1)
        };
        let p = cam + (goal - cam) * f;
        let yaw = (cam.y - p.y).atan2(cam.x - p.x);
        let rot = Pose::from_yaw(Vector3::zeros(), yaw);
        let o = rot.transform_vector(&Vector3::new(off.x, off.y, 0.0));
        let pose = Pose::from_yaw(Vector3::new(p.x - o.x, p.y - o.y, -rest.min.z), yaw);
        let probe = probe_instance(scene, occluder_model, pose);
        if probe.aabb.expanded(0.05).contains_point(&cam) {
            continue;
        }
        let fp = probe.aabb.footprint();
        let corners = [
            [fp.min[0], fp.min[1]],
            [fp.max[0], fp.min[1]],
            [fp.max[0], fp.max[1]],
            [fp.min[0], fp.max[1]],
        ];
        if !corners.iter().all(|c| point_in_polygon(&scene.floor_polygon, c[0], c[1])) {
            continue;
        }
        if posed.penetration_against(&probe.hulls, &[]) > cfg.clearance {
            continue;
        }
        let (out, id) = insert_object(scene, occluder_model, pose, BTreeMap::new())?;
        let after = PosedScene::new(&out);
        let ratio = visibility_ratio(&after, target, &[id], camera_pose, intrinsics).map_err(|_| SampleError::UnknownInstance(target))?;
        if ratio <= OCCLUDED_MAX {
            return Ok((out, id));
        }
    }
    Err(SampleError::Unsatisfiable {
        attempts: cfg.max_attempts,
    })
}

/// Camera-forward check used by tests and the axes: the angle between the
/// optical axis and the ray to `p`.
pub fn off_axis_angle(pose: &Pose, p: &Point3<f64>) -> f64 {
    let d = (p - Point3::from(pose.translation)).normalize();
    forward(pose).dot(&d).clamp(-1.0, 1.0).acos()
}
