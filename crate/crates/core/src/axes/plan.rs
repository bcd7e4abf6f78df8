//! Per-axis planners. Each one picks a target, finds a camera that sees it,
//! and lays out the per-frame settings; nothing is rendered at full
//! resolution here.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Axis, AxisConfig, AxisError, ClipPlan, FramePlan, ZoomRange, ZOOM_FILL, ZOOM_SMALL};
use crate::geometry::{point_in_polygon, OccupancyGrid, Pose, PosedInstance, PosedScene};
use crate::render::{look_at, visibility_alone, visibility_ratio, CameraIntrinsics};
use crate::sampler::{
    place_occluder_between, sample_camera_in, sample_joint_state, CameraConstraints, CameraSample, SampleConfig, OCCLUDED_MAX,
};
use crate::scene::{InstanceId, Scene, WALL_HEIGHT};

/// Smallest gap between a moving camera and any solid part.
pub const CAMERA_CLEARANCE: f64 = 0.05;
/// Occluder-relative visibility the orbit must reach at its far end.
pub const FULLY_VISIBLE: f64 = 0.98;
/// Angular resolution of the orbit search, degrees.
pub const ORBIT_STEP_DEG: f64 = 1.0;
const ORBIT_MAX_DEG: f64 = 150.0;
const MAX_TARGETS: usize = 6;
const CAMERA_ATTEMPTS: u32 = 60;
const PITCH_ATTEMPTS: u32 = 24;
const OCCLUDER_ATTEMPTS: u32 = 24;
const GRID_CELL: f64 = 0.1;
const EYE_MIN_Z: f64 = 0.1;
const EYE_MAX_Z: f64 = WALL_HEIGHT - 0.2;
/// Widest zoomed-out field of view, degrees.
const MAX_ZOOM_FOV_DEG: f64 = 170.0;

fn dir(yaw: f64, pitch: f64) -> Vector3<f64> {
    Vector3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin())
}

fn unsat(axis: Axis, reason: impl Into<String>) -> AxisError {
    AxisError::Unsatisfiable {
        axis,
        reason: reason.into(),
    }
}

/// Every joint of `target` with missing entries at their lower limit.
fn full_joints(scene: &Scene, target: InstanceId) -> BTreeMap<String, f64> {
    let inst = scene.instance(target).expect("target exists");
    scene
        .model_of(inst)
        .joints
        .iter()
        .map(|j| {
            let v = inst.joint_state.get(&j.joint_id).copied().unwrap_or(j.limits[0]);
            (j.joint_id.clone(), v)
        })
        .collect()
}

fn eye_is_free(scene: &Scene, posed: &PosedScene, eye: &Point3<f64>) -> bool {
    (EYE_MIN_Z..=EYE_MAX_Z).contains(&eye.z)
        && point_in_polygon(&scene.floor_polygon, eye.x, eye.y)
        && posed.point_is_clear(eye, CAMERA_CLEARANCE)
}

struct Planned {
    target: InstanceId,
    occluder: Option<InstanceId>,
    scene: Scene,
    frames: Vec<FramePlan>,
}

struct Planner<'a> {
    axis: Axis,
    scene: &'a Scene,
    posed: PosedScene,
    grid: OccupancyGrid,
    cfg: &'a AxisConfig,
    k: CameraIntrinsics,
    rng: ChaCha8Rng,
}

/// Plans one clip on `scene`; all choices are drawn from `seed`.
pub fn plan_clip(axis: Axis, scene: &Scene, clip_id: &str, cfg: &AxisConfig, seed: u64) -> Result<ClipPlan, AxisError> {
    cfg.validate()?;
    let posed = PosedScene::new(scene);
    let grid = OccupancyGrid::build_posed(scene, &posed, GRID_CELL).map_err(|e| unsat(axis, e.to_string()))?;
    let mut p = Planner {
        axis,
        scene,
        posed,
        grid,
        cfg,
        k: cfg.intrinsics(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let planned = match axis {
        Axis::Articulation => p.articulation(),
        Axis::Lighting => p.lighting(),
        Axis::Visibility => p.visibility(),
        Axis::Zoom => p.zoom(),
        Axis::Pitch => p.pitch(),
    }?;
    Ok(ClipPlan {
        clip_id: clip_id.to_string(),
        axis,
        target: planned.target,
        occluder: planned.occluder,
        scene: planned.scene,
        frames: planned.frames,
    })
}

impl Planner<'_> {
    fn targets(&mut self, keep: impl Fn(&PosedInstance) -> bool) -> Vec<InstanceId> {
        let mut ids: Vec<InstanceId> = self
            .posed
            .instances
            .iter()
            .filter(|p| !p.structural && keep(p))
            .map(|p| p.instance_id)
            .collect();
        ids.shuffle(&mut self.rng);
        ids.truncate(MAX_TARGETS);
        ids
    }

    fn constraints(&self, dist_range: [f64; 2]) -> CameraConstraints {
        CameraConstraints {
            dist_range,
            pitch_range: self.cfg.camera_pitch_deg.map(f64::to_radians),
            require_unoccluded: true,
            intrinsics: self.k,
            cell_size: GRID_CELL,
            max_height: EYE_MAX_Z,
        }
    }

    fn camera_in(
        &mut self,
        scene: &Scene,
        posed: &PosedScene,
        grid: &OccupancyGrid,
        target: InstanceId,
        dist_range: [f64; 2],
    ) -> Option<CameraSample> {
        let sc = SampleConfig {
            max_attempts: CAMERA_ATTEMPTS,
            seed: self.rng.random(),
            ..SampleConfig::default()
        };
        sample_camera_in(scene, posed, grid, target, &sc, &self.constraints(dist_range)).ok()
    }

    fn camera(&mut self, target: InstanceId, dist_range: [f64; 2]) -> Option<CameraSample> {
        let sc = SampleConfig {
            max_attempts: CAMERA_ATTEMPTS,
            seed: self.rng.random(),
            ..SampleConfig::default()
        };
        let cons = self.constraints(dist_range);
        sample_camera_in(self.scene, &self.posed, &self.grid, target, &sc, &cons).ok()
    }

    fn fixed_frame(&self, scene: &Scene, target: InstanceId, i: u32, pose: Pose, k: CameraIntrinsics, light: f64) -> FramePlan {
        FramePlan {
            intensity: self.cfg.intensity(i),
            pose,
            intrinsics: k,
            light_scale: light,
            joints: full_joints(scene, target),
            visibility: None,
        }
    }

    fn full_light(&self) -> f64 {
        self.cfg.light_range[1]
    }

    fn articulation(&mut self) -> Result<Planned, AxisError> {
        let ids = self.targets(|p| p.model.is_articulated());
        if ids.is_empty() {
            return Err(AxisError::NoArticulatedObject);
        }
        for t in ids {
            let Some(open) = (0..4).find_map(|_| sample_joint_state(self.scene, t, 1.0, self.rng.random()).ok()) else {
                continue;
            };
            let model = self.posed.get(t).expect("target posed").model.clone();
            let open_state = &open.instance(t).expect("target").joint_state;
            let chosen: Vec<bool> = model
                .joints
                .iter()
                .map(|j| open_state.get(&j.joint_id).is_some_and(|&v| v != j.limits[0]))
                .collect();
            let mut base = self.scene.clone();
            base.instance_mut(t).expect("target").joint_state =
                model.joints.iter().map(|j| (j.joint_id.clone(), j.limits[0])).collect();
            // the camera has to be clear of the fully open links
            let posed_open = PosedScene::new(&open);
            let Ok(grid_open) = OccupancyGrid::build_posed(&open, &posed_open, GRID_CELL) else {
                continue;
            };
            let Some(cam) = self.camera_in(&open, &posed_open, &grid_open, t, self.cfg.camera_distance) else {
                continue;
            };
            let frames = (0..self.cfg.n_frames)
                .map(|i| {
                    let s = self.cfg.intensity(i);
                    let joints = model
                        .joints
                        .iter()
                        .zip(&chosen)
                        .map(|(j, &c)| (j.joint_id.clone(), if c { j.value_at(s) } else { j.limits[0] }))
                        .collect();
                    FramePlan {
                        intensity: s,
                        pose: cam.pose,
                        intrinsics: self.k,
                        light_scale: self.full_light(),
                        joints,
                        visibility: None,
                    }
                })
                .collect();
            return Ok(Planned {
                target: t,
                occluder: None,
                scene: base,
                frames,
            });
        }
        Err(unsat(self.axis, "no articulated target admits a free sweep and a clear camera"))
    }

    fn lighting(&mut self) -> Result<Planned, AxisError> {
        let ids = self.targets(|_| true);
        if ids.is_empty() {
            return Err(AxisError::NoTarget(self.axis));
        }
        let [l0, l1] = self.cfg.light_range;
        for t in ids {
            let Some(cam) = self.camera(t, self.cfg.camera_distance) else { continue };
            let frames = (0..self.cfg.n_frames)
                .map(|i| {
                    let s = self.cfg.intensity(i);
                    let light = (1.0 - s) * l0 + s * l1;
                    self.fixed_frame(self.scene, t, i, cam.pose, self.k, light)
                })
                .collect();
            return Ok(Planned {
                target: t,
                occluder: None,
                scene: self.scene.clone(),
                frames,
            });
        }
        Err(unsat(self.axis, "no target has a clear camera"))
    }

    /// Normalized image-plane extents `[xmin, xmax, ymin, ymax]` of the
    /// target, `None` if any vertex is behind the camera.
    fn plane_extents(&self, target: InstanceId, pose: &Pose) -> Option<[f64; 4]> {
        let inv = pose.inverse();
        let p = self.posed.get(target)?;
        let mut e = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for v in p.hulls.iter().flat_map(|(_, h)| h.vertices.iter()) {
            let c = inv.transform_point(v);
            if c.z > -1e-6 {
                return None;
            }
            let (x, y) = (c.x / -c.z, c.y / -c.z);
            e = [e[0].min(x), e[1].max(x), e[2].min(y), e[3].max(y)];
        }
        Some(e)
    }

    fn zoom_endpoints(&self, target: InstanceId, pose: &Pose) -> Option<(f64, f64)> {
        let (w, h) = (self.k.width as f64, self.k.height as f64);
        let (fx_in, fx_out) = match self.cfg.zoom {
            ZoomRange::Fixed([a, b]) => (a, b),
            ZoomRange::Fit => {
                let [x0, x1, y0, y1] = self.plane_extents(target, pose)?;
                // half-extents on the short side of the optical axis
                let (hx, hy) = (x1.min(-x0), y1.min(-y0));
                if hx <= 1e-6 || hy <= 1e-6 {
                    return None;
                }
                let fill_x = ZOOM_FILL * w / 2.0 / hx;
                let fill_y = ZOOM_FILL * h / 2.0 / hy;
                // a pixel of slack for rasterization
                let fx_in = fill_x.min(fill_y) * 1.02;
                let fx_out = ZOOM_SMALL * w / (x1 - x0);
                (fx_in, fx_out)
            }
        };
        let min_fx = w / 2.0 / (MAX_ZOOM_FOV_DEG.to_radians() / 2.0).tan();
        (fx_in > fx_out && fx_out >= min_fx).then_some((fx_in, fx_out))
    }

    fn zoom(&mut self) -> Result<Planned, AxisError> {
        let ids = self.targets(|_| true);
        if ids.is_empty() {
            return Err(AxisError::NoTarget(self.axis));
        }
        for t in ids {
            let Some(cam) = self.camera(t, self.cfg.camera_distance) else { continue };
            let Some((fx_in, fx_out)) = self.zoom_endpoints(t, &cam.pose) else {
                continue;
            };
            let frames = (0..self.cfg.n_frames)
                .map(|i| {
                    let s = self.cfg.intensity(i);
                    let fx = (1.0 - s) * fx_in + s * fx_out;
                    self.fixed_frame(self.scene, t, i, cam.pose, self.k.with_fx(fx), self.full_light())
                })
                .collect();
            return Ok(Planned {
                target: t,
                occluder: None,
                scene: self.scene.clone(),
                frames,
            });
        }
        Err(unsat(self.axis, "no target has a clear camera with usable zoom endpoints"))
    }

    /// Distance band in which the whole pitch sweep keeps the eye between
    /// the floor and the ceiling margin.
    fn pitch_distance_band(&self, p: &PosedInstance) -> [f64; 2] {
        let [lo, hi] = self.cfg.pitch_range_deg.map(f64::to_radians);
        let cz = p.obb().center.z;
        let mut d_hi = f64::INFINITY;
        if hi > 0.0 {
            d_hi = d_hi.min((cz - EYE_MIN_Z) / hi.sin());
        }
        if lo < 0.0 {
            d_hi = d_hi.min((EYE_MAX_Z - cz) / -lo.sin());
        }
        let diam = p.aabb.diagonal();
        let d_lo = (0.6 * diam).max(0.3);
        [d_lo, d_hi.min(self.cfg.camera_distance[1] * diam)]
    }

    fn pitch(&mut self) -> Result<Planned, AxisError> {
        let bands: BTreeMap<InstanceId, [f64; 2]> = self
            .posed
            .instances
            .iter()
            .map(|p| (p.instance_id, self.pitch_distance_band(p)))
            .collect();
        let ids = self.targets(|p| {
            let [a, b] = bands[&p.instance_id];
            a < b
        });
        if ids.is_empty() {
            return Err(AxisError::NoTarget(self.axis));
        }
        let [lo, hi] = self.cfg.pitch_range_deg.map(f64::to_radians);
        let n = self.cfg.n_frames;
        for t in ids {
            let [d_lo, d_hi] = bands[&t];
            let c = self.posed.get(t).expect("target").obb().center;
            for _ in 0..PITCH_ATTEMPTS {
                let yaw: f64 = self.rng.random_range(0.0..std::f64::consts::TAU);
                let d: f64 = self.rng.random_range(d_lo..d_hi);
                let pitch_at = |i: u32| {
                    let s = self.cfg.intensity(i);
                    (1.0 - s) * hi + s * lo
                };
                let eye_at = |i: u32| c - dir(yaw, pitch_at(i)) * d;
                if !(0..n).all(|i| eye_is_free(self.scene, &self.posed, &eye_at(i))) {
                    continue;
                }
                let mid = look_at(eye_at(n / 2), c);
                let seen = visibility_alone(&self.posed, t, &mid, &self.k).unwrap_or(0.0);
                if seen < self.cfg.min_visibility {
                    continue;
                }
                let frames = (0..n)
                    .map(|i| self.fixed_frame(self.scene, t, i, look_at(eye_at(i), c), self.k, self.full_light()))
                    .collect();
                return Ok(Planned {
                    target: t,
                    occluder: None,
                    scene: self.scene.clone(),
                    frames,
                });
            }
        }
        Err(unsat(self.axis, "no target admits a free pitch sweep"))
    }

    fn visibility(&mut self) -> Result<Planned, AxisError> {
        let ids = self.targets(|p| {
            let e = p.aabb.extents();
            e.x.max(e.y) <= 1.0 && e.z <= 1.2
        });
        if ids.is_empty() {
            return Err(AxisError::NoTarget(self.axis));
        }
        let mut occluders = self.cfg.occluders.clone();
        for t in ids {
            let diam = self.posed.get(t).expect("target").aabb.diagonal();
            let dr = self.cfg.orbit_distance.map(|d| d / diam);
            let Some(cam) = self.camera(t, dr) else {
                continue;
            };
            occluders.shuffle(&mut self.rng);
            for model in &occluders {
                let sc = SampleConfig {
                    max_attempts: OCCLUDER_ATTEMPTS,
                    seed: self.rng.random(),
                    ..SampleConfig::default()
                };
                let Ok((scene, occ)) = place_occluder_between(self.scene, t, &cam.pose, &self.k, model, &sc) else {
                    continue;
                };
                if let Some(frames) = self.orbit(&scene, t, occ, &cam) {
                    return Ok(Planned {
                        target: t,
                        occluder: Some(occ),
                        scene,
                        frames,
                    });
                }
            }
        }
        Err(unsat(self.axis, "no occluded view opens up along a free orbit"))
    }

    /// Orbits the camera about the target at constant distance and pitch,
    /// from the occluded start to the nearest fully visible yaw offset, then
    /// orders frames by measured visibility.
    fn orbit(&self, scene: &Scene, target: InstanceId, occ: InstanceId, cam: &CameraSample) -> Option<Vec<FramePlan>> {
        let posed = PosedScene::new(scene);
        let c = posed.get(target)?.obb().center;
        let eye0 = Point3::from(cam.pose.translation);
        let d = (c - eye0).norm();
        let v = (c - eye0) / d;
        let (yaw0, pitch0) = (v.y.atan2(v.x), v.z.clamp(-1.0, 1.0).asin());
        let eye_at = |phi: f64| c - dir(yaw0 + phi, pitch0) * d;
        let ratio_at = |phi: f64| visibility_ratio(&posed, target, &[occ], &look_at(eye_at(phi), c), &self.k).unwrap_or(0.0);
        let step = ORBIT_STEP_DEG.to_radians();
        let max_steps = (ORBIT_MAX_DEG / ORBIT_STEP_DEG) as u32;
        let mut end: Option<f64> = None;
        for sign in [1.0, -1.0] {
            for s in 1..=max_steps {
                let phi = sign * s as f64 * step;
                if end.is_some_and(|e| e.abs() <= phi.abs()) || !eye_is_free(scene, &posed, &eye_at(phi)) {
                    break;
                }
                if ratio_at(phi) >= FULLY_VISIBLE {
                    end = Some(phi);
                    break;
                }
            }
        }
        let end = end?;
        let n = self.cfg.n_frames;
        let mut frames: Vec<FramePlan> = (0..n)
            .map(|i| {
                let s = self.cfg.intensity(i);
                let phi = s * end;
                let ratio = ratio_at(phi);
                FramePlan {
                    intensity: ratio,
                    pose: look_at(eye_at(phi), c),
                    intrinsics: self.k,
                    light_scale: self.full_light(),
                    joints: full_joints(scene, target),
                    visibility: Some(ratio),
                }
            })
            .collect();
        if frames.iter().any(|f| !eye_is_free(scene, &posed, &Point3::from(f.pose.translation))) {
            return None;
        }
        frames.sort_by(|a, b| a.intensity.total_cmp(&b.intensity));
        let (first, last) = (frames[0].intensity, frames[frames.len() - 1].intensity);
        (first <= OCCLUDED_MAX && last >= FULLY_VISIBLE).then_some(frames)
    }
}
