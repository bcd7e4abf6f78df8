//! Single-factor clips along the five evaluation axes.
//!
//! Every clip follows one target through `n_frames` frames in which exactly
//! one quantity moves: the target's joints, the light multiplier, the camera
//! orbit around an occluder, the focal length, or the camera pitch. A clip is
//! first planned ([`plan_clip`]) as a list of per-frame camera and scene
//! settings, then rendered frame by frame into a [`ClipSink`], so long clips
//! never sit in memory unless the caller collects them.

mod batch;
mod plan;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;
use crate::labels::{FrameRecord, LabelError};
use crate::render::{CameraIntrinsics, FrameLabels};
use crate::sampler::SampleError;
use crate::scene::{InstanceId, Scene, SceneError};

pub use batch::{
    clip_header, gen_axis_batch, random_scene, rejection_reason, render_plan, stream_axis_batch, write_axis_batch, ClipSink, DiskSink,
    MemorySink,
};
pub use plan::{plan_clip, CAMERA_CLEARANCE, FULLY_VISIBLE, ORBIT_STEP_DEG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Articulation,
    Lighting,
    Visibility,
    Zoom,
    Pitch,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::Articulation, Axis::Lighting, Axis::Visibility, Axis::Zoom, Axis::Pitch];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Articulation => "articulation",
            Axis::Lighting => "lighting",
            Axis::Visibility => "visibility",
            Axis::Zoom => "zoom",
            Axis::Pitch => "pitch",
        }
    }

    /// Clip count of the published benchmark for this axis.
    pub fn paper_scale_clips(self) -> u32 {
        match self {
            Axis::Articulation => 237,
            Axis::Lighting => 441,
            Axis::Visibility => 211,
            Axis::Zoom => 215,
            Axis::Pitch => 268,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = AxisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| AxisError::InvalidConfig(format!("unknown axis `{s}`")))
    }
}

#[derive(Debug, Error)]
pub enum AxisError {
    #[error("scene has no articulated object")]
    NoArticulatedObject,
    #[error("no eligible target for the {0} axis")]
    NoTarget(Axis),
    #[error("could not build a {axis} clip: {reason}")]
    Unsatisfiable { axis: Axis, reason: String },
    #[error("invalid axis config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Label(#[from] LabelError),
}

impl AxisError {
    /// Failures that a different scene draw may avoid.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            AxisError::NoArticulatedObject | AxisError::NoTarget(_) | AxisError::Unsatisfiable { .. } | AxisError::Sample(_)
        )
    }
}

/// Focal length endpoints of zoom clips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoomRange {
    /// Per clip: the target spans [`ZOOM_FILL`] of the image at intensity 0
    /// and [`ZOOM_SMALL`] of its width at intensity 1.
    Fit,
    /// `[fx_in, fx_out]` in pixels.
    Fixed([f64; 2]),
}

/// Fraction of the image the target box spans at the zoomed-in end.
pub const ZOOM_FILL: f64 = 0.8;
/// Target box width over image width at the zoomed-out end.
pub const ZOOM_SMALL: f64 = 0.04;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AxisConfig {
    pub n_frames: u32,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view of the fixed-focal axes, degrees.
    pub hfov_deg: f64,
    /// Pitch axis range in degrees, positive looks up. Intensity 0 sits at
    /// the upper end.
    pub pitch_range_deg: [f64; 2],
    pub zoom: ZoomRange,
    pub light_range: [f64; 2],
    /// Camera distance for the fixed-camera axes, in target box diagonals.
    pub camera_distance: [f64; 2],
    /// Pitch of the initial camera, degrees.
    pub camera_pitch_deg: [f64; 2],
    /// Camera to target distance of the visibility orbit, meters.
    pub orbit_distance: [f64; 2],
    /// Occluder models tried by the visibility axis.
    pub occluders: Vec<String>,
    /// Non-visibility clips whose target never reaches this visibility are
    /// dropped from a batch.
    pub min_visibility: f64,
    /// Scene templates drawn from by batches.
    pub templates: Vec<String>,
    /// Scene draws per batch slot before the slot is given up.
    pub max_scene_attempts: u32,
    /// Small objects dropped onto tables and cabinets per randomized scene.
    pub extra_objects: u32,
}

impl Default for AxisConfig {
    fn default() -> Self {
        Self {
            n_frames: 300,
            seed: 0,
            width: 640,
            height: 480,
            hfov_deg: 60.0,
            pitch_range_deg: [-45.0, 45.0],
            zoom: ZoomRange::Fit,
            light_range: [0.0, 1.0],
            camera_distance: [1.2, 2.5],
            camera_pitch_deg: [-35.0, -5.0],
            orbit_distance: [1.8, 3.0],
            occluders: ["wardrobe_120", "wardrobe_100", "fridge_double", "fridge_single", "cabinet_drawers_2"]
                .map(String::from)
                .to_vec(),
            min_visibility: 0.5,
            templates: crate::scene::templates::TEMPLATES.map(String::from).to_vec(),
            max_scene_attempts: 8,
            extra_objects: 2,
        }
    }
}

impl AxisConfig {
    /// 300-frame clips; pair with [`Axis::paper_scale_clips`].
    pub fn paper_scale(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics::from_hfov(self.width, self.height, self.hfov_deg.to_radians())
    }

    /// Intensity of frame `i`, exactly `i / (n - 1)`.
    pub fn intensity(&self, i: u32) -> f64 {
        i as f64 / (self.n_frames - 1) as f64
    }

    pub fn validate(&self) -> Result<(), AxisError> {
        let bad = |m: &str| Err(AxisError::InvalidConfig(m.to_string()));
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if self.n_frames < 2 {
            return bad("n_frames must be at least 2");
        }
        if !self.intrinsics().is_valid() {
            return bad("image size or field of view out of range");
        }
        let [p0, p1] = self.pitch_range_deg;
        if !ordered(self.pitch_range_deg) || p0 < -89.0 || p1 > 89.0 {
            return bad("pitch_range_deg must be ordered within (-90, 90)");
        }
        if !ordered(self.light_range) || self.light_range[0] < 0.0 {
            return bad("light_range must be ordered and nonnegative");
        }
        if !ordered(self.camera_distance) || self.camera_distance[0] <= 0.0 {
            return bad("camera_distance must be ordered and positive");
        }
        if !ordered(self.camera_pitch_deg) {
            return bad("camera_pitch_deg must be ordered");
        }
        if !ordered(self.orbit_distance) || self.orbit_distance[0] <= 0.0 {
            return bad("orbit_distance must be ordered and positive");
        }
        if let ZoomRange::Fixed([a, b]) = self.zoom {
            if !(a > b && b > 0.0 && a.is_finite()) {
                return bad("fixed zoom needs fx_in > fx_out > 0");
            }
        }
        if !(0.0..=1.0).contains(&self.min_visibility) {
            return bad("min_visibility must be in [0, 1]");
        }
        if self.templates.is_empty() || self.occluders.is_empty() {
            return bad("templates and occluders must be nonempty");
        }
        if self.max_scene_attempts == 0 {
            return bad("max_scene_attempts must be positive");
        }
        Ok(())
    }
}

/// Settings of one frame before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub intensity: f64,
    pub pose: Pose,
    pub intrinsics: CameraIntrinsics,
    pub light_scale: f64,
    /// Every joint of the target.
    pub joints: BTreeMap<String, f64>,
    /// Occluder-relative visibility measured while planning; only the
    /// visibility axis sets it.
    pub visibility: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ClipPlan {
    pub clip_id: String,
    pub axis: Axis,
    pub target: InstanceId,
    pub occluder: Option<InstanceId>,
    /// Scene of frame 0; articulation frames override the target's joints.
    pub scene: Scene,
    pub frames: Vec<FramePlan>,
}

/// One rendered frame and its metadata.
#[derive(Debug, Clone)]
pub struct ClipFrame {
    pub labels: FrameLabels,
    pub record: FrameRecord,
}

/// A fully rendered clip held in memory.
#[derive(Debug, Clone)]
pub struct Clip {
    pub clip_id: String,
    pub axis: Axis,
    pub target: InstanceId,
    pub occluder: Option<InstanceId>,
    pub scene: Scene,
    pub frames: Vec<ClipFrame>,
}

impl Clip {
    pub fn intensities(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.record.intensity).collect()
    }

    /// The clip's `labels.json` contents.
    pub fn labels(&self) -> crate::labels::ClipLabels {
        let k = self.frames.first().map(|f| (f.labels.width, f.labels.height));
        crate::labels::ClipLabels {
            clip_id: self.clip_id.clone(),
            axis: Some(self.axis.to_string()),
            target: Some(self.target),
            occluder: self.occluder,
            scene_id: self.scene.scene_id.clone(),
            scene_seed: self.scene.seed,
            width: k.map_or(0, |k| k.0),
            height: k.map_or(0, |k| k.1),
            categories: self.scene.instances.iter().map(|i| (i.instance_id, i.category.clone())).collect(),
            frames: self.frames.iter().map(|f| f.record.clone()).collect(),
        }
    }

    /// Largest recorded target visibility.
    pub fn max_visibility(&self) -> f64 {
        self.frames
            .iter()
            .filter_map(|f| f.record.visibility_ratio)
            .fold(0.0, f64::max)
    }
}

/// Plans and renders an articulation clip from `cfg.seed`.
pub fn gen_articulation_clip(scene: &Scene, cfg: &AxisConfig) -> Result<Clip, AxisError> {
    gen_clip(Axis::Articulation, scene, cfg)
}

pub fn gen_lighting_clip(scene: &Scene, cfg: &AxisConfig) -> Result<Clip, AxisError> {
    gen_clip(Axis::Lighting, scene, cfg)
}

pub fn gen_visibility_clip(scene: &Scene, cfg: &AxisConfig) -> Result<Clip, AxisError> {
    gen_clip(Axis::Visibility, scene, cfg)
}

pub fn gen_zoom_clip(scene: &Scene, cfg: &AxisConfig) -> Result<Clip, AxisError> {
    gen_clip(Axis::Zoom, scene, cfg)
}

pub fn gen_pitch_clip(scene: &Scene, cfg: &AxisConfig) -> Result<Clip, AxisError> {
    gen_clip(Axis::Pitch, scene, cfg)
}

/// Plans and renders one clip without the batch visibility filter.
pub fn gen_clip(axis: Axis, scene: &Scene, cfg: &AxisConfig) -> Result<Clip, AxisError> {
    let plan = plan_clip(axis, scene, &format!("{axis}_{:016x}", cfg.seed), cfg, cfg.seed)?;
    let mut sink = MemorySink::default();
    sink.begin(&plan, &clip_header(&plan))?;
    render_plan(&plan, |f| sink.frame(&plan, f))?;
    sink.end(&plan, true)?;
    Ok(sink.clips.pop().expect("one clip"))
}
