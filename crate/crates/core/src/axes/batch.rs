//! Rendering planned clips and whole-axis batches.
//!
//! Slots of a batch are independent: slot `j` draws its scenes from stream
//! `j` of a ChaCha generator keyed by the batch seed, so any slot can be
//! regenerated alone. Pixels are traced in parallel inside each frame.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{plan_clip, Axis, AxisConfig, AxisError, Clip, ClipFrame, ClipPlan};
use crate::geometry::{Pose, PosedScene};
use crate::labels::{
    frame_record, frame_scene_graph, write_manifest, ClipLabels, ClipWriter, Evaluator, LabelError, Manifest, ManifestEntry,
    PredicateKind, SceneGraphLabel,
};
use crate::render::{assemble, projected_window, shade, trace, trace_window, CameraIntrinsics, FrameLabels, GeometryPass};
use crate::sampler::{sample_placement, SampleConfig};
use crate::scene::{randomize_scene, save_scene, templates, InstanceId, ModelLibrary, Scene};

/// Small objects scattered by [`random_scene`].
const EXTRA_MODELS: [&str; 6] = ["cup_tall", "cup_mug", "bowl_small", "bowl_large", "book_paperback", "book_hardcover"];
const EXTRA_SUPPORTS: [&str; 2] = ["table", "cabinet"];

/// Receives rendered clips one frame at a time.
pub trait ClipSink {
    fn begin(&mut self, plan: &ClipPlan, header: &ClipLabels) -> Result<(), AxisError>;
    fn frame(&mut self, plan: &ClipPlan, frame: ClipFrame) -> Result<(), AxisError>;
    /// Closes the clip; `accepted` is false when the batch filter dropped it.
    fn end(&mut self, plan: &ClipPlan, accepted: bool) -> Result<(), AxisError>;
}

/// Keeps accepted clips in memory.
#[derive(Default)]
pub struct MemorySink {
    pub clips: Vec<Clip>,
    current: Vec<ClipFrame>,
}

impl ClipSink for MemorySink {
    fn begin(&mut self, _: &ClipPlan, _: &ClipLabels) -> Result<(), AxisError> {
        self.current.clear();
        Ok(())
    }

    fn frame(&mut self, _: &ClipPlan, frame: ClipFrame) -> Result<(), AxisError> {
        self.current.push(frame);
        Ok(())
    }

    fn end(&mut self, plan: &ClipPlan, accepted: bool) -> Result<(), AxisError> {
        let frames = std::mem::take(&mut self.current);
        if accepted {
            self.clips.push(Clip {
                clip_id: plan.clip_id.clone(),
                axis: plan.axis,
                target: plan.target,
                occluder: plan.occluder,
                scene: plan.scene.clone(),
                frames,
            });
        }
        Ok(())
    }
}

/// Streams clips into the on-disk layout under `root`; dropped clips are
/// deleted again.
pub struct DiskSink {
    root: PathBuf,
    writer: Option<ClipWriter>,
}

impl DiskSink {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            writer: None,
        }
    }
}

impl ClipSink for DiskSink {
    fn begin(&mut self, plan: &ClipPlan, header: &ClipLabels) -> Result<(), AxisError> {
        let w = ClipWriter::create(&self.root, header.clone())?;
        save_scene(&plan.scene, &w.dir().join("scene.json"))?;
        self.writer = Some(w);
        Ok(())
    }

    fn frame(&mut self, _: &ClipPlan, frame: ClipFrame) -> Result<(), AxisError> {
        let w = self.writer.as_mut().expect("frame outside a clip");
        w.push(&frame.labels, frame.record)?;
        Ok(())
    }

    fn end(&mut self, _: &ClipPlan, accepted: bool) -> Result<(), AxisError> {
        let w = self.writer.take().expect("end outside a clip");
        if accepted {
            w.finish()?;
        } else {
            let dir = w.dir().to_path_buf();
            fs::remove_dir_all(&dir).map_err(|source| LabelError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }
}

/// `labels.json` header of a planned clip, without frames.
pub fn clip_header(plan: &ClipPlan) -> ClipLabels {
    let k = plan.frames.first().map(|f| f.intrinsics);
    ClipLabels {
        clip_id: plan.clip_id.clone(),
        axis: Some(plan.axis.to_string()),
        target: Some(plan.target),
        occluder: plan.occluder,
        scene_id: plan.scene.scene_id.clone(),
        scene_seed: plan.scene.seed,
        width: k.map_or(0, |k| k.width),
        height: k.map_or(0, |k| k.height),
        categories: plan
            .scene
            .instances
            .iter()
            .map(|i| (i.instance_id, i.category.clone()))
            .collect(),
        frames: Vec::new(),
    }
}

/// The target by itself, for counting the pixels it covers when nothing
/// is in front of it.
fn solo_scene(scene: &Scene, target: InstanceId) -> PosedScene {
    let mut s = scene.clone();
    s.instances.retain(|i| i.instance_id == target);
    PosedScene::new(&s)
}

/// Target pixels in `labels` over the pixels of the target rendered alone;
/// the quantity [`crate::render::visibility_alone`] measures.
fn alone_ratio(solo: &PosedScene, target: InstanceId, labels: &FrameLabels, pose: &Pose, k: &CameraIntrinsics) -> f64 {
    let Some(win) = projected_window(solo, 0, pose, k) else { return 0.0 };
    let alone = trace_window(solo, pose, k, None, win).iter().filter(|&&i| i == 0).count();
    if alone == 0 {
        0.0
    } else {
        (labels.pixel_count(target) as f64 / alone as f64).min(1.0)
    }
}

/// Renders every planned frame in order and hands it to `emit`. Returns the
/// largest target visibility over the clip.
pub fn render_plan(plan: &ClipPlan, mut emit: impl FnMut(ClipFrame) -> Result<(), AxisError>) -> Result<f64, AxisError> {
    let articulated = plan.axis == Axis::Articulation;
    let mut scene = plan.scene.clone();
    let mut posed = PosedScene::new(&scene);
    let mut solo = solo_scene(&scene, plan.target);
    // lighting frames share one camera and one geometry pass
    let shared: Option<GeometryPass> = match (plan.axis, plan.frames.first()) {
        (Axis::Lighting, Some(f0)) => Some(trace(&posed, &f0.pose, &f0.intrinsics, None)),
        _ => None,
    };
    let mut shared_vis: Option<f64> = None;
    let mut graphs: HashMap<Vec<InstanceId>, SceneGraphLabel> = HashMap::new();
    let mut max_vis = 0.0f64;
    for (i, f) in plan.frames.iter().enumerate() {
        if articulated {
            scene.instance_mut(plan.target).expect("target in scene").joint_state = f.joints.clone();
            posed = PosedScene::new(&scene);
            solo = solo_scene(&scene, plan.target);
            graphs.clear();
        }
        let owned;
        let pass = match &shared {
            Some(p) => p,
            None => {
                owned = trace(&posed, &f.pose, &f.intrinsics, None);
                &owned
            }
        };
        let labels = assemble(&posed, pass, shade(pass, &scene.lights, f.light_scale));
        let vis = match (f.visibility, shared_vis) {
            (Some(v), _) | (None, Some(v)) => v,
            (None, None) => alone_ratio(&solo, plan.target, &labels, &f.pose, &f.intrinsics),
        };
        if shared.is_some() {
            shared_vis = Some(vis);
        }
        max_vis = max_vis.max(vis);
        let key: Vec<InstanceId> = labels.boxes2d.keys().copied().collect();
        let graph = match graphs.get(&key) {
            Some(g) => g.clone(),
            None => {
                let g = frame_scene_graph(&Evaluator::new(&scene, &posed), &labels, false);
                graphs.insert(key, g.clone());
                g
            }
        };
        let mut record = frame_record(i as u32, f.intensity, &f.pose, &f.intrinsics, &labels, Some(vis), f.light_scale, graph);
        record.target_joints = f.joints.clone();
        emit(ClipFrame { labels, record })?;
    }
    Ok(max_vis)
}

/// A template drawn by `scene_seed`, with its objects swapped for random
/// variants and a few small objects placed on supports.
pub fn random_scene(library: &Arc<ModelLibrary>, cfg: &AxisConfig, scene_seed: u64) -> Result<Scene, AxisError> {
    let name = &cfg.templates[(scene_seed % cfg.templates.len() as u64) as usize];
    let base = templates::template(name, library.clone())
        .ok_or_else(|| AxisError::InvalidConfig(format!("unknown template `{name}`")))?;
    let mut scene = randomize_scene(&base, scene_seed)?;
    scene.seed = scene_seed;
    let mut rng = ChaCha8Rng::seed_from_u64(scene_seed);
    let supports: Vec<InstanceId> = scene
        .instances
        .iter()
        .filter(|i| EXTRA_SUPPORTS.contains(&i.category.as_str()))
        .map(|i| i.instance_id)
        .collect();
    for _ in 0..cfg.extra_objects {
        let (Some(&base), Some(model)) = (supports.choose(&mut rng), EXTRA_MODELS.choose(&mut rng)) else {
            break;
        };
        let sc = SampleConfig {
            max_attempts: 40,
            seed: rng.random(),
            ..SampleConfig::default()
        };
        if let Ok((s, _)) = sample_placement(&scene, model, PredicateKind::OnTop, base, &sc) {
            scene = s;
        }
    }
    Ok(scene)
}

/// Why the batch drops a rendered clip whose target peaks at
/// `max_visibility`, or `None` to keep it. Visibility clips are never
/// dropped, since hiding the target is their point.
pub fn rejection_reason(axis: Axis, max_visibility: f64, cfg: &AxisConfig) -> Option<String> {
    (axis != Axis::Visibility && max_visibility < cfg.min_visibility)
        .then(|| format!("target visibility peaks at {max_visibility:.3}, below {}", cfg.min_visibility))
}

/// Plans and renders `n_clips` slots into `sink`. A slot whose scene draws
/// all fail to plan, or whose target never reaches `cfg.min_visibility`
/// (except on the visibility axis), is listed under `rejected`.
pub fn stream_axis_batch(
    library: &Arc<ModelLibrary>,
    axis: Axis,
    n_clips: u32,
    cfg: &AxisConfig,
    sink: &mut dyn ClipSink,
    mut on_entry: impl FnMut(&ManifestEntry),
) -> Result<Manifest, AxisError> {
    cfg.validate()?;
    if n_clips == 0 {
        return Err(AxisError::InvalidConfig("n_clips must be at least 1".into()));
    }
    let mut manifest = Manifest {
        axis: axis.to_string(),
        clips: Vec::new(),
        rejected: Vec::new(),
    };
    for j in 0..n_clips {
        let clip_id = format!("{axis}_{j:04}");
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(j as u64);
        let mut planned = None;
        let mut last_err = String::new();
        let mut seed = 0;
        for _ in 0..cfg.max_scene_attempts {
            seed = rng.next_u64();
            let scene = random_scene(library, cfg, seed)?;
            match plan_clip(axis, &scene, &clip_id, cfg, seed) {
                Ok(p) => {
                    planned = Some(p);
                    break;
                }
                Err(e) if e.is_retryable() => last_err = e.to_string(),
                Err(e) => return Err(e),
            }
        }
        let entry = match planned {
            None => ManifestEntry {
                clip_id,
                scene_seed: seed,
                target: None,
                n_frames: 0,
                rejected: true,
                reason: Some(format!("no clip after {} scenes: {last_err}", cfg.max_scene_attempts)),
            },
            Some(plan) => {
                sink.begin(&plan, &clip_header(&plan))?;
                let max_vis = render_plan(&plan, |f| sink.frame(&plan, f))?;
                let reason = rejection_reason(axis, max_vis, cfg);
                sink.end(&plan, reason.is_none())?;
                ManifestEntry {
                    clip_id,
                    scene_seed: seed,
                    target: Some(plan.target),
                    n_frames: plan.frames.len() as u32,
                    rejected: reason.is_some(),
                    reason,
                }
            }
        };
        on_entry(&entry);
        if entry.rejected {
            manifest.rejected.push(entry);
        } else {
            manifest.clips.push(entry);
        }
    }
    Ok(manifest)
}

/// In-memory batch; meant for short clips, since every frame is kept.
pub fn gen_axis_batch(
    library: &Arc<ModelLibrary>,
    axis: Axis,
    n_clips: u32,
    cfg: &AxisConfig,
) -> Result<(Vec<Clip>, Manifest), AxisError> {
    let mut sink = MemorySink::default();
    let manifest = stream_axis_batch(library, axis, n_clips, cfg, &mut sink, |_| {})?;
    Ok((sink.clips, manifest))
}

/// Streams a batch to `root` and writes `root/manifest.json`.
pub fn write_axis_batch(
    library: &Arc<ModelLibrary>,
    axis: Axis,
    n_clips: u32,
    cfg: &AxisConfig,
    root: &Path,
    on_entry: impl FnMut(&ManifestEntry),
) -> Result<Manifest, AxisError> {
    let mut sink = DiskSink::new(root);
    let manifest = stream_axis_batch(library, axis, n_clips, cfg, &mut sink, on_entry)?;
    write_manifest(root, &manifest)?;
    Ok(manifest)
}
