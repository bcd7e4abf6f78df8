//! Scene, sampling, traversal and axis batch subcommands.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;
use synthscene_core::axes::{write_axis_batch, Axis, AxisConfig};
use synthscene_core::render::CameraIntrinsics;
use synthscene_core::sampler::{apply_request, PredicateRequest};
use synthscene_core::scene::{load_scene, randomize_scene, save_scene, templates, ModelLibrary, Scene};
use synthscene_core::trajectory::{plan_traversal, write_traversal_clip, CameraTrajectory, TraversalConfig};

use crate::config::Settings;
use crate::{read_text, require_path, FileError};

pub fn library() -> Arc<ModelLibrary> {
    Arc::new(ModelLibrary::builtin())
}

fn read_scene(path: &Path) -> Result<Scene> {
    require_path(path)?;
    load_scene(path, library()).map_err(|e| FileError::invalid(path, e).into())
}

#[derive(Args, Debug)]
pub struct SceneGenArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// One of the built-in templates.
    #[arg(long)]
    pub template: Option<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn scene_gen(a: SceneGenArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "scene_gen";
    let seed = s.pick(SEC, "seed", a.seed, 0u64)?;
    let name = s.pick(SEC, "template", a.template, templates::TEMPLATES[0].to_string())?;
    let out: PathBuf = s.require(SEC, "output", a.output)?;
    let Some(base) = templates::template(&name, library()) else {
        bail!("unknown template `{name}`; expected one of {}", templates::TEMPLATES.join(", "));
    };
    let mut scene = randomize_scene(&base, seed)?;
    scene.seed = seed;
    save_scene(&scene, &out)?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// JSON request `{kind, subject_category, base_instance?, value?, seed?}`.
    #[arg(long)]
    pub predicate: Option<PathBuf>,
    /// Overrides the request seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn sample(a: SampleArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "sample";
    let scene_path: PathBuf = s.require(SEC, "scene", a.scene)?;
    let req_path: PathBuf = s.require(SEC, "predicate", a.predicate)?;
    let out: PathBuf = s.require(SEC, "output", a.output)?;
    let scene = read_scene(&scene_path)?;
    let mut req: PredicateRequest =
        serde_json::from_str(&read_text(&req_path)?).map_err(|e| FileError::invalid(&req_path, e))?;
    if let Some(seed) = s.pick(SEC, "seed", a.seed.map(Some), None::<u64>)? {
        req.seed = seed;
    }
    let sampled = apply_request(&scene, &req)?;
    save_scene(&sampled.scene, &out)?;
    println!("{}", json!({"subject": sampled.subject}));
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Erosion radius of the keypoint region, meters.
    #[arg(long)]
    pub erosion: Option<f64>,
    /// Candidate keypoints drawn by farthest point sampling.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub camera_height: Option<f64>,
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn trajectory(a: TrajectoryArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "trajectory";
    let d = TraversalConfig::default();
    let scene_path: PathBuf = s.require(SEC, "scene", a.scene)?;
    let out: PathBuf = s.require(SEC, "output", a.output)?;
    let mut cfg = TraversalConfig {
        erosion: s.pick(SEC, "erosion", a.erosion, d.erosion)?,
        k: s.pick(SEC, "k", a.k, d.k)?,
        seed: s.pick(SEC, "seed", a.seed, d.seed)?,
        camera_height: s.pick(SEC, "camera_height", a.camera_height, d.camera_height)?,
        ..d
    };
    cfg.params.fps = s.pick(SEC, "fps", a.fps, d.params.fps)?;
    let (w, h) = (
        s.pick(SEC, "width", a.width, d.params.intrinsics.width)?,
        s.pick(SEC, "height", a.height, d.params.intrinsics.height)?,
    );
    cfg.params.intrinsics = CameraIntrinsics::from_hfov(w, h, 60f64.to_radians());
    if !cfg.params.intrinsics.is_valid() || !(cfg.params.fps > 0.0) || !(cfg.erosion >= 0.0) || cfg.k == 0 {
        bail!("invalid trajectory settings: need a positive image size, fps and k, and nonnegative erosion");
    }
    let scene = read_scene(&scene_path)?;
    let t = plan_traversal(&scene, &cfg)?;
    t.trajectory.save(&out)?;
    println!(
        "{}",
        json!({"waypoints": t.ordered.len(), "frames": t.trajectory.frames.len(), "candidates": t.candidates.len()})
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub traj: Option<PathBuf>,
    #[arg(long)]
    pub clip_id: Option<String>,
    /// Dataset root; the clip lands in `clips/<clip-id>`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn render(a: RenderArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "render";
    let scene_path: PathBuf = s.require(SEC, "scene", a.scene)?;
    let traj_path: PathBuf = s.require(SEC, "traj", a.traj)?;
    let out: PathBuf = s.require(SEC, "output", a.output)?;
    let clip_id = s.pick(SEC, "clip_id", a.clip_id, "traversal".to_string())?;
    let scene = read_scene(&scene_path)?;
    require_path(&traj_path)?;
    let traj = CameraTrajectory::load(&traj_path).map_err(|e| FileError::invalid(&traj_path, e))?;
    let labels = write_traversal_clip(&scene, &traj, &out, &clip_id)?;
    println!("{}", json!({"labels": labels.display().to_string(), "frames": traj.frames.len()}));
    Ok(())
}

#[derive(Args, Debug)]
pub struct AxisGenArgs {
    #[arg(long)]
    pub axis: Option<String>,
    /// Clips to attempt.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Published clip count for the axis and 300-frame clips, unless
    /// `--n` or `--frames` say otherwise.
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long)]
    pub frames: Option<u32>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Print the resolved plan and exit without rendering.
    #[arg(long)]
    pub dry_run: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Resolved clip count and configuration of an `axis gen` run.
pub fn axis_plan(a: &AxisGenArgs, s: &Settings) -> Result<(Axis, u32, AxisConfig)> {
    const SEC: &str = "axis_gen";
    let axis: Axis = s.require::<String>(SEC, "axis", a.axis.clone())?.parse()?;
    let paper = a.paper_scale || s.get(SEC, "paper_scale")?.unwrap_or(false);
    let mut cfg: AxisConfig = s.get(SEC, "axis_config")?.unwrap_or_default();
    if paper {
        cfg = AxisConfig {
            n_frames: AxisConfig::paper_scale(0).n_frames,
            ..cfg
        };
    }
    let default_n = if paper { axis.paper_scale_clips() } else { 20 };
    let n = s.pick(SEC, "n", a.n, default_n)?;
    cfg.seed = s.pick(SEC, "seed", a.seed, cfg.seed)?;
    cfg.n_frames = s.pick(SEC, "frames", a.frames, cfg.n_frames)?;
    cfg.width = s.pick(SEC, "width", a.width, cfg.width)?;
    cfg.height = s.pick(SEC, "height", a.height, cfg.height)?;
    cfg.validate()?;
    if n == 0 {
        bail!("--n must be at least 1");
    }
    Ok((axis, n, cfg))
}

pub fn axis_gen(a: AxisGenArgs, s: &Settings) -> Result<()> {
    let (axis, n, cfg) = axis_plan(&a, s)?;
    let plan = json!({
        "axis": axis, "n_clips": n, "n_frames": cfg.n_frames,
        "width": cfg.width, "height": cfg.height, "seed": cfg.seed,
    });
    if a.dry_run || s.get("axis_gen", "dry_run")?.unwrap_or(false) {
        println!("{plan}");
        return Ok(());
    }
    let out: PathBuf = s.require("axis_gen", "output", a.output)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = write_axis_batch(&library(), axis, n, &cfg, &out, |e| {
        let status = if e.rejected { "rejected" } else { "ok" };
        eprintln!("{} {status} ({} frames)", e.clip_id, e.n_frames);
    })?;
    println!(
        "{}",
        json!({"axis": axis, "accepted": manifest.clips.len(), "rejected": manifest.rejected.len(), "n_frames": cfg.n_frames})
    );
    Ok(())
}
