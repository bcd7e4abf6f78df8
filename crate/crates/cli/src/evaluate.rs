//! `eval` subcommands. Depth predictions mirror the dataset layout: the
//! prediction for frame `i` of clip `c` is `<pred>/clips/<c>/depth/<i>.dpth`
//! in the dataset's own depth format.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use synthscene_core::eval::{
    binned_axis_curve, curve_csv, eval_frames, eval_frames_with_masks, load_dataset, recon_metrics,
    target_only_ap_frames, ApProtocol, ApSummary, DatasetClip, DepthAccumulator, EvalFrame, EvalReport, IouKind,
    ReconMetrics, RECON_THRESHOLD,
};
use synthscene_core::labels::{clip_dir, raster_path, read_frame, read_predictions, Prediction};
use synthscene_core::render::{decode_dpth, unproject_depth};

use crate::config::Settings;
use crate::{require_path, FileError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Iou {
    Box,
    Mask,
}

impl From<Iou> for IouKind {
    fn from(i: Iou) -> Self {
        match i {
            Iou::Box => IouKind::Box,
            Iou::Mask => IouKind::Mask,
        }
    }
}

fn dataset(root: &Path) -> Result<Vec<DatasetClip>> {
    require_path(&root.join("manifest.json"))?;
    let clips = load_dataset(root)?;
    if clips.is_empty() {
        bail!("dataset {} has no accepted clips", root.display());
    }
    Ok(clips)
}

fn frames(clips: &[DatasetClip], kind: IouKind) -> Result<Vec<EvalFrame>> {
    let mut out = Vec::new();
    for c in clips {
        match kind {
            IouKind::Box => out.extend(eval_frames(&c.labels)),
            IouKind::Mask => out.extend(eval_frames_with_masks(&c.dir, &c.labels)?),
        }
    }
    Ok(out)
}

fn predictions(path: &Path) -> Result<Vec<Prediction>> {
    require_path(path)?;
    Ok(read_predictions(path)?)
}

fn protocol(s: &Settings, sec: &str) -> Result<ApProtocol> {
    let p: ApProtocol = s.get(sec, "protocol")?.unwrap_or_default();
    p.validate()?;
    Ok(p)
}

fn axis_name(clips: &[DatasetClip]) -> String {
    clips
        .iter()
        .find_map(|c| c.labels.axis.clone())
        .unwrap_or_else(|| "none".to_string())
}

#[derive(Args, Debug)]
pub struct ApArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// JSON lines of predictions.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// JSON report; a CSV with the same stem is written next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub iou: Option<Iou>,
    /// Intensity bins of the per-axis curve in the report.
    #[arg(long)]
    pub bins: Option<usize>,
}

pub fn ap(a: ApArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "eval_ap";
    let root: PathBuf = s.require(SEC, "dataset", a.dataset)?;
    let pred_path: PathBuf = s.require(SEC, "pred", a.pred)?;
    let report_path: PathBuf = s.require(SEC, "report", a.report)?;
    let kind: IouKind = s.pick(SEC, "iou", a.iou, Iou::Box)?.into();
    let bins = s.pick(SEC, "bins", a.bins, 10usize)?;
    let protocol = protocol(s, SEC)?;
    let clips = dataset(&root)?;
    let preds = predictions(&pred_path)?;
    let frames = frames(&clips, kind)?;
    let result = target_only_ap_frames(&frames, &preds, &protocol, kind)?;
    let curve = binned_axis_curve(&frames, &preds, &protocol, kind, bins)?;
    let report = EvalReport {
        ap: Some(ApSummary::new(kind, &result)),
        per_axis: BTreeMap::from([(axis_name(&clips), curve)]),
        ..Default::default()
    };
    report.write(&report_path)?;
    print!("{}", report.to_json());
    Ok(())
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum)]
    pub iou: Option<Iou>,
    /// CSV path; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn axis_curve(a: CurveArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "eval_axis_curve";
    let root: PathBuf = s.require(SEC, "dataset", a.dataset)?;
    let pred_path: PathBuf = s.require(SEC, "pred", a.pred)?;
    let kind: IouKind = s.pick(SEC, "iou", a.iou, Iou::Box)?.into();
    let bins = s.pick(SEC, "bins", a.bins, 10usize)?;
    let out: Option<PathBuf> = s.pick(SEC, "output", a.output.map(Some), None)?;
    let protocol = protocol(s, SEC)?;
    let clips = dataset(&root)?;
    let preds = predictions(&pred_path)?;
    let curve = binned_axis_curve(&frames(&clips, kind)?, &preds, &protocol, kind, bins)?;
    let csv = curve_csv(&curve);
    match out {
        Some(p) => synthscene_core::io::write_atomic(&p, csv.as_bytes())
            .map_err(|source| FileError::Read { path: p.display().to_string(), source })?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn read_depth(path: &Path) -> Result<(u32, u32, Vec<f32>)> {
    let bytes = std::fs::read(path).map_err(|source| FileError::Read {
        path: path.display().to_string(),
        source,
    })?;
    decode_dpth(&bytes).map_err(|e| FileError::invalid(path, e).into())
}

/// Predicted depth of one frame, checked against the frame size.
fn predicted_depth(pred_root: &Path, clip: &DatasetClip, index: u32) -> Result<Vec<f32>> {
    let p = raster_path(&clip_dir(pred_root, &clip.labels.clip_id), "depth", index);
    let (w, h, d) = read_depth(&p)?;
    if (w, h) != (clip.labels.width, clip.labels.height) {
        return Err(FileError::invalid(
            &p,
            format!("{w}x{h} depth for a {}x{} frame", clip.labels.width, clip.labels.height),
        )
        .into());
    }
    Ok(d)
}

#[derive(Args, Debug)]
pub struct DepthArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Root of predicted depth rasters in the dataset layout.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Score only the target's pixels.
    #[arg(long)]
    pub target_only: bool,
}

pub fn depth(a: DepthArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "eval_depth";
    let root: PathBuf = s.require(SEC, "dataset", a.dataset)?;
    let pred_root: PathBuf = s.require(SEC, "pred", a.pred)?;
    let report_path: PathBuf = s.require(SEC, "report", a.report)?;
    let target_only = a.target_only || s.get(SEC, "target_only")?.unwrap_or(false);
    let clips = dataset(&root)?;
    require_path(&pred_root)?;
    let mut acc = DepthAccumulator::default();
    for c in &clips {
        for r in &c.labels.frames {
            let gt = read_frame(&c.dir, r.index)?;
            let pred = predicted_depth(&pred_root, c, r.index)?;
            let mask: Option<Vec<bool>> = match (target_only, c.labels.target) {
                (false, _) => None,
                (true, Some(t)) => Some(gt.instance_seg.iter().map(|&v| v as u32 == t as u32).collect()),
                (true, None) => bail!("clip {} has no target for --target-only", c.labels.clip_id),
            };
            acc.add(&pred, &gt.depth, mask.as_deref())?;
        }
    }
    let report = EvalReport {
        depth: Some(acc.finish()?),
        ..Default::default()
    };
    report.write(&report_path)?;
    print!("{}", report.to_json());
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReconArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Completion distance threshold, meters.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Per-frame cap on unprojected points; pixels are strided to fit.
    #[arg(long)]
    pub max_points: Option<usize>,
}

/// Pixel stride that leaves at most `max_points` samples of a w×h frame.
pub fn stride_for(w: u32, h: u32, max_points: usize) -> usize {
    let count = |s: usize| (w as usize).div_ceil(s) * (h as usize).div_ceil(s);
    let mut s = 1;
    while count(s) > max_points.max(1) {
        s += 1;
    }
    s
}

/// Scores each frame's unprojected prediction against its unprojected
/// ground truth and averages the frames.
pub fn recon(a: ReconArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "eval_recon";
    let root: PathBuf = s.require(SEC, "dataset", a.dataset)?;
    let pred_root: PathBuf = s.require(SEC, "pred", a.pred)?;
    let report_path: PathBuf = s.require(SEC, "report", a.report)?;
    let threshold = s.pick(SEC, "threshold", a.threshold, RECON_THRESHOLD)?;
    let max_points = s.pick(SEC, "max_points", a.max_points, 4096usize)?;
    if !(threshold > 0.0) {
        bail!("--threshold must be positive");
    }
    let clips = dataset(&root)?;
    require_path(&pred_root)?;
    let mut jobs = Vec::new();
    for c in &clips {
        for r in &c.labels.frames {
            jobs.push((c, r));
        }
    }
    let per_frame: Vec<ReconMetrics> = jobs
        .par_iter()
        .map(|(c, r)| -> Result<ReconMetrics> {
            let gt = read_frame(&c.dir, r.index)?;
            let pred = predicted_depth(&pred_root, c, r.index)?;
            let pose = r.camera.pose()?;
            let k = r.camera.intrinsics();
            let stride = stride_for(k.width, k.height, max_points);
            let g = unproject_depth(&gt.depth, &pose, &k, stride);
            let p = unproject_depth(&pred, &pose, &k, stride);
            Ok(recon_metrics(&p, &g, threshold)?)
        })
        .collect::<Result<_>>()?;
    let n = per_frame.len() as f64;
    let mean = |f: fn(&ReconMetrics) -> f64| per_frame.iter().map(f).sum::<f64>() / n;
    let report = EvalReport {
        recon: Some(ReconMetrics {
            completion_ratio: mean(|m| m.completion_ratio),
            completion: mean(|m| m.completion),
            accuracy: mean(|m| m.accuracy),
            threshold,
        }),
        ..Default::default()
    };
    report.write(&report_path)?;
    print!("{}", report.to_json());
    Ok(())
}
