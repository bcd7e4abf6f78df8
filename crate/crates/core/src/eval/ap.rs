//! Target-only average precision.
//!
//! Each frame has at most one ground truth, the clip's target. Predictions
//! of other categories are ignored, predictions that sit on a same-category
//! non-target object are set aside, and the rest are matched to the target
//! greedily by score. Detections from all frames are then pooled and ranked
//! to build one precision/recall curve per IoU threshold.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{box_iou, mask_iou, ApProtocol, EvalError};
use crate::labels::{read_frame, ClipLabels, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouKind {
    Box,
    Mask,
}

/// A ground-truth object as seen in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GtObject {
    pub box2d: [f64; 4],
    /// Visible pixel count.
    pub area: f64,
    /// Row-major visible mask, present when evaluating masks.
    pub mask: Option<Vec<bool>>,
}

/// Ground truth of one frame for target-only evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFrame {
    pub clip_id: String,
    pub frame: u32,
    pub intensity: f64,
    pub category: String,
    pub width: u32,
    pub height: u32,
    /// `None` when the target is not visible in this frame.
    pub target: Option<GtObject>,
    /// Visible same-category instances other than the target.
    pub others: Vec<GtObject>,
}

/// What happened to the predictions of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMatch {
    pub clip_id: String,
    pub frame: u32,
    /// Indices into the prediction slice that were ranked.
    pub kept: Vec<usize>,
    /// Indices set aside as detections of a same-category non-target.
    pub filtered: Vec<usize>,
    /// Per IoU threshold, the prediction matched to the target.
    pub matched: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    /// Mean over thresholds; `None` when no frame shows the target.
    pub ap: Option<f64>,
    pub per_threshold: Vec<Option<f64>>,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
    pub n_frames: usize,
    pub n_positives: usize,
    pub matches: Vec<FrameMatch>,
}

/// Box ground truth of every frame of a clip.
pub fn eval_frames(labels: &ClipLabels) -> Vec<EvalFrame> {
    let category = labels.target_category().unwrap_or_default().to_string();
    let same: Vec<_> = labels
        .categories
        .iter()
        .filter(|(id, c)| Some(**id) != labels.target && **c == category)
        .map(|(id, _)| *id)
        .collect();
    labels
        .frames
        .iter()
        .map(|r| {
            let gt = |b: &crate::render::Box2d| GtObject {
                box2d: b.to_xyxy(),
                area: b.pixel_count as f64,
                mask: None,
            };
            EvalFrame {
                clip_id: labels.clip_id.clone(),
                frame: r.index,
                intensity: r.intensity,
                category: category.clone(),
                width: labels.width,
                height: labels.height,
                target: labels.target.and_then(|t| r.boxes2d.get(&t)).map(gt),
                others: same.iter().filter_map(|id| r.boxes2d.get(id)).map(gt).collect(),
            }
        })
        .collect()
}

/// Like [`eval_frames`], with masks read from the clip's instance rasters.
pub fn eval_frames_with_masks(clip_dir: &Path, labels: &ClipLabels) -> Result<Vec<EvalFrame>, EvalError> {
    let category = labels.target_category().unwrap_or_default().to_string();
    let mut frames = eval_frames(labels);
    for f in &mut frames {
        let seg = read_frame(clip_dir, f.frame)?.instance_seg;
        let mask_of = |id: u32| seg.iter().map(|&v| v as u32 == id).collect::<Vec<bool>>();
        let rec = &labels.frames[f.frame as usize];
        if let (Some(t), Some(gt)) = (labels.target, f.target.as_mut()) {
            gt.mask = Some(mask_of(t));
        }
        let ids = labels
            .categories
            .iter()
            .filter(|(id, c)| Some(**id) != labels.target && **c == category && rec.boxes2d.contains_key(id));
        for ((id, _), gt) in ids.zip(f.others.iter_mut()) {
            gt.mask = Some(mask_of(*id));
        }
    }
    Ok(frames)
}

/// Fails on the first prediction that names an unknown frame or does not
/// fit its frame.
pub fn check_predictions(frames: &[EvalFrame], preds: &[Prediction], kind: IouKind) -> Result<(), EvalError> {
    let index: HashMap<(&str, u32), &EvalFrame> = frames.iter().map(|f| ((f.clip_id.as_str(), f.frame), f)).collect();
    for p in preds {
        let bad = |reason: String| EvalError::BadPrediction {
            clip_id: p.clip_id.clone(),
            frame: p.frame,
            reason,
        };
        let f = index.get(&(p.clip_id.as_str(), p.frame)).ok_or_else(|| EvalError::UnknownFrame {
            clip_id: p.clip_id.clone(),
            frame: p.frame,
        })?;
        p.check().map_err(bad)?;
        if !p.fits(f.width, f.height) {
            return Err(bad(format!("does not fit the {}x{} frame", f.width, f.height)));
        }
        if kind == IouKind::Mask && p.category == f.category && p.mask.is_none() {
            return Err(bad("mask evaluation needs a mask".into()));
        }
    }
    Ok(())
}

/// Target-only AP of one clip's boxes.
pub fn target_only_ap(labels: &ClipLabels, preds: &[Prediction], protocol: &ApProtocol) -> Result<ApResult, EvalError> {
    let frames = eval_frames(labels);
    let mine: Vec<Prediction> = preds.iter().filter(|p| p.clip_id == labels.clip_id).cloned().collect();
    target_only_ap_frames(&frames, &mine, protocol, IouKind::Box)
}

/// Target-only AP over any set of frames, possibly from several clips.
pub fn target_only_ap_frames(
    frames: &[EvalFrame],
    preds: &[Prediction],
    protocol: &ApProtocol,
    kind: IouKind,
) -> Result<ApResult, EvalError> {
    protocol.validate()?;
    check_predictions(frames, preds, kind)?;
    evaluate(frames, preds, protocol, kind)
}

/// Binned AP along the intensity axis. Frames fall into `n_bins`
/// equal-width bins over [0, 1], the last bin closed; empty bins carry no
/// AP.
pub fn binned_axis_curve(
    frames: &[EvalFrame],
    preds: &[Prediction],
    protocol: &ApProtocol,
    kind: IouKind,
    n_bins: usize,
) -> Result<Vec<CurveBin>, EvalError> {
    protocol.validate()?;
    if n_bins == 0 {
        return Err(EvalError::InvalidProtocol("n_bins must be positive".into()));
    }
    check_predictions(frames, preds, kind)?;
    let mut bins: Vec<Vec<EvalFrame>> = vec![Vec::new(); n_bins];
    for f in frames {
        let b = ((f.intensity.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        bins[b].push(f.clone());
    }
    bins.iter()
        .enumerate()
        .map(|(i, fs)| {
            let (lo, hi) = (i as f64 / n_bins as f64, (i + 1) as f64 / n_bins as f64);
            let ap = if fs.is_empty() {
                None
            } else {
                evaluate(fs, preds, protocol, kind)?.ap
            };
            Ok(CurveBin {
                lo,
                hi,
                center: 0.5 * (lo + hi),
                n_frames: fs.len(),
                ap,
            })
        })
        .collect()
}

/// One intensity bin of an axis curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBin {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub n_frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap: Option<f64>,
}

/// A ranked prediction: its score and, per threshold, whether it counts as
/// a true positive, a false positive, or not at all (area range).
struct Ranked {
    score: f64,
    order: usize,
    iou_target: f64,
    area: f64,
    matched_at: Vec<bool>,
}

struct Scored {
    target_area: Option<f64>,
    ranked: Vec<Ranked>,
}

fn evaluate(frames: &[EvalFrame], preds: &[Prediction], protocol: &ApProtocol, kind: IouKind) -> Result<ApResult, EvalError> {
    let mut by_frame: HashMap<(&str, u32), Vec<usize>> = HashMap::new();
    for (i, p) in preds.iter().enumerate() {
        by_frame.entry((p.clip_id.as_str(), p.frame)).or_default().push(i);
    }
    let nt = protocol.iou_thresholds.len();
    let mut scored = Vec::with_capacity(frames.len());
    let mut matches = Vec::with_capacity(frames.len());
    let mut order = 0usize;
    for f in frames {
        let candidates = by_frame.get(&(f.clip_id.as_str(), f.frame)).map_or(&[][..], |v| v.as_slice());
        let mut kept = Vec::new();
        let mut filtered = Vec::new();
        let mut ranked = Vec::new();
        let masks: HashMap<usize, Vec<bool>> = if kind == IouKind::Mask {
            candidates
                .iter()
                .filter(|&&i| preds[i].category == f.category)
                .map(|&i| Ok((i, preds[i].mask.as_ref().expect("checked").decode()?)))
                .collect::<Result<_, EvalError>>()?
        } else {
            HashMap::new()
        };
        let iou = |i: usize, g: &GtObject| match kind {
            IouKind::Box => box_iou(&preds[i].box2d, &g.box2d),
            IouKind::Mask => mask_iou(&masks[&i], g.mask.as_ref().expect("mask ground truth")),
        };
        for &i in candidates {
            let p = &preds[i];
            if p.category != f.category {
                continue;
            }
            let iou_target = f.target.as_ref().map_or(0.0, |g| iou(i, g));
            let iou_other = f.others.iter().map(|g| iou(i, g)).fold(0.0, f64::max);
            // a prediction that overlaps the target best is never set aside
            if iou_other > protocol.same_category_filter_iou && iou_other >= iou_target {
                filtered.push(i);
                continue;
            }
            let area = match kind {
                IouKind::Box => (p.box2d[2] - p.box2d[0]) * (p.box2d[3] - p.box2d[1]),
                IouKind::Mask => masks[&i].iter().filter(|&&m| m).count() as f64,
            };
            kept.push(i);
            ranked.push(Ranked {
                score: p.score,
                order,
                iou_target,
                area,
                matched_at: vec![false; nt],
            });
            order += 1;
        }
        // greedy by descending score, earlier input first among ties
        let mut rank: Vec<usize> = (0..ranked.len()).collect();
        rank.sort_by(|&a, &b| ranked[b].score.total_cmp(&ranked[a].score).then(a.cmp(&b)));
        let mut matched = vec![None; nt];
        if f.target.is_some() {
            for (t, &thr) in protocol.iou_thresholds.iter().enumerate() {
                if let Some(&r) = rank.iter().find(|&&r| ranked[r].iou_target >= thr) {
                    ranked[r].matched_at[t] = true;
                    matched[t] = Some(kept[r]);
                }
            }
        }
        scored.push(Scored {
            target_area: f.target.as_ref().map(|g| g.area),
            ranked,
        });
        matches.push(FrameMatch {
            clip_id: f.clip_id.clone(),
            frame: f.frame,
            kept,
            filtered,
            matched,
        });
    }

    let all = |_: f64| true;
    let per_threshold: Vec<Option<f64>> = (0..nt).map(|t| ap_at(&scored, t, protocol.recall_points, &all)).collect();
    let mean_ap = |range: &dyn Fn(f64) -> bool| -> Option<f64> {
        let v: Option<Vec<f64>> = (0..nt).map(|t| ap_at(&scored, t, protocol.recall_points, range)).collect();
        v.map(|v| v.iter().sum::<f64>() / nt as f64)
    };
    let (s, m) = (protocol.small_area, protocol.medium_area);
    Ok(ApResult {
        ap: per_threshold.iter().copied().collect::<Option<Vec<f64>>>().map(|v| v.iter().sum::<f64>() / nt as f64),
        per_threshold,
        ap_small: mean_ap(&|a| a < s),
        ap_medium: mean_ap(&|a| a >= s && a < m),
        ap_large: mean_ap(&|a| a >= m),
        n_frames: frames.len(),
        n_positives: scored.iter().filter(|f| f.target_area.is_some()).count(),
        matches,
    })
}

/// Interpolated AP at threshold `t` restricted to targets whose area is in
/// `range`. A detection matched to an out-of-range target is dropped, as is
/// an unmatched detection whose own area is out of range.
fn ap_at(frames: &[Scored], t: usize, recall_points: usize, range: &dyn Fn(f64) -> bool) -> Option<f64> {
    let mut npos = 0usize;
    let mut dets: Vec<(f64, usize, bool)> = Vec::new();
    for f in frames {
        let gt_in = f.target_area.map(range);
        npos += (gt_in == Some(true)) as usize;
        for r in &f.ranked {
            let tp = r.matched_at[t];
            if (tp && gt_in != Some(true)) || (!tp && !range(r.area)) {
                continue;
            }
            dets.push((r.score, r.order, tp));
        }
    }
    if npos == 0 {
        return None;
    }
    dets.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut recall = Vec::with_capacity(dets.len());
    let mut precision = Vec::with_capacity(dets.len());
    for &(_, _, hit) in &dets {
        if hit {
            tp += 1;
        } else {
            fp += 1;
        }
        recall.push(tp as f64 / npos as f64);
        precision.push(tp as f64 / (tp + fp) as f64);
    }
    for i in (1..precision.len()).rev() {
        precision[i - 1] = precision[i - 1].max(precision[i]);
    }
    let steps = recall_points - 1;
    let sum: f64 = (0..recall_points)
        .map(|k| {
            let r = k as f64 / steps as f64;
            let i = recall.partition_point(|&x| x < r);
            precision.get(i).copied().unwrap_or(0.0)
        })
        .sum();
    Some(sum / recall_points as f64)
}
