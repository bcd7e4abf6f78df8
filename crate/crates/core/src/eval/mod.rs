//! Metrics over generated datasets: target-only average precision for boxes
//! and masks, per-axis binned AP curves, monocular depth errors and point
//! cloud reconstruction scores, plus two mock detectors that let the whole
//! pipeline run without a learned model.

mod ap;
mod depth;
mod iou;
mod mock;
mod recon;
mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{read_clip_labels, read_manifest, ClipLabels, LabelError};

pub use ap::{
    binned_axis_curve, check_predictions, eval_frames, eval_frames_with_masks, target_only_ap, target_only_ap_frames, ApResult,
    CurveBin, EvalFrame, FrameMatch, GtObject, IouKind,
};
pub use depth::{depth_metrics, DepthAccumulator, DepthMetrics};
pub use iou::{box_iou, mask_iou};
pub use mock::{emission_probability, mock_degraded_detector, mock_oracle_detector, DegradeParams};
pub use recon::{recon_metrics, ReconMetrics, RECON_THRESHOLD};
pub use report::{curve_csv, ApSummary, EvalReport, CSV_HEADER, CURVE_CSV_HEADER};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no valid pixels to evaluate")]
    EmptyMask,
    #[error("empty point set: {0}")]
    EmptyPointSet(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("predicted depth {value} at pixel {index} is not positive and finite")]
    InvalidDepth { index: usize, value: f32 },
    #[error("prediction for {clip_id} frame {frame} references no frame of the dataset")]
    UnknownFrame { clip_id: String, frame: u32 },
    #[error("prediction for {clip_id} frame {frame}: {reason}")]
    BadPrediction { clip_id: String, frame: u32, reason: String },
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error(transparent)]
    Label(#[from] LabelError),
}

/// How target-only AP is computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApProtocol {
    pub iou_thresholds: Vec<f64>,
    /// Number of evenly spaced recall levels for interpolation.
    pub recall_points: usize,
    /// Predictions overlapping a same-category non-target object by more
    /// than this are set aside instead of counted as false positives.
    pub same_category_filter_iou: f64,
    /// Target areas below this (pixels) are small.
    pub small_area: f64,
    /// Target areas below this and not small are medium; the rest large.
    pub medium_area: f64,
}

impl Default for ApProtocol {
    fn default() -> Self {
        Self {
            iou_thresholds: (0..10).map(|i| 0.5 + 0.05 * i as f64).collect(),
            recall_points: 101,
            same_category_filter_iou: 0.3,
            small_area: 32.0 * 32.0,
            medium_area: 96.0 * 96.0,
        }
    }
}

impl ApProtocol {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidProtocol(m.into()));
        let t = &self.iou_thresholds;
        if t.is_empty() || t.iter().any(|&x| !(x > 0.0 && x <= 1.0)) || t.windows(2).any(|w| w[1] <= w[0]) {
            return bad("iou_thresholds must be strictly increasing in (0, 1]");
        }
        if self.recall_points < 2 {
            return bad("recall_points must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.same_category_filter_iou) {
            return bad("same_category_filter_iou must be in [0, 1]");
        }
        if !(0.0 < self.small_area && self.small_area <= self.medium_area) {
            return bad("area split bounds must be positive and ordered");
        }
        Ok(())
    }
}

/// One accepted clip of a dataset on disk.
#[derive(Debug, Clone)]
pub struct DatasetClip {
    pub dir: PathBuf,
    pub labels: ClipLabels,
}

/// Loads every accepted clip listed in the dataset manifest, in manifest
/// order.
pub fn load_dataset(root: &Path) -> Result<Vec<DatasetClip>, EvalError> {
    let manifest = read_manifest(root)?;
    manifest
        .clips
        .iter()
        .map(|e| {
            let dir = crate::labels::clip_dir(root, &e.clip_id);
            let labels = read_clip_labels(&dir.join("labels.json"))?;
            Ok(DatasetClip { dir, labels })
        })
        .collect()
}
