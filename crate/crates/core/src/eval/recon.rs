use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Default completion distance, meters.
pub const RECON_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconMetrics {
    /// Fraction of ground-truth points with a prediction closer than
    /// `threshold`.
    pub completion_ratio: f64,
    /// Mean distance from ground truth to the nearest prediction.
    pub completion: f64,
    /// Mean distance from predictions to the nearest ground truth.
    pub accuracy: f64,
    pub threshold: f64,
}

fn nearest(from: &[Point3<f64>], to: &[Point3<f64>]) -> Vec<f64> {
    from.par_iter()
        .map(|p| to.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min).sqrt())
        .collect()
}

/// Brute-force nearest neighbors; meant for subsampled clouds of a few
/// thousand points.
pub fn recon_metrics(pred: &[Point3<f64>], gt: &[Point3<f64>], threshold: f64) -> Result<ReconMetrics, EvalError> {
    if pred.is_empty() {
        return Err(EvalError::EmptyPointSet("prediction"));
    }
    if gt.is_empty() {
        return Err(EvalError::EmptyPointSet("ground truth"));
    }
    let to_pred = nearest(gt, pred);
    let to_gt = nearest(pred, gt);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ReconMetrics {
        completion_ratio: to_pred.iter().filter(|&&d| d < threshold).count() as f64 / gt.len() as f64,
        completion: mean(&to_pred),
        accuracy: mean(&to_gt),
        threshold,
    })
}
