use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub rms: f64,
    pub abs_rel: f64,
    pub log10: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub n_pixels: u64,
}

/// Running sums for depth metrics pooled over many frames.
#[derive(Debug, Clone, Default)]
pub struct DepthAccumulator {
    sq: f64,
    rel: f64,
    log10: f64,
    within: [u64; 3],
    n: u64,
}

impl DepthAccumulator {
    /// Adds the pixels where `mask` (all pixels when `None`) is set and the
    /// ground truth is positive and finite. Predictions there must be
    /// positive and finite too.
    pub fn add(&mut self, pred: &[f32], gt: &[f32], mask: Option<&[bool]>) -> Result<(), EvalError> {
        if pred.len() != gt.len() || mask.is_some_and(|m| m.len() != gt.len()) {
            return Err(EvalError::ShapeMismatch(format!(
                "{} predicted, {} ground-truth and {} mask pixels",
                pred.len(),
                gt.len(),
                mask.map_or(gt.len(), |m| m.len())
            )));
        }
        for (i, (&p, &g)) in pred.iter().zip(gt).enumerate() {
            if mask.is_some_and(|m| !m[i]) || !(g > 0.0 && g.is_finite()) {
                continue;
            }
            if !(p > 0.0 && p.is_finite()) {
                return Err(EvalError::InvalidDepth { index: i, value: p });
            }
            let (p, g) = (p as f64, g as f64);
            self.sq += (p - g) * (p - g);
            self.rel += (p - g).abs() / g;
            self.log10 += (p.log10() - g.log10()).abs();
            let ratio = (p / g).max(g / p);
            for (k, w) in self.within.iter_mut().enumerate() {
                *w += (ratio < 1.25f64.powi(k as i32 + 1)) as u64;
            }
            self.n += 1;
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<DepthMetrics, EvalError> {
        if self.n == 0 {
            return Err(EvalError::EmptyMask);
        }
        let n = self.n as f64;
        Ok(DepthMetrics {
            rms: (self.sq / n).sqrt(),
            abs_rel: self.rel / n,
            log10: self.log10 / n,
            delta1: self.within[0] as f64 / n,
            delta2: self.within[1] as f64 / n,
            delta3: self.within[2] as f64 / n,
            n_pixels: self.n,
        })
    }
}

/// Depth errors of one raster pair; see [`DepthAccumulator::add`] for the
/// pixels that count.
pub fn depth_metrics(pred: &[f32], gt: &[f32], mask: Option<&[bool]>) -> Result<DepthMetrics, EvalError> {
    let mut acc = DepthAccumulator::default();
    acc.add(pred, gt, mask)?;
    acc.finish()
}
