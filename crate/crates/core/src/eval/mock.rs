//! Stand-in detectors with known behavior along the axes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::labels::{ClipLabels, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeParams {
    /// Below this visibility the detection rate falls linearly to 0.
    pub vis_knee: f64,
    /// Below this light multiplier the detection rate falls linearly to 0.
    pub light_knee: f64,
    pub noise_seed: u64,
    /// Standard deviation of the box corner jitter, pixels.
    pub jitter_px: f64,
}

impl Default for DegradeParams {
    fn default() -> Self {
        Self {
            vis_knee: 0.5,
            light_knee: 0.5,
            noise_seed: 0,
            jitter_px: 2.0,
        }
    }
}

/// Chance that the degraded detector reports the target.
pub fn emission_probability(visibility: f64, light: f64, params: &DegradeParams) -> f64 {
    let ramp = |x: f64, knee: f64| if knee > 0.0 { (x / knee).clamp(0.0, 1.0) } else { 1.0 };
    ramp(visibility, params.vis_knee) * ramp(light, params.light_knee)
}

/// The ground-truth target box with score 1 in every frame that shows it.
pub fn mock_oracle_detector(labels: &ClipLabels) -> Vec<Prediction> {
    let (Some(target), Some(category)) = (labels.target, labels.target_category()) else {
        return Vec::new();
    };
    labels
        .frames
        .iter()
        .filter_map(|r| {
            let b = r.boxes2d.get(&target)?;
            Some(Prediction {
                clip_id: labels.clip_id.clone(),
                frame: r.index,
                category: category.to_string(),
                score: 1.0,
                box2d: b.to_xyxy(),
                mask: None,
            })
        })
        .collect()
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Reports the target with [`emission_probability`] of the frame's
/// visibility and light multiplier, scored by that probability, with each
/// box edge jittered by Gaussian noise. The random stream depends only on
/// the seed and clip id.
pub fn mock_degraded_detector(labels: &ClipLabels, params: &DegradeParams) -> Vec<Prediction> {
    let (Some(target), Some(category)) = (labels.target, labels.target_category()) else {
        return Vec::new();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.noise_seed);
    rng.set_stream(fnv1a(&labels.clip_id));
    let jitter = Normal::new(0.0, params.jitter_px.max(0.0)).expect("finite sigma");
    let (w, h) = (labels.width as f64, labels.height as f64);
    let mut out = Vec::new();
    for r in &labels.frames {
        let Some(b) = r.boxes2d.get(&target) else {
            continue;
        };
        // draw everything up front so the stream does not depend on the outcome
        let u: f64 = rng.random();
        let d: [f64; 4] = std::array::from_fn(|_| jitter.sample(&mut rng));
        let p = emission_probability(r.visibility_ratio.unwrap_or(1.0), r.light_scale, params);
        if u >= p {
            continue;
        }
        let [x0, y0, x1, y1] = b.to_xyxy();
        let (ax, bx) = ((x0 + d[0]).clamp(0.0, w), (x1 + d[2]).clamp(0.0, w));
        let (ay, by) = ((y0 + d[1]).clamp(0.0, h), (y1 + d[3]).clamp(0.0, h));
        out.push(Prediction {
            clip_id: labels.clip_id.clone(),
            frame: r.index,
            category: category.to_string(),
            score: p,
            box2d: [ax.min(bx), ay.min(by), ax.max(bx), ay.max(by)],
            mask: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emission_formula() {
        let p = DegradeParams::default();
        assert_eq!(emission_probability(1.0, 1.0, &p), 1.0);
        assert_eq!(emission_probability(0.25, 1.0, &p), 0.5);
        assert_eq!(emission_probability(0.25, 0.25, &p), 0.25);
        assert_eq!(emission_probability(0.0, 1.0, &p), 0.0);
    }
}
