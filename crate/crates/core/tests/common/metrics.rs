//! Slow reference implementations of the evaluation metrics.

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthscene_core::eval::{ApProtocol, EvalFrame, GtObject};
use synthscene_core::labels::Prediction;

fn iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let ix = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let iy = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let i = ix * iy;
    let u = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - i;
    if u > 0.0 {
        i / u
    } else {
        0.0
    }
}

/// Interpolated AP of a ranked list of hit flags, computed from the
/// definition: at each recall level, the best precision reached at that
/// recall or beyond.
fn naive_ap(ranked_hits: &[bool], npos: usize, recall_points: usize) -> f64 {
    let mut points = Vec::new();
    let mut tp = 0;
    for (k, &h) in ranked_hits.iter().enumerate() {
        tp += h as usize;
        points.push((tp as f64 / npos as f64, tp as f64 / (k + 1) as f64));
    }
    let mut total = 0.0;
    for i in 0..recall_points {
        let r = i as f64 / (recall_points - 1) as f64;
        let best = points.iter().filter(|(rec, _)| *rec >= r).map(|(_, p)| *p).fold(0.0, f64::max);
        total += best;
    }
    total / recall_points as f64
}

/// Box AP by enumerating every way of assigning at most one kept prediction
/// per frame to the target, keeping the best AP. Scores must be distinct.
pub fn brute_force_ap(frames: &[EvalFrame], preds: &[Prediction], protocol: &ApProtocol) -> Option<f64> {
    // kept predictions per frame with their target IoU
    let mut kept: Vec<Vec<(f64, f64)>> = Vec::new();
    for f in frames {
        let mut v = Vec::new();
        for p in preds.iter().filter(|p| p.clip_id == f.clip_id && p.frame == f.frame && p.category == f.category) {
            let it = f.target.as_ref().map_or(0.0, |g| iou(&p.box2d, &g.box2d));
            let io = f.others.iter().map(|g| iou(&p.box2d, &g.box2d)).fold(0.0, f64::max);
            if io > protocol.same_category_filter_iou && io >= it {
                continue;
            }
            v.push((p.score, it));
        }
        kept.push(v);
    }
    let npos = frames.iter().filter(|f| f.target.is_some()).count();
    if npos == 0 {
        return None;
    }
    let mut sum = 0.0;
    for &t in &protocol.iou_thresholds {
        // choice per frame: None or the index of the matched prediction
        let options: Vec<Vec<Option<usize>>> = frames
            .iter()
            .zip(&kept)
            .map(|(f, v)| {
                let mut o = vec![None];
                if f.target.is_some() {
                    o.extend((0..v.len()).filter(|&i| v[i].1 >= t).map(Some));
                }
                o
            })
            .collect();
        let mut best = 0.0f64;
        let mut choice = vec![0usize; frames.len()];
        loop {
            let mut dets: Vec<(f64, bool)> = Vec::new();
            for (fi, v) in kept.iter().enumerate() {
                let m = options[fi][choice[fi]];
                for (i, &(s, _)) in v.iter().enumerate() {
                    dets.push((s, m == Some(i)));
                }
            }
            dets.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let hits: Vec<bool> = dets.iter().map(|d| d.1).collect();
            best = best.max(naive_ap(&hits, npos, protocol.recall_points));
            // odometer over choices
            let mut k = 0;
            loop {
                if k == choice.len() {
                    sum += best;
                    break;
                }
                choice[k] += 1;
                if choice[k] < options[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    Some(sum / protocol.iou_thresholds.len() as f64)
}

fn random_box(rng: &mut ChaCha8Rng, w: f64, h: f64) -> [f64; 4] {
    let x0 = rng.random_range(0.0..w - 12.0);
    let y0 = rng.random_range(0.0..h - 12.0);
    [x0, y0, rng.random_range(x0 + 4.0..w), rng.random_range(y0 + 4.0..h)]
}

fn near(rng: &mut ChaCha8Rng, b: &[f64; 4], w: f64, h: f64) -> [f64; 4] {
    let s = rng.random_range(0.0..6.0);
    let mut j = |v: f64, hi: f64| (v + rng.random_range(-s..=s)).clamp(0.0, hi);
    let (x0, y0, x1, y1) = (j(b[0], w), j(b[1], h), j(b[2], w), j(b[3], h));
    [x0.min(x1), y0.min(y1), x0.max(x1), y0.max(y1)]
}

/// A random clip of up to three frames with at most three same-category
/// ground truths and five predictions per frame, predictions mostly near
/// some object so every IoU regime shows up.
pub fn random_ap_case(seed: u64) -> (Vec<EvalFrame>, Vec<Prediction>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (64.0, 48.0);
    let n_frames = rng.random_range(1..=3);
    let mut frames = Vec::new();
    let mut preds = Vec::new();
    for fi in 0..n_frames {
        let gt = |b: [f64; 4]| GtObject {
            area: (b[2] - b[0]) * (b[3] - b[1]),
            box2d: b,
            mask: None,
        };
        let target = rng.random_bool(0.85).then(|| random_box(&mut rng, w, h));
        let n_other = rng.random_range(0..=(3 - target.is_some() as usize));
        let others: Vec<[f64; 4]> = (0..n_other).map(|_| random_box(&mut rng, w, h)).collect();
        let objects: Vec<[f64; 4]> = target.iter().chain(&others).copied().collect();
        for _ in 0..rng.random_range(0..=5) {
            let b = if !objects.is_empty() && rng.random_bool(0.8) {
                let o = objects[rng.random_range(0..objects.len())];
                near(&mut rng, &o, w, h)
            } else {
                random_box(&mut rng, w, h)
            };
            let category = if rng.random_bool(0.85) { "chair" } else { "table" };
            preds.push(Prediction {
                clip_id: "c".into(),
                frame: fi,
                category: category.into(),
                score: rng.random_range(0.01..1.0),
                box2d: b,
                mask: None,
            });
        }
        frames.push(EvalFrame {
            clip_id: "c".into(),
            frame: fi,
            intensity: 0.0,
            category: "chair".into(),
            width: w as u32,
            height: h as u32,
            target: target.map(gt),
            others: others.into_iter().map(gt).collect(),
        });
    }
    (frames, preds)
}

pub struct NaiveDepth {
    pub rms: f64,
    pub abs_rel: f64,
    pub log10: f64,
    pub delta: [f64; 3],
}

pub fn naive_depth(pred: &[f32], gt: &[f32], mask: &[bool]) -> NaiveDepth {
    let mut n = 0.0;
    let (mut sq, mut rel, mut lg) = (0.0, 0.0, 0.0);
    let mut d = [0.0; 3];
    for i in 0..gt.len() {
        if !mask[i] || gt[i] <= 0.0 {
            continue;
        }
        let p = pred[i] as f64;
        let g = gt[i] as f64;
        n += 1.0;
        sq += (p - g).powi(2);
        rel += (p - g).abs() / g;
        lg += (p.log10() - g.log10()).abs();
        let r = if p > g { p / g } else { g / p };
        if r < 1.25 {
            d[0] += 1.0;
        }
        if r < 1.25 * 1.25 {
            d[1] += 1.0;
        }
        if r < 1.25 * 1.25 * 1.25 {
            d[2] += 1.0;
        }
    }
    NaiveDepth {
        rms: (sq / n).sqrt(),
        abs_rel: rel / n,
        log10: lg / n,
        delta: d.map(|x| x / n),
    }
}

/// (completion_ratio, completion, accuracy) by double loops.
pub fn naive_recon(pred: &[Point3<f64>], gt: &[Point3<f64>], threshold: f64) -> (f64, f64, f64) {
    let nearest = |p: &Point3<f64>, set: &[Point3<f64>]| {
        let mut best = f64::INFINITY;
        for q in set {
            let d = ((p.x - q.x).powi(2) + (p.y - q.y).powi(2) + (p.z - q.z).powi(2)).sqrt();
            if d < best {
                best = d;
            }
        }
        best
    };
    let (mut within, mut comp) = (0.0, 0.0);
    for g in gt {
        let d = nearest(g, pred);
        comp += d;
        if d < threshold {
            within += 1.0;
        }
    }
    let mut acc = 0.0;
    for p in pred {
        acc += nearest(p, gt);
    }
    (within / gt.len() as f64, comp / gt.len() as f64, acc / pred.len() as f64)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || a == b
}
