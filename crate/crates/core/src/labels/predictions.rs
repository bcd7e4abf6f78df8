//! External detector output: one JSON object per line, plus the COCO-style
//! run-length mask encoding.
//!
//! A mask is `{"size": [h, w], "counts": [...]}` where `counts` alternates
//! run lengths of 0s and 1s over the mask read column by column, starting
//! with a (possibly empty) run of 0s.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LabelError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    /// `[height, width]`
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

impl Rle {
    /// Encodes a row-major mask.
    pub fn encode(mask: &[bool], width: u32, height: u32) -> Rle {
        assert_eq!(mask.len(), width as usize * height as usize);
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for x in 0..width as usize {
            for y in 0..height as usize {
                let v = mask[y * width as usize + x];
                if v != current {
                    counts.push(run);
                    run = 0;
                    current = v;
                }
                run += 1;
            }
        }
        counts.push(run);
        Rle {
            size: [height, width],
            counts,
        }
    }

    pub fn pixel_total(&self) -> u64 {
        self.size[0] as u64 * self.size[1] as u64
    }

    pub fn is_valid(&self) -> bool {
        self.counts.iter().map(|&c| c as u64).sum::<u64>() == self.pixel_total()
    }

    /// Decodes to a row-major mask.
    pub fn decode(&self) -> Result<Vec<bool>, LabelError> {
        if !self.is_valid() {
            return Err(LabelError::Format(format!(
                "run lengths sum to {} for a {}x{} mask",
                self.counts.iter().map(|&c| c as u64).sum::<u64>(),
                self.size[1],
                self.size[0]
            )));
        }
        let [h, w] = self.size.map(|v| v as usize);
        let mut out = vec![false; w * h];
        let mut k = 0usize;
        for (i, &c) in self.counts.iter().enumerate() {
            let v = i % 2 == 1;
            for _ in 0..c {
                if v {
                    let (x, y) = (k / h, k % h);
                    out[y * w + x] = true;
                }
                k += 1;
            }
        }
        Ok(out)
    }

    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub clip_id: String,
    pub frame: u32,
    pub category: String,
    pub score: f64,
    /// Continuous `[x0, y0, x1, y1]` in pixels.
    pub box2d: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Rle>,
}

impl Prediction {
    pub fn check(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(format!("score {} outside [0, 1]", self.score));
        }
        let [x0, y0, x1, y1] = self.box2d;
        if !self.box2d.iter().all(|v| v.is_finite()) || x0 > x1 || y0 > y1 || x0 < 0.0 || y0 < 0.0 {
            return Err(format!("malformed box {:?}", self.box2d));
        }
        if let Some(m) = &self.mask {
            if !m.is_valid() {
                return Err("mask run lengths do not cover the image".into());
            }
            let [h, w] = m.size;
            if x1 > w as f64 || y1 > h as f64 {
                return Err(format!("box {:?} exceeds the {w}x{h} image", self.box2d));
            }
        }
        Ok(())
    }

    /// Checks the box against known image dimensions.
    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.box2d[2] <= width as f64 && self.box2d[3] <= height as f64 && self.mask.as_ref().is_none_or(|m| m.size == [height, width])
    }
}

/// Parses a JSON-lines prediction file. Blank lines are skipped; the first
/// malformed line is reported with its 1-based number.
pub fn parse_predictions(text: &str, path: &str) -> Result<Vec<Prediction>, LabelError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| LabelError::Parse {
            path: path.to_string(),
            line: i + 1,
            msg,
        };
        let p: Prediction = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        p.check().map_err(err)?;
        out.push(p);
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, LabelError> {
    let text = fs::read_to_string(path).map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_predictions(&text, &path.display().to_string())
}

pub fn write_predictions(path: &Path, preds: &[Prediction]) -> Result<(), LabelError> {
    let mut s = String::new();
    for p in preds {
        s.push_str(&serde_json::to_string(p).map_err(|e| LabelError::Format(e.to_string()))?);
        s.push('\n');
    }
    crate::io::write_atomic(path, s.as_bytes()).map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })
}
