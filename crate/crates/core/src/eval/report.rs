//! Evaluation reports as JSON and CSV.
//!
//! The report CSV has the columns of [`CSV_HEADER`]:
//!
//! - `section`: `ap`, `axis:<name>`, `depth` or `recon`
//! - `metric`: metric name, e.g. `AP_small`, `AbsRel`, `completion_ratio`
//! - `bin_center`: intensity bin center for axis rows, empty otherwise
//! - `count`: frames behind an AP value, pixels behind depth metrics, empty
//!   for reconstruction
//! - `value`: empty when the metric is undefined (no positives)
//!
//! A single axis curve is also written on its own with [`CURVE_CSV_HEADER`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ApResult, CurveBin, DepthMetrics, EvalError, IouKind, ReconMetrics};
use crate::labels::LabelError;

pub const CSV_HEADER: &str = "section,metric,bin_center,count,value";
pub const CURVE_CSV_HEADER: &str = "bin_lo,bin_hi,bin_center,n_frames,ap";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApSummary {
    pub kind: IouKind,
    pub ap: Option<f64>,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
    pub n_frames: usize,
    pub n_positives: usize,
}

impl ApSummary {
    pub fn new(kind: IouKind, r: &ApResult) -> Self {
        Self {
            kind,
            ap: r.ap,
            ap_small: r.ap_small,
            ap_medium: r.ap_medium,
            ap_large: r.ap_large,
            n_frames: r.n_frames,
            n_positives: r.n_positives,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap: Option<ApSummary>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_axis: BTreeMap<String, Vec<CurveBin>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<DepthMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon: Option<ReconMetrics>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        let mut row = |section: &str, metric: &str, bin: &str, count: &str, value: String| {
            let _ = writeln!(s, "{section},{metric},{bin},{count},{value}");
        };
        if let Some(a) = &self.ap {
            let n = a.n_frames.to_string();
            for (m, v) in [("AP", a.ap), ("AP_small", a.ap_small), ("AP_medium", a.ap_medium), ("AP_large", a.ap_large)] {
                row("ap", m, "", &n, opt(v));
            }
        }
        for (axis, bins) in &self.per_axis {
            for b in bins {
                row(&format!("axis:{axis}"), "AP", &b.center.to_string(), &b.n_frames.to_string(), opt(b.ap));
            }
        }
        if let Some(d) = &self.depth {
            let n = d.n_pixels.to_string();
            for (m, v) in [
                ("RMS", d.rms),
                ("AbsRel", d.abs_rel),
                ("Log10", d.log10),
                ("delta1", d.delta1),
                ("delta2", d.delta2),
                ("delta3", d.delta3),
            ] {
                row("depth", m, "", &n, v.to_string());
            }
        }
        if let Some(r) = &self.recon {
            for (m, v) in [
                ("completion_ratio", r.completion_ratio),
                ("completion", r.completion),
                ("accuracy", r.accuracy),
            ] {
                row("recon", m, "", "", v.to_string());
            }
        }
        s
    }

    /// Writes `path` as JSON and the same path with a `.csv` extension.
    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        let io = |p: &Path| {
            let p = p.display().to_string();
            move |source| EvalError::Label(LabelError::Io { path: p, source })
        };
        crate::io::write_atomic(path, self.to_json().as_bytes()).map_err(io(path))?;
        let csv = path.with_extension("csv");
        crate::io::write_atomic(&csv, self.to_csv().as_bytes()).map_err(io(&csv))?;
        Ok(())
    }
}

/// One axis curve as CSV.
pub fn curve_csv(bins: &[CurveBin]) -> String {
    let mut s = String::from(CURVE_CSV_HEADER);
    s.push('\n');
    for b in bins {
        let _ = writeln!(s, "{},{},{},{},{}", b.lo, b.hi, b.center, b.n_frames, opt(b.ap));
    }
    s
}
