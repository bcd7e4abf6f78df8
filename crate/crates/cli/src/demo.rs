//! `demo trends`: small batches on every axis, scored with the degraded
//! mock detector, binned along intensity.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use synthscene_core::axes::{gen_axis_batch, Axis, AxisConfig};
use synthscene_core::eval::{
    binned_axis_curve, curve_csv, eval_frames, mock_degraded_detector, ApProtocol, CurveBin, DegradeParams, IouKind,
};

use crate::commands::library;
use crate::config::Settings;

#[derive(Args, Debug)]
pub struct TrendsArgs {
    /// Clips per axis.
    #[arg(long)]
    pub clips: Option<u32>,
    #[arg(long)]
    pub frames: Option<u32>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Directory receiving `<axis>.csv`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Recovered curve of one axis.
pub fn axis_trend(axis: Axis, n_clips: u32, cfg: &AxisConfig, params: &DegradeParams, bins: usize) -> Result<Vec<CurveBin>> {
    let (clips, _) = gen_axis_batch(&library(), axis, n_clips, cfg)?;
    let mut frames = Vec::new();
    let mut preds = Vec::new();
    for c in &clips {
        let labels = c.labels();
        frames.extend(eval_frames(&labels));
        preds.extend(mock_degraded_detector(&labels, params));
    }
    Ok(binned_axis_curve(&frames, &preds, &ApProtocol::default(), IouKind::Box, bins)?)
}

pub fn trends(a: TrendsArgs, s: &Settings) -> Result<()> {
    const SEC: &str = "demo_trends";
    let n_clips = s.pick(SEC, "clips", a.clips, 3u32)?;
    let bins = s.pick(SEC, "bins", a.bins, 10usize)?;
    let out = s.pick(SEC, "output", a.output, PathBuf::from("trends"))?;
    let params: DegradeParams = s.get(SEC, "degrade")?.unwrap_or_default();
    let mut cfg: AxisConfig = s.get(SEC, "axis_config")?.unwrap_or_default();
    cfg.n_frames = s.pick(SEC, "frames", a.frames, 20)?;
    cfg.width = s.pick(SEC, "width", a.width, 160)?;
    cfg.height = s.pick(SEC, "height", a.height, 120)?;
    cfg.seed = s.pick(SEC, "seed", a.seed, 0)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    for axis in Axis::ALL {
        let curve = axis_trend(axis, n_clips, &cfg, &params, bins)?;
        let csv = curve_csv(&curve);
        let path = out.join(format!("{axis}.csv"));
        synthscene_core::io::write_atomic(&path, csv.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
        println!("# {axis}");
        for b in &curve {
            let ap = b.ap.map_or("-".to_string(), |v| format!("{v:.3}"));
            println!("{:.2}\t{}\t{ap}", b.center, b.n_frames);
        }
    }
    Ok(())
}
