//! On-disk clip layout:
//!
//! ```text
//! clips/<clip_id>/rgb/000000.png          8-bit RGB
//! clips/<clip_id>/depth/000000.dpth       ray distance, DPTH container
//! clips/<clip_id>/seg_instance/000000.png 16-bit instance ids
//! clips/<clip_id>/seg_semantic/000000.png 16-bit category ids
//! clips/<clip_id>/labels.json
//! clips/<clip_id>/scene.json              scene the clip was rendered from
//! manifest.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::{LabelError, SceneGraphLabel};
use crate::geometry::{quat_from_wxyz, Obb, Pose};
use crate::io::write_atomic;
use crate::render::{
    decode_dpth, decode_png_gray16, decode_png_rgb8, encode_dpth, encode_png_gray16, encode_png_rgb8, Box2d,
    CameraIntrinsics, FrameLabels,
};
use crate::scene::InstanceId;

pub const RASTER_DIRS: [&str; 4] = ["rgb", "depth", "seg_instance", "seg_semantic"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub pos: [f64; 3],
    /// `[w, x, y, z]`
    pub q: [f64; 4],
    pub fx: f64,
    pub cx: f64,
    pub cy: f64,
    pub w: u32,
    pub h: u32,
}

impl CameraRecord {
    pub fn new(pose: &Pose, k: &CameraIntrinsics) -> Self {
        let t = pose.translation;
        Self {
            pos: [t.x, t.y, t.z],
            q: pose.quat_wxyz(),
            fx: k.fx,
            cx: k.cx,
            cy: k.cy,
            w: k.width,
            h: k.height,
        }
    }

    pub fn pose(&self) -> Result<Pose, LabelError> {
        let q = quat_from_wxyz(self.q, 1e-6).ok_or_else(|| LabelError::Format("camera quaternion is not unit".into()))?;
        Ok(Pose::new(Vector3::from(self.pos), q))
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics {
            width: self.w,
            height: self.h,
            fx: self.fx,
            cx: self.cx,
            cy: self.cy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3dRecord {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    /// `[w, x, y, z]`
    pub q: [f64; 4],
}

impl From<&Obb> for Box3dRecord {
    fn from(o: &Obb) -> Self {
        let q = o.rotation.quaternion();
        Self {
            center: [o.center.x, o.center.y, o.center.z],
            half_extents: [o.half_extents.x, o.half_extents.y, o.half_extents.z],
            q: [q.w, q.i, q.j, q.k],
        }
    }
}

impl Box3dRecord {
    pub fn to_obb(&self) -> Option<Obb> {
        Some(Obb {
            center: Point3::from(self.center),
            half_extents: Vector3::from(self.half_extents),
            rotation: quat_from_wxyz(self.q, 1e-6)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u32,
    pub intensity: f64,
    pub camera: CameraRecord,
    /// Inclusive pixel bounds and pixel counts keyed by instance id.
    pub boxes2d: BTreeMap<InstanceId, Box2d>,
    pub boxes3d: BTreeMap<InstanceId, Box3dRecord>,
    /// Target visibility; absent when the clip has no target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility_ratio: Option<f64>,
    /// Light multiplier the frame was shaded with.
    pub light_scale: f64,
    /// Joint values of the target instance in this frame.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub target_joints: BTreeMap<String, f64>,
    pub scene_graph: SceneGraphLabel,
}

/// Contents of `labels.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipLabels {
    pub clip_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<InstanceId>,
    /// Instance placed to hide the target (visibility clips).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occluder: Option<InstanceId>,
    pub scene_id: String,
    pub scene_seed: u64,
    pub width: u32,
    pub height: u32,
    /// Category of every instance id that can appear in the rasters.
    pub categories: BTreeMap<InstanceId, String>,
    pub frames: Vec<FrameRecord>,
}

impl ClipLabels {
    pub fn target_category(&self) -> Option<&str> {
        self.target.and_then(|t| self.categories.get(&t)).map(String::as_str)
    }
}

pub fn clip_dir(root: &Path, clip_id: &str) -> PathBuf {
    root.join("clips").join(clip_id)
}

/// Path of one raster of a clip; `kind` is one of [`RASTER_DIRS`].
pub fn raster_path(dir: &Path, kind: &str, index: u32) -> PathBuf {
    let ext = if kind == "depth" { "dpth" } else { "png" };
    dir.join(kind).join(format!("{index:06}.{ext}"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LabelError + '_ {
    move |source| LabelError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn fmt_err(e: impl std::fmt::Display) -> LabelError {
    LabelError::Format(e.to_string())
}

/// Writes a clip frame by frame so only one frame is held in memory.
pub struct ClipWriter {
    dir: PathBuf,
    labels: ClipLabels,
}

impl ClipWriter {
    /// `header.frames` is ignored; frames are appended by [`Self::push`].
    pub fn create(root: &Path, mut header: ClipLabels) -> Result<Self, LabelError> {
        let dir = clip_dir(root, &header.clip_id);
        for kind in RASTER_DIRS {
            let d = dir.join(kind);
            fs::create_dir_all(&d).map_err(io_err(&d))?;
        }
        header.frames.clear();
        Ok(Self { dir, labels: header })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes the four rasters of `frame`; the record's index decides the
    /// file names.
    pub fn push(&mut self, frame: &FrameLabels, record: FrameRecord) -> Result<(), LabelError> {
        let (w, h) = (frame.width, frame.height);
        let i = record.index;
        let files = [
            ("rgb", encode_png_rgb8(w, h, &frame.rgb).map_err(fmt_err)?),
            ("depth", encode_dpth(w, h, &frame.depth)),
            ("seg_instance", encode_png_gray16(w, h, &frame.instance_seg).map_err(fmt_err)?),
            ("seg_semantic", encode_png_gray16(w, h, &frame.semantic_seg).map_err(fmt_err)?),
        ];
        for (kind, bytes) in files {
            let p = raster_path(&self.dir, kind, i);
            write_atomic(&p, &bytes).map_err(io_err(&p))?;
        }
        self.labels.frames.push(record);
        Ok(())
    }

    /// Writes `labels.json` and returns its path.
    pub fn finish(self) -> Result<PathBuf, LabelError> {
        let p = self.dir.join("labels.json");
        let mut s = serde_json::to_string(&self.labels).map_err(fmt_err)?;
        s.push('\n');
        write_atomic(&p, s.as_bytes()).map_err(io_err(&p))?;
        Ok(p)
    }
}

/// Builds the frame record for a rendered frame.
pub fn frame_record(
    index: u32,
    intensity: f64,
    pose: &Pose,
    k: &CameraIntrinsics,
    frame: &FrameLabels,
    visibility_ratio: Option<f64>,
    light_scale: f64,
    scene_graph: SceneGraphLabel,
) -> FrameRecord {
    FrameRecord {
        index,
        intensity,
        camera: CameraRecord::new(pose, k),
        boxes2d: frame.boxes2d.clone(),
        boxes3d: frame.boxes3d.iter().map(|(id, o)| (*id, Box3dRecord::from(o))).collect(),
        visibility_ratio,
        light_scale,
        target_joints: BTreeMap::new(),
        scene_graph,
    }
}

/// Writes a whole in-memory clip; `frames[i]` pairs with `header.frames[i]`.
pub fn write_clip(header: &ClipLabels, frames: &[FrameLabels], out_dir: &Path) -> Result<PathBuf, LabelError> {
    if frames.len() != header.frames.len() {
        return Err(LabelError::Format(format!(
            "{} rasters for {} frame records",
            frames.len(),
            header.frames.len()
        )));
    }
    let mut w = ClipWriter::create(out_dir, header.clone())?;
    for (f, r) in frames.iter().zip(&header.frames) {
        w.push(f, r.clone())?;
    }
    w.finish()
}

pub fn read_clip_labels(path: &Path) -> Result<ClipLabels, LabelError> {
    let s = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&s).map_err(|e| LabelError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })
}

/// Rasters of one stored frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredFrame {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
    pub depth: Vec<f32>,
    pub instance_seg: Vec<u16>,
    pub semantic_seg: Vec<u16>,
}

pub fn read_frame(clip_dir: &Path, index: u32) -> Result<StoredFrame, LabelError> {
    let read = |kind: &str| {
        let p = raster_path(clip_dir, kind, index);
        fs::read(&p).map_err(io_err(&p))
    };
    let (w, h, rgb) = decode_png_rgb8(&read("rgb")?).map_err(fmt_err)?;
    let (dw, dh, depth) = decode_dpth(&read("depth")?).map_err(fmt_err)?;
    let (iw, ih, instance_seg) = decode_png_gray16(&read("seg_instance")?).map_err(fmt_err)?;
    let (sw, sh, semantic_seg) = decode_png_gray16(&read("seg_semantic")?).map_err(fmt_err)?;
    if [(dw, dh), (iw, ih), (sw, sh)].iter().any(|&d| d != (w, h)) {
        return Err(LabelError::Format(format!("frame {index}: raster sizes disagree")));
    }
    Ok(StoredFrame {
        width: w,
        height: h,
        rgb,
        depth,
        instance_seg,
        semantic_seg,
    })
}

/// One clip entry in a batch manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub scene_seed: u64,
    /// Absent only for slots where no clip could be planned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<InstanceId>,
    pub n_frames: u32,
    pub rejected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// `manifest.json` at the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub axis: String,
    pub clips: Vec<ManifestEntry>,
    pub rejected: Vec<ManifestEntry>,
}

pub fn write_manifest(root: &Path, m: &Manifest) -> Result<PathBuf, LabelError> {
    let p = root.join("manifest.json");
    let mut s = serde_json::to_string_pretty(m).map_err(fmt_err)?;
    s.push('\n');
    write_atomic(&p, s.as_bytes()).map_err(io_err(&p))?;
    Ok(p)
}

pub fn read_manifest(root: &Path) -> Result<Manifest, LabelError> {
    let p = root.join("manifest.json");
    let s = fs::read_to_string(&p).map_err(io_err(&p))?;
    serde_json::from_str(&s).map_err(|e| LabelError::Parse {
        path: p.display().to_string(),
        line: e.line(),
        msg: e.to_string(),
    })
}
