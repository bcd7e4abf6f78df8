//! Predicate ground truth, per-frame scene graphs, the on-disk clip layout
//! and prediction ingestion.

mod export;
mod predicates;
mod predictions;
mod scene_graph;

use thiserror::Error;

pub use export::{
    clip_dir, frame_record, raster_path, read_clip_labels, read_frame, read_manifest, write_clip, write_manifest, Box3dRecord, CameraRecord,
    ClipLabels, ClipWriter, FrameRecord, Manifest, ManifestEntry, StoredFrame, RASTER_DIRS,
};
pub use predicates::{evaluate_predicate, Evaluator, Predicate, PredicateKind, PredicateThresholds, PredicateValue};
pub use predictions::{parse_predictions, read_predictions, write_predictions, Prediction, Rle};
pub use scene_graph::{frame_scene_graph, BinaryLabel, SceneGraphLabel, UnaryLabel, PAIR_RADIUS};

use crate::scene::InstanceId;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("unknown instance {0}")]
    UnknownInstance(InstanceId),
    #[error("{0:?} needs an object instance")]
    MissingObject(PredicateKind),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("format error: {0}")]
    Format(String),
}
