//! Scene data model, builtin archetype library, JSON io and randomization.

mod library;
mod model;
pub mod templates;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use library::{builtin_library, wall_model_id, ModelLibrary, WALL_HEIGHT, WALL_THICKNESS};
pub use model::{InstanceId, JointKind, JointSpec, LightSource, Link, ObjectInstance, ObjectModel};

use crate::geometry::{polygon_is_simple, Pose};

/// Largest instance id representable in a 16-bit segmentation raster.
pub const MAX_EXPORT_ID: InstanceId = u16::MAX as InstanceId;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid field `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("joint `{joint}` value {value} outside [{lo}, {hi}]")]
    JointOutOfRange { joint: String, value: f64, lo: f64, hi: f64 },
    #[error("unknown instance {0}")]
    UnknownInstance(InstanceId),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SceneError {
    SceneError::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub scene_id: String,
    pub seed: u64,
    pub floor_polygon: Vec<[f64; 2]>,
    pub lights: Vec<LightSource>,
    pub instances: Vec<ObjectInstance>,
    /// Resolves model ids; doubles as the category registry.
    pub library: Arc<ModelLibrary>,
}

impl PartialEq for Scene {
    fn eq(&self, o: &Self) -> bool {
        self.scene_id == o.scene_id
            && self.seed == o.seed
            && self.floor_polygon == o.floor_polygon
            && self.lights == o.lights
            && self.instances == o.instances
    }
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    scene_id: String,
    seed: u64,
    floor_polygon: Vec<[f64; 2]>,
    lights: Vec<LightSource>,
    instances: Vec<ObjectInstance>,
}

impl Scene {
    pub fn new(scene_id: impl Into<String>, seed: u64, floor_polygon: Vec<[f64; 2]>, library: Arc<ModelLibrary>) -> Self {
        Self {
            scene_id: scene_id.into(),
            seed,
            floor_polygon,
            lights: Vec::new(),
            instances: Vec::new(),
            library,
        }
    }

    pub fn instance(&self, id: InstanceId) -> Option<&ObjectInstance> {
        self.instances.iter().find(|i| i.instance_id == id)
    }

    pub fn instance_mut(&mut self, id: InstanceId) -> Option<&mut ObjectInstance> {
        self.instances.iter_mut().find(|i| i.instance_id == id)
    }

    pub fn model(&self, id: &str) -> Option<Arc<ObjectModel>> {
        self.library.model(id)
    }

    /// Model of an instance; panics only if the scene skipped validation.
    pub fn model_of(&self, inst: &ObjectInstance) -> Arc<ObjectModel> {
        self.library
            .model(&inst.model_id)
            .unwrap_or_else(|| panic!("unresolvable model {}", inst.model_id))
    }

    pub fn category_registry(&self) -> &BTreeMap<String, Vec<String>> {
        self.library.registry()
    }

    pub fn next_instance_id(&self) -> InstanceId {
        self.instances.iter().map(|i| i.instance_id).max().unwrap_or(0) + 1
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !polygon_is_simple(&self.floor_polygon) {
            return Err(invalid("floor_polygon", "polygon is not simple"));
        }
        for (i, l) in self.lights.iter().enumerate() {
            if !(l.base_power > 0.0) || !l.base_power.is_finite() {
                return Err(invalid(format!("lights[{i}].power"), "power must be > 0"));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, inst) in self.instances.iter().enumerate() {
            let f = |k: &str| format!("instances[{i}].{k}");
            if inst.instance_id == 0 {
                return Err(invalid(f("id"), "id 0 is reserved for background"));
            }
            if !seen.insert(inst.instance_id) {
                return Err(invalid(f("id"), format!("duplicate id {}", inst.instance_id)));
            }
            let model = self
                .library
                .model(&inst.model_id)
                .ok_or_else(|| invalid(f("model"), format!("unknown model `{}`", inst.model_id)))?;
            if model.category != inst.category {
                return Err(invalid(
                    f("category"),
                    format!("model `{}` has category `{}`", inst.model_id, model.category),
                ));
            }
            if !inst.pose.translation.iter().all(|v| v.is_finite()) {
                return Err(invalid(f("pose.t"), "non-finite translation"));
            }
            if (inst.pose.rotation.norm() - 1.0).abs() > 1e-9 {
                return Err(invalid(f("pose.q"), "quaternion not unit"));
            }
            for (name, &v) in &inst.joint_state {
                let j = model
                    .joint(name)
                    .ok_or_else(|| invalid(f(&format!("joints.{name}")), "joint not in model"))?;
                if !(v >= j.limits[0] && v <= j.limits[1]) {
                    return Err(invalid(
                        f(&format!("joints.{name}")),
                        format!("value {v} outside [{}, {}]", j.limits[0], j.limits[1]),
                    ));
                }
            }
            if !(0.0..=1.0).contains(&inst.filled_fraction) {
                return Err(invalid(f("filled_fraction"), "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str, library: Arc<ModelLibrary>) -> Result<Scene, SceneError> {
        let value: serde_json::Value = serde_json::from_str(s).map_err(|e| SceneError::Parse(e.to_string()))?;
        // quaternion norms are an invariant, reported with their field path
        if let Some(insts) = value.get("instances").and_then(|v| v.as_array()) {
            for (i, inst) in insts.iter().enumerate() {
                if let Some(q) = inst.pointer("/pose/q").and_then(|q| q.as_array()) {
                    let n: f64 = q.iter().filter_map(|c| c.as_f64()).map(|c| c * c).sum::<f64>().sqrt();
                    if q.len() == 4 && (n - 1.0).abs() > 1e-6 {
                        return Err(invalid(format!("instances[{i}].pose.q"), format!("norm {n} not within 1e-6 of 1")));
                    }
                }
            }
        }
        let file: SceneFile = serde_json::from_value(value).map_err(|e| SceneError::Parse(e.to_string()))?;
        let scene = Scene {
            scene_id: file.scene_id,
            seed: file.seed,
            floor_polygon: file.floor_polygon,
            lights: file.lights,
            instances: file.instances,
            library,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json_string(&self) -> String {
        let file = SceneFile {
            scene_id: self.scene_id.clone(),
            seed: self.seed,
            floor_polygon: self.floor_polygon.clone(),
            lights: self.lights.clone(),
            instances: self.instances.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("scene serializes");
        s.push('\n');
        s
    }
}

pub fn load_scene(path: &Path, library: Arc<ModelLibrary>) -> Result<Scene, SceneError> {
    let s = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scene::from_json_str(&s, library)
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<(), SceneError> {
    crate::io::write_atomic(path, scene.to_json_string().as_bytes()).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Swaps every movable, non-structural instance for a uniformly drawn variant
/// of its category and re-grounds it at the previous support height.
pub fn randomize_scene(scene: &Scene, seed: u64) -> Result<Scene, SceneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = scene.clone();
    for inst in out.instances.iter_mut() {
        let variants = scene
            .library
            .variants(&inst.category)
            .ok_or_else(|| SceneError::UnknownCategory(inst.category.clone()))?;
        let old = scene
            .library
            .model(&inst.model_id)
            .ok_or_else(|| SceneError::UnknownModel(inst.model_id.clone()))?;
        if old.is_structural || !old.movable || variants.len() < 2 {
            continue;
        }
        let pick = variants.choose(&mut rng).expect("nonempty variants").clone();
        if pick == inst.model_id {
            continue;
        }
        let new = scene.library.model(&pick).ok_or_else(|| SceneError::UnknownModel(pick.clone()))?;
        let old_bottom = old.rest_aabb().transformed(&inst.pose).min.z;
        let new_bottom = new.rest_aabb().transformed(&inst.pose).min.z;
        let mut pose: Pose = inst.pose;
        pose.translation.z += old_bottom - new_bottom;
        // openness carries over for joints sharing an id
        let joints: BTreeMap<String, f64> = new
            .joints
            .iter()
            .filter_map(|j| {
                let o = old.joint(&j.joint_id)?;
                let q = *inst.joint_state.get(&j.joint_id)?;
                Some((j.joint_id.clone(), j.value_at(o.openness(q))))
            })
            .collect();
        inst.model_id = pick;
        inst.pose = pose;
        inst.joint_state = joints;
        if new.fillable_volume.is_none() {
            inst.filled_fraction = 0.0;
        }
    }
    Ok(out)
}

/// Appends a new instance with a fresh id. The input scene is untouched.
pub fn insert_object(
    scene: &Scene,
    model_id: &str,
    pose: Pose,
    joint_state: BTreeMap<String, f64>,
) -> Result<(Scene, InstanceId), SceneError> {
    let model = scene
        .library
        .model(model_id)
        .ok_or_else(|| SceneError::UnknownModel(model_id.to_string()))?;
    for (name, &v) in &joint_state {
        let j = model.joint(name).ok_or_else(|| SceneError::JointOutOfRange {
            joint: name.clone(),
            value: v,
            lo: f64::NAN,
            hi: f64::NAN,
        })?;
        if !(v >= j.limits[0] && v <= j.limits[1]) {
            return Err(SceneError::JointOutOfRange {
                joint: name.clone(),
                value: v,
                lo: j.limits[0],
                hi: j.limits[1],
            });
        }
    }
    let id = scene.next_instance_id();
    let mut out = scene.clone();
    out.instances.push(ObjectInstance {
        instance_id: id,
        model_id: model_id.to_string(),
        category: model.category.clone(),
        pose,
        joint_state,
        filled_fraction: 0.0,
        folded: false,
        room: String::new(),
    });
    Ok((out, id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn lib() -> Arc<ModelLibrary> {
        Arc::new(ModelLibrary::builtin())
    }

    fn minimal() -> Scene {
        let mut s = Scene::new("min", 1, vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]], lib());
        let (s1, _) = insert_object(&s, "floor", Pose::from_translation(Vector3::new(2.0, 2.0, 0.0)), BTreeMap::new()).unwrap();
        s = s1;
        let (s2, _) = insert_object(&s, "table_rect_120", Pose::from_translation(Vector3::new(2.0, 2.0, 0.0)), BTreeMap::new()).unwrap();
        s2
    }

    #[test]
    fn minimal_round_trip() {
        let s = minimal();
        let text = s.to_json_string();
        let back = Scene::from_json_str(&text, lib()).unwrap();
        assert_eq!(back.instances.len(), 2);
        assert_eq!(back, s);
        assert_eq!(back.to_json_string(), text);
    }

    #[test]
    fn joint_above_limit_names_joint() {
        let s = minimal();
        let (s, _) = insert_object(&s, "microwave_small", Pose::identity(), BTreeMap::new()).unwrap();
        let text = s.to_json_string().replace("\"joints\": {}", "\"joints\": {\"door_0_hinge\": 9.0}");
        match Scene::from_json_str(&text, lib()) {
            Err(SceneError::Validation { field, .. }) => assert!(field.contains("door_0_hinge"), "{field}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unnormalized_quaternion_is_validation_error() {
        let mut v: serde_json::Value = serde_json::from_str(&minimal().to_json_string()).unwrap();
        v["instances"][1]["pose"]["q"][0] = serde_json::json!(1.1);
        match Scene::from_json_str(&v.to_string(), lib()) {
            Err(SceneError::Validation { field, .. }) => assert_eq!(field, "instances[1].pose.q"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Scene::from_json_str("{", lib()), Err(SceneError::Parse(_))));
    }

    #[test]
    fn insert_rejects_bad_joint() {
        let s = minimal();
        let mut js = BTreeMap::new();
        js.insert("door_0_hinge".to_string(), 5.0);
        assert!(matches!(
            insert_object(&s, "microwave_small", Pose::identity(), js),
            Err(SceneError::JointOutOfRange { .. })
        ));
        assert!(matches!(
            insert_object(&s, "nope", Pose::identity(), BTreeMap::new()),
            Err(SceneError::UnknownModel(_))
        ));
        assert_eq!(s.instances.len(), 2);
    }

    #[test]
    fn randomize_unknown_category() {
        let mut s = minimal();
        s.instances[1].category = "spaceship".into();
        assert!(matches!(randomize_scene(&s, 1), Err(SceneError::UnknownCategory(_))));
    }
}
