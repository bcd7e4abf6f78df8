//! JSON predicate requests, as taken by the command line.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sample_attribute, sample_joint_state, sample_placement, SampleConfig, SampleError};
use crate::labels::PredicateKind;
use crate::scene::{InstanceId, Scene};

/// `{kind, subject_category, base_instance?, value?, seed}`.
///
/// Binary kinds insert a new object of `subject_category` relative to
/// `base_instance`. Unary kinds change an existing instance: `base_instance`
/// when given, otherwise the lowest-id instance of `subject_category`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateRequest {
    pub kind: PredicateKind,
    pub subject_category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_instance: Option<InstanceId>,
    /// Openness, fill level or fold flag; 1 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Sampled {
    pub scene: Scene,
    /// The inserted or modified instance.
    pub subject: InstanceId,
}

pub fn apply_request(scene: &Scene, req: &PredicateRequest) -> Result<Sampled, SampleError> {
    let bad = |m: String| SampleError::InvalidRequest(m);
    if req.kind.is_binary() {
        let base = req.base_instance.ok_or_else(|| bad(format!("{:?} needs base_instance", req.kind)))?;
        let variants = scene
            .category_registry()
            .get(&req.subject_category)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| bad(format!("no models of category `{}`", req.subject_category)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
        let model = variants.choose(&mut rng).expect("nonempty");
        let (scene, subject) = sample_placement(scene, model, req.kind, base, &SampleConfig::with_seed(req.seed))?;
        return Ok(Sampled { scene, subject });
    }
    let subject = match req.base_instance {
        Some(id) => id,
        None => scene
            .instances
            .iter()
            .filter(|i| i.category == req.subject_category)
            .map(|i| i.instance_id)
            .min()
            .ok_or_else(|| bad(format!("no instance of category `{}`", req.subject_category)))?,
    };
    let value = req.value.unwrap_or(1.0);
    let scene = match req.kind {
        PredicateKind::Open => sample_joint_state(scene, subject, value, req.seed)?,
        PredicateKind::Closed => sample_joint_state(scene, subject, 0.0, req.seed)?,
        kind => sample_attribute(scene, subject, kind, value)?,
    };
    Ok(Sampled { scene, subject })
}
