use std::collections::BTreeMap;

use nalgebra::{Point3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Hull, Part, Pose};

pub type InstanceId = u32;

#[derive(Debug, Clone)]
pub struct Link {
    pub link_id: String,
    pub parts: Vec<Part>,
    /// Meshed parts in the link frame.
    pub hulls: Vec<Hull>,
    pub albedo: [f64; 3],
}

impl Link {
    pub fn new(link_id: impl Into<String>, parts: Vec<Part>, albedo: [f64; 3]) -> Self {
        let hulls = parts.iter().map(Hull::from_part).collect();
        Self {
            link_id: link_id.into(),
            parts,
            hulls,
            albedo,
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.hulls.iter().map(|h| h.triangles.len()).sum()
    }

    pub fn aabb(&self) -> Aabb {
        self.hulls.iter().fold(Aabb::empty(), |b, h| b.union(&h.aabb))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone)]
pub struct JointSpec {
    pub joint_id: String,
    pub kind: JointKind,
    /// Unit axis in the parent (model) frame.
    pub axis: Unit<Vector3<f64>>,
    /// Child frame at joint value zero, relative to the parent.
    pub origin: Pose,
    /// `[lo, hi]`: radians for revolute, meters for prismatic.
    pub limits: [f64; 2],
    pub child: String,
}

impl JointSpec {
    /// Child link frame in the parent frame at joint value `q`. Revolute
    /// joints turn about the axis line through the origin point; prismatic
    /// joints slide the origin along the axis.
    pub fn child_pose(&self, q: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::new(
                self.origin.translation,
                UnitQuaternion::from_axis_angle(&self.axis, q) * self.origin.rotation,
            ),
            JointKind::Prismatic => Pose::new(
                self.origin.translation + self.axis.into_inner() * q,
                self.origin.rotation,
            ),
        }
    }

    pub fn openness(&self, q: f64) -> f64 {
        let [lo, hi] = self.limits;
        ((q - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// Joint value at `openness`; exact at both limits.
    pub fn value_at(&self, openness: f64) -> f64 {
        let [lo, hi] = self.limits;
        (1.0 - openness) * lo + openness * hi
    }
}

#[derive(Debug, Clone)]
pub struct ObjectModel {
    pub model_id: String,
    pub category: String,
    pub links: Vec<Link>,
    pub joints: Vec<JointSpec>,
    /// Interior region in the model frame.
    pub fillable_volume: Option<Aabb>,
    pub is_light_source: bool,
    pub is_structural: bool,
    pub movable: bool,
}

impl ObjectModel {
    pub fn joint(&self, id: &str) -> Option<&JointSpec> {
        self.joints.iter().find(|j| j.joint_id == id)
    }

    pub fn is_articulated(&self) -> bool {
        !self.joints.is_empty()
    }

    /// Link frames in the model frame; joints missing from `state` sit at `lo`.
    pub fn link_poses(&self, state: &BTreeMap<String, f64>) -> Vec<Pose> {
        self.links
            .iter()
            .map(|link| match self.joints.iter().find(|j| j.child == link.link_id) {
                Some(j) => j.child_pose(state.get(&j.joint_id).copied().unwrap_or(j.limits[0])),
                None => Pose::identity(),
            })
            .collect()
    }

    /// Bounds of the model in its own frame with all joints closed.
    pub fn rest_aabb(&self) -> Aabb {
        let poses = self.link_poses(&BTreeMap::new());
        self.links
            .iter()
            .zip(&poses)
            .flat_map(|(l, p)| l.hulls.iter().map(move |h| h.aabb.transformed(p)))
            .fold(Aabb::empty(), |a, b| a.union(&b))
    }

    pub fn validate(&self) -> Result<(), String> {
        for j in &self.joints {
            if !self.links.iter().any(|l| l.link_id == j.child) {
                return Err(format!("joint {} references missing link {}", j.joint_id, j.child));
            }
            if !(j.limits[0] < j.limits[1]) {
                return Err(format!("joint {} has lo >= hi", j.joint_id));
            }
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(format!("joint {} axis not unit", j.joint_id));
            }
        }
        let mut children: Vec<_> = self.joints.iter().map(|j| j.child.as_str()).collect();
        children.sort_unstable();
        if children.windows(2).any(|w| w[0] == w[1]) {
            return Err("two joints drive the same link".into());
        }
        for l in &self.links {
            if l.triangle_count() < 4 {
                return Err(format!("link {} has fewer than 4 triangles", l.link_id));
            }
            let finite = l.hulls.iter().flat_map(|h| h.vertices.iter()).all(|v| v.iter().all(|c| c.is_finite()));
            if !finite {
                return Err(format!("link {} has non-finite vertices", l.link_id));
            }
        }
        if let Some(f) = &self.fillable_volume {
            if !self.rest_aabb().contains(f) {
                return Err("fillable volume outside model bounds".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    #[serde(rename = "id")]
    pub instance_id: InstanceId,
    #[serde(rename = "model")]
    pub model_id: String,
    pub category: String,
    pub pose: Pose,
    #[serde(rename = "joints", default)]
    pub joint_state: BTreeMap<String, f64>,
    #[serde(default)]
    pub filled_fraction: f64,
    #[serde(default)]
    pub folded: bool,
    #[serde(default)]
    pub room: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightSource {
    pub position: Point3<f64>,
    #[serde(rename = "power")]
    pub base_power: f64,
    pub color: [f64; 3],
}
