//! Geometric ground truth for unary states and binary spatial relations.

use serde::{Deserialize, Serialize};

use super::LabelError;
use crate::geometry::{aabb_gap, hull_distance, Aabb, PosedInstance, PosedScene, Rect};
use crate::scene::{InstanceId, Scene};

/// Thresholds shared by the evaluator, the sampler and the scene graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredicateThresholds {
    /// Largest gap between a resting object and its support plane.
    pub support_gap: f64,
    /// Fraction of the subject footprint that must lie over the base.
    pub footprint_overlap: f64,
    /// Fraction of the subject box volume inside the container volume.
    pub containment: f64,
    pub touching: f64,
    pub openness: f64,
    pub filled: f64,
    /// NextTo gap as a multiple of the larger diameter.
    pub next_to_factor: f64,
}

impl Default for PredicateThresholds {
    fn default() -> Self {
        Self {
            support_gap: 0.02,
            footprint_overlap: 0.5,
            containment: 0.8,
            touching: 0.005,
            openness: 0.05,
            filled: 0.5,
            next_to_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateKind {
    OnTop,
    Inside,
    Under,
    NextTo,
    Touching,
    Open,
    Closed,
    Filled,
    Folded,
}

impl PredicateKind {
    pub fn is_binary(self) -> bool {
        matches!(self, Self::OnTop | Self::Inside | Self::Under | Self::NextTo | Self::Touching)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub kind: PredicateKind,
    pub subject: InstanceId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<InstanceId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Predicate {
    pub fn unary(kind: PredicateKind, subject: InstanceId) -> Self {
        Self {
            kind,
            subject,
            object: None,
            value: None,
        }
    }

    pub fn binary(kind: PredicateKind, subject: InstanceId, object: InstanceId) -> Self {
        Self {
            kind,
            subject,
            object: Some(object),
            value: None,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.kind.is_binary() == self.object.is_some() && self.value.is_none_or(|v| (0.0..=1.0).contains(&v))
    }
}

/// Truth value plus the continuous quantity behind unary states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredicateValue {
    pub holds: bool,
    pub value: Option<f64>,
}

/// Read-only view bundling a scene with its posed geometry.
pub struct Evaluator<'a> {
    pub scene: &'a Scene,
    pub posed: &'a PosedScene,
    pub thresholds: PredicateThresholds,
}

fn overlapping_parts<'p>(base: &'p PosedInstance, fp: &Rect) -> impl Iterator<Item = Aabb> + 'p {
    let fp = *fp;
    base.hulls
        .iter()
        .map(|(_, h)| h.aabb)
        .filter(move |b| b.footprint().overlaps(&fp))
}

impl<'a> Evaluator<'a> {
    pub fn new(scene: &'a Scene, posed: &'a PosedScene) -> Self {
        Self {
            scene,
            posed,
            thresholds: PredicateThresholds::default(),
        }
    }

    fn get(&self, id: InstanceId) -> Result<&'a PosedInstance, LabelError> {
        self.posed.get(id).ok_or(LabelError::UnknownInstance(id))
    }

    pub fn evaluate(&self, p: &Predicate) -> Result<PredicateValue, LabelError> {
        let a = self.get(p.subject)?;
        let obj = match p.object {
            Some(o) => Some(self.get(o)?),
            None => None,
        };
        let binary = |f: fn(&Self, &PosedInstance, &PosedInstance) -> bool| -> Result<PredicateValue, LabelError> {
            let b = obj.ok_or(LabelError::MissingObject(p.kind))?;
            Ok(PredicateValue {
                holds: a.instance_id != b.instance_id && f(self, a, b),
                value: None,
            })
        };
        match p.kind {
            PredicateKind::OnTop => binary(Self::on_top),
            PredicateKind::Inside => binary(Self::inside),
            PredicateKind::Under => binary(Self::under),
            PredicateKind::NextTo => binary(Self::next_to),
            PredicateKind::Touching => binary(Self::touching),
            PredicateKind::Open | PredicateKind::Closed => {
                let q = self.openness(p.subject)?;
                let open = q > self.thresholds.openness;
                Ok(PredicateValue {
                    holds: if p.kind == PredicateKind::Open { open } else { !open },
                    value: Some(q),
                })
            }
            PredicateKind::Filled => {
                let inst = self.scene.instance(p.subject).ok_or(LabelError::UnknownInstance(p.subject))?;
                Ok(PredicateValue {
                    holds: inst.filled_fraction > self.thresholds.filled,
                    value: Some(inst.filled_fraction),
                })
            }
            PredicateKind::Folded => {
                let inst = self.scene.instance(p.subject).ok_or(LabelError::UnknownInstance(p.subject))?;
                Ok(PredicateValue {
                    holds: inst.folded,
                    value: Some(if inst.folded { 1.0 } else { 0.0 }),
                })
            }
        }
    }

    pub fn holds(&self, p: &Predicate) -> Result<bool, LabelError> {
        Ok(self.evaluate(p)?.holds)
    }

    /// Largest normalized joint position of the instance; 0 without joints.
    pub fn openness(&self, id: InstanceId) -> Result<f64, LabelError> {
        let inst = self.scene.instance(id).ok_or(LabelError::UnknownInstance(id))?;
        let model = self.scene.model_of(inst);
        Ok(model
            .joints
            .iter()
            .map(|j| j.openness(inst.joint_state.get(&j.joint_id).copied().unwrap_or(j.limits[0])))
            .fold(0.0, f64::max))
    }

    /// Top of the base parts lying under the subject's footprint.
    pub fn support_plane(&self, a: &PosedInstance, b: &PosedInstance) -> Option<f64> {
        overlapping_parts(b, &a.aabb.footprint()).map(|p| p.max.z).reduce(f64::max)
    }

    /// Bottom of the base parts lying over the subject's footprint.
    pub fn bottom_plane(&self, a: &PosedInstance, b: &PosedInstance) -> Option<f64> {
        overlapping_parts(b, &a.aabb.footprint()).map(|p| p.min.z).reduce(f64::min)
    }

    pub fn on_top(&self, a: &PosedInstance, b: &PosedInstance) -> bool {
        let Some(plane) = self.support_plane(a, b) else {
            return false;
        };
        let gap = a.aabb.min.z - plane;
        let fa = a.aabb.footprint();
        let area = fa.area();
        let covered = if area > 0.0 { fa.intersection_area(&b.aabb.footprint()) / area } else { 0.0 };
        (-1e-9..=self.thresholds.support_gap).contains(&gap)
            && covered >= self.thresholds.footprint_overlap
            && a.aabb.center().z > b.aabb.center().z
    }

    /// Fraction of the subject's box (taken in the container frame) that lies
    /// inside the container's fillable volume.
    pub fn containment(&self, a: &PosedInstance, b: &PosedInstance) -> f64 {
        let Some(fv) = b.model.fillable_volume else {
            return 0.0;
        };
        let to_b = b.pose.inverse();
        let mut local = Aabb::empty();
        for (_, h) in &a.hulls {
            for v in &h.vertices {
                local.grow(&to_b.transform_point(v));
            }
        }
        let vol = local.volume();
        if vol <= 0.0 {
            return 0.0;
        }
        local.intersection(&fv).volume() / vol
    }

    pub fn inside(&self, a: &PosedInstance, b: &PosedInstance) -> bool {
        self.containment(a, b) >= self.thresholds.containment
    }

    pub fn under(&self, a: &PosedInstance, b: &PosedInstance) -> bool {
        let Some(bottom) = self.bottom_plane(a, b) else {
            return false;
        };
        a.aabb.max.z < bottom && a.aabb.footprint().overlaps(&b.aabb.footprint())
    }

    pub fn surface_distance(&self, a: &PosedInstance, b: &PosedInstance) -> f64 {
        let mut best = f64::INFINITY;
        for (_, ha) in &a.hulls {
            for (_, hb) in &b.hulls {
                if aabb_gap(ha, hb) >= best {
                    continue;
                }
                best = best.min(hull_distance(ha, hb));
                if best == 0.0 {
                    return 0.0;
                }
            }
        }
        best
    }

    pub fn touching(&self, a: &PosedInstance, b: &PosedInstance) -> bool {
        if a.aabb.expanded(self.thresholds.touching).overlaps(&b.aabb) {
            self.surface_distance(a, b) < self.thresholds.touching
        } else {
            false
        }
    }

    pub fn next_to(&self, a: &PosedInstance, b: &PosedInstance) -> bool {
        let gap = a.aabb.footprint().gap(&b.aabb.footprint());
        let diam = a.aabb.diagonal().max(b.aabb.diagonal());
        gap < self.thresholds.next_to_factor * diam
            && !self.on_top(a, b)
            && !self.on_top(b, a)
            && !self.inside(a, b)
            && !self.inside(b, a)
    }
}

/// Evaluates a predicate against a scene.
pub fn evaluate_predicate(scene: &Scene, p: &Predicate) -> Result<PredicateValue, LabelError> {
    let posed = PosedScene::new(scene);
    Evaluator::new(scene, &posed).evaluate(p)
}
