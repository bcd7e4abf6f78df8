use serde::{Deserialize, Serialize};

use super::predicates::{Evaluator, PredicateKind};
use crate::render::FrameLabels;
use crate::scene::InstanceId;

/// Pairs further apart than this (box centers) get no binary relations.
pub const PAIR_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnaryLabel {
    pub instance: InstanceId,
    pub state: PredicateKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLabel {
    pub subject: InstanceId,
    pub relation: PredicateKind,
    pub object: InstanceId,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneGraphLabel {
    pub unary: Vec<UnaryLabel>,
    pub binary: Vec<BinaryLabel>,
}

impl SceneGraphLabel {
    pub fn has(&self, subject: InstanceId, relation: PredicateKind, object: InstanceId) -> bool {
        self.binary
            .iter()
            .any(|b| b.subject == subject && b.relation == relation && b.object == object)
    }
}

/// Relations among the non-structural instances visible in `frame`. With
/// `full_pairs` the distance cutoff is dropped.
pub fn frame_scene_graph(ev: &Evaluator<'_>, frame: &FrameLabels, full_pairs: bool) -> SceneGraphLabel {
    let visible: Vec<_> = frame
        .boxes2d
        .iter()
        .filter(|(_, b)| b.pixel_count > 0)
        .filter_map(|(id, _)| ev.posed.get(*id))
        .filter(|p| !p.structural)
        .collect();
    let mut g = SceneGraphLabel::default();
    for p in &visible {
        let id = p.instance_id;
        if p.model.is_articulated() {
            let q = ev.openness(id).unwrap_or(0.0);
            let state = if q > ev.thresholds.openness {
                PredicateKind::Open
            } else {
                PredicateKind::Closed
            };
            g.unary.push(UnaryLabel { instance: id, state, value: q });
        }
        if let Some(inst) = ev.scene.instance(id) {
            if inst.filled_fraction > ev.thresholds.filled {
                g.unary.push(UnaryLabel {
                    instance: id,
                    state: PredicateKind::Filled,
                    value: inst.filled_fraction,
                });
            }
            if inst.folded {
                g.unary.push(UnaryLabel {
                    instance: id,
                    state: PredicateKind::Folded,
                    value: 1.0,
                });
            }
        }
    }
    for a in &visible {
        for b in &visible {
            if a.instance_id == b.instance_id {
                continue;
            }
            if !full_pairs && (a.aabb.center() - b.aabb.center()).norm() > PAIR_RADIUS {
                continue;
            }
            let mut push = |relation| {
                g.binary.push(BinaryLabel {
                    subject: a.instance_id,
                    relation,
                    object: b.instance_id,
                })
            };
            if ev.on_top(a, b) {
                push(PredicateKind::OnTop);
            }
            if ev.inside(a, b) {
                push(PredicateKind::Inside);
            }
            if ev.under(a, b) {
                push(PredicateKind::Under);
            }
            if ev.next_to(a, b) {
                push(PredicateKind::NextTo);
            }
            if ev.touching(a, b) {
                push(PredicateKind::Touching);
            }
        }
    }
    g
}
