#![allow(dead_code)]

pub mod clips;
pub mod metrics;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Point3, Vector3};
use synthscene_core::geometry::{Hull, Pose, PosedScene};
use synthscene_core::geometry::Part;
use synthscene_core::scene::{insert_object, InstanceId, LightSource, Link, ModelLibrary, ObjectModel, Scene};

pub fn lib() -> Arc<ModelLibrary> {
    Arc::new(ModelLibrary::builtin())
}

/// Square room with a floor and one ceiling light, no walls.
pub fn empty_room(side: f64) -> Scene {
    let mut s = Scene::new("room", 7, vec![[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]], lib());
    s.lights.push(LightSource {
        position: Point3::new(side / 2.0, side / 2.0, 2.4),
        base_power: 3.0,
        color: [1.0; 3],
    });
    add(&mut s, "floor", [side / 2.0, side / 2.0, 0.0], 0.0);
    s
}

/// A one-link box of `size` resting on its bottom face, category `box`.
pub fn box_model(id: &str, size: [f64; 3]) -> ObjectModel {
    ObjectModel {
        model_id: id.into(),
        category: "box".into(),
        links: vec![Link::new("base", vec![Part::cuboid([0.0, 0.0, size[2] / 2.0], size)], [0.8, 0.4, 0.2])],
        joints: vec![],
        fillable_volume: None,
        is_light_source: false,
        is_structural: false,
        movable: true,
    }
}

/// [`empty_room`] over the built-in library plus the given models.
pub fn room_with(side: f64, models: Vec<ObjectModel>) -> Scene {
    let mut l = ModelLibrary::builtin();
    for m in models {
        l.insert(m);
    }
    let mut s = empty_room(side);
    s.library = Arc::new(l);
    s
}

pub fn add(s: &mut Scene, model: &str, t: [f64; 3], yaw: f64) -> InstanceId {
    let (next, id) = insert_object(s, model, Pose::from_yaw(Vector3::from(t), yaw), BTreeMap::new()).unwrap();
    *s = next;
    id
}

fn point_depth_in(h: &Hull, p: &Point3<f64>) -> f64 {
    // signed distance to the hull boundary via the face planes; positive inside
    let mut depth = f64::INFINITY;
    for [a, b, c] in h.triangles() {
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len < 1e-15 {
            continue;
        }
        let d = -(p - a).dot(&(n / len));
        depth = depth.min(d);
    }
    depth
}

/// Brute-force lower bound on the penetration depth of two convex hulls:
/// the deepest vertex or edge sample of either hull inside the other,
/// measured to the other's face planes.
pub fn brute_penetration(a: &Hull, b: &Hull) -> f64 {
    let mut worst = 0.0f64;
    for (x, y) in [(a, b), (b, a)] {
        for p in &x.vertices {
            worst = worst.max(point_depth_in(y, p));
        }
        for [p, q, r] in x.triangles() {
            for (s, e) in [(p, q), (q, r), (r, p)] {
                for i in 1..16 {
                    let c = s + (e - s) * (i as f64 / 16.0);
                    worst = worst.max(point_depth_in(y, &c));
                }
            }
        }
    }
    worst
}

/// Deepest brute-force penetration between `id` and every other instance.
pub fn brute_scene_penetration(posed: &PosedScene, id: InstanceId) -> f64 {
    let a = posed.get(id).unwrap();
    let mut worst = 0.0f64;
    for other in &posed.instances {
        // disjoint boxes cannot penetrate
        if other.instance_id == id || !other.aabb.expanded(1e-9).overlaps(&a.aabb) {
            continue;
        }
        for (_, ha) in &a.hulls {
            for (_, hb) in &other.hulls {
                worst = worst.max(brute_penetration(ha, hb));
            }
        }
    }
    worst
}
