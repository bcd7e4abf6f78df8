//! Hand-authored demo layouts. Each template is a floor polygon, walls along
//! its edges, ceiling lights and a furnished set of instances.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use super::{wall_model_id, LightSource, ModelLibrary, ObjectInstance, Scene, WALL_THICKNESS};
use crate::geometry::{polygon_centroid, polygon_signed_area, Pose};

pub const TEMPLATES: [&str; 5] = ["apartment_small", "studio", "office", "kitchen", "living_room"];

const LIGHT_HEIGHT: f64 = 2.4;
const LIGHT_POWER: f64 = 3.0;

struct Builder {
    scene: Scene,
}

impl Builder {
    fn new(id: &str, poly: Vec<[f64; 2]>, lib: Arc<ModelLibrary>) -> Self {
        assert!(polygon_signed_area(&poly) > 0.0, "templates use counter-clockwise polygons");
        let mut b = Builder {
            scene: Scene::new(id, 0, poly, lib),
        };
        let c = polygon_centroid(&b.scene.floor_polygon);
        b.add("floor", [c[0], c[1], 0.0], 0.0, "");
        b.walls();
        b
    }

    fn walls(&mut self) {
        let poly = self.scene.floor_polygon.clone();
        let n = poly.len();
        let convex = |i: usize| {
            let a = poly[(i + n - 1) % n];
            let b = poly[i];
            let c = poly[(i + 1) % n];
            (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) > 0.0
        };
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = dx.hypot(dy);
            let (ux, uy) = (dx / len, dy / len);
            // outward normal of a counter-clockwise edge
            let (nx, ny) = (uy, -ux);
            let half = WALL_THICKNESS / 2.0;
            let e0 = if convex(i) { WALL_THICKNESS } else { 0.0 };
            let e1 = if convex((i + 1) % n) { WALL_THICKNESS } else { 0.0 };
            let id = wall_model_id(len + e0 + e1);
            let shift = (e1 - e0) / 2.0;
            let cx = (a[0] + b[0]) / 2.0 + nx * half + ux * shift;
            let cy = (a[1] + b[1]) / 2.0 + ny * half + uy * shift;
            self.add_model(&id, [cx, cy, 0.0], uy.atan2(ux), "");
        }
    }

    fn add(&mut self, model: &str, t: [f64; 3], yaw: f64, room: &str) -> u32 {
        self.add_model(model, t, yaw, room)
    }

    fn add_model(&mut self, model: &str, t: [f64; 3], yaw: f64, room: &str) -> u32 {
        let m = self.scene.library.model(model).unwrap_or_else(|| panic!("template model {model}"));
        let id = self.scene.next_instance_id();
        self.scene.instances.push(ObjectInstance {
            instance_id: id,
            model_id: model.into(),
            category: m.category.clone(),
            pose: Pose::from_yaw(Vector3::from(t), yaw),
            joint_state: BTreeMap::new(),
            filled_fraction: 0.0,
            folded: false,
            room: room.into(),
        });
        id
    }

    fn light(&mut self, x: f64, y: f64) {
        self.scene.lights.push(LightSource {
            position: Point3::new(x, y, LIGHT_HEIGHT),
            base_power: LIGHT_POWER,
            color: [1.0, 0.97, 0.9],
        });
    }

    fn finish(self) -> Scene {
        self.scene
    }
}

use std::f64::consts::{FRAC_PI_2, PI};

const TABLE_TOP: f64 = 0.75;

/// Two rooms joined by a short doorway corridor; 23 instances, 3 lights.
pub fn apartment_small(lib: Arc<ModelLibrary>) -> Scene {
    let poly = vec![
        [0.0, 0.0],
        [5.0, 0.0],
        [5.0, 1.4],
        [5.2, 1.4],
        [5.2, 0.0],
        [9.0, 0.0],
        [9.0, 4.0],
        [5.2, 4.0],
        [5.2, 2.6],
        [5.0, 2.6],
        [5.0, 4.0],
        [0.0, 4.0],
    ];
    let mut b = Builder::new("apartment_small", poly, lib);
    b.add("sofa_two_seat", [0.6, 2.0, 0.0], 0.0, "living");
    b.add("table_rect_120", [2.5, 2.0, 0.0], 0.0, "living");
    b.add("chair_basic", [3.6, 2.0, 0.0], PI, "living");
    b.add("lamp_floor", [0.4, 3.5, 0.0], 0.0, "living");
    b.add("cup_tall", [2.25, 1.85, TABLE_TOP], 0.0, "living");
    b.add("book_paperback", [2.6, 2.15, TABLE_TOP], 0.3, "living");
    b.add("bowl_small", [2.75, 1.8, TABLE_TOP], 0.0, "living");
    b.add("cabinet_drawers_3", [7.0, 3.7, 0.0], -FRAC_PI_2, "kitchen");
    b.add("fridge_single", [8.6, 2.0, 0.0], PI, "kitchen");
    b.add("microwave_small", [7.0, 3.7, 0.9], -FRAC_PI_2, "kitchen");
    b.light(2.5, 2.0);
    b.light(7.0, 1.2);
    b.light(7.0, 2.8);
    b.finish()
}

pub fn studio(lib: Arc<ModelLibrary>) -> Scene {
    let poly = vec![[0.0, 0.0], [6.0, 0.0], [6.0, 5.0], [0.0, 5.0]];
    let mut b = Builder::new("studio", poly, lib);
    b.add("sofa_three_seat", [0.6, 2.5, 0.0], 0.0, "studio");
    b.add("table_rect_140", [3.0, 2.5, 0.0], 0.0, "studio");
    b.add("chair_wide", [3.0, 1.5, 0.0], FRAC_PI_2, "studio");
    b.add("chair_basic", [3.0, 3.5, 0.0], -FRAC_PI_2, "studio");
    b.add("lamp_table", [2.7, 2.3, TABLE_TOP], 0.0, "studio");
    b.add("laptop_13", [3.15, 2.6, TABLE_TOP], PI, "studio");
    b.add("wardrobe_100", [5.6, 4.0, 0.0], PI, "studio");
    b.add("book_hardcover", [2.8, 2.8, TABLE_TOP], 0.2, "studio");
    b.add("cup_mug", [3.2, 2.1, TABLE_TOP], 0.0, "studio");
    b.add("towel_bath", [5.0, 0.6, 0.0], 0.0, "studio");
    b.light(1.5, 2.5);
    b.light(4.5, 2.5);
    b.finish()
}

pub fn office(lib: Arc<ModelLibrary>) -> Scene {
    let poly = vec![[0.0, 0.0], [5.0, 0.0], [5.0, 4.0], [0.0, 4.0]];
    let mut b = Builder::new("office", poly, lib);
    b.add("table_rect_140", [2.5, 2.0, 0.0], FRAC_PI_2, "office");
    b.add("chair_tall_back", [1.4, 2.0, 0.0], 0.0, "office");
    b.add("chair_basic", [3.6, 2.0, 0.0], PI, "office");
    b.add("laptop_15", [2.3, 2.15, TABLE_TOP], 0.0, "office");
    b.add("book_paperback", [2.75, 2.2, TABLE_TOP], 0.5, "office");
    b.add("book_hardcover", [2.45, 1.8, TABLE_TOP], 0.0, "office");
    b.add("cabinet_drawers_2", [4.65, 0.9, 0.0], PI, "office");
    b.add("lamp_floor", [0.4, 3.6, 0.0], 0.0, "office");
    b.add("cup_mug", [2.8, 1.8, TABLE_TOP], 0.0, "office");
    b.light(2.5, 2.0);
    b.light(4.0, 3.0);
    b.finish()
}

pub fn kitchen(lib: Arc<ModelLibrary>) -> Scene {
    let poly = vec![[0.0, 0.0], [6.0, 0.0], [6.0, 3.0], [3.0, 3.0], [3.0, 5.0], [0.0, 5.0]];
    let mut b = Builder::new("kitchen", poly, lib);
    b.add("fridge_double", [0.45, 4.3, 0.0], 0.0, "kitchen");
    b.add("cabinet_doors_2", [0.3, 3.0, 0.0], 0.0, "kitchen");
    b.add("cabinet_drawers_3", [5.7, 1.5, 0.0], PI, "kitchen");
    b.add("microwave_large", [5.7, 1.5, 0.9], PI, "kitchen");
    b.add("table_square_100", [2.5, 1.5, 0.0], 0.0, "kitchen");
    b.add("chair_basic", [1.6, 1.5, 0.0], 0.0, "kitchen");
    b.add("chair_wide", [3.4, 1.5, 0.0], PI, "kitchen");
    b.add("bowl_large", [2.35, 1.4, TABLE_TOP], 0.0, "kitchen");
    b.add("cup_tall", [2.7, 1.7, TABLE_TOP], 0.0, "kitchen");
    b.add("towel_hand", [2.7, 1.2, TABLE_TOP], 0.0, "kitchen");
    b.light(2.0, 1.5);
    b.light(1.5, 4.0);
    b.light(4.5, 1.5);
    b.finish()
}

pub fn living_room(lib: Arc<ModelLibrary>) -> Scene {
    let poly = vec![[0.0, 0.0], [7.0, 0.0], [7.0, 5.0], [0.0, 5.0]];
    let mut b = Builder::new("living_room", poly, lib);
    b.add("sofa_three_seat", [0.6, 2.5, 0.0], 0.0, "living");
    b.add("sofa_two_seat", [3.5, 4.4, 0.0], -FRAC_PI_2, "living");
    b.add("table_rect_120", [3.0, 2.5, 0.0], 0.0, "living");
    b.add("lamp_floor", [0.4, 4.5, 0.0], 0.0, "living");
    b.add("book_hardcover", [2.8, 2.4, TABLE_TOP], 0.0, "living");
    b.add("cup_mug", [3.2, 2.7, TABLE_TOP], 0.0, "living");
    b.add("bowl_large", [3.25, 2.2, TABLE_TOP], 0.0, "living");
    b.add("wardrobe_120", [6.6, 1.2, 0.0], PI, "living");
    b.add("chair_wide", [5.0, 2.5, 0.0], PI, "living");
    b.add("laptop_13", [2.8, 2.78, TABLE_TOP], 0.0, "living");
    b.light(1.8, 2.5);
    b.light(5.0, 2.5);
    b.finish()
}

pub fn template(name: &str, lib: Arc<ModelLibrary>) -> Option<Scene> {
    Some(match name {
        "apartment_small" => apartment_small(lib),
        "studio" => studio(lib),
        "office" => office(lib),
        "kitchen" => kitchen(lib),
        "living_room" => living_room(lib),
        _ => return None,
    })
}

/// The shipped copy of the `apartment_small` template.
pub const APARTMENT_SMALL_JSON: &str = include_str!("../../data/apartment_small.json");
