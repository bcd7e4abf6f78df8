//! Parametric archetypes standing in for a mesh asset library.
//!
//! Model frame convention: +x is the front, z = 0 is the lowest point with
//! joints closed, and the footprint is centered on the origin.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use super::model::{JointKind, JointSpec, Link, ObjectModel};
use crate::geometry::{Aabb, Part, Pose};

pub const WALL_HEIGHT: f64 = 2.5;
pub const WALL_THICKNESS: f64 = 0.1;
const WALL_PREFIX: &str = "wall_";

/// Models grouped by category. Structural wall models are parametric: any id
/// of the form `wall_<length in mm>` resolves to a wall panel of that length.
#[derive(Debug, Clone)]
pub struct ModelLibrary {
    models: BTreeMap<String, Arc<ObjectModel>>,
    categories: BTreeMap<String, Vec<String>>,
}

impl ModelLibrary {
    pub fn empty() -> Self {
        let mut lib = Self {
            models: BTreeMap::new(),
            categories: BTreeMap::new(),
        };
        // the parametric wall family always exists
        lib.categories.insert("wall".into(), Vec::new());
        lib
    }

    pub fn builtin() -> Self {
        let mut lib = Self::empty();
        for m in builtin_models() {
            lib.insert(m);
        }
        lib
    }

    pub fn insert(&mut self, model: ObjectModel) {
        let ids = self.categories.entry(model.category.clone()).or_default();
        if !ids.contains(&model.model_id) {
            ids.push(model.model_id.clone());
        }
        self.models.insert(model.model_id.clone(), Arc::new(model));
    }

    pub fn with_model(mut self, model: ObjectModel) -> Self {
        self.insert(model);
        self
    }

    pub fn model(&self, id: &str) -> Option<Arc<ObjectModel>> {
        if let Some(m) = self.models.get(id) {
            return Some(m.clone());
        }
        let mm: u32 = id.strip_prefix(WALL_PREFIX)?.parse().ok()?;
        (mm > 0).then(|| Arc::new(wall_model(id, mm as f64 / 1000.0)))
    }

    pub fn variants(&self, category: &str) -> Option<&[String]> {
        self.categories.get(category).map(|v| v.as_slice())
    }

    /// Category → model ids.
    pub fn registry(&self) -> &BTreeMap<String, Vec<String>> {
        &self.categories
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(|s| s.as_str())
    }

    /// Semantic label id: 1-based position in the sorted category list.
    pub fn category_id(&self, category: &str) -> u16 {
        self.categories
            .keys()
            .position(|c| c == category)
            .map(|i| i as u16 + 1)
            .unwrap_or(0)
    }

    pub fn models(&self) -> impl Iterator<Item = &Arc<ObjectModel>> {
        self.models.values()
    }
}

/// Id of the parametric wall panel closest to `length` meters.
pub fn wall_model_id(length: f64) -> String {
    format!("{WALL_PREFIX}{}", (length * 1000.0).round() as u32)
}

/// Category → variants of the builtin library.
pub fn builtin_library() -> BTreeMap<String, Vec<Arc<ObjectModel>>> {
    let lib = ModelLibrary::builtin();
    lib.registry()
        .iter()
        .filter(|(_, ids)| !ids.is_empty())
        .map(|(c, ids)| (c.clone(), ids.iter().filter_map(|id| lib.model(id)).collect()))
        .collect()
}

fn model(id: &str, category: &str, links: Vec<Link>) -> ObjectModel {
    ObjectModel {
        model_id: id.into(),
        category: category.into(),
        links,
        joints: Vec::new(),
        fillable_volume: None,
        is_light_source: false,
        is_structural: false,
        movable: true,
    }
}

fn wall_model(id: &str, length: f64) -> ObjectModel {
    let mut m = model(
        id,
        "wall",
        vec![Link::new(
            "base",
            vec![Part::cuboid([0.0, 0.0, WALL_HEIGHT / 2.0], [length, WALL_THICKNESS, WALL_HEIGHT])],
            [0.85, 0.83, 0.78],
        )],
    );
    m.is_structural = true;
    m.movable = false;
    m
}

fn floor_model() -> ObjectModel {
    let mut m = model(
        "floor",
        "floor",
        vec![Link::new(
            "base",
            vec![Part::cuboid([0.0, 0.0, -0.05], [40.0, 40.0, 0.1])],
            [0.55, 0.45, 0.35],
        )],
    );
    m.is_structural = true;
    m.movable = false;
    m
}

fn table(id: &str, w: f64, d: f64, color: [f64; 3]) -> ObjectModel {
    let h = 0.75;
    let top = 0.04;
    let leg = 0.05;
    let mut parts = vec![Part::cuboid([0.0, 0.0, h - top / 2.0], [d, w, top])];
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            parts.push(Part::cuboid(
                [sx * (d / 2.0 - leg), sy * (w / 2.0 - leg), (h - top) / 2.0],
                [leg, leg, h - top],
            ));
        }
    }
    model(id, "table", vec![Link::new("base", parts, color)])
}

struct Carcass {
    depth: f64,
    width: f64,
    height: f64,
    wall: f64,
}

impl Carcass {
    /// Five panels, open at the front (+x).
    fn parts(&self) -> Vec<Part> {
        let Carcass {
            depth: d,
            width: w,
            height: h,
            wall: t,
        } = *self;
        vec![
            Part::cuboid([0.0, 0.0, t / 2.0], [d, w, t]),
            Part::cuboid([0.0, 0.0, h - t / 2.0], [d, w, t]),
            Part::cuboid([0.0, w / 2.0 - t / 2.0, h / 2.0], [d, t, h - 2.0 * t]),
            Part::cuboid([0.0, -w / 2.0 + t / 2.0, h / 2.0], [d, t, h - 2.0 * t]),
            Part::cuboid([-d / 2.0 + t / 2.0, 0.0, h / 2.0], [t, w - 2.0 * t, h - 2.0 * t]),
        ]
    }

    fn interior(&self) -> Aabb {
        let Carcass {
            depth: d,
            width: w,
            height: h,
            wall: t,
        } = *self;
        Aabb::new(
            Point3::new(-d / 2.0 + t, -w / 2.0 + t, t),
            Point3::new(d / 2.0 - 0.005, w / 2.0 - t, h - t),
        )
    }
}

const FRONT: f64 = 0.02;

/// Drawer fronts stacked over the opening, each on a prismatic joint.
fn drawers(c: &Carcass, n: usize, travel: f64, color: [f64; 3]) -> (Vec<Link>, Vec<JointSpec>) {
    let slot = (c.height - 2.0 * c.wall) / n as f64;
    let mut links = Vec::new();
    let mut joints = Vec::new();
    for i in 0..n {
        let z0 = c.wall + i as f64 * slot;
        let zc = z0 + slot / 2.0;
        let x = c.depth / 2.0 + FRONT / 2.0;
        let link_id = format!("drawer_{i}");
        links.push(Link::new(
            link_id.clone(),
            vec![
                Part::cuboid([x, 0.0, zc], [FRONT, c.width - 0.006, slot - 0.006]),
                Part::cuboid([x + FRONT / 2.0 + 0.01, 0.0, zc], [0.02, c.width * 0.3, 0.02]),
            ],
            color,
        ));
        joints.push(JointSpec {
            joint_id: format!("drawer_{i}_slide"),
            kind: JointKind::Prismatic,
            axis: Vector3::x_axis(),
            origin: Pose::identity(),
            limits: [0.0, travel],
            child: link_id,
        });
    }
    (links, joints)
}

/// A door hinged on a vertical front edge. `side` +1 hinges at +y and swings
/// the panel (which extends toward -y) outward.
fn door(
    name: &str,
    c: &Carcass,
    side: f64,
    width: f64,
    z0: f64,
    z1: f64,
    max_angle: f64,
    color: [f64; 3],
) -> (Link, JointSpec) {
    let hinge = Vector3::new(c.depth / 2.0, side * c.width / 2.0, 0.0);
    let zc = (z0 + z1) / 2.0;
    let link = Link::new(
        name,
        vec![
            Part::cuboid([FRONT / 2.0, -side * (width / 2.0), zc], [FRONT, width - 0.006, z1 - z0 - 0.006]),
            Part::cuboid(
                [FRONT + 0.01, -side * (width - 0.05), zc],
                [0.02, 0.02, ((z1 - z0) * 0.25).min(0.3)],
            ),
        ],
        color,
    );
    let axis = if side > 0.0 { Vector3::z_axis() } else { -Vector3::z_axis() };
    let joint = JointSpec {
        joint_id: format!("{name}_hinge"),
        kind: JointKind::Revolute,
        axis,
        origin: Pose::from_translation(hinge),
        limits: [0.0, max_angle],
        child: name.into(),
    };
    (link, joint)
}

fn drawer_cabinet(id: &str, width: f64, height: f64, n: usize, color: [f64; 3]) -> ObjectModel {
    let c = Carcass {
        depth: 0.5,
        width,
        height,
        wall: 0.02,
    };
    let (mut links, joints) = drawers(&c, n, 0.3, [color[0] * 0.9, color[1] * 0.9, color[2] * 0.9]);
    links.insert(0, Link::new("base", c.parts(), color));
    let mut m = model(id, "cabinet", links);
    m.joints = joints;
    m.fillable_volume = Some(c.interior());
    m.movable = false;
    m
}

fn hinged_box(
    id: &str,
    category: &str,
    c: Carcass,
    doors: &[(f64, f64, f64, f64)],
    max_angle: f64,
    color: [f64; 3],
    door_color: [f64; 3],
) -> ObjectModel {
    let mut links = vec![Link::new("base", c.parts(), color)];
    let mut joints = Vec::new();
    for (i, &(side, width, z0, z1)) in doors.iter().enumerate() {
        let (l, j) = door(&format!("door_{i}"), &c, side, width, z0, z1, max_angle, door_color);
        links.push(l);
        joints.push(j);
    }
    let mut m = model(id, category, links);
    m.joints = joints;
    m.fillable_volume = Some(c.interior());
    m
}

fn chair(id: &str, seat: f64, back_h: f64, color: [f64; 3]) -> ObjectModel {
    let sh = 0.45;
    let leg = 0.04;
    let mut parts = vec![Part::cuboid([0.0, 0.0, sh - 0.025], [seat, seat, 0.05])];
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            parts.push(Part::cuboid(
                [sx * (seat / 2.0 - leg / 2.0), sy * (seat / 2.0 - leg / 2.0), (sh - 0.05) / 2.0],
                [leg, leg, sh - 0.05],
            ));
        }
    }
    parts.push(Part::cuboid([-seat / 2.0 + 0.02, 0.0, sh + back_h / 2.0], [0.04, seat, back_h]));
    model(id, "chair", vec![Link::new("base", parts, color)])
}

fn sofa(id: &str, width: f64, color: [f64; 3]) -> ObjectModel {
    let d = 0.9;
    let arm = 0.18;
    let parts = vec![
        Part::cuboid([0.0, 0.0, 0.2], [d, width, 0.4]),
        Part::cuboid([-d / 2.0 + 0.1, 0.0, 0.625], [0.2, width, 0.45]),
        Part::cuboid([0.1, width / 2.0 - arm / 2.0, 0.5], [d - 0.2, arm, 0.2]),
        Part::cuboid([0.1, -width / 2.0 + arm / 2.0, 0.5], [d - 0.2, arm, 0.2]),
    ];
    model(id, "sofa", vec![Link::new("base", parts, color)])
}

fn lamp(id: &str, pole: f64, shade_r: f64) -> ObjectModel {
    let parts = vec![
        Part::cylinder([0.0, 0.0, 0.015], shade_r * 0.8, 0.03, 12),
        Part::cylinder([0.0, 0.0, 0.03 + pole / 2.0], 0.015, pole, 8),
        Part::cylinder([0.0, 0.0, 0.03 + pole + 0.12], shade_r, 0.24, 12),
    ];
    let mut m = model(id, "lamp", vec![Link::new("base", parts, [0.95, 0.9, 0.7])]);
    m.is_light_source = true;
    m
}

/// Open-top octagonal vessel: a base plate plus eight wall slabs.
fn vessel(id: &str, category: &str, apothem: f64, height: f64, color: [f64; 3]) -> ObjectModel {
    let wall = 0.005;
    let bottom = 0.008;
    let circum = apothem / (PI / 8.0).cos();
    let mut parts = vec![Part::cylinder([0.0, 0.0, bottom / 2.0], circum, bottom, 8)];
    let side = 2.0 * apothem * (PI / 8.0).tan();
    for k in 0..8 {
        let a = k as f64 * FRAC_PI_4;
        let r = apothem - wall / 2.0;
        parts.push(
            Part::cuboid([0.0, 0.0, 0.0], [wall, side, height - bottom]).with_pose(Pose::from_yaw(
                Vector3::new(r * a.cos(), r * a.sin(), bottom + (height - bottom) / 2.0),
                a,
            )),
        );
    }
    let inner = (apothem - wall) / std::f64::consts::SQRT_2 * 0.98;
    let mut m = model(id, category, vec![Link::new("base", parts, color)]);
    m.fillable_volume = Some(Aabb::new(Point3::new(-inner, -inner, bottom), Point3::new(inner, inner, height)));
    m
}

fn book(id: &str, size: [f64; 3], color: [f64; 3]) -> ObjectModel {
    model(
        id,
        "book",
        vec![Link::new("base", vec![Part::cuboid([0.0, 0.0, size[2] / 2.0], size)], color)],
    )
}

fn laptop(id: &str, d: f64, w: f64) -> ObjectModel {
    let base_h = 0.02;
    let lid_t = 0.008;
    let base = Link::new(
        "base",
        vec![Part::cuboid([0.0, 0.0, base_h / 2.0], [d, w, base_h])],
        [0.3, 0.3, 0.32],
    );
    let lid = Link::new(
        "lid",
        vec![Part::cuboid([d / 2.0, 0.0, lid_t / 2.0], [d, w, lid_t])],
        [0.2, 0.2, 0.22],
    );
    let mut m = model(id, "laptop", vec![base, lid]);
    m.joints.push(JointSpec {
        joint_id: "lid_hinge".into(),
        kind: JointKind::Revolute,
        axis: -Vector3::y_axis(),
        origin: Pose::from_translation(Vector3::new(-d / 2.0, 0.0, base_h)),
        limits: [0.0, 1.9],
        child: "lid".into(),
    });
    m
}

fn towel(id: &str, size: [f64; 3], color: [f64; 3]) -> ObjectModel {
    model(
        id,
        "towel",
        vec![Link::new("base", vec![Part::cuboid([0.0, 0.0, size[2] / 2.0], size)], color)],
    )
}

fn builtin_models() -> Vec<ObjectModel> {
    let wood = [0.6, 0.42, 0.25];
    let white = [0.9, 0.9, 0.88];
    let mut out = vec![
        floor_model(),
        table("table_rect_120", 1.2, 0.8, wood),
        table("table_rect_140", 1.4, 0.8, [0.5, 0.35, 0.2]),
        table("table_square_100", 1.0, 1.0, [0.7, 0.55, 0.4]),
        drawer_cabinet("cabinet_drawers_3", 0.8, 0.9, 3, [0.75, 0.7, 0.6]),
        drawer_cabinet("cabinet_drawers_2", 1.0, 0.8, 2, [0.55, 0.5, 0.45]),
    ];
    let dc = Carcass {
        depth: 0.5,
        width: 0.9,
        height: 0.9,
        wall: 0.02,
    };
    let mut doors2 = hinged_box(
        "cabinet_doors_2",
        "cabinet",
        dc,
        &[(1.0, 0.45, 0.02, 0.88), (-1.0, 0.45, 0.02, 0.88)],
        1.6,
        [0.65, 0.6, 0.5],
        [0.6, 0.55, 0.45],
    );
    doors2.movable = false;
    out.push(doors2);

    for (id, w, h, split) in [("fridge_single", 0.75, 1.8, false), ("fridge_double", 0.8, 1.85, true)] {
        let c = Carcass {
            depth: 0.7,
            width: w,
            height: h,
            wall: 0.04,
        };
        let doors: Vec<(f64, f64, f64, f64)> = if split {
            vec![(1.0, w, 0.04, 1.25), (1.0, w, 1.25, h - 0.04)]
        } else {
            vec![(1.0, w, 0.04, h - 0.04)]
        };
        let mut m = hinged_box(id, "fridge", c, &doors, 1.8, white, [0.85, 0.86, 0.88]);
        m.movable = false;
        out.push(m);
    }
    for (id, d, w, h) in [("microwave_small", 0.38, 0.5, 0.3), ("microwave_large", 0.42, 0.56, 0.33)] {
        let c = Carcass {
            depth: d,
            width: w,
            height: h,
            wall: 0.015,
        };
        out.push(hinged_box(
            id,
            "microwave",
            c,
            &[(1.0, w, 0.015, h - 0.015)],
            1.7,
            [0.8, 0.8, 0.82],
            [0.15, 0.15, 0.18],
        ));
    }
    for (id, w) in [("wardrobe_100", 1.0), ("wardrobe_120", 1.2)] {
        let c = Carcass {
            depth: 0.6,
            width: w,
            height: 1.9,
            wall: 0.02,
        };
        let mut m = hinged_box(
            id,
            "wardrobe",
            c,
            &[(1.0, w / 2.0, 0.02, 1.88), (-1.0, w / 2.0, 0.02, 1.88)],
            1.6,
            [0.45, 0.3, 0.2],
            [0.5, 0.35, 0.25],
        );
        m.movable = false;
        out.push(m);
    }
    out.extend([
        chair("chair_basic", 0.45, 0.45, [0.35, 0.25, 0.2]),
        chair("chair_wide", 0.5, 0.4, [0.25, 0.3, 0.45]),
        chair("chair_tall_back", 0.45, 0.6, [0.5, 0.2, 0.2]),
        sofa("sofa_two_seat", 1.6, [0.3, 0.35, 0.5]),
        sofa("sofa_three_seat", 2.0, [0.45, 0.4, 0.35]),
        lamp("lamp_floor", 1.4, 0.2),
        lamp("lamp_table", 0.3, 0.12),
        vessel("cup_tall", "cup", 0.05, 0.12, [0.9, 0.3, 0.2]),
        vessel("cup_mug", "cup", 0.055, 0.1, [0.2, 0.5, 0.8]),
        vessel("bowl_small", "bowl", 0.08, 0.07, [0.85, 0.85, 0.8]),
        vessel("bowl_large", "bowl", 0.11, 0.08, [0.3, 0.6, 0.4]),
        book("book_paperback", [0.15, 0.22, 0.035], [0.8, 0.2, 0.25]),
        book("book_hardcover", [0.17, 0.24, 0.05], [0.2, 0.3, 0.6]),
        laptop("laptop_13", 0.22, 0.31),
        laptop("laptop_15", 0.25, 0.36),
        towel("towel_hand", [0.2, 0.3, 0.03], [0.95, 0.95, 0.9]),
        towel("towel_bath", [0.25, 0.4, 0.04], [0.6, 0.8, 0.85]),
    ]);
    out
}
