//! Forward-kinematics-posed scene geometry and the triangle BVH used for ray
//! queries.

use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use super::{Aabb, Hull, Obb, Part, Pose};
use crate::scene::{InstanceId, ObjectInstance, ObjectModel, Scene};

const FLUID_ALBEDO: [f64; 3] = [0.25, 0.45, 0.9];
const FOLDED_TINT: f64 = 0.75;
const LEAF_SIZE: usize = 4;
const T_MIN: f64 = 1e-9;

/// An instance with its links placed in the world.
#[derive(Debug, Clone)]
pub struct PosedInstance {
    pub instance_id: InstanceId,
    pub category: String,
    pub semantic_id: u16,
    pub model: Arc<ObjectModel>,
    pub pose: Pose,
    pub structural: bool,
    /// World frame of each link.
    pub link_world: Vec<Pose>,
    /// Solid convex parts in world coordinates, tagged with their link index.
    pub hulls: Vec<(usize, Hull)>,
    /// Render-only fill region for partially filled containers.
    pub fluid: Option<Hull>,
    /// World bounds of the solid parts.
    pub aabb: Aabb,
    /// Bounds of the posed links in the model frame.
    pub local_aabb: Aabb,
}

impl PosedInstance {
    pub fn obb(&self) -> Obb {
        let c = self.local_aabb.center();
        Obb {
            center: self.pose.transform_point(&c),
            half_extents: self.local_aabb.extents() * 0.5,
            rotation: self.pose.rotation,
        }
    }

    pub fn link_id(&self, link: usize) -> &str {
        &self.model.links[link].link_id
    }
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    v0: Vector3<f64>,
    e1: Vector3<f64>,
    e2: Vector3<f64>,
    normal: Vector3<f64>,
    surface: u32,
}

/// What a triangle belongs to.
#[derive(Debug, Clone, Copy)]
pub struct Surface {
    pub instance: u32,
    pub link: u16,
    pub albedo: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
struct Node {
    min: [f64; 3],
    max: [f64; 3],
    /// First triangle for leaves, first child for inner nodes.
    start: u32,
    count: u32,
}

#[derive(Debug, Clone)]
pub struct Hit {
    pub instance_id: InstanceId,
    /// Index into `PosedScene::instances`.
    pub instance_index: usize,
    pub link: usize,
    pub distance: f64,
    pub point: Point3<f64>,
    /// Outward unit normal of the hit triangle.
    pub normal: Vector3<f64>,
    pub albedo: [f64; 3],
    pub triangle: u32,
}

/// Per-instance exclusion mask indexed like `PosedScene::instances`; `true`
/// makes the instance transparent to rays.
pub type RayFilter<'a> = Option<&'a [bool]>;

/// The scene after forward kinematics, sorted by instance id so results do
/// not depend on the authored instance order.
#[derive(Debug, Clone)]
pub struct PosedScene {
    pub instances: Vec<PosedInstance>,
    pub surfaces: Vec<Surface>,
    tris: Vec<Tri>,
    nodes: Vec<Node>,
}

/// Applies forward kinematics to one instance.
pub fn pose_instance(scene: &Scene, inst: &ObjectInstance) -> PosedInstance {
    let model = scene.model_of(inst);
    let local = model.link_poses(&inst.joint_state);
    let link_world: Vec<Pose> = local.iter().map(|p| inst.pose.compose(p)).collect();
    let mut hulls = Vec::new();
    let mut local_aabb = Aabb::empty();
    for (li, link) in model.links.iter().enumerate() {
        for h in &link.hulls {
            local_aabb = local_aabb.union(&h.aabb.transformed(&local[li]));
            hulls.push((li, h.transformed(&link_world[li])));
        }
    }
    let aabb = hulls.iter().fold(Aabb::empty(), |b, (_, h)| b.union(&h.aabb));
    let fluid = match (model.fillable_volume, inst.filled_fraction > 0.0) {
        (Some(fv), true) => {
            let top = fv.min.z + inst.filled_fraction.min(1.0) * (fv.max.z - fv.min.z);
            let c = [(fv.min.x + fv.max.x) / 2.0, (fv.min.y + fv.max.y) / 2.0, (fv.min.z + top) / 2.0];
            let size = [fv.max.x - fv.min.x, fv.max.y - fv.min.y, (top - fv.min.z).max(1e-4)];
            Some(Hull::from_part(&Part::cuboid(c, size)).transformed(&inst.pose))
        }
        _ => None,
    };
    PosedInstance {
        instance_id: inst.instance_id,
        category: inst.category.clone(),
        semantic_id: scene.library.category_id(&inst.category),
        structural: model.is_structural,
        pose: inst.pose,
        link_world,
        hulls,
        fluid,
        aabb,
        local_aabb,
        model,
    }
}

/// Deepest separating-axis penetration between two hull sets.
pub fn max_penetration(a: &[(usize, Hull)], b: &[(usize, Hull)]) -> f64 {
    let mut worst = 0.0f64;
    for (_, ha) in a {
        for (_, hb) in b {
            if ha.aabb.overlaps(&hb.aabb) {
                worst = worst.max(ha.penetration_depth(hb));
            }
        }
    }
    worst
}

impl PosedScene {
    pub fn new(scene: &Scene) -> PosedScene {
        let mut order: Vec<usize> = (0..scene.instances.len()).collect();
        order.sort_by_key(|&i| scene.instances[i].instance_id);
        let instances: Vec<PosedInstance> = order
            .iter()
            .map(|&i| pose_instance(scene, &scene.instances[i]))
            .collect();
        let mut tris = Vec::new();
        let mut surfaces = Vec::new();
        for (ii, pi) in instances.iter().enumerate() {
            let inst = scene.instance(pi.instance_id).expect("instance present");
            let tint = if inst.folded { FOLDED_TINT } else { 1.0 };
            for (li, link) in pi.model.links.iter().enumerate() {
                let albedo = link.albedo.map(|c| c * tint);
                let sid = surfaces.len() as u32;
                surfaces.push(Surface {
                    instance: ii as u32,
                    link: li as u16,
                    albedo,
                });
                for (hl, h) in &pi.hulls {
                    if *hl == li {
                        push_tris(&mut tris, h, sid);
                    }
                }
            }
            if let Some(f) = &pi.fluid {
                let sid = surfaces.len() as u32;
                surfaces.push(Surface {
                    instance: ii as u32,
                    link: 0,
                    albedo: FLUID_ALBEDO,
                });
                push_tris(&mut tris, f, sid);
            }
        }
        let mut ps = PosedScene {
            instances,
            surfaces,
            tris,
            nodes: Vec::new(),
        };
        ps.build_bvh();
        ps
    }

    pub fn index_of(&self, id: InstanceId) -> Option<usize> {
        self.instances.binary_search_by_key(&id, |p| p.instance_id).ok()
    }

    pub fn get(&self, id: InstanceId) -> Option<&PosedInstance> {
        self.index_of(id).map(|i| &self.instances[i])
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    /// Deepest penetration of `hulls` into any instance not in `ignore`.
    pub fn penetration_against(&self, hulls: &[(usize, Hull)], ignore: &[InstanceId]) -> f64 {
        let mut bounds = Aabb::empty();
        for (_, h) in hulls {
            bounds = bounds.union(&h.aabb);
        }
        self.instances
            .iter()
            .filter(|p| !ignore.contains(&p.instance_id) && p.aabb.overlaps(&bounds))
            .map(|p| max_penetration(hulls, &p.hulls))
            .fold(0.0, f64::max)
    }

    /// True when `p` keeps at least `margin` from every solid part.
    pub fn point_is_clear(&self, p: &Point3<f64>, margin: f64) -> bool {
        self.instances
            .iter()
            .filter(|pi| pi.aabb.expanded(margin).contains_point(p))
            .all(|pi| !pi.hulls.iter().any(|(_, h)| h.contains_point(p, margin)))
    }

    /// Exclusion mask hiding the listed instances.
    pub fn mask_hiding(&self, ids: &[InstanceId]) -> Vec<bool> {
        self.instances.iter().map(|p| ids.contains(&p.instance_id)).collect()
    }

    fn build_bvh(&mut self) {
        let n = self.tris.len();
        let cents: Vec<Vector3<f64>> = self
            .tris
            .iter()
            .map(|t| t.v0 + (t.e1 + t.e2) / 3.0)
            .collect();
        let mut idx: Vec<u32> = (0..n as u32).collect();
        let mut nodes = vec![Node {
            min: [0.0; 3],
            max: [0.0; 3],
            start: 0,
            count: 0,
        }];
        if n > 0 {
            self.subdivide(&mut nodes, 0, &mut idx, 0, n, &cents);
        } else {
            nodes[0].min = [f64::INFINITY; 3];
            nodes[0].max = [f64::NEG_INFINITY; 3];
        }
        let tris = idx.iter().map(|&i| self.tris[i as usize]).collect();
        self.tris = tris;
        self.nodes = nodes;
    }

    fn subdivide(&self, nodes: &mut Vec<Node>, ni: usize, idx: &mut [u32], lo: usize, hi: usize, cents: &[Vector3<f64>]) {
        let mut b = Aabb::empty();
        let mut cb = Aabb::empty();
        for &i in &idx[lo..hi] {
            let t = &self.tris[i as usize];
            b.grow(&Point3::from(t.v0));
            b.grow(&Point3::from(t.v0 + t.e1));
            b.grow(&Point3::from(t.v0 + t.e2));
            cb.grow(&Point3::from(cents[i as usize]));
        }
        nodes[ni].min = [b.min.x, b.min.y, b.min.z];
        nodes[ni].max = [b.max.x, b.max.y, b.max.z];
        if hi - lo <= LEAF_SIZE {
            nodes[ni].start = lo as u32;
            nodes[ni].count = (hi - lo) as u32;
            return;
        }
        let Some((_axis, mid)) = sah_split(&self.tris, idx, lo, hi, cents, &b, &cb) else {
            nodes[ni].start = lo as u32;
            nodes[ni].count = (hi - lo) as u32;
            return;
        };
        let left = nodes.len();
        let blank = Node {
            min: [0.0; 3],
            max: [0.0; 3],
            start: 0,
            count: 0,
        };
        nodes.push(blank);
        nodes.push(blank);
        nodes[ni].start = left as u32;
        nodes[ni].count = 0;
        self.subdivide(nodes, left, idx, lo, mid, cents);
        self.subdivide(nodes, left + 1, idx, mid, hi, cents);
    }

    /// Nearest hit along a unit-direction ray, skipping masked instances.
    /// Equal distances resolve to the triangle of the lower instance id.
    pub fn cast(&self, origin: &Point3<f64>, dir: &Vector3<f64>, skip: RayFilter<'_>) -> Option<Hit> {
        self.cast_within(origin, dir, skip, f64::INFINITY)
    }

    pub fn cast_within(&self, origin: &Point3<f64>, dir: &Vector3<f64>, skip: RayFilter<'_>, t_max: f64) -> Option<Hit> {
        let (t, tri) = self.nearest(origin, dir, skip, t_max)?;
        let tr = &self.tris[tri as usize];
        let s = self.surfaces[tr.surface as usize];
        let pi = &self.instances[s.instance as usize];
        Some(Hit {
            instance_id: pi.instance_id,
            instance_index: s.instance as usize,
            link: s.link as usize,
            distance: t,
            point: origin + dir * t,
            normal: tr.normal,
            albedo: s.albedo,
            triangle: tri,
        })
    }

    fn nearest(&self, o: &Point3<f64>, d: &Vector3<f64>, skip: RayFilter<'_>, t_max: f64) -> Option<(f64, u32)> {
        if self.tris.is_empty() {
            return None;
        }
        let inv = [1.0 / d.x, 1.0 / d.y, 1.0 / d.z];
        let o = [o.x, o.y, o.z];
        let mut best_t = t_max;
        let mut best: Option<(f64, u32, u32)> = None;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        if slab(&self.nodes[0], &o, &inv, best_t).is_none() {
            return None;
        }
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if node.count > 0 {
                let first = node.start as usize;
                for k in first..first + node.count as usize {
                    let tr = &self.tris[k];
                    if let Some(mask) = skip {
                        if mask[self.surfaces[tr.surface as usize].instance as usize] {
                            continue;
                        }
                    }
                    if let Some(t) = intersect(tr, &o, d) {
                        let inst = self.surfaces[tr.surface as usize].instance;
                        let better = match best {
                            None => t <= best_t,
                            Some((bt, bi, bk)) => t < bt || (t == bt && (inst, k as u32) < (bi, bk)),
                        };
                        if better {
                            best = Some((t, inst, k as u32));
                            best_t = t;
                        }
                    }
                }
                continue;
            }
            let l = node.start as usize;
            let r = l + 1;
            let tl = slab(&self.nodes[l], &o, &inv, best_t);
            let tr = slab(&self.nodes[r], &o, &inv, best_t);
            match (tl, tr) {
                (Some(a), Some(b)) => {
                    let (near, far) = if a <= b { (l, r) } else { (r, l) };
                    stack[sp] = far as u32;
                    stack[sp + 1] = near as u32;
                    sp += 2;
                }
                (Some(_), None) => {
                    stack[sp] = l as u32;
                    sp += 1;
                }
                (None, Some(_)) => {
                    stack[sp] = r as u32;
                    sp += 1;
                }
                (None, None) => {}
            }
        }
        best.map(|(t, _, k)| (t, k))
    }
}

const SAH_BINS: usize = 16;
const MAX_LEAF: usize = 16;

fn half_area(b: &Aabb) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    let e = b.extents();
    e.x * e.y + e.y * e.z + e.z * e.x
}

fn tri_bounds(t: &Tri) -> Aabb {
    let mut b = Aabb::empty();
    b.grow(&Point3::from(t.v0));
    b.grow(&Point3::from(t.v0 + t.e1));
    b.grow(&Point3::from(t.v0 + t.e2));
    b
}

/// Binned surface-area split. Reorders `idx[lo..hi]` and returns the split
/// axis and position, or `None` when a leaf is cheaper.
fn sah_split(
    tris: &[Tri],
    idx: &mut [u32],
    lo: usize,
    hi: usize,
    cents: &[Vector3<f64>],
    bounds: &Aabb,
    cb: &Aabb,
) -> Option<(usize, usize)> {
    let n = hi - lo;
    let leaf_cost = n as f64;
    let parent = half_area(bounds).max(1e-300);
    let mut best: Option<(f64, usize, usize)> = None;
    for axis in 0..3 {
        let (cmin, cmax) = (cb.min[axis], cb.max[axis]);
        if cmax - cmin <= 1e-12 {
            continue;
        }
        let scale = SAH_BINS as f64 / (cmax - cmin);
        let bin_of = |i: u32| (((cents[i as usize][axis] - cmin) * scale) as usize).min(SAH_BINS - 1);
        let mut counts = [0usize; SAH_BINS];
        let mut boxes = [Aabb::empty(); SAH_BINS];
        for &i in &idx[lo..hi] {
            let k = bin_of(i);
            counts[k] += 1;
            boxes[k] = boxes[k].union(&tri_bounds(&tris[i as usize]));
        }
        let mut right_area = [0.0; SAH_BINS];
        let mut right_count = [0usize; SAH_BINS];
        let mut acc = Aabb::empty();
        let mut c = 0;
        for k in (1..SAH_BINS).rev() {
            acc = acc.union(&boxes[k]);
            c += counts[k];
            right_area[k] = half_area(&acc);
            right_count[k] = c;
        }
        let mut acc = Aabb::empty();
        let mut c = 0;
        for k in 0..SAH_BINS - 1 {
            acc = acc.union(&boxes[k]);
            c += counts[k];
            if c == 0 || right_count[k + 1] == 0 {
                continue;
            }
            let cost = 0.5 + (half_area(&acc) * c as f64 + right_area[k + 1] * right_count[k + 1] as f64) / parent;
            if best.is_none_or(|(b, _, _)| cost < b) {
                best = Some((cost, axis, k));
            }
        }
    }
    match best {
        Some((cost, axis, k)) if cost < leaf_cost || n > MAX_LEAF => {
            let (cmin, cmax) = (cb.min[axis], cb.max[axis]);
            let scale = SAH_BINS as f64 / (cmax - cmin);
            let slice = &mut idx[lo..hi];
            slice.sort_by(|&a, &b| cents[a as usize][axis].total_cmp(&cents[b as usize][axis]).then(a.cmp(&b)));
            let left = slice
                .iter()
                .take_while(|&&i| ((((cents[i as usize][axis] - cmin) * scale) as usize).min(SAH_BINS - 1)) <= k)
                .count();
            Some((axis, lo + left))
        }
        Some(_) => None,
        None if n > MAX_LEAF => {
            // coincident centroids: split by count
            Some((0, lo + n / 2))
        }
        None => None,
    }
}

fn push_tris(out: &mut Vec<Tri>, h: &Hull, surface: u32) {
    for [a, b, c] in h.triangles() {
        let e1 = b - a;
        let e2 = c - a;
        let n = e1.cross(&e2);
        let len = n.norm();
        if len < 1e-15 {
            continue;
        }
        out.push(Tri {
            v0: a.coords,
            e1,
            e2,
            normal: n / len,
            surface,
        });
    }
}

#[inline]
fn slab(n: &Node, o: &[f64; 3], inv: &[f64; 3], t_max: f64) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = t_max;
    for i in 0..3 {
        let a = (n.min[i] - o[i]) * inv[i];
        let b = (n.max[i] - o[i]) * inv[i];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        // NaN (0 * inf) leaves the interval unchanged
        if lo > t0 {
            t0 = lo;
        }
        if hi < t1 {
            t1 = hi;
        }
    }
    (t0 <= t1).then_some(t0)
}

/// Möller–Trumbore, two-sided.
#[inline]
fn intersect(tr: &Tri, o: &[f64; 3], d: &Vector3<f64>) -> Option<f64> {
    let p = d.cross(&tr.e2);
    let det = tr.e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = Vector3::new(o[0] - tr.v0.x, o[1] - tr.v0.y, o[2] - tr.v0.z);
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&tr.e1);
    let v = d.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = tr.e2.dot(&q) * inv;
    (t > T_MIN).then_some(t)
}

/// Nearest intersection of a unit-direction ray with the posed scene.
pub fn ray_cast(scene: &PosedScene, origin: &Point3<f64>, direction: &Vector3<f64>) -> Option<Hit> {
    scene.cast(origin, direction, None)
}
