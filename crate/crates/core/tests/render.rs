mod common;

use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthscene_core::geometry::{ray_cast, Pose, PosedScene};
use synthscene_core::render::{
    flow, look_at, point_cloud, render, visibility_ratio, yaw_pitch_pose, CameraIntrinsics, FrameLabels, AMBIENT,
};
use synthscene_core::scene::{templates, InstanceId, Scene};

use common::{add, box_model, lib, room_with};

const ALBEDO: [f64; 3] = [0.8, 0.4, 0.2];

/// Unit cube on the floor at (5, 5), camera 3 m in front at mid height.
fn cube_view() -> (Scene, InstanceId, Pose, CameraIntrinsics) {
    let mut s = room_with(10.0, vec![box_model("cube", [1.0; 3]), box_model("panel", [1.0, 0.02, 1.2])]);
    let id = add(&mut s, "cube", [5.0, 5.0, 0.0], 0.0);
    let pose = look_at(Point3::new(5.0, 2.0, 0.5), Point3::new(5.0, 5.0, 0.5));
    (s, id, pose, CameraIntrinsics::new(96, 72, 80.0))
}

fn frame(s: &Scene, pose: &Pose, k: &CameraIntrinsics, light: f64) -> FrameLabels {
    render(&PosedScene::new(s), &s.lights, pose, k, light)
}

#[test]
fn cube_projects_to_analytic_square() {
    let (s, id, pose, k) = cube_view();
    let f = frame(&s, &pose, &k, 1.0);
    // face half-width 0.5 m at 2.5 m: 16 px around the principal point
    let half = k.fx * 0.5 / 2.5;
    let (x0, x1, y0, y1) = (k.cx - half, k.cx + half, k.cy - half, k.cy + half);
    for v in 0..k.height {
        for u in 0..k.width {
            let (px, py) = (u as f64 + 0.5, v as f64 + 0.5);
            let on = f.instance_seg[(v * k.width + u) as usize] as InstanceId == id;
            let inside = px > x0 + 1.0 && px < x1 - 1.0 && py > y0 + 1.0 && py < y1 - 1.0;
            let outside = px < x0 - 1.0 || px > x1 + 1.0 || py < y0 - 1.0 || py > y1 + 1.0;
            assert!(!(inside && !on) && !(outside && on), "pixel ({u}, {v})");
        }
    }
    let b = f.boxes2d[&id];
    assert_eq!(b.pixel_count, 32 * 32);
    assert_eq!(b.to_xyxy(), [x0, y0, x1, y1]);
}

#[test]
fn dark_frame_is_ambient_albedo() {
    let (s, id, pose, k) = cube_view();
    let f = frame(&s, &pose, &k, 0.0);
    let want = ALBEDO.map(|a| (a * AMBIENT * 255.0).round() as u8);
    let mut n = 0;
    for (i, &seg) in f.instance_seg.iter().enumerate() {
        if seg as InstanceId == id {
            assert_eq!(&f.rgb[3 * i..3 * i + 3], &want);
            n += 1;
        }
    }
    assert!(n > 0);
}

#[test]
fn visibility_cases() {
    let (mut s, id, pose, k) = cube_view();
    let ps = PosedScene::new(&s);
    assert_eq!(visibility_ratio(&ps, id, &[], &pose, &k).unwrap(), 1.0);
    // panel in front of the left half of the face
    let half = add(&mut s, "panel", [4.5, 3.5, 0.0], 0.0);
    let r = visibility_ratio(&PosedScene::new(&s), id, &[half], &pose, &k).unwrap();
    assert!((r - 0.5).abs() <= 0.05, "{r}");
    s.instances.retain(|i| i.instance_id != half);
    let mut wide = room_with(10.0, vec![box_model("cube", [1.0; 3]), box_model("screen", [2.0, 0.02, 2.0])]);
    wide.instances = s.instances.clone();
    let full = add(&mut wide, "screen", [5.0, 3.5, 0.0], 0.0);
    assert_eq!(visibility_ratio(&PosedScene::new(&wide), id, &[full], &pose, &k).unwrap(), 0.0);
    assert!(visibility_ratio(&PosedScene::new(&wide), 999, &[], &pose, &k).is_err());
}

/// Camera 10 m in front of a broad wall.
fn wall_view() -> (Scene, InstanceId, Pose, CameraIntrinsics) {
    let mut s = room_with(30.0, vec![box_model("wall", [40.0, 0.2, 20.0]), box_model("cube", [1.0; 3])]);
    let id = add(&mut s, "wall", [15.0, 15.1, 0.0], 0.0);
    let pose = look_at(Point3::new(15.0, 5.0, 1.5), Point3::new(15.0, 15.0, 1.5));
    (s, id, pose, CameraIntrinsics::new(96, 72, 80.0))
}

#[test]
fn identity_flow_is_zero() {
    let (s, _, pose, k) = wall_view();
    let ps = PosedScene::new(&s);
    let f = flow(&ps, &pose, &pose, &k);
    let depth = frame(&s, &pose, &k, 1.0).depth;
    for i in 0..f.flow.len() {
        assert_eq!(f.valid[i], depth[i] > 0.0);
        if f.valid[i] {
            assert!(f.flow[i][0].abs() < 1e-4 && f.flow[i][1].abs() < 1e-4);
        }
    }
}

#[test]
fn sideways_translation_gives_uniform_flow() {
    let (s, wall, pose, k) = wall_view();
    // 10 px at 10 m with fx 80
    let step = 10.0 * 10.0 / k.fx;
    let moved = Pose::new(pose.translation - Vector3::new(step, 0.0, 0.0), pose.rotation);
    let f = flow(&PosedScene::new(&s), &pose, &moved, &k);
    let seg = frame(&s, &pose, &k, 1.0).instance_seg;
    let mut n = 0;
    for i in 0..seg.len() {
        if seg[i] as InstanceId == wall && f.valid[i] {
            assert!((f.flow[i][0] - 10.0).abs() <= 0.5 && f.flow[i][1].abs() <= 0.5, "{:?}", f.flow[i]);
            n += 1;
        }
    }
    assert!(n > 1000, "{n}");
}

#[test]
fn pixels_hidden_at_second_view_are_invalid() {
    let (mut s, wall, pose, k) = wall_view();
    add(&mut s, "cube", [17.0, 10.0, 1.0], 0.0);
    let moved = Pose::new(pose.translation + Vector3::new(2.0, 0.0, 0.0), pose.rotation);
    let ps = PosedScene::new(&s);
    let f = flow(&ps, &pose, &moved, &k);
    let a = frame(&s, &pose, &k, 1.0);
    let b = frame(&s, &moved, &k, 1.0);
    let w = k.width as usize;
    let mut hidden = 0;
    for i in 0..a.depth.len() {
        if a.instance_seg[i] as InstanceId != wall {
            continue;
        }
        let (u, v) = ((i % w) as f64 + 0.5 + f.flow[i][0] as f64, (i / w) as f64 + 0.5 + f.flow[i][1] as f64);
        if u < 0.0 || v < 0.0 || u >= k.width as f64 || v >= k.height as f64 {
            assert!(!f.valid[i]);
            continue;
        }
        let j = v.floor() as usize * w + u.floor() as usize;
        if b.instance_seg[j] as InstanceId != wall {
            assert!(!f.valid[i], "pixel {i} lands on {} yet is valid", b.instance_seg[j]);
            hidden += 1;
        }
    }
    assert!(hidden > 20, "{hidden}");
}

#[test]
fn floor_points_lie_on_the_floor_and_reproject() {
    let s = common::empty_room(8.0);
    let floor = s.instances[0].instance_id;
    let pose = yaw_pitch_pose(Point3::new(4.0, 4.0, 1.5), 0.3, -1.0);
    let k = CameraIntrinsics::new(64, 48, 50.0);
    let f = frame(&s, &pose, &k, 1.0);
    let pts = point_cloud(&f, &pose, &k);
    let hits: Vec<usize> = (0..f.depth.len()).filter(|&i| f.depth[i] > 0.0).collect();
    assert_eq!(pts.len(), hits.len());
    assert!(!pts.is_empty());
    for (p, &i) in pts.iter().zip(&hits) {
        if f.instance_seg[i] as InstanceId == floor {
            assert!(p.z.abs() < 1e-4, "{p}");
        }
        let (u, v, _) = k.project(&pose, p).unwrap();
        let (pu, pv) = ((i % 64) as f64 + 0.5, (i / 64) as f64 + 0.5);
        assert!((u - pu).abs() < 1e-3 && (v - pv).abs() < 1e-3);
    }
}

/// Distance from `p` to the surface of the axis-aligned box [lo, hi].
fn box_surface_distance(p: &Point3<f64>, lo: [f64; 3], hi: [f64; 3]) -> f64 {
    let mut out = 0.0f64;
    let mut inside = f64::INFINITY;
    for a in 0..3 {
        let d = (lo[a] - p[a]).max(p[a] - hi[a]);
        out += d.max(0.0).powi(2);
        inside = inside.min(-d);
    }
    if out > 0.0 {
        out.sqrt()
    } else {
        inside.max(0.0)
    }
}

#[test]
fn merged_cube_points_lie_on_the_cube() {
    let (s, id, _, k) = cube_view();
    let mut n = 0;
    for eye in [Point3::new(3.0, 2.5, 2.0), Point3::new(7.5, 3.0, 1.8)] {
        let pose = look_at(eye, Point3::new(5.0, 5.0, 0.5));
        let f = frame(&s, &pose, &k, 1.0);
        let pts = point_cloud(&f, &pose, &k);
        let hit_seg: Vec<u16> = f.instance_seg.iter().zip(&f.depth).filter(|(_, &d)| d > 0.0).map(|(&s, _)| s).collect();
        for (p, &sg) in pts.iter().zip(&hit_seg) {
            if sg as InstanceId == id {
                assert!(box_surface_distance(p, [4.5, 4.5, 0.0], [5.5, 5.5, 1.0]) < 1e-4, "{p}");
                n += 1;
            }
        }
    }
    assert!(n > 500, "{n}");
}

fn random_views(seed: u64, n: usize) -> Vec<Pose> {
    let s = templates::apartment_small(lib());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &s.floor_polygon {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let eye = Point3::new(rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1]), rng.random_range(0.8..1.8));
            yaw_pitch_pose(eye, rng.random_range(-3.1..3.1), rng.random_range(-0.6..0.3))
        })
        .collect()
}

#[test]
fn depth_matches_ray_cast_at_random_pixels() {
    let s = templates::apartment_small(lib());
    let ps = PosedScene::new(&s);
    let k = CameraIntrinsics::new(64, 48, 55.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for pose in random_views(7, 10) {
        let f = render(&ps, &s.lights, &pose, &k, 1.0);
        for _ in 0..100 {
            let (u, v) = (rng.random_range(0..k.width), rng.random_range(0..k.height));
            let d = f.depth[(v * k.width + u) as usize] as f64;
            let dir = pose.transform_vector(&k.pixel_ray(u, v));
            match ray_cast(&ps, &Point3::from(pose.translation), &dir) {
                Some(h) => assert!((d - h.distance).abs() <= 1e-6 * h.distance, "{d} vs {}", h.distance),
                None => assert_eq!(d, 0.0),
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 1000);
}

#[test]
fn frame_invariants_on_random_views() {
    let s = templates::apartment_small(lib());
    let ps = PosedScene::new(&s);
    let mut reversed = s.clone();
    reversed.instances.reverse();
    let pr = PosedScene::new(&reversed);
    let k = CameraIntrinsics::new(48, 36, 40.0);
    for pose in random_views(3, 6) {
        let f = render(&ps, &s.lights, &pose, &k, 0.7);
        let total: u64 = f.boxes2d.values().map(|b| b.pixel_count).sum::<u64>() + f.background_count();
        assert_eq!(total, (k.width * k.height) as u64);
        for (i, n) in f.normals.iter().enumerate() {
            if f.depth[i] > 0.0 {
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                assert!((len - 1.0).abs() <= 1e-4);
            }
            if f.instance_seg[i] != 0 {
                assert!(f.depth[i].is_finite() && f.depth[i] > 0.0);
            }
        }
        assert_eq!(render(&ps, &s.lights, &pose, &k, 0.7), f, "render is deterministic");
        assert_eq!(render(&pr, &reversed.lights, &pose, &k, 0.7), f, "instance order matters");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn luminance_grows_with_light(view in 0usize..6, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let s = templates::apartment_small(lib());
        let ps = PosedScene::new(&s);
        let k = CameraIntrinsics::new(32, 24, 28.0);
        let pose = random_views(11, 6)[view];
        let (lo, hi) = (a.min(b), a.max(b));
        let l0 = render(&ps, &s.lights, &pose, &k, lo).mean_luminance();
        let l1 = render(&ps, &s.lights, &pose, &k, hi).mean_luminance();
        prop_assert!(l0 <= l1, "{} > {}", l0, l1);
    }
}
