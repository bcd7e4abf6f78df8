mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use common::clips::{check_clip, isolation_failures, CheckSink};
use common::{add, empty_room, lib};
use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use synthscene_core::axes::*;
use synthscene_core::geometry::{Hull, Part, PosedScene};
use synthscene_core::labels::{read_clip_labels, read_manifest};
use synthscene_core::render::{look_at, render, trace, yaw_pitch, CameraIntrinsics, AMBIENT};

fn small(n_frames: u32) -> AxisConfig {
    AxisConfig {
        n_frames,
        width: 160,
        height: 120,
        seed: 3,
        ..AxisConfig::default()
    }
}

/// First template-based plan that succeeds for `axis`.
fn plan_from_templates(axis: Axis, cfg: &AxisConfig) -> ClipPlan {
    let library = lib();
    for seed in 0..40 {
        let scene = random_scene(&library, cfg, seed).unwrap();
        if let Ok(p) = plan_clip(axis, &scene, &format!("{axis}_test"), cfg, seed) {
            return p;
        }
    }
    panic!("no {axis} clip could be planned");
}

fn run(plan: &ClipPlan) -> CheckSink {
    let mut sink = CheckSink {
        keep_frames: true,
        ..CheckSink::default()
    };
    sink.begin(plan, &clip_header(plan)).unwrap();
    render_plan(plan, |f| sink.frame(plan, f)).unwrap();
    sink.end(plan, true).unwrap();
    sink
}

fn assert_clean(sink: &CheckSink) {
    assert!(sink.failures.is_empty(), "{:#?}", sink.failures);
}

#[test]
fn config_defaults_validate() {
    let cfg = AxisConfig::default();
    cfg.validate().unwrap();
    assert_eq!(cfg.n_frames, 300);
    assert_eq!(cfg.pitch_range_deg, [-45.0, 45.0]);
    assert!(AxisConfig { n_frames: 1, ..cfg.clone() }.validate().is_err());
    assert!(AxisConfig { pitch_range_deg: [10.0, -10.0], ..cfg.clone() }.validate().is_err());
    assert!(AxisConfig { zoom: ZoomRange::Fixed([300.0, 2400.0]), ..cfg.clone() }.validate().is_err());
    assert!(AxisConfig { zoom: ZoomRange::Fixed([2400.0, 300.0]), ..cfg.clone() }.validate().is_ok());
    assert!(AxisConfig { min_visibility: 1.5, ..cfg }.validate().is_err());
}

#[test]
fn config_json_fills_defaults() {
    let cfg: AxisConfig = serde_json::from_str(r#"{"n_frames": 12, "zoom": {"fixed": [1000, 200]}}"#).unwrap();
    assert_eq!(cfg.n_frames, 12);
    assert_eq!(cfg.zoom, ZoomRange::Fixed([1000.0, 200.0]));
    assert_eq!(cfg.width, 640);
}

#[test]
fn axis_names_round_trip() {
    for a in Axis::ALL {
        assert_eq!(a.to_string().parse::<Axis>().unwrap(), a);
    }
    assert_eq!("ZOOM".parse::<Axis>().unwrap(), Axis::Zoom);
    assert!("tilt".parse::<Axis>().is_err());
}

#[test]
fn published_clip_counts() {
    let counts: Vec<u32> = Axis::ALL.iter().map(|a| a.paper_scale_clips()).collect();
    assert_eq!(counts, [237, 441, 211, 215, 268]);
    assert!(counts.iter().all(|c| (200..=500).contains(c)));
    assert_eq!(AxisConfig::paper_scale(9).n_frames, 300);
}

#[test]
fn intensity_schedule_is_exact() {
    let cfg = AxisConfig::default();
    assert_eq!(cfg.intensity(0), 0.0);
    assert_eq!(cfg.intensity(299), 1.0);
    assert_eq!(cfg.intensity(150), 150.0 / 299.0);
}

#[test]
fn hull_point_containment() {
    let h = Hull::from_part(&Part::cuboid([0.0, 0.0, 0.5], [1.0, 1.0, 1.0]));
    assert!(h.contains_point(&Point3::new(0.0, 0.0, 0.5), 0.0));
    assert!(h.contains_point(&Point3::new(0.49, -0.49, 0.01), 0.0));
    assert!(!h.contains_point(&Point3::new(0.56, 0.0, 0.5), 0.05));
    assert!(h.contains_point(&Point3::new(0.54, 0.0, 0.5), 0.05));
    assert!(!h.contains_point(&Point3::new(0.0, 0.0, -0.2), 0.1));

    let mut s = empty_room(5.0);
    add(&mut s, "cabinet_drawers_3", [2.5, 2.5, 0.0], 0.0);
    let posed = PosedScene::new(&s);
    let part = &posed.instances[1].hulls[0].1;
    let inside = Point3::from(part.vertices.iter().map(|v| v.coords).sum::<Vector3<f64>>() / part.vertices.len() as f64);
    assert!(!posed.point_is_clear(&inside, 0.0));
    assert!(posed.point_is_clear(&Point3::new(1.0, 1.0, 1.5), 0.05));
}

#[test]
fn articulation_opens_the_target_linearly() {
    let mut scene = empty_room(6.0);
    let id = add(&mut scene, "cabinet_drawers_3", [3.0, 3.0, 0.0], 0.7);
    let cfg = small(3);
    let plan = plan_clip(Axis::Articulation, &scene, "art", &cfg, 11).unwrap();
    assert_eq!(plan.target, id);
    let sink = run(&plan);
    assert_clean(&sink);

    // explicit midpoint: every opened drawer slid half its travel along
    // its rotated axis
    let model = scene.model("cabinet_drawers_3").unwrap();
    let rec = &sink.records;
    let links = |joints: &BTreeMap<String, f64>| {
        let mut s = plan.scene.clone();
        s.instance_mut(id).unwrap().joint_state = joints.clone();
        PosedScene::new(&s).get(id).unwrap().link_world.clone()
    };
    let (l0, l1) = (links(&rec[0].target_joints), links(&rec[1].target_joints));
    let yaw = nalgebra::UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.7);
    let mut opened = 0;
    for j in &model.joints {
        let li = model.links.iter().position(|l| l.link_id == j.child).unwrap();
        let [lo, hi] = j.limits;
        let q_end = rec[2].target_joints[&j.joint_id];
        let half = if q_end == hi { 0.5 * (hi - lo) } else { 0.0 };
        opened += (q_end == hi) as usize;
        let want = yaw * (j.axis.into_inner() * half);
        assert!((l1[li].translation - l0[li].translation - want).norm() < 1e-9, "{}", j.joint_id);
    }
    assert!(opened >= 1);
}

#[test]
fn articulation_from_templates() {
    let plan = plan_from_templates(Axis::Articulation, &small(4));
    assert_clean(&run(&plan));
}

#[test]
fn lighting_starts_ambient_only() {
    let plan = plan_from_templates(Axis::Lighting, &small(5));
    let sink = run(&plan);
    assert_clean(&sink);

    // frame 0 is albedo times the ambient term, pixel by pixel
    let f = &plan.frames[0];
    let pass = trace(&PosedScene::new(&plan.scene), &f.pose, &f.intrinsics, None);
    let rgb = &sink.frames[0].labels.rgb;
    for (i, a) in pass.albedo.iter().enumerate() {
        let hit = pass.instance[i] != u32::MAX;
        for c in 0..3 {
            let want = if hit { (a[c] * AMBIENT * 255.0).round() as u8 } else { 0 };
            assert_eq!(rgb[3 * i + c], want, "pixel {i}");
        }
    }
    let lum: Vec<f64> = sink.frames.iter().map(|f| f.labels.mean_luminance()).collect();
    assert!(lum[4] > lum[0]);
}

#[test]
fn visibility_orbit_reveals_the_target() {
    let plan = plan_from_templates(Axis::Visibility, &small(7));
    assert!(plan.occluder.is_some());
    let sink = run(&plan);
    assert_clean(&sink);
    let vis: Vec<f64> = sink.records.iter().map(|r| r.visibility_ratio.unwrap()).collect();
    assert!(vis[0] <= 0.02 && vis[6] >= 0.98, "{vis:?}");
}

#[test]
fn zoom_fills_then_shrinks() {
    let plan = plan_from_templates(Axis::Zoom, &small(5));
    let sink = run(&plan);
    assert_clean(&sink);
    let k0 = sink.records[0].camera;
    for r in &sink.records {
        assert_eq!((r.camera.cx, r.camera.cy, r.camera.w, r.camera.h), (k0.cx, k0.cy, k0.w, k0.h));
    }
}

#[test]
fn fixed_zoom_range_is_used_verbatim() {
    let cfg = AxisConfig {
        zoom: ZoomRange::Fixed([400.0, 100.0]),
        ..small(3)
    };
    let plan = plan_from_templates(Axis::Zoom, &cfg);
    let fx: Vec<f64> = plan.frames.iter().map(|f| f.intrinsics.fx).collect();
    assert_eq!(fx, [400.0, 250.0, 100.0]);
}

#[test]
fn box_width_scales_with_focal_length() {
    let mut s = empty_room(6.0);
    let id = add(&mut s, "cabinet_drawers_3", [3.0, 3.0, 0.0], 0.3);
    let posed = PosedScene::new(&s);
    let c = posed.get(id).unwrap().obb().center;
    let pose = look_at(Point3::new(3.0, -1.0, 1.2), c);
    let width = |fx: f64| {
        let f = render(&posed, &s.lights, &pose, &CameraIntrinsics::new(640, 480, fx), 1.0);
        f.boxes2d[&id].width() as f64
    };
    let (narrow, wide) = (width(600.0), width(1200.0));
    assert!(wide < 640.0 && narrow > 100.0);
    assert!((wide / narrow - 2.0).abs() <= 0.04, "{wide} / {narrow}");
}

#[test]
fn pitch_sweeps_down_through_level() {
    let cfg = small(5);
    let plan = plan_from_templates(Axis::Pitch, &cfg);
    let sink = run(&plan);
    assert_clean(&sink);
    let pitch: Vec<f64> = sink.records.iter().map(|r| yaw_pitch(&r.camera.pose().unwrap()).1.to_degrees()).collect();
    assert!((pitch[0] - 45.0).abs() < 1e-6, "{pitch:?}");
    assert!(pitch[2].abs() < 1e-6, "{pitch:?}");
    assert!((pitch[4] + 45.0).abs() < 1e-6, "{pitch:?}");
}

#[test]
fn isolation_flags_a_second_factor() {
    let plan = plan_from_templates(Axis::Lighting, &small(3));
    let sink = run(&plan);
    let mut recs = sink.records.clone();
    assert!(isolation_failures(Axis::Lighting, &recs).is_empty());
    recs[2].camera.fx += 1.0;
    assert_eq!(isolation_failures(Axis::Lighting, &recs).len(), 1);
    // and a clip whose factor never moves fails too
    let mut still = sink.records.clone();
    for r in &mut still {
        r.light_scale = 0.5;
    }
    assert!(!isolation_failures(Axis::Lighting, &still).is_empty());
    let header = clip_header(&plan);
    assert!(!check_clip(&plan, &header, &still, &sink.luminance).is_empty());
}

#[test]
fn rejection_rule() {
    let cfg = AxisConfig::default();
    assert!(rejection_reason(Axis::Zoom, 0.3, &cfg).is_some());
    assert!(rejection_reason(Axis::Zoom, 0.5, &cfg).is_none());
    assert!(rejection_reason(Axis::Visibility, 0.0, &cfg).is_none());
}

#[test]
fn dropped_clip_leaves_no_directory() {
    let plan = plan_from_templates(Axis::Lighting, &small(2));
    let tmp = tempfile::tempdir().unwrap();
    let mut sink = DiskSink::new(tmp.path());
    for accepted in [false, true] {
        sink.begin(&plan, &clip_header(&plan)).unwrap();
        render_plan(&plan, |f| sink.frame(&plan, f)).unwrap();
        sink.end(&plan, accepted).unwrap();
        let dir = tmp.path().join("clips").join(&plan.clip_id);
        assert_eq!(dir.join("labels.json").exists(), accepted);
        assert_eq!(dir.exists(), accepted);
    }
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn batches_are_reproducible() {
    let cfg = small(3);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let library = lib();
    let ma = write_axis_batch(&library, Axis::Lighting, 2, &cfg, a.path(), |_| {}).unwrap();
    let mb = write_axis_batch(&library, Axis::Lighting, 2, &cfg, b.path(), |_| {}).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(tree(a.path()), tree(b.path()));
    assert_eq!(read_manifest(a.path()).unwrap(), ma);
    assert_eq!(ma.axis, "lighting");
    assert_eq!(ma.clips.len() + ma.rejected.len(), 2);
    for e in &ma.clips {
        assert_eq!(e.n_frames, 3);
        assert!(!e.rejected);
        let dir = a.path().join("clips").join(&e.clip_id);
        let labels = read_clip_labels(&dir.join("labels.json")).unwrap();
        assert_eq!(labels.target, e.target);
        assert_eq!(labels.frames.len(), 3);
        assert!(dir.join("scene.json").exists());
    }
    let other = AxisConfig { seed: 4, ..cfg };
    let mc = gen_axis_batch(&library, Axis::Lighting, 2, &other).unwrap().1;
    assert_ne!(mc, ma);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn plans_are_deterministic(seed in 0u64..1000, axis in prop::sample::select(Axis::ALL.to_vec())) {
        let cfg = AxisConfig { seed, ..small(3) };
        let scene = random_scene(&lib(), &cfg, seed).unwrap();
        let a = plan_clip(axis, &scene, "p", &cfg, seed);
        let b = plan_clip(axis, &scene, "p", &cfg, seed);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.target, b.target);
                prop_assert_eq!(a.frames, b.frames);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "planning is not deterministic"),
        }
    }

    #[test]
    fn planned_intensities_stay_in_unit_range(seed in 0u64..1000, axis in prop::sample::select(Axis::ALL.to_vec())) {
        let cfg = AxisConfig { seed, ..small(4) };
        let scene = random_scene(&lib(), &cfg, seed).unwrap();
        if let Ok(p) = plan_clip(axis, &scene, "p", &cfg, seed) {
            prop_assert_eq!(p.frames.len(), 4);
            prop_assert!(p.frames.iter().all(|f| (0.0..=1.0).contains(&f.intensity)));
            prop_assert!(p.frames.windows(2).all(|w| w[0].intensity <= w[1].intensity));
        }
    }
}
