mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::prelude::*;
use synthscene_core::geometry::PosedScene;
use synthscene_core::scene::templates::{self, APARTMENT_SMALL_JSON, TEMPLATES};
use synthscene_core::scene::{builtin_library, load_scene, randomize_scene, save_scene, ModelLibrary, Scene};

use common::lib;

#[test]
fn shipped_fixture_matches_template() {
    let fixture = Scene::from_json_str(APARTMENT_SMALL_JSON, lib()).unwrap();
    assert_eq!(fixture.instances.len(), 23);
    assert_eq!(fixture.lights.len(), 3);
    assert_eq!(fixture, templates::apartment_small(lib()));
    assert_eq!(fixture.to_json_string(), APARTMENT_SMALL_JSON);
}

#[test]
fn every_template_is_valid() {
    for name in TEMPLATES {
        let s = templates::template(name, lib()).unwrap();
        s.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!s.lights.is_empty(), "{name}");
        let ids: BTreeSet<_> = s.instances.iter().map(|i| i.instance_id).collect();
        assert_eq!(ids.len(), s.instances.len(), "{name}");
        assert!(!ids.contains(&0));
    }
    assert!(templates::template("castle", lib()).is_none());
}

#[test]
fn save_load_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    let s = randomize_scene(&templates::office(lib()), 4).unwrap();
    save_scene(&s, &p).unwrap();
    let a = load_scene(&p, lib()).unwrap();
    assert_eq!(a, s);
    let q = dir.path().join("t.json");
    save_scene(&a, &q).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
}

#[test]
fn library_has_required_categories() {
    let l = builtin_library();
    for c in ["table", "cabinet", "fridge", "microwave", "chair", "sofa", "lamp", "cup", "bowl", "book", "laptop"] {
        assert!(l[c].len() >= 2, "{c}");
    }
    let drawers = l["cabinet"][0].joints.iter().filter(|j| j.kind == synthscene_core::scene::JointKind::Prismatic);
    assert!(drawers.count() >= 2);
    assert!(l["cup"][0].fillable_volume.is_some());
}

#[test]
fn single_variant_registry_leaves_scene_alone() {
    // keep one model per category
    let full = ModelLibrary::builtin();
    let mut one = ModelLibrary::empty();
    for ids in full.registry().values().filter(|v| !v.is_empty()) {
        one.insert((*full.model(&ids[0]).unwrap()).clone());
    }
    let one = Arc::new(one);
    let mut s = Scene::new("r", 1, vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]], one.clone());
    for (cat, ids) in one.registry().iter().filter(|(_, v)| !v.is_empty()) {
        if full.model(&ids[0]).unwrap().is_structural {
            continue;
        }
        let x = 0.3 + s.instances.len() as f64 * 0.01;
        let (next, _) =
            synthscene_core::scene::insert_object(&s, &ids[0], synthscene_core::geometry::Pose::from_yaw([x, 1.0, 0.0].into(), 0.0), BTreeMap::new())
                .unwrap_or_else(|e| panic!("{cat}: {e}"));
        s = next;
    }
    assert_eq!(randomize_scene(&s, 9).unwrap(), s);
}

#[test]
fn randomization_reaches_several_variants() {
    let s = templates::apartment_small(lib());
    let l = lib();
    let swappable = |c: &str| {
        s.instances.iter().any(|i| i.category == c && {
            let m = s.model_of(i);
            m.movable && !m.is_structural
        })
    };
    let (cat, _) = l.registry().iter().find(|(c, v)| v.len() >= 3 && swappable(c)).expect("a swappable 3-variant category");
    let mut seen = BTreeSet::new();
    for seed in 0..100 {
        let r = randomize_scene(&s, seed).unwrap();
        seen.extend(r.instances.iter().filter(|i| &i.category == cat).map(|i| i.model_id.clone()));
    }
    assert!(seen.len() >= 2, "{cat}: {seen:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn randomize_keeps_identity_and_validity(seed in any::<u64>(), t in 0usize..5) {
        let s = templates::template(TEMPLATES[t], lib()).unwrap();
        let r = randomize_scene(&s, seed).unwrap();
        prop_assert_eq!(r.instances.len(), s.instances.len());
        for (a, b) in s.instances.iter().zip(&r.instances) {
            prop_assert_eq!(a.instance_id, b.instance_id);
            prop_assert_eq!(&a.category, &b.category);
            prop_assert_eq!(&a.room, &b.room);
            let model = s.model_of(a);
            if model.is_structural || !model.movable {
                prop_assert_eq!(a, b);
            } else {
                // bottom face stays at the old support height
                let posed = PosedScene::new(&s);
                let posed_r = PosedScene::new(&r);
                let z0 = posed.get(a.instance_id).unwrap().aabb.min.z;
                let z1 = posed_r.get(b.instance_id).unwrap().aabb.min.z;
                prop_assert!((z0 - z1).abs() < 1e-9, "{} {} vs {}", a.instance_id, z0, z1);
            }
        }
        prop_assert!(r.validate().is_ok());
        prop_assert_eq!(randomize_scene(&s, seed).unwrap(), r);
    }
}
