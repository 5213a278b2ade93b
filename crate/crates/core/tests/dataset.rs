use std::collections::BTreeSet;
use std::path::Path;

use forge_core::catalog::Split;
use forge_core::compose::eval_relation;
use forge_core::dataset::{
    build_dataset, filter_keyword_setting, stats, BalanceUnit, BuildConfig, ClassCounts, DatasetManifest, Setting,
};
use forge_core::expr::{ground, Grammar};
use forge_core::raster::{AlphaMatte, RgbRaster};
use forge_core::synth::{synthetic_backgrounds, synthetic_pools};
use forge_core::CategoryTables;

fn toy_config(seed: u64) -> BuildConfig {
    BuildConfig {
        master_seed: Some(seed),
        composites_per_group_train: 4,
        composites_per_group_test: 2,
        extra_random_train: 2,
        extra_random_test: 1,
        balance_unit_train: BalanceUnit::Fixed(5),
        balance_unit_test: BalanceUnit::Auto,
        ..Default::default()
    }
}

fn toy_build(out: &Path, seed: u64, workers: usize) -> DatasetManifest {
    let tables = CategoryTables::default();
    let pools = synthetic_pools(ClassCounts::new(22, 5, 4), ClassCounts::new(5, 1, 1), &tables, seed).unwrap();
    let backgrounds = synthetic_backgrounds(3, 256, 192, seed);
    build_dataset(
        &toy_config(seed),
        &Grammar::default(),
        &pools,
        &backgrounds,
        out,
        workers,
    )
    .unwrap()
}

#[test]
fn toy_build_counts_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_build(dir.path(), 11, 2);
    let train: Vec<_> = m.split(Split::Train).collect();
    let test: Vec<_> = m.split(Split::Test).collect();
    assert_eq!(train.len(), 22);
    assert_eq!(test.len(), 3);
    for im in &m.images {
        let n = im.entities.len();
        assert!((2..=3).contains(&n));
        if im.relation.is_occluding() {
            assert_eq!(n, 2);
        }
        let composite = RgbRaster::load(&dir.path().join(&im.composite)).unwrap();
        assert_eq!(composite.dims(), (im.layout.canvas_w, im.layout.canvas_h));
        let ids: BTreeSet<_> = im.entities.iter().map(|e| &e.entity_id).collect();
        assert_eq!(ids.len(), n);
        for e in &im.entities {
            let alpha = AlphaMatte::load(&dir.path().join(&e.visible_alpha)).unwrap();
            assert_eq!(alpha.dims(), composite.dims());
        }
        for f in &im.layout.relation_facts {
            assert!(eval_relation(&im.layout, f.subject, Some(f.object), f.relation).unwrap());
        }
    }
    let reloaded = DatasetManifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(reloaded.images.len(), m.images.len());
    assert_eq!(reloaded.to_canonical_json().unwrap(), m.to_canonical_json().unwrap());
}

#[test]
fn every_expression_grounds_to_its_entity() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_build(dir.path(), 5, 4);
    let g = Grammar::default();
    let mut texts = 0;
    for im in &m.images {
        let scene = im.scene().unwrap();
        for e in im.entities.iter().filter(|e| !e.is_dropped()) {
            assert_eq!(e.expressions.len(), 4);
            for r in &e.expressions {
                let logic = g.parse(&r.text).unwrap();
                assert_eq!(logic, r.logic);
                assert_eq!(ground(&logic, &scene), BTreeSet::from([e.entity_id.clone()]));
                texts += 1;
            }
        }
    }
    let s = stats(&m, Setting::Expression, None);
    assert_eq!(s.text_count, texts);
    assert_eq!(s.text_count, 4 * s.matte_count);
}

#[test]
fn keyword_setting_counts() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_build(dir.path(), 8, 1);
    let kept = filter_keyword_setting(&m);
    assert!(kept.images.iter().all(|im| im.keyword_ok));
    assert_eq!(kept.images.len(), m.images.iter().filter(|im| im.keyword_ok).count());
    let s = stats(&m, Setting::Keyword, None);
    assert_eq!(s.text_count, s.matte_count);
    assert_eq!(s.image_count, kept.images.len());
}

#[test]
fn worker_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = toy_build(a.path(), 21, 1);
    let mb = toy_build(b.path(), 21, 3);
    assert_eq!(ma.to_canonical_json().unwrap(), mb.to_canonical_json().unwrap());
    for im in &ma.images {
        let x = std::fs::read(a.path().join(&im.composite)).unwrap();
        let y = std::fs::read(b.path().join(&im.composite)).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let cfg = BuildConfig::default();
    assert!(cfg.validate().is_err());
    let json = r#"{"master_seed": 3, "balance_unit_train": 211, "relation_ratio": [7, 2, 1]}"#;
    let cfg: BuildConfig = serde_json::from_str(json).unwrap();
    assert_eq!(cfg.balance_unit_train, BalanceUnit::Fixed(211));
    assert!(cfg.validate().is_ok());
    assert!(serde_json::from_str::<BuildConfig>(r#"{"bogus": 1}"#).is_err());
}
