//! Shared fixtures for the benchmarks.

use forge_core::catalog::{CategoryTables, Entity};
use forge_core::compose::{plan_layout, LayoutConfig, Relation, SceneLayout};
use forge_core::raster::{AlphaMatte, RgbRaster};
use forge_core::seed::rng_for;
use forge_core::synth::{synthetic_backgrounds, synthetic_entity};
use forge_core::EntityClass;
use rand::Rng;

/// A ground-truth and predicted matte of the given size.
pub fn matte_pair(w: u32, h: u32, seed: u64) -> (AlphaMatte, AlphaMatte) {
    let mut rng = rng_for(seed, &[]);
    let n = (w * h) as usize;
    let gt = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let pred = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    (AlphaMatte::new(w, h, gt), AlphaMatte::new(w, h, pred))
}

pub struct SceneFixture {
    pub entities: Vec<Entity>,
    pub layout: SceneLayout,
    pub background: RgbRaster,
}

/// Three synthetic entities placed left to right on a gradient background.
pub fn scene(seed: u64) -> SceneFixture {
    let tables = CategoryTables::default();
    let mut rng = rng_for(seed, &[]);
    let entities: Vec<Entity> = [EntityClass::Human, EntityClass::Animal, EntityClass::Object]
        .iter()
        .enumerate()
        .map(|(k, &c)| synthetic_entity(&format!("e{k}"), c, &tables, &mut rng).expect("synthetic entity"))
        .collect();
    let background = synthetic_backgrounds(1, 320, 240, seed).remove(0).image;
    let refs: Vec<&Entity> = entities.iter().collect();
    let layout = plan_layout(
        &refs,
        Relation::Left,
        background.dims(),
        &LayoutConfig::default(),
        &mut rng,
    )
    .expect("feasible layout");
    SceneFixture {
        entities,
        layout,
        background,
    }
}
