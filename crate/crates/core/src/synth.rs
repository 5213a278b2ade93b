//! Procedural entities and backgrounds for toy builds, tests and benchmarks.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::catalog::colors::color_rgb;
use crate::catalog::{
    Catalog, CatalogEntry, CategoryTables, Entity, EntityClass, EntityMeta, Gender, LoadOptions, Split,
};
use crate::dataset::{Background, ClassCounts, EntityPools};
use crate::error::Result;
use crate::raster::{AlphaMatte, RgbRaster};
use crate::seed::{hash_str, rng_for, ForgeRng};

/// Colors far enough apart that the annotated name is the one painted.
pub const PALETTE: [&str; 20] = [
    "aqua", "black", "blue", "brown", "crimson", "fuchsia", "gold", "gray", "green", "lime", "maroon", "navy", "olive",
    "orange", "orchid", "pink", "purple", "red", "teal", "white",
];

/// A soft-edged ellipse filled with `color`, darker near the rim.
pub fn blob<R: Rng>(width: u32, height: u32, color: [u8; 3], rng: &mut R) -> (RgbRaster, AlphaMatte) {
    let (w, h) = (width as f64, height as f64);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let rx = w / 2.0 * rng.gen_range(0.8..1.0);
    let ry = h / 2.0 * rng.gen_range(0.8..1.0);
    let feather = 2.0 / rx.min(ry).max(1.0);
    let mut rgb = RgbRaster::filled(width, height, [0, 0, 0]);
    let mut alpha = AlphaMatte::zeros(width, height);
    for y in 0..height {
        for x in 0..width {
            let dx = (x as f64 + 0.5 - cx) / rx;
            let dy = (y as f64 + 0.5 - cy) / ry;
            let r = (dx * dx + dy * dy).sqrt();
            let a = ((1.0 - r) / feather).clamp(0.0, 1.0);
            let shade = if r > 0.85 { 0.7 } else { 1.0 };
            rgb.put_pixel(x, y, color.map(|c| (c as f64 * shade).round() as u8));
            alpha.data_mut()[(y * width + x) as usize] = a as f32;
        }
    }
    (rgb, alpha)
}

/// A two-color vertical gradient.
pub fn gradient_background<R: Rng>(width: u32, height: u32, rng: &mut R) -> RgbRaster {
    let top: [u8; 3] = std::array::from_fn(|_| rng.gen_range(40..220));
    let bottom: [u8; 3] = std::array::from_fn(|_| rng.gen_range(40..220));
    let mut img = RgbRaster::filled(width, height, top);
    for y in 0..height {
        let t = y as f64 / (height.max(2) - 1) as f64;
        let px: [u8; 3] = std::array::from_fn(|c| (top[c] as f64 * (1.0 - t) + bottom[c] as f64 * t).round() as u8);
        for x in 0..width {
            img.put_pixel(x, y, px);
        }
    }
    img
}

pub fn synthetic_backgrounds(count: usize, width: u32, height: u32, seed: u64) -> Vec<Background> {
    (0..count)
        .map(|k| Background {
            id: format!("bg_{k:04}"),
            image: gradient_background(width, height, &mut rng_for(seed, &[hash_str("background"), k as u64])),
        })
        .collect()
}

fn class_categories(tables: &CategoryTables, class: EntityClass) -> Vec<String> {
    tables
        .categories()
        .filter(|&(_, c)| c == class)
        .map(|(name, _)| name.to_string())
        .collect()
}

fn random_meta(id: String, class: EntityClass, tables: &CategoryTables, rng: &mut ForgeRng) -> EntityMeta {
    let category = class_categories(tables, class)
        .choose(rng)
        .cloned()
        .unwrap_or_else(|| tables.human_category().to_string());
    let mut meta = EntityMeta {
        id,
        category,
        class: Some(class),
        ..Default::default()
    };
    if class == EntityClass::Human {
        meta.gender = Some(*Gender::ALL.choose(rng).expect("genders"));
        meta.age = Some(rng.gen_range(1..90));
        let clothes: Vec<&String> = tables.clothes().iter().collect();
        meta.clothes = clothes.choose(rng).map(|c| c.to_string());
    }
    meta
}

/// One random entity of `class` with a palette color.
pub fn synthetic_entity(id: &str, class: EntityClass, tables: &CategoryTables, rng: &mut ForgeRng) -> Result<Entity> {
    let meta = random_meta(id.to_string(), class, tables, rng);
    let color = color_rgb(PALETTE.choose(rng).expect("palette")).expect("palette colors are named");
    let (w, h) = (rng.gen_range(32..80), rng.gen_range(32..80));
    let (rgb, alpha) = blob(w, h, color, rng);
    Entity::from_rasters(rgb, alpha, &meta, tables, LoadOptions::default())
}

fn split_entities(split: Split, counts: ClassCounts, tables: &CategoryTables, seed: u64) -> Result<Vec<Entity>> {
    let classes = [EntityClass::Human, EntityClass::Animal, EntityClass::Object];
    let mut out = Vec::new();
    for (class, n) in classes.into_iter().zip(counts.as_array()) {
        for k in 0..n {
            let id = format!("{split}_{class}_{k:04}");
            let mut rng = rng_for(seed, &[hash_str(&id)]);
            out.push(synthetic_entity(&id, class, tables, &mut rng)?);
        }
    }
    Ok(out)
}

/// Deterministic train/test pools with the given class counts.
pub fn synthetic_pools(
    train: ClassCounts,
    test: ClassCounts,
    tables: &CategoryTables,
    seed: u64,
) -> Result<EntityPools> {
    Ok(EntityPools {
        train: split_entities(Split::Train, train, tables, seed)?,
        test: split_entities(Split::Test, test, tables, seed)?,
    })
}

/// Writes synthetic entity PNGs, a `catalog.json` and `backgrounds/` into
/// `dir`. Returns the catalog path.
pub fn write_synthetic_assets(
    dir: &Path,
    train: ClassCounts,
    test: ClassCounts,
    backgrounds: usize,
    tables: &CategoryTables,
    seed: u64,
) -> Result<PathBuf> {
    let pools = synthetic_pools(train, test, tables, seed)?;
    let mut catalog = Catalog::default();
    for (split, entities) in [(Split::Train, &pools.train), (Split::Test, &pools.test)] {
        for e in entities {
            let (rgb, alpha) = e.save(&dir.join("entities"))?;
            let rel = |p: &Path| {
                p.strip_prefix(dir)
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|_| p.to_path_buf())
            };
            let a = &e.attributes;
            catalog.entries.push(CatalogEntry {
                meta: EntityMeta {
                    id: e.id.clone(),
                    category: e.category.clone(),
                    class: Some(e.class),
                    gender: a.gender,
                    age: None,
                    age_group: a.age_group,
                    clothes: a.clothes.clone(),
                },
                split,
                rgb: rel(&rgb),
                alpha: Some(rel(&alpha)),
                attributes: Some(a.clone()),
            });
        }
    }
    for bg in synthetic_backgrounds(backgrounds, 256, 192, seed) {
        bg.image.save(&dir.join("backgrounds").join(format!("{}.png", bg.id)))?;
    }
    let path = dir.join("catalog.json");
    catalog.save(&path)?;
    Ok(path)
}
