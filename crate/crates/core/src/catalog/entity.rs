use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::colors::nearest_named_color;
use super::tables::{age_to_group, AgeGroup, CategoryTables, EntityClass, Gender};
use crate::error::{ForgeError, Result};
use crate::raster::{load_rgba, AlphaMatte, RgbRaster};

/// Pixels at or below this coverage are ignored when picking the color.
pub const COLOR_ALPHA_THRESHOLD: f32 = 0.5;
const BINS_PER_CHANNEL: usize = 16;

/// Per-entity metadata as supplied alongside the rasters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMeta {
    pub id: String,
    pub category: String,
    pub class: Option<EntityClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_group: Option<AgeGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clothes: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttributeSet {
    pub color: String,
    pub transparent: bool,
    pub salient: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_group: Option<AgeGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clothes: Option<String>,
}

impl AttributeSet {
    /// Number of populated attributes: three for non-humans, six for humans.
    pub fn count(&self) -> usize {
        3 + self.gender.is_some() as usize + self.age_group.is_some() as usize + self.clothes.is_some() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entity {
    pub id: String,
    pub rgb: RgbRaster,
    pub alpha: AlphaMatte,
    pub category: String,
    pub synonyms: BTreeSet<String>,
    pub class: EntityClass,
    pub attributes: AttributeSet,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Accept categories missing from the tables (non-transparent, salient,
    /// synonym set `{category}`).
    pub allow_unknown_category: bool,
}

impl Entity {
    pub fn width(&self) -> u32 {
        self.rgb.width()
    }

    pub fn height(&self) -> u32 {
        self.rgb.height()
    }

    pub fn is_human(&self) -> bool {
        self.class == EntityClass::Human
    }

    /// Validates the rasters against the metadata and annotates attributes.
    pub fn from_rasters(
        rgb: RgbRaster,
        alpha: AlphaMatte,
        meta: &EntityMeta,
        tables: &CategoryTables,
        opts: LoadOptions,
    ) -> Result<Entity> {
        if rgb.dims() != alpha.dims() {
            return Err(ForgeError::DimensionMismatch {
                rgb: rgb.dims(),
                alpha: alpha.dims(),
            });
        }
        if !alpha.data().iter().any(|&a| a > 0.0) {
            return Err(ForgeError::EmptyEntity(meta.id.clone()));
        }
        let bad = |reason: &str| ForgeError::InvalidMetadata {
            id: meta.id.clone(),
            reason: reason.to_string(),
        };

        let (class, (transparent, salient), table_synonyms) = match tables.class_of(&meta.category) {
            Some(class) => (
                class,
                tables.annotate_flags(&meta.category)?,
                tables.synonyms_of(&meta.category).cloned().unwrap_or_default(),
            ),
            None if opts.allow_unknown_category => {
                let class = meta.class.ok_or_else(|| bad("class is required"))?;
                if class == EntityClass::Human {
                    return Err(ForgeError::UnknownCategory(meta.category.clone()));
                }
                (class, (false, true), BTreeSet::from([meta.category.clone()]))
            }
            None => return Err(ForgeError::UnknownCategory(meta.category.clone())),
        };
        if let Some(declared) = meta.class {
            if declared != class {
                return Err(bad(&format!("class {declared} does not match category class {class}")));
            }
        }

        let color = dominant_named_color(&rgb, &alpha)
            .ok_or_else(|| ForgeError::EmptyEntity(meta.id.clone()))?
            .to_string();

        let (attributes, synonyms) = if class == EntityClass::Human {
            let gender = meta.gender.ok_or_else(|| bad("human entity without gender"))?;
            let age_group = match (meta.age_group, meta.age) {
                (Some(g), _) => g,
                (None, Some(age)) if age <= 130 => age_to_group(age),
                (None, Some(_)) => return Err(bad("age outside 0..=130")),
                (None, None) => return Err(bad("human entity without age or age_group")),
            };
            let clothes = meta
                .clothes
                .clone()
                .ok_or_else(|| bad("human entity without clothes"))?;
            if !tables.clothes().contains(&clothes) {
                return Err(ForgeError::UnknownVocabulary(clothes));
            }
            let mut synonyms = tables.human_synonyms(gender, age_group);
            synonyms.insert(meta.category.clone());
            (
                AttributeSet {
                    color,
                    transparent,
                    salient,
                    gender: Some(gender),
                    age_group: Some(age_group),
                    clothes: Some(clothes),
                },
                synonyms,
            )
        } else {
            if meta.gender.is_some() || meta.age.is_some() || meta.age_group.is_some() || meta.clothes.is_some() {
                return Err(bad("gender/age/clothes are only valid for humans"));
            }
            (
                AttributeSet {
                    color,
                    transparent,
                    salient,
                    gender: None,
                    age_group: None,
                    clothes: None,
                },
                table_synonyms,
            )
        };

        Ok(Entity {
            id: meta.id.clone(),
            rgb,
            alpha,
            category: meta.category.clone(),
            synonyms,
            class,
            attributes,
        })
    }

    /// Writes `<id>_rgb.png` and `<id>_alpha.png` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let rgb_path = dir.join(format!("{}_rgb.png", self.id));
        let alpha_path = dir.join(format!("{}_alpha.png", self.id));
        self.rgb.save(&rgb_path)?;
        self.alpha.save(&alpha_path)?;
        Ok((rgb_path, alpha_path))
    }
}

/// Loads an entity from an RGB PNG plus a grayscale alpha PNG, or from a
/// single RGBA PNG when `alpha_path` is `None`.
pub fn load_entity(
    rgb_path: &Path,
    alpha_path: Option<&Path>,
    meta: &EntityMeta,
    tables: &CategoryTables,
    opts: LoadOptions,
) -> Result<Entity> {
    let (rgb, alpha) = match alpha_path {
        Some(a) => (RgbRaster::load(rgb_path)?, AlphaMatte::load(a)?),
        None => load_rgba(rgb_path)?,
    };
    Entity::from_rasters(rgb, alpha, meta, tables, opts)
}

/// Named color of an entity's dominant color.
pub fn annotate_color(entity: &Entity) -> Result<String> {
    dominant_named_color(&entity.rgb, &entity.alpha)
        .map(str::to_string)
        .ok_or_else(|| ForgeError::EmptyEntity(entity.id.clone()))
}

/// Mean color of the most populated 16x16x16 histogram bin over pixels with
/// coverage above [`COLOR_ALPHA_THRESHOLD`]. Ties go to the lowest bin index.
pub fn dominant_color(rgb: &RgbRaster, alpha: &AlphaMatte) -> Option<[f64; 3]> {
    let nbins = BINS_PER_CHANNEL.pow(3);
    let mut counts = vec![0u64; nbins];
    let mut sums = vec![[0u64; 3]; nbins];
    let shift = 256 / BINS_PER_CHANNEL;
    for (px, &a) in rgb.pixels().zip(alpha.data()) {
        if a <= COLOR_ALPHA_THRESHOLD {
            continue;
        }
        let bin = (px[0] as usize / shift) * BINS_PER_CHANNEL * BINS_PER_CHANNEL
            + (px[1] as usize / shift) * BINS_PER_CHANNEL
            + px[2] as usize / shift;
        counts[bin] += 1;
        for k in 0..3 {
            sums[bin][k] += px[k] as u64;
        }
    }
    let (bin, &count) = counts.iter().enumerate().rev().max_by_key(|(_, &c)| c)?;
    if count == 0 {
        return None;
    }
    Some(sums[bin].map(|s| s as f64 / count as f64))
}

pub fn dominant_named_color(rgb: &RgbRaster, alpha: &AlphaMatte) -> Option<&'static str> {
    dominant_color(rgb, alpha).map(nearest_named_color)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::colors::CSS3_COLORS;

    fn meta(id: &str, category: &str) -> EntityMeta {
        EntityMeta {
            id: id.into(),
            category: category.into(),
            ..Default::default()
        }
    }

    fn solid(w: u32, h: u32, rgb: [u8; 3]) -> (RgbRaster, AlphaMatte) {
        (RgbRaster::filled(w, h, rgb), AlphaMatte::filled(w, h, 1.0))
    }

    fn brute_nearest(c: [f64; 3]) -> &'static str {
        let mut all: Vec<(f64, &str)> = CSS3_COLORS
            .iter()
            .map(|(n, v)| {
                let d =
                    ((c[0] - v[0] as f64).powi(2) + (c[1] - v[1] as f64).powi(2) + (c[2] - v[2] as f64).powi(2)).sqrt();
                (d, *n)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
        all[0].1
    }

    #[test]
    fn well_formed_animal() {
        let t = CategoryTables::default();
        let (rgb, alpha) = solid(64, 64, [120, 120, 120]);
        let e = Entity::from_rasters(rgb, alpha, &meta("c1", "cat"), &t, LoadOptions::default()).unwrap();
        assert_eq!((e.width(), e.height(), e.class), (64, 64, EntityClass::Animal));
        assert_eq!(e.attributes.count(), 3);
        assert!(e.synonyms.contains("cat"));
    }

    #[test]
    fn dimension_mismatch() {
        let t = CategoryTables::default();
        let rgb = RgbRaster::filled(64, 64, [1, 2, 3]);
        let alpha = AlphaMatte::filled(32, 32, 1.0);
        let err = Entity::from_rasters(rgb, alpha, &meta("x", "cat"), &t, LoadOptions::default());
        assert!(matches!(err, Err(ForgeError::DimensionMismatch { .. })));
    }

    #[test]
    fn empty_entity() {
        let t = CategoryTables::default();
        let rgb = RgbRaster::filled(8, 8, [1, 2, 3]);
        let alpha = AlphaMatte::zeros(8, 8);
        let err = Entity::from_rasters(rgb, alpha, &meta("x", "cat"), &t, LoadOptions::default());
        assert!(matches!(err, Err(ForgeError::EmptyEntity(_))));
    }

    #[test]
    fn unknown_category_needs_override() {
        let t = CategoryTables::default();
        let (rgb, alpha) = solid(4, 4, [0, 0, 0]);
        let m = EntityMeta {
            class: Some(EntityClass::Object),
            ..meta("x", "unicorn")
        };
        let err = Entity::from_rasters(rgb.clone(), alpha.clone(), &m, &t, LoadOptions::default());
        assert!(matches!(err, Err(ForgeError::UnknownCategory(_))));
        let ok = Entity::from_rasters(
            rgb,
            alpha,
            &m,
            &t,
            LoadOptions {
                allow_unknown_category: true,
            },
        )
        .unwrap();
        assert_eq!(ok.synonyms, BTreeSet::from(["unicorn".to_string()]));
    }

    #[test]
    fn human_carries_six_attributes() {
        let t = CategoryTables::default();
        let (rgb, alpha) = solid(4, 4, [128, 128, 128]);
        let m = EntityMeta {
            class: Some(EntityClass::Human),
            gender: Some(Gender::Female),
            age: Some(30),
            clothes: Some("dress".into()),
            ..meta("h", "human")
        };
        let e = Entity::from_rasters(rgb, alpha, &m, &t, LoadOptions::default()).unwrap();
        assert_eq!(e.attributes.count(), 6);
        assert_eq!(e.attributes.age_group, Some(AgeGroup::Adult));
        assert!(!e.attributes.transparent && e.attributes.salient);
        assert!(e.synonyms.contains("lady") && e.synonyms.contains("human"));
    }

    #[test]
    fn human_without_gender_is_rejected() {
        let t = CategoryTables::default();
        let (rgb, alpha) = solid(4, 4, [128, 128, 128]);
        let m = EntityMeta {
            age: Some(30),
            clothes: Some("dress".into()),
            ..meta("h", "human")
        };
        let err = Entity::from_rasters(rgb, alpha, &m, &t, LoadOptions::default());
        assert!(matches!(err, Err(ForgeError::InvalidMetadata { .. })));
    }

    #[test]
    fn color_exact_entry() {
        let (rgb, alpha) = solid(5, 5, [255, 0, 0]);
        assert_eq!(dominant_named_color(&rgb, &alpha), Some("red"));
    }

    #[test]
    fn color_near_red_matches_brute_force() {
        let (rgb, alpha) = solid(5, 5, [250, 5, 5]);
        let expected = brute_nearest([250.0, 5.0, 5.0]);
        assert_eq!(expected, "red");
        assert_eq!(dominant_named_color(&rgb, &alpha), Some(expected));
    }

    #[test]
    fn color_ignores_transparent_pixels() {
        // left half white at alpha 0, right half black at alpha 1
        let mut rgb = RgbRaster::filled(8, 4, [0, 0, 0]);
        let mut a = vec![1.0f32; 32];
        for y in 0..4 {
            for x in 0..4 {
                rgb.put_pixel(x, y, [255, 255, 255]);
                a[(y * 8 + x) as usize] = 0.0;
            }
        }
        let alpha = AlphaMatte::new(8, 4, a);
        assert_eq!(dominant_named_color(&rgb, &alpha), Some("black"));
    }

    #[test]
    fn color_mode_uses_bin_mean() {
        // three pixels in one bin, two in another; mean of the larger bin
        let px = [[16u8, 0, 0], [18, 0, 0], [20, 0, 0], [200, 200, 200], [200, 200, 200]];
        let data: Vec<u8> = px.iter().flatten().copied().collect();
        let rgb = RgbRaster::new(5, 1, data);
        let alpha = AlphaMatte::filled(5, 1, 1.0);
        assert_eq!(dominant_color(&rgb, &alpha), Some([18.0, 0.0, 0.0]));
    }

    #[test]
    fn no_opaque_pixels_is_empty() {
        let rgb = RgbRaster::filled(2, 2, [9, 9, 9]);
        let alpha = AlphaMatte::filled(2, 2, 0.5);
        assert_eq!(dominant_color(&rgb, &alpha), None);
    }

    #[test]
    fn save_and_reload_is_bit_exact() {
        let t = CategoryTables::default();
        let dir = tempfile::tempdir().unwrap();
        let mut rgb = RgbRaster::filled(6, 5, [10, 20, 30]);
        rgb.put_pixel(2, 3, [200, 1, 77]);
        let alpha = AlphaMatte::from_u8(6, 5, &(0..30).map(|v| (v * 8) as u8).collect::<Vec<_>>());
        let e = Entity::from_rasters(rgb, alpha, &meta("dog7", "dog"), &t, LoadOptions::default()).unwrap();
        let (rp, ap) = e.save(dir.path()).unwrap();
        let back = load_entity(&rp, Some(&ap), &meta("dog7", "dog"), &t, LoadOptions::default()).unwrap();
        assert_eq!(back, e);
    }
}
