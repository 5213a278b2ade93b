use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{AttributeSet, EntityClass, Split};
use crate::compose::{Relation, SceneLayout};
use crate::error::{ForgeError, Result};
use crate::expr::{ExpressionRecord, SceneEntity, SceneMeta};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub entity_id: String,
    /// Relative to the manifest directory.
    pub visible_alpha: String,
    pub category: String,
    pub class: EntityClass,
    pub synonyms: BTreeSet<String>,
    pub attributes: AttributeSet,
    pub keyword: String,
    pub expressions: Vec<ExpressionRecord>,
    /// Why expressions could not be generated, if they could not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropped: Option<String>,
}

impl EntityRecord {
    pub fn is_dropped(&self) -> bool {
        self.dropped.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub split: Split,
    /// Relative to the manifest directory.
    pub composite: String,
    pub background_id: String,
    /// Relation the composite was sampled for.
    pub relation: Relation,
    pub layout: SceneLayout,
    /// Index-aligned with `layout.placements`.
    pub entities: Vec<EntityRecord>,
    /// No two entities share a synonym, so keywords alone identify them.
    pub keyword_ok: bool,
}

impl ImageRecord {
    pub fn scene(&self) -> Result<SceneMeta> {
        SceneMeta::new(
            self.layout.clone(),
            self.entities
                .iter()
                .map(|e| SceneEntity {
                    id: e.entity_id.clone(),
                    category: e.category.clone(),
                    synonyms: e.synonyms.clone(),
                    attributes: e.attributes.clone(),
                })
                .collect(),
        )
    }

    pub fn entity(&self, entity_id: &str) -> Option<&EntityRecord> {
        self.entities.iter().find(|e| e.entity_id == entity_id)
    }
}

/// A composite that could not be produced within the resample budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildFailure {
    pub split: Split,
    pub index: usize,
    pub attempt: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub master_seed: u64,
    pub images: Vec<ImageRecord>,
    /// Every rejected attempt, including ones that were later resampled.
    #[serde(default)]
    pub failures: Vec<BuildFailure>,
}

/// True when no two entities share a synonym.
pub fn keyword_unambiguous<'a>(synonyms: impl IntoIterator<Item = &'a BTreeSet<String>>) -> bool {
    let sets: Vec<_> = synonyms.into_iter().collect();
    sets.iter()
        .enumerate()
        .all(|(i, a)| sets[i + 1..].iter().all(|b| a.is_disjoint(b)))
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| ForgeError::json(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_canonical_json().map_err(|e| ForgeError::json(path, e))?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        }
        std::fs::write(path, text).map_err(|e| ForgeError::io(path, e))
    }

    /// Sorted keys, two-space indent, floats with six decimals.
    pub fn to_canonical_json(&self) -> serde_json::Result<String> {
        canonical_json(&serde_json::to_value(self)?)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ImageRecord> {
        self.images.iter().filter(move |im| im.split == split)
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.images.iter().find(|im| im.image_id == image_id)
    }
}

/// Images usable in the keyword setting: those whose entities have pairwise
/// disjoint synonym sets.
pub fn filter_keyword_setting(manifest: &DatasetManifest) -> DatasetManifest {
    DatasetManifest {
        master_seed: manifest.master_seed,
        images: manifest
            .images
            .iter()
            .filter(|im| keyword_unambiguous(im.entities.iter().map(|e| &e.synonyms)))
            .cloned()
            .collect(),
        failures: manifest.failures.clone(),
    }
}

/// Pretty JSON with object keys sorted and non-integer numbers printed with
/// six decimals, so equal manifests are byte-identical.
pub fn canonical_json(value: &Value) -> serde_json::Result<String> {
    let mut out = String::new();
    write_value(&mut out, value, 0)?;
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, value: &Value, depth: usize) -> serde_json::Result<()> {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match value {
        Value::Number(n) if n.is_f64() => {
            let v = n.as_f64().expect("f64 number");
            let _ = write!(out, "{v:.6}");
        }
        Value::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1)?;
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(key)?);
                out.push_str(": ");
                write_value(out, &map[*key], depth + 1)?;
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        other => out.push_str(&serde_json::to_string(other)?),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn canonical_format() {
        let v = json!({"b": 1.0, "a": [1, 0.123456789, {"z": null, "y": "s"}], "c": {}, "d": []});
        let text = canonical_json(&v).unwrap();
        assert_eq!(
            text,
            "{\n  \"a\": [\n    1,\n    0.123457,\n    {\n      \"y\": \"s\",\n      \"z\": null\n    }\n  ],\n  \"b\": 1.000000,\n  \"c\": {},\n  \"d\": []\n}\n"
        );
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"], json!(1.0));
    }

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn keyword_ambiguity_rule() {
        let cat = set(&["cat", "kitty"]);
        let dog = set(&["dog", "puppy"]);
        assert!(!keyword_unambiguous([&cat, &cat, &dog]));
        assert!(keyword_unambiguous([&cat, &dog]));
        let woman = set(&["human", "woman"]);
        let man = set(&["human", "man"]);
        assert!(!keyword_unambiguous([&woman, &man]));
    }
}
