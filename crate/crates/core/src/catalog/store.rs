use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::entity::{load_entity, AttributeSet, Entity, EntityMeta, LoadOptions};
use super::tables::CategoryTables;
use crate::error::{ForgeError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Train, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One asset in a catalog file. Paths are relative to the catalog file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    #[serde(flatten)]
    pub meta: EntityMeta,
    pub split: Split,
    pub rgb: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<PathBuf>,
    /// Filled in by ingestion; informational, recomputed on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<AttributeSet>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl Catalog {
    pub fn load(path: &Path) -> Result<Catalog> {
        let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
        let mut catalog: Catalog = serde_json::from_str(&text).map_err(|e| ForgeError::json(path, e))?;
        catalog.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        catalog.check_ids()?;
        Ok(catalog)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| ForgeError::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| ForgeError::io(path, e))
    }

    fn check_ids(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.meta.id.as_str()) {
                return Err(ForgeError::InvalidMetadata {
                    id: e.meta.id.clone(),
                    reason: "duplicate entity id".into(),
                });
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Loads and annotates every entry, preserving catalog order.
    pub fn load_entities(&self, tables: &CategoryTables, opts: LoadOptions) -> Result<Vec<(Split, Entity)>> {
        self.check_ids()?;
        self.entries
            .par_iter()
            .map(|entry| {
                let rgb = self.resolve(&entry.rgb);
                let alpha = entry.alpha.as_ref().map(|a| self.resolve(a));
                let entity = load_entity(&rgb, alpha.as_deref(), &entry.meta, tables, opts)?;
                Ok((entry.split, entity))
            })
            .collect()
    }

    /// Moves every category that only occurs in the test split to train.
    /// Returns the moved categories.
    pub fn move_test_only_categories_to_train(&mut self) -> BTreeSet<String> {
        let train: BTreeSet<String> = self
            .entries
            .iter()
            .filter(|e| e.split == Split::Train)
            .map(|e| e.meta.category.clone())
            .collect();
        let moved: BTreeSet<String> = self
            .entries
            .iter()
            .filter(|e| e.split == Split::Test && !train.contains(&e.meta.category))
            .map(|e| e.meta.category.clone())
            .collect();
        for e in &mut self.entries {
            if moved.contains(&e.meta.category) {
                e.split = Split::Train;
            }
        }
        moved
    }
}
