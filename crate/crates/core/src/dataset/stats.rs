use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::{filter_keyword_setting, DatasetManifest, EntityRecord, ImageRecord};
use crate::catalog::Split;
use crate::error::{ForgeError, Result};

/// Which texts describe an entity: its keyword, or its four expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Keyword,
    Expression,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Keyword => "keyword",
            Setting::Expression => "expression",
        }
    }

    pub fn parse(s: &str) -> Option<Setting> {
        match s {
            "keyword" => Some(Setting::Keyword),
            "expression" => Some(Setting::Expression),
            _ => None,
        }
    }

    /// Images scored in this setting: the keyword setting drops images with
    /// ambiguous keywords.
    pub fn images(self, manifest: &DatasetManifest) -> Vec<ImageRecord> {
        match self {
            Setting::Keyword => filter_keyword_setting(manifest).images,
            Setting::Expression => manifest.images.clone(),
        }
    }

    pub fn texts(self, entity: &EntityRecord) -> Vec<&str> {
        match self {
            Setting::Keyword => vec![entity.keyword.as_str()],
            Setting::Expression => entity.expressions.iter().map(|r| r.text.as_str()).collect(),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub setting: Setting,
    pub split: Option<Split>,
    pub image_count: usize,
    /// Entities that carry texts (dropped entities are not counted).
    pub matte_count: usize,
    pub text_count: usize,
    pub category_count: usize,
    /// Mean whitespace-token count per text.
    pub average_text_length: f64,
    pub class_counts: BTreeMap<String, usize>,
    pub class_proportions: BTreeMap<String, f64>,
    pub relation_frequency: BTreeMap<String, usize>,
    pub attribute_frequency: BTreeMap<String, usize>,
    pub keyword_frequency: BTreeMap<String, usize>,
}

/// Tallies one setting of a manifest, optionally restricted to a split.
pub fn stats(manifest: &DatasetManifest, setting: Setting, split: Option<Split>) -> StatsReport {
    let images: Vec<ImageRecord> = setting
        .images(manifest)
        .into_iter()
        .filter(|im| split.is_none_or(|s| im.split == s))
        .collect();
    let mut report = StatsReport {
        setting,
        split,
        image_count: images.len(),
        matte_count: 0,
        text_count: 0,
        category_count: 0,
        average_text_length: 0.0,
        class_counts: BTreeMap::new(),
        class_proportions: BTreeMap::new(),
        relation_frequency: BTreeMap::new(),
        attribute_frequency: BTreeMap::new(),
        keyword_frequency: BTreeMap::new(),
    };
    let mut categories = BTreeSet::new();
    let mut words = 0usize;
    for im in &images {
        *report.relation_frequency.entry(im.relation.to_string()).or_default() += 1;
        for e in im.entities.iter().filter(|e| !e.is_dropped()) {
            report.matte_count += 1;
            categories.insert(e.category.as_str());
            *report.class_counts.entry(e.class.to_string()).or_default() += 1;
            *report.keyword_frequency.entry(e.keyword.clone()).or_default() += 1;
            let a = &e.attributes;
            let mut attrs = vec![
                format!("color={}", a.color),
                format!("transparent={}", a.transparent),
                format!("salient={}", a.salient),
            ];
            attrs.extend(a.gender.map(|g| format!("gender={g}")));
            attrs.extend(a.age_group.map(|g| format!("age={g}")));
            attrs.extend(a.clothes.as_ref().map(|c| format!("clothes={c}")));
            for key in attrs {
                *report.attribute_frequency.entry(key).or_default() += 1;
            }
            for text in setting.texts(e) {
                report.text_count += 1;
                words += text.split_whitespace().count();
            }
        }
    }
    report.category_count = categories.len();
    if report.text_count > 0 {
        report.average_text_length = words as f64 / report.text_count as f64;
    }
    if report.matte_count > 0 {
        report.class_proportions = report
            .class_counts
            .iter()
            .map(|(k, &v)| (k.clone(), v as f64 / report.matte_count as f64))
            .collect();
    }
    report
}

impl StatsReport {
    /// Writes `classes.csv`, `relations.csv`, `attributes.csv` and
    /// `keywords.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        let mut w = csv::Writer::from_path(dir.join("classes.csv"))?;
        w.write_record(["class", "count", "proportion"])?;
        for (class, count) in &self.class_counts {
            let p = self.class_proportions.get(class).copied().unwrap_or(0.0);
            w.write_record([class.clone(), count.to_string(), format!("{p:.6}")])?;
        }
        w.flush().map_err(|e| ForgeError::io(dir.join("classes.csv"), e))?;
        for (file, header, table) in [
            ("relations.csv", "relation", &self.relation_frequency),
            ("attributes.csv", "attribute", &self.attribute_frequency),
            ("keywords.csv", "keyword", &self.keyword_frequency),
        ] {
            let path = dir.join(file);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record([header, "count"])?;
            for (k, v) in table {
                w.write_record([k.as_str(), &v.to_string()])?;
            }
            w.flush().map_err(|e| ForgeError::io(&path, e))?;
        }
        Ok(())
    }
}
