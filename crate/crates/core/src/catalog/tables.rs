//! Category, flag and synonym tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::colors;
use crate::error::{ForgeError, Result};

const DEFAULT_TABLES: &str = include_str!("../../data/category_tables.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityClass {
    Human,
    Animal,
    Object,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgeGroup {
    Child,
    Youth,
    Adult,
    Senior,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn word(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 4] = [AgeGroup::Child, AgeGroup::Youth, AgeGroup::Adult, AgeGroup::Senior];

    pub fn word(self) -> &'static str {
        match self {
            AgeGroup::Child => "child",
            AgeGroup::Youth => "youth",
            AgeGroup::Adult => "adult",
            AgeGroup::Senior => "senior",
        }
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityClass::Human => "human",
            EntityClass::Animal => "animal",
            EntityClass::Object => "object",
        })
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

/// Listed age sub-brackets (inclusive) and the group each belongs to.
const AGE_BRACKETS: [(u32, u32, AgeGroup); 8] = [
    (0, 2, AgeGroup::Child),
    (4, 6, AgeGroup::Child),
    (8, 12, AgeGroup::Child),
    (15, 20, AgeGroup::Youth),
    (25, 32, AgeGroup::Adult),
    (38, 43, AgeGroup::Adult),
    (48, 53, AgeGroup::Adult),
    (60, 100, AgeGroup::Senior),
];

/// Maps an age in years to its group. Ages inside a listed sub-bracket take
/// that bracket's group; ages in the gaps go to the bracket with the nearest
/// midpoint, ties to the younger group.
pub fn age_to_group(age: u32) -> AgeGroup {
    if let Some(&(_, _, g)) = AGE_BRACKETS.iter().find(|(lo, hi, _)| (*lo..=*hi).contains(&age)) {
        return g;
    }
    let mut best = (f64::INFINITY, AgeGroup::Child);
    for &(lo, hi, g) in AGE_BRACKETS.iter() {
        let d = (age as f64 - (lo + hi) as f64 / 2.0).abs();
        // brackets are in ascending age order, so strict < keeps the younger on ties
        if d < best.0 {
            best = (d, g);
        }
    }
    best.1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CategoryEntry {
    pub name: String,
    pub class: EntityClass,
    #[serde(default)]
    pub synonyms: Vec<String>,
}

/// On-disk layout of the tables; the embedded defaults use the same format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TablesFile {
    pub human_category: String,
    pub human_base_synonyms: Vec<String>,
    pub human_synonyms: BTreeMap<Gender, BTreeMap<AgeGroup, Vec<String>>>,
    pub transparent: Vec<String>,
    pub non_salient: Vec<String>,
    pub categories: Vec<CategoryEntry>,
    #[serde(default)]
    pub clothes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct CategoryTables {
    file: TablesFile,
    transparent: BTreeSet<String>,
    non_salient: BTreeSet<String>,
    classes: BTreeMap<String, EntityClass>,
    synonyms: BTreeMap<String, BTreeSet<String>>,
    canonical: BTreeMap<String, String>,
    clothes: BTreeSet<String>,
}

impl Default for CategoryTables {
    fn default() -> Self {
        CategoryTables::from_json(DEFAULT_TABLES).expect("embedded tables are valid")
    }
}

impl CategoryTables {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TablesFile = serde_json::from_str(text).map_err(|e| ForgeError::InvalidTables(e.to_string()))?;
        CategoryTables::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
        CategoryTables::from_json(&text)
    }

    pub fn from_file(file: TablesFile) -> Result<Self> {
        let invalid = |msg: String| Err(ForgeError::InvalidTables(msg));
        let mut classes = BTreeMap::new();
        let mut synonyms = BTreeMap::new();
        let mut canonical: BTreeMap<String, String> = BTreeMap::new();

        let mut claim = |word: &str, owner: &str| -> Result<()> {
            match canonical.get(word) {
                Some(prev) if prev != owner => Err(ForgeError::InvalidTables(format!(
                    "{word:?} is a synonym of both {prev:?} and {owner:?}"
                ))),
                _ => {
                    canonical.insert(word.to_string(), owner.to_string());
                    Ok(())
                }
            }
        };

        for entry in &file.categories {
            if classes.insert(entry.name.clone(), entry.class).is_some() {
                return invalid(format!("duplicate category {:?}", entry.name));
            }
            let mut set: BTreeSet<String> = entry.synonyms.iter().cloned().collect();
            set.insert(entry.name.clone());
            for word in &set {
                claim(word, &entry.name)?;
            }
            synonyms.insert(entry.name.clone(), set);
        }

        let human = file.human_category.as_str();
        match classes.get(human) {
            Some(EntityClass::Human) => {}
            _ => return invalid(format!("human category {human:?} missing or not of class human")),
        }
        if classes
            .iter()
            .any(|(name, &class)| class == EntityClass::Human && name != human)
        {
            return invalid("only one category may have class human".into());
        }
        for word in &file.human_base_synonyms {
            claim(word, human)?;
        }
        for g in Gender::ALL {
            for a in AgeGroup::ALL {
                let cell = file.human_synonyms.get(&g).and_then(|m| m.get(&a));
                let Some(cell) = cell.filter(|c| !c.is_empty()) else {
                    return invalid(format!("missing human synonyms for ({g}, {a})"));
                };
                for word in cell {
                    claim(word, human)?;
                }
            }
        }

        let transparent: BTreeSet<String> = file.transparent.iter().cloned().collect();
        let non_salient: BTreeSet<String> = file.non_salient.iter().cloned().collect();
        for name in transparent.iter().chain(&non_salient) {
            if !classes.contains_key(name) {
                return invalid(format!("flag list entry {name:?} is not a category"));
            }
        }
        if transparent.contains(human) || non_salient.contains(human) {
            return invalid("humans must be salient and non-transparent".into());
        }

        let clothes: BTreeSet<String> = file.clothes.iter().cloned().collect();
        for word in canonical.keys() {
            if colors::is_color_name(word) || clothes.contains(word) {
                return invalid(format!("noun {word:?} collides with an attribute word"));
            }
        }
        for word in &clothes {
            if colors::is_color_name(word) {
                return invalid(format!("clothes {word:?} collides with a color name"));
            }
        }

        Ok(CategoryTables {
            file,
            transparent,
            non_salient,
            classes,
            synonyms,
            canonical,
            clothes,
        })
    }

    pub fn human_category(&self) -> &str {
        &self.file.human_category
    }

    pub fn categories(&self) -> impl Iterator<Item = (&str, EntityClass)> {
        self.classes.iter().map(|(n, &c)| (n.as_str(), c))
    }

    pub fn class_of(&self, category: &str) -> Option<EntityClass> {
        self.classes.get(category).copied()
    }

    /// `(transparent, salient)` for a category.
    pub fn annotate_flags(&self, category: &str) -> Result<(bool, bool)> {
        if !self.classes.contains_key(category) {
            return Err(ForgeError::UnknownCategory(category.to_string()));
        }
        Ok((
            self.transparent.contains(category),
            !self.non_salient.contains(category),
        ))
    }

    /// Synonym set of a non-human category, including the category itself.
    pub fn synonyms_of(&self, category: &str) -> Option<&BTreeSet<String>> {
        self.synonyms.get(category)
    }

    /// Base human synonyms united with the `(gender, age group)` cell.
    pub fn human_synonyms(&self, gender: Gender, age: AgeGroup) -> BTreeSet<String> {
        let mut set: BTreeSet<String> = self.file.human_base_synonyms.iter().cloned().collect();
        if let Some(cell) = self.file.human_synonyms.get(&gender).and_then(|m| m.get(&age)) {
            set.extend(cell.iter().cloned());
        }
        set
    }

    /// Every noun phrase the tables know, mapped to its canonical category.
    pub fn noun_index(&self) -> &BTreeMap<String, String> {
        &self.canonical
    }

    pub fn canonical_of(&self, word: &str) -> Option<&str> {
        self.canonical.get(word).map(String::as_str)
    }

    pub fn clothes(&self) -> &BTreeSet<String> {
        &self.clothes
    }

    /// Transparent list in its published order.
    pub fn transparent_list(&self) -> &[String] {
        &self.file.transparent
    }

    pub fn non_salient_list(&self) -> &[String] {
        &self.file.non_salient
    }

    pub fn to_file(&self) -> &TablesFile {
        &self.file
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    const BASE: [&str; 6] = ["human being", "citizenry", "person", "individual", "mankind", "mortal"];

    #[test]
    fn flag_fixtures() {
        let t = CategoryTables::default();
        assert_eq!(t.annotate_flags("wine glass").unwrap(), (true, true));
        assert_eq!(t.annotate_flags("human").unwrap(), (false, true));
        assert_eq!(t.annotate_flags("fire").unwrap(), (true, false));
        assert_eq!(t.annotate_flags("leaves").unwrap(), (false, false));
        assert_eq!(t.annotate_flags("cat").unwrap(), (false, true));
        assert!(matches!(
            t.annotate_flags("unicorn"),
            Err(ForgeError::UnknownCategory(_))
        ));
    }

    #[test]
    fn every_category_has_flags() {
        let t = CategoryTables::default();
        for (name, _) in t.categories() {
            t.annotate_flags(name).unwrap();
        }
    }

    #[test]
    fn flag_lists_match_published_lists() {
        let t = CategoryTables::default();
        let transparent = [
            "smoke",
            "glass",
            "water",
            "gauze",
            "lace",
            "ice",
            "bubble wrap",
            "plastic bag",
            "net",
            "fire",
            "flame",
            "cloth",
            "mesh bag",
            "mesh",
            "wine glass",
            "ice cube",
            "spider web",
            "wine",
            "cloud smog",
            "veil",
            "wedding dress",
            "fishing net",
            "cloth net",
            "light",
            "water drop",
            "drip",
            "dew",
            "crystal stone",
            "beer",
        ];
        let non_salient = [
            "smoke",
            "water",
            "gauze",
            "lace",
            "fire",
            "flame",
            "net",
            "leaves",
            "spider web",
            "mesh",
            "wine",
            "smog",
            "light",
            "water spray",
        ];
        assert_eq!(t.transparent_list(), transparent.map(String::from));
        assert_eq!(t.non_salient_list(), non_salient.map(String::from));
    }

    #[test]
    fn human_synonym_cells() {
        let t = CategoryTables::default();
        let with_base = |extra: &[&str]| {
            let mut s = set(&BASE);
            s.extend(set(extra));
            s
        };
        assert_eq!(
            t.human_synonyms(Gender::Female, AgeGroup::Adult),
            with_base(&["woman", "lady"])
        );
        assert_eq!(
            t.human_synonyms(Gender::Male, AgeGroup::Child),
            with_base(&["baby boy", "little boy", "boy"])
        );
        assert_eq!(
            t.human_synonyms(Gender::Female, AgeGroup::Senior),
            with_base(&["old woman", "senior citizen", "pensioner"])
        );
        assert_eq!(
            t.human_synonyms(Gender::Female, AgeGroup::Youth),
            with_base(&[
                "girl",
                "teenager",
                "adolescent",
                "miss",
                "missy",
                "young lady",
                "young woman"
            ])
        );
        assert_eq!(t.human_synonyms(Gender::Male, AgeGroup::Adult), with_base(&["man"]));
    }

    #[test]
    fn age_fixtures() {
        assert_eq!(age_to_group(30), AgeGroup::Adult);
        assert_eq!(age_to_group(13), AgeGroup::Child);
        assert_eq!(age_to_group(100), AgeGroup::Senior);
        assert_eq!(age_to_group(60), AgeGroup::Senior);
        assert_eq!(age_to_group(0), AgeGroup::Child);
        assert_eq!(age_to_group(130), AgeGroup::Senior);
    }

    /// Brute-force midpoint distances for the gap ages.
    #[test]
    fn gap_ages_follow_nearest_midpoint() {
        // 14: |14-10| = 4, |14-17.5| = 3.5 -> youth
        assert_eq!(age_to_group(14), AgeGroup::Youth);
        // 23: |23-17.5| = 5.5 = |23-28.5| -> tie, younger wins
        assert_eq!(age_to_group(23), AgeGroup::Youth);
        assert_eq!(age_to_group(24), AgeGroup::Adult);
        // 56: |56-50.5| = 5.5 vs |56-80| = 24
        assert_eq!(age_to_group(56), AgeGroup::Adult);
    }

    #[test]
    fn age_groups_are_monotone() {
        let mut prev = AgeGroup::Child;
        for age in 0..=130 {
            let g = age_to_group(age);
            assert!(g >= prev, "age {age}");
            prev = g;
        }
    }

    #[test]
    fn synonyms_canonicalize_uniquely() {
        let t = CategoryTables::default();
        assert_eq!(t.canonical_of("plant"), Some("flower"));
        assert_eq!(t.canonical_of("senior citizen"), Some("human"));
        assert_eq!(t.canonical_of("girl"), Some("human"));
        assert_eq!(t.canonical_of("wine glass"), Some("wine glass"));
    }

    #[test]
    fn conflicting_synonyms_are_rejected() {
        let mut file = CategoryTables::default().to_file().clone();
        file.categories
            .iter_mut()
            .find(|c| c.name == "dog")
            .unwrap()
            .synonyms
            .push("kitty".into());
        assert!(matches!(
            CategoryTables::from_file(file),
            Err(ForgeError::InvalidTables(_))
        ));
    }
}
