use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::logic::Attribute;
use crate::catalog::colors::CSS3_COLORS;
use crate::catalog::{AgeGroup, CategoryTables, Gender};
use crate::compose::Relation;
use crate::error::{ForgeError, Result};

const DEFAULT_BAGS: &str = include_str!("../../data/word_bags.json");

/// Relationship phrases and the closed word lists of the templates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordBags {
    pub absolute: BTreeMap<Relation, Vec<String>>,
    pub relative: BTreeMap<Relation, Vec<String>>,
    pub image_nouns: Vec<String>,
    pub articles: Vec<String>,
    pub object_pronouns: Vec<String>,
    pub human_pronouns: Vec<String>,
    pub outfit_preps: Vec<String>,
}

impl Default for WordBags {
    fn default() -> Self {
        WordBags::from_json(DEFAULT_BAGS).expect("embedded word bags are valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Absolute,
    Relative,
}

impl WordBags {
    pub fn from_json(text: &str) -> Result<Self> {
        let bags: WordBags = serde_json::from_str(text).map_err(|e| ForgeError::InvalidTables(e.to_string()))?;
        bags.validate()?;
        Ok(bags)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
        WordBags::from_json(&text)
    }

    pub fn bag(&self, style: Style) -> &BTreeMap<Relation, Vec<String>> {
        match style {
            Style::Absolute => &self.absolute,
            Style::Relative => &self.relative,
        }
    }

    /// Relation a phrase denotes in the given style. A phrase listed under
    /// both left and right (`beside`, `near`, ...) denotes [`Relation::Beside`].
    pub fn meaning(&self, style: Style, phrase: &str) -> Option<Relation> {
        let owners: BTreeSet<Relation> = self
            .bag(style)
            .iter()
            .filter(|(_, phrases)| phrases.iter().any(|p| p == phrase))
            .map(|(&r, _)| r)
            .collect();
        match owners.len() {
            1 => owners.into_iter().next(),
            2 if owners == BTreeSet::from([Relation::Left, Relation::Right]) => Some(Relation::Beside),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ForgeError::InvalidTables(m));
        if self.relative.contains_key(&Relation::Middle) {
            return bad("middle has no relative phrases".into());
        }
        for style in [Style::Absolute, Style::Relative] {
            for (rel, phrases) in self.bag(style) {
                if *rel == Relation::Beside {
                    return bad("beside is derived, not listed".into());
                }
                if phrases.is_empty() {
                    return bad(format!("empty bag for {rel}"));
                }
                for p in phrases {
                    if self.meaning(style, p).is_none() {
                        return bad(format!("phrase {p:?} has no single meaning"));
                    }
                }
            }
        }
        for (name, list) in [
            ("image_nouns", &self.image_nouns),
            ("articles", &self.articles),
            ("object_pronouns", &self.object_pronouns),
            ("human_pronouns", &self.human_pronouns),
            ("outfit_preps", &self.outfit_preps),
        ] {
            if list.is_empty() {
                return bad(format!("{name} is empty"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Article,
    Noun(String),
    Attr(Attribute),
    Pronoun,
    OutfitPrep,
    AbsRel(Relation),
    RelRel(Relation),
    ImageNoun,
    Comma,
    And,
}

impl Role {
    fn family(&self) -> u8 {
        match self {
            Role::AbsRel(_) | Role::RelRel(_) => 0,
            Role::Article => 1,
            Role::Noun(_) => 2,
            Role::Attr(_) => 3,
            Role::Pronoun => 4,
            Role::OutfitPrep => 5,
            Role::ImageNoun => 6,
            Role::Comma => 7,
            Role::And => 8,
        }
    }
}

/// Phrase inventory for longest-match tokenization.
#[derive(Clone, Debug)]
pub struct Lexicon {
    phrases: HashMap<String, Vec<Role>>,
    max_words: usize,
}

impl Lexicon {
    pub fn new(tables: &CategoryTables, bags: &WordBags) -> Result<Self> {
        let mut lex = Lexicon {
            phrases: HashMap::new(),
            max_words: 1,
        };
        lex.add(",", Role::Comma)?;
        lex.add("and", Role::And)?;
        for a in &bags.articles {
            lex.add(a, Role::Article)?;
        }
        for p in bags.object_pronouns.iter().chain(&bags.human_pronouns) {
            lex.add(p, Role::Pronoun)?;
        }
        for p in &bags.outfit_preps {
            lex.add(p, Role::OutfitPrep)?;
        }
        for n in &bags.image_nouns {
            lex.add(n, Role::ImageNoun)?;
        }
        for style in [Style::Absolute, Style::Relative] {
            for phrases in bags.bag(style).values() {
                for p in phrases {
                    let rel = bags.meaning(style, p).expect("validated");
                    let role = match style {
                        Style::Absolute => Role::AbsRel(rel),
                        Style::Relative => Role::RelRel(rel),
                    };
                    lex.add(p, role)?;
                }
            }
        }
        for (word, canonical) in tables.noun_index() {
            lex.add(word, Role::Noun(canonical.clone()))?;
        }
        for (name, _) in CSS3_COLORS.iter() {
            lex.add(name, Role::Attr(Attribute::Color(name.to_string())))?;
        }
        for b in [true, false] {
            lex.add(Attribute::Transparent(b).word(), Role::Attr(Attribute::Transparent(b)))?;
            lex.add(Attribute::Salient(b).word(), Role::Attr(Attribute::Salient(b)))?;
        }
        for g in Gender::ALL {
            lex.add(g.word(), Role::Attr(Attribute::Gender(g)))?;
        }
        for a in AgeGroup::ALL {
            lex.add(a.word(), Role::Attr(Attribute::Age(a)))?;
        }
        for c in tables.clothes() {
            lex.add(c, Role::Attr(Attribute::Clothes(c.clone())))?;
        }
        Ok(lex)
    }

    fn add(&mut self, phrase: &str, role: Role) -> Result<()> {
        let key = normalize(phrase);
        if key.is_empty() {
            return Err(ForgeError::InvalidTables("empty phrase".into()));
        }
        self.max_words = self.max_words.max(key.split(' ').count());
        let roles = self.phrases.entry(key.clone()).or_default();
        if roles.contains(&role) {
            return Ok(());
        }
        // relation phrases may carry both an absolute and a relative reading;
        // any other reuse would make tokens ambiguous
        if roles.iter().any(|r| r.family() != role.family() || role.family() != 0) {
            return Err(ForgeError::InvalidTables(format!(
                "phrase {key:?} has conflicting roles {roles:?} and {role:?}"
            )));
        }
        roles.push(role);
        Ok(())
    }

    pub fn max_phrase_words(&self) -> usize {
        self.max_words
    }

    pub fn roles(&self, phrase: &str) -> Option<&[Role]> {
        self.phrases.get(phrase).map(Vec::as_slice)
    }

    /// Greedy longest-match tokenization. Commas are split off as their own
    /// tokens; text is lowercased.
    pub fn tokenize<'a>(&'a self, text: &str) -> Result<Vec<(String, &'a [Role])>> {
        let spaced = text.to_lowercase().replace(',', " , ");
        let words: Vec<&str> = spaced.split_whitespace().collect();
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < words.len() {
            let longest = (1..=self.max_words.min(words.len() - pos)).rev().find_map(|n| {
                let phrase = words[pos..pos + n].join(" ");
                self.phrases.get(&phrase).map(|roles| (n, phrase, roles.as_slice()))
            });
            match longest {
                Some((n, phrase, roles)) => {
                    out.push((phrase, roles));
                    pos += n;
                }
                None => {
                    return Err(ForgeError::UnparsableExpression {
                        text: text.to_string(),
                        reason: format!("{:?} is not in the vocabulary", words[pos]),
                    })
                }
            }
        }
        Ok(out)
    }
}

fn normalize(phrase: &str) -> String {
    phrase.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bags_match_published_table() {
        let b = WordBags::default();
        assert_eq!(
            b.absolute[&Relation::Left],
            strings(&[
                "at the most left side of",
                "on the far left of",
                "at the leftmost edge of",
                "farthest to the left of"
            ])
        );
        assert_eq!(
            b.relative[&Relation::Right],
            strings(&[
                "to the right of",
                "on the right side of",
                "at the right side of",
                "beside",
                "next to",
                "close to",
                "near"
            ])
        );
        assert_eq!(
            b.relative[&Relation::Top],
            strings(&["above", "over", "on top of", "on"])
        );
        assert_eq!(
            b.relative[&Relation::Bottom],
            strings(&["below", "under", "underneath"])
        );
        assert_eq!(
            b.absolute[&Relation::Bottom],
            strings(&["below", "in the lower part of"])
        );
        assert_eq!(
            b.absolute[&Relation::Behind],
            strings(&["behind", "in the back of", "at the back of"])
        );
        assert_eq!(b.absolute[&Relation::InFrontOf], strings(&["in front of"]));
        assert!(!b.relative.contains_key(&Relation::Middle));
        assert_eq!(b.absolute.len(), 7);
        assert_eq!(b.relative.len(), 6);
    }

    #[test]
    fn shared_left_right_phrases_mean_beside() {
        let b = WordBags::default();
        assert_eq!(b.meaning(Style::Relative, "near"), Some(Relation::Beside));
        assert_eq!(b.meaning(Style::Relative, "to the left of"), Some(Relation::Left));
        assert_eq!(b.meaning(Style::Absolute, "below"), Some(Relation::Bottom));
        assert_eq!(b.meaning(Style::Relative, "in the middle of"), None);
    }

    #[test]
    fn longest_match_wins() {
        let lex = Lexicon::new(&CategoryTables::default(), &WordBags::default()).unwrap();
        assert!(lex.max_phrase_words() >= 5);
        let toks = lex.tokenize("the wine glass on the left side of the wine").unwrap();
        let words: Vec<&str> = toks.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(words, ["the", "wine glass", "on the left side of", "the", "wine"]);
        let toks = lex.tokenize("the senior senior citizen").unwrap();
        let words: Vec<&str> = toks.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(words, ["the", "senior", "senior citizen"]);
    }

    #[test]
    fn unknown_word_is_unparsable() {
        let lex = Lexicon::new(&CategoryTables::default(), &WordBags::default()).unwrap();
        assert!(matches!(
            lex.tokenize("the frobnicating cat"),
            Err(ForgeError::UnparsableExpression { .. })
        ));
    }

    #[test]
    fn conflicting_roles_are_rejected() {
        let mut bags = WordBags::default();
        bags.image_nouns.push("cat".into());
        assert!(Lexicon::new(&CategoryTables::default(), &bags).is_err());
    }
}
