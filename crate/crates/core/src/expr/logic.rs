use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{AgeGroup, AttributeSet, Gender};
use crate::compose::Relation;

/// One attribute value as it appears in an expression.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Gender(Gender),
    Age(AgeGroup),
    Color(String),
    Transparent(bool),
    Salient(bool),
    Clothes(String),
}

impl Attribute {
    pub fn word(&self) -> &str {
        match self {
            Attribute::Gender(g) => g.word(),
            Attribute::Age(a) => a.word(),
            Attribute::Color(c) | Attribute::Clothes(c) => c,
            Attribute::Transparent(true) => "transparent",
            Attribute::Transparent(false) => "non-transparent",
            Attribute::Salient(true) => "salient",
            Attribute::Salient(false) => "non-salient",
        }
    }

    /// Strict: a human-only attribute never holds for an entity lacking it.
    pub fn holds_for(&self, attrs: &AttributeSet) -> bool {
        match self {
            Attribute::Gender(g) => attrs.gender == Some(*g),
            Attribute::Age(a) => attrs.age_group == Some(*a),
            Attribute::Color(c) => attrs.color == *c,
            Attribute::Transparent(t) => attrs.transparent == *t,
            Attribute::Salient(s) => attrs.salient == *s,
            Attribute::Clothes(c) => attrs.clothes.as_deref() == Some(c.as_str()),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

/// Attribute groups that are chosen or dropped together when describing an
/// entity. Color and clothes of a human form one outfit unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttributeUnit {
    Single(Attribute),
    Outfit { color: String, clothes: String },
}

impl AttributeUnit {
    pub fn attributes(&self) -> Vec<Attribute> {
        match self {
            AttributeUnit::Single(a) => vec![a.clone()],
            AttributeUnit::Outfit { color, clothes } => {
                vec![Attribute::Color(color.clone()), Attribute::Clothes(clothes.clone())]
            }
        }
    }
}

/// Describable units in rendering order: color, transparency, saliency for
/// non-humans; gender, age, transparency, saliency, outfit for humans.
pub fn attribute_units(attrs: &AttributeSet) -> Vec<AttributeUnit> {
    let flags = [
        AttributeUnit::Single(Attribute::Transparent(attrs.transparent)),
        AttributeUnit::Single(Attribute::Salient(attrs.salient)),
    ];
    match (attrs.gender, attrs.age_group, &attrs.clothes) {
        (Some(g), Some(a), Some(clothes)) => {
            let mut units = vec![
                AttributeUnit::Single(Attribute::Gender(g)),
                AttributeUnit::Single(Attribute::Age(a)),
            ];
            units.extend(flags);
            units.push(AttributeUnit::Outfit {
                color: attrs.color.clone(),
                clothes: clothes.clone(),
            });
            units
        }
        _ => {
            let mut units = vec![AttributeUnit::Single(Attribute::Color(attrs.color.clone()))];
            units.extend(flags);
            units
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LogicKind {
    Keyword,
    Be,
    Ape,
    Rpe,
}

/// Structured meaning of an expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogicForm {
    pub kind: LogicKind,
    /// Canonical category of the referent.
    pub obj0: String,
    pub atts0: BTreeSet<Attribute>,
    pub rel: Option<Relation>,
    /// The relation is with respect to the whole image.
    pub abs: bool,
    pub obj1: Option<String>,
    pub atts1: Option<BTreeSet<Attribute>>,
}

impl LogicForm {
    pub fn keyword(obj0: impl Into<String>) -> Self {
        LogicForm {
            kind: LogicKind::Keyword,
            obj0: obj0.into(),
            atts0: BTreeSet::new(),
            rel: None,
            abs: false,
            obj1: None,
            atts1: None,
        }
    }

    pub fn basic(obj0: impl Into<String>, atts0: BTreeSet<Attribute>) -> Self {
        LogicForm {
            kind: LogicKind::Be,
            atts0,
            ..LogicForm::keyword(obj0)
        }
    }

    pub fn absolute(obj0: impl Into<String>, atts0: BTreeSet<Attribute>, rel: Relation) -> Self {
        LogicForm {
            kind: LogicKind::Ape,
            atts0,
            rel: Some(rel),
            abs: true,
            ..LogicForm::keyword(obj0)
        }
    }

    pub fn relative(
        obj0: impl Into<String>,
        atts0: BTreeSet<Attribute>,
        rel: Relation,
        obj1: impl Into<String>,
        atts1: BTreeSet<Attribute>,
    ) -> Self {
        LogicForm {
            kind: LogicKind::Rpe,
            obj0: obj0.into(),
            atts0,
            rel: Some(rel),
            abs: false,
            obj1: Some(obj1.into()),
            atts1: Some(atts1),
        }
    }

    /// The structural invariants tying `kind` to the optional fields.
    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            LogicKind::Keyword => {
                self.atts0.is_empty() && self.rel.is_none() && self.obj1.is_none() && self.atts1.is_none() && !self.abs
            }
            LogicKind::Be => self.rel.is_none() && self.obj1.is_none() && self.atts1.is_none() && !self.abs,
            LogicKind::Ape => self.rel.is_some() && self.abs && self.obj1.is_none() && self.atts1.is_none(),
            LogicKind::Rpe => self.rel.is_some() && !self.abs && self.obj1.is_some() && self.atts1.is_some(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExpressionKind {
    Keyword,
    Be,
    Ape,
    Rpe1,
    Rpe2,
}

impl ExpressionKind {
    pub const SUITE: [ExpressionKind; 4] = [
        ExpressionKind::Be,
        ExpressionKind::Ape,
        ExpressionKind::Rpe1,
        ExpressionKind::Rpe2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExpressionKind::Keyword => "KEYWORD",
            ExpressionKind::Be => "BE",
            ExpressionKind::Ape => "APE",
            ExpressionKind::Rpe1 => "RPE1",
            ExpressionKind::Rpe2 => "RPE2",
        }
    }

    pub fn logic_kind(self) -> LogicKind {
        match self {
            ExpressionKind::Keyword => LogicKind::Keyword,
            ExpressionKind::Be => LogicKind::Be,
            ExpressionKind::Ape => LogicKind::Ape,
            ExpressionKind::Rpe1 | ExpressionKind::Rpe2 => LogicKind::Rpe,
        }
    }
}

impl fmt::Display for ExpressionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpressionRecord {
    pub entity_id: String,
    pub kind: ExpressionKind,
    pub text: String,
    pub logic: LogicForm,
}
