use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::grammar::Grammar;
use super::ground::{ground_indices, SceneEntity, SceneMeta};
use super::logic::{attribute_units, Attribute, AttributeUnit, ExpressionKind, ExpressionRecord, LogicForm};
use super::vocab::Style;
use crate::catalog::Entity;
use crate::compose::{eval_relation, Relation};
use crate::error::{ForgeError, Result};

/// Retries per expression before giving up on uniqueness.
pub const MAX_ATTEMPTS: usize = 24;

/// Surface choices for one noun phrase.
#[derive(Clone, Debug)]
pub struct NpStyle<'a> {
    pub article: &'a str,
    /// `Some(pronoun)` renders attributes after the noun (`the cat which is red`).
    pub pronoun: Option<&'a str>,
    pub outfit_prep: &'a str,
}

/// `a`, `a and b`, `a, b and c`.
pub fn join_list(words: &[&str]) -> String {
    match words {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// Renders a noun phrase from attribute units. Human outfit units are always
/// rendered after the noun with the outfit preposition.
pub fn render_np(noun: &str, units: &[AttributeUnit], style: &NpStyle) -> String {
    let mut core: Vec<&str> = Vec::new();
    let mut outfit = None;
    for u in units {
        match u {
            AttributeUnit::Single(a) => core.push(a.word()),
            AttributeUnit::Outfit { color, clothes } => outfit = Some((color, clothes)),
        }
    }
    let mut out = String::from(style.article);
    match style.pronoun {
        Some(p) if !core.is_empty() => {
            out = format!("{out} {noun} {p} {}", join_list(&core));
        }
        _ if !core.is_empty() => {
            out = format!("{out} {} {noun}", join_list(&core));
        }
        _ => {
            out = format!("{out} {noun}");
        }
    }
    if let Some((color, clothes)) = outfit {
        out = format!("{out} {} {color} {clothes}", style.outfit_prep);
    }
    out
}

fn unit_attributes(units: &[AttributeUnit]) -> BTreeSet<Attribute> {
    units.iter().flat_map(AttributeUnit::attributes).collect()
}

/// Random non-empty subset of at least `min` units, in rendering order.
fn sample_units<R: Rng>(units: &[AttributeUnit], min: usize, rng: &mut R) -> Vec<AttributeUnit> {
    let min = min.clamp(1, units.len().max(1));
    let size = rng.gen_range(min..=units.len().max(min));
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, units.len(), size.min(units.len())).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|k| units[k].clone()).collect()
}

struct Candidate {
    other: Option<usize>,
    phrase: String,
    rel: Relation,
}

impl Grammar {
    fn canonical(&self, entity: &SceneEntity) -> String {
        self.tables()
            .canonical_of(&entity.category)
            .unwrap_or(&entity.category)
            .to_string()
    }

    /// Surface nouns for the entity that the parser maps back to its category.
    fn nouns(&self, entity: &SceneEntity) -> Vec<String> {
        let canonical = self.canonical(entity);
        entity
            .synonyms
            .iter()
            .filter(|w| self.tables().canonical_of(w) == Some(canonical.as_str()))
            .cloned()
            .collect()
    }

    /// Category name for the keyword setting. Humans get a random human
    /// synonym.
    pub fn keyword_for<R: Rng>(&self, entity: &Entity, rng: &mut R) -> String {
        if entity.is_human() {
            let words: Vec<&String> = entity.synonyms.iter().collect();
            if let Some(w) = words.choose(rng) {
                return w.to_string();
            }
        }
        self.tables()
            .canonical_of(&entity.category)
            .unwrap_or(&entity.category)
            .to_string()
    }

    fn pick<'a, R: Rng>(list: &'a [String], rng: &mut R) -> &'a str {
        list.choose(rng).map(String::as_str).unwrap_or("")
    }

    fn np_style<R: Rng>(&self, entity: &SceneEntity, clause: bool, rng: &mut R) -> NpStyle<'_> {
        let bags = self.bags();
        let human = entity.attributes.gender.is_some();
        let pronouns = if human {
            &bags.human_pronouns
        } else {
            &bags.object_pronouns
        };
        NpStyle {
            article: Self::pick(&bags.articles, rng),
            pronoun: clause.then(|| Self::pick(pronouns, rng)),
            outfit_prep: Self::pick(&bags.outfit_preps, rng),
        }
    }

    fn absolute_candidates(&self, scene: &SceneMeta, i: usize) -> Vec<Candidate> {
        let mut out = Vec::new();
        for (&rel, phrases) in &self.bags().absolute {
            if !eval_relation(&scene.layout, i, None, rel).unwrap_or(false) {
                continue;
            }
            for p in phrases {
                if self.bags().meaning(Style::Absolute, p) == Some(rel) {
                    out.push(Candidate {
                        other: None,
                        phrase: p.clone(),
                        rel,
                    });
                }
            }
        }
        out
    }

    /// Relative phrases true for `i` against some partner. The first list
    /// holds phrases backed by a stored relation fact.
    fn relative_candidates(&self, scene: &SceneMeta, i: usize) -> (Vec<Candidate>, Vec<Candidate>) {
        let (mut facts, mut derived) = (Vec::new(), Vec::new());
        let facts_of_i: Vec<_> = scene.layout.relation_facts.iter().filter(|f| f.subject == i).collect();
        for k in (0..scene.entities.len()).filter(|&k| k != i) {
            for phrases in self.bags().relative.values() {
                for p in phrases {
                    let Some(rel) = self.bags().meaning(Style::Relative, p) else {
                        continue;
                    };
                    if !eval_relation(&scene.layout, i, Some(k), rel).unwrap_or(false) {
                        continue;
                    }
                    let backed = facts_of_i.iter().any(|f| {
                        f.object == k
                            && (f.relation == rel
                                || (rel == Relation::Beside && matches!(f.relation, Relation::Left | Relation::Right)))
                    });
                    let c = Candidate {
                        other: Some(k),
                        phrase: p.clone(),
                        rel,
                    };
                    if backed {
                        facts.push(c);
                    } else {
                        derived.push(c);
                    }
                }
            }
        }
        (facts, derived)
    }

    fn verify(&self, text: &str, logic: &LogicForm, scene: &SceneMeta, i: usize) -> bool {
        matches!(self.parse(text), Ok(parsed) if parsed == *logic) && ground_indices(logic, scene) == [i]
    }

    /// One expression of the given kind for the entity at placement `entity_id`.
    pub fn generate<R: Rng>(
        &self,
        scene: &SceneMeta,
        entity_id: &str,
        kind: ExpressionKind,
        rng: &mut R,
    ) -> Result<ExpressionRecord> {
        let i = scene
            .layout
            .index_of(entity_id)
            .ok_or_else(|| ForgeError::InvalidLayout(format!("{entity_id} is not in the layout")))?;
        let entity = &scene.entities[i];
        let ungroundable = || ForgeError::UngroundableExpression {
            entity_id: entity_id.to_string(),
            kind: kind.to_string(),
        };
        let nouns = self.nouns(entity);
        if nouns.is_empty() {
            return Err(ungroundable());
        }
        let obj0 = self.canonical(entity);
        let units = attribute_units(&entity.attributes);

        let (absolute, (backed, derived)) = match kind {
            ExpressionKind::Ape => (self.absolute_candidates(scene, i), (Vec::new(), Vec::new())),
            ExpressionKind::Rpe1 | ExpressionKind::Rpe2 => {
                if scene.entities.len() < 2 {
                    return Err(ForgeError::InvalidLayout(
                        "relative expressions need two entities".into(),
                    ));
                }
                (Vec::new(), self.relative_candidates(scene, i))
            }
            _ => (Vec::new(), (Vec::new(), Vec::new())),
        };
        if kind == ExpressionKind::Ape && absolute.is_empty()
            || matches!(kind, ExpressionKind::Rpe1 | ExpressionKind::Rpe2) && backed.is_empty() && derived.is_empty()
        {
            return Err(ForgeError::NoTrueRelation(entity_id.to_string()));
        }

        for attempt in 0..MAX_ATTEMPTS {
            let noun = nouns.choose(rng).expect("non-empty");
            let min_units = 1 + attempt / 4;
            let (text, logic) = match kind {
                ExpressionKind::Keyword => {
                    let kw = self.canonical(entity);
                    (kw.clone(), LogicForm::keyword(kw))
                }
                ExpressionKind::Be => {
                    let clause = entity.attributes.gender.is_none() && rng.gen_bool(0.5);
                    let style = self.np_style(entity, clause, rng);
                    let text = render_np(noun, &units, &style);
                    (text, LogicForm::basic(obj0.clone(), unit_attributes(&units)))
                }
                ExpressionKind::Ape => {
                    let c = absolute.choose(rng).expect("non-empty");
                    let chosen = sample_units(&units, min_units, rng);
                    let style = self.np_style(entity, rng.gen_bool(0.5), rng);
                    let image = Self::pick(&self.bags().image_nouns, rng);
                    let text = format!("{} {} the {image}", render_np(noun, &chosen, &style), c.phrase);
                    (text, LogicForm::absolute(obj0.clone(), unit_attributes(&chosen), c.rel))
                }
                ExpressionKind::Rpe1 | ExpressionKind::Rpe2 => {
                    let pool = if !backed.is_empty() && (attempt < MAX_ATTEMPTS / 2 || derived.is_empty()) {
                        &backed
                    } else {
                        &derived
                    };
                    let c = pool.choose(rng).expect("non-empty");
                    let k = c.other.expect("relative candidate");
                    let partner = &scene.entities[k];
                    let partner_nouns = self.nouns(partner);
                    let Some(partner_noun) = partner_nouns.choose(rng) else {
                        continue;
                    };
                    let clause = kind == ExpressionKind::Rpe2;
                    let chosen = sample_units(&units, min_units, rng);
                    let partner_units = sample_units(&attribute_units(&partner.attributes), min_units, rng);
                    let s0 = self.np_style(entity, clause, rng);
                    let s1 = self.np_style(partner, clause, rng);
                    let text = format!(
                        "{} {} {}",
                        render_np(noun, &chosen, &s0),
                        c.phrase,
                        render_np(partner_noun, &partner_units, &s1)
                    );
                    let logic = LogicForm::relative(
                        obj0.clone(),
                        unit_attributes(&chosen),
                        c.rel,
                        self.canonical(partner),
                        unit_attributes(&partner_units),
                    );
                    (text, logic)
                }
            };
            if self.verify(&text, &logic, scene, i) {
                return Ok(ExpressionRecord {
                    entity_id: entity_id.to_string(),
                    kind,
                    text,
                    logic,
                });
            }
        }
        Err(ungroundable())
    }

    /// BE, APE, RPE1 and RPE2 for one entity, each verified to ground to it
    /// alone.
    pub fn generate_suite<R: Rng>(
        &self,
        scene: &SceneMeta,
        entity_id: &str,
        rng: &mut R,
    ) -> Result<Vec<ExpressionRecord>> {
        ExpressionKind::SUITE
            .iter()
            .map(|&kind| self.generate(scene, entity_id, kind, rng))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{AgeGroup, Gender};
    use crate::compose::{Placement, SceneLayout};
    use crate::seed::rng_for;

    fn single(a: Attribute) -> AttributeUnit {
        AttributeUnit::Single(a)
    }

    fn style(pronoun: Option<&str>) -> NpStyle<'_> {
        NpStyle {
            article: "the",
            pronoun,
            outfit_prep: "with the",
        }
    }

    #[test]
    fn lists() {
        assert_eq!(join_list(&["a"]), "a");
        assert_eq!(join_list(&["a", "b"]), "a and b");
        assert_eq!(join_list(&["a", "b", "c"]), "a, b and c");
    }

    #[test]
    fn paper_surface_forms_render_and_parse() {
        let g = Grammar::default();
        let flower = [
            single(Attribute::Color("lightpink".into())),
            single(Attribute::Salient(true)),
        ];
        let be = render_np("flower", &flower, &style(None));
        assert_eq!(be, "the lightpink and salient flower");
        assert_eq!(
            g.parse(&be).unwrap(),
            LogicForm::basic("flower", unit_attributes(&flower))
        );

        let ape = format!(
            "{} at the rightmost edge of the picture",
            render_np("plant", &flower, &style(Some("which is")))
        );
        assert_eq!(
            ape,
            "the plant which is lightpink and salient at the rightmost edge of the picture"
        );
        assert_eq!(g.parse(&ape).unwrap().rel, Some(Relation::Right));

        let cat = [
            single(Attribute::Color("dimgray".into())),
            single(Attribute::Transparent(false)),
        ];
        let rpe = format!(
            "{} at the right side of {}",
            render_np("flower", &flower[..1], &style(Some("which is"))),
            render_np("cat", &cat, &style(Some("which is")))
        );
        assert_eq!(
            rpe,
            "the flower which is lightpink at the right side of the cat which is dimgray and non-transparent"
        );
    }

    #[test]
    fn human_outfit_rendering() {
        let units = vec![
            single(Attribute::Gender(Gender::Female)),
            single(Attribute::Age(AgeGroup::Adult)),
            AttributeUnit::Outfit {
                color: "crimson".into(),
                clothes: "print".into(),
            },
        ];
        let s = NpStyle {
            article: "the",
            pronoun: None,
            outfit_prep: "in the",
        };
        assert_eq!(
            render_np("woman", &units, &s),
            "the female and adult woman in the crimson print"
        );
        assert_eq!(render_np("woman", &units[2..], &s), "the woman in the crimson print");
    }

    fn scene() -> SceneMeta {
        let attrs = |color: &str| crate::catalog::AttributeSet {
            color: color.into(),
            transparent: false,
            salient: true,
            gender: None,
            age_group: None,
            clothes: None,
        };
        let ent = |id: &str, cat: &str, syn: &[&str], color: &str| SceneEntity {
            id: id.into(),
            category: cat.into(),
            synonyms: syn.iter().map(|s| s.to_string()).collect(),
            attributes: attrs(color),
        };
        let place = |id: &str, x: u32, z: i32| Placement {
            entity_id: id.into(),
            scale: 1.0,
            width: 50,
            height: 50,
            offset_x: x,
            offset_y: 20,
            z,
        };
        SceneMeta::new(
            SceneLayout {
                canvas_w: 240,
                canvas_h: 100,
                placements: vec![place("c", 10, 0), place("f", 170, 1)],
                relation_facts: vec![
                    crate::compose::RelationFact {
                        subject: 0,
                        object: 1,
                        relation: Relation::Left,
                    },
                    crate::compose::RelationFact {
                        subject: 1,
                        object: 0,
                        relation: Relation::Right,
                    },
                ],
            },
            vec![
                ent("c", "cat", &["cat", "kitty", "feline"], "dimgray"),
                ent("f", "flower", &["flower", "plant", "blossom"], "lightpink"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn suite_grounds_uniquely() {
        let g = Grammar::default();
        let s = scene();
        for seed in 0..20 {
            let mut rng = rng_for(seed, &[]);
            for id in ["c", "f"] {
                let suite = g.generate_suite(&s, id, &mut rng).unwrap();
                assert_eq!(suite.len(), 4);
                for rec in &suite {
                    assert_eq!(g.parse(&rec.text).unwrap(), rec.logic);
                    let grounded = super::super::ground::ground(&rec.logic, &s);
                    assert_eq!(grounded, BTreeSet::from([id.to_string()]), "{}", rec.text);
                }
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = Grammar::default();
        let s = scene();
        let a = g.generate_suite(&s, "f", &mut rng_for(9, &[])).unwrap();
        let b = g.generate_suite(&s, "f", &mut rng_for(9, &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn twins_are_ungroundable_by_attributes_alone() {
        let g = Grammar::default();
        let mut s = scene();
        s.entities[1] = SceneEntity {
            id: "f".into(),
            ..s.entities[0].clone()
        };
        let err = g
            .generate(&s, "f", ExpressionKind::Be, &mut rng_for(1, &[]))
            .unwrap_err();
        assert!(matches!(err, ForgeError::UngroundableExpression { .. }));
        let ape = g.generate(&s, "f", ExpressionKind::Ape, &mut rng_for(1, &[])).unwrap();
        assert!(matches!(ape.logic.rel, Some(Relation::Right | Relation::Middle)));
    }
}
