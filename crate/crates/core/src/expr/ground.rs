use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::logic::{Attribute, LogicForm, LogicKind};
use crate::catalog::{AttributeSet, Entity};
use crate::compose::{eval_relation, SceneLayout};
use crate::error::{ForgeError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneEntity {
    pub id: String,
    pub category: String,
    pub synonyms: BTreeSet<String>,
    pub attributes: AttributeSet,
}

impl From<&Entity> for SceneEntity {
    fn from(e: &Entity) -> Self {
        SceneEntity {
            id: e.id.clone(),
            category: e.category.clone(),
            synonyms: e.synonyms.clone(),
            attributes: e.attributes.clone(),
        }
    }
}

/// A layout plus the annotations of its entities, in placement order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub layout: SceneLayout,
    pub entities: Vec<SceneEntity>,
}

impl SceneMeta {
    pub fn new(layout: SceneLayout, entities: Vec<SceneEntity>) -> Result<Self> {
        let scene = SceneMeta { layout, entities };
        scene.validate()?;
        Ok(scene)
    }

    /// Looks entities up by placement id.
    pub fn from_entities(layout: &SceneLayout, entities: &[&Entity]) -> Result<Self> {
        let ordered = layout
            .placements
            .iter()
            .map(|p| {
                entities
                    .iter()
                    .find(|e| e.id == p.entity_id)
                    .map(|e| SceneEntity::from(*e))
                    .ok_or_else(|| ForgeError::InvalidLayout(format!("no entity for placement {}", p.entity_id)))
            })
            .collect::<Result<Vec<_>>>()?;
        SceneMeta::new(layout.clone(), ordered)
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        if self.entities.len() != self.layout.len() {
            return Err(ForgeError::InvalidLayout(format!(
                "{} entities for {} placements",
                self.entities.len(),
                self.layout.len()
            )));
        }
        for (e, p) in self.entities.iter().zip(&self.layout.placements) {
            if e.id != p.entity_id {
                return Err(ForgeError::InvalidLayout(format!(
                    "entity {} does not match placement {}",
                    e.id, p.entity_id
                )));
            }
        }
        Ok(())
    }
}

fn matches(entity: &SceneEntity, noun: &str, atts: &BTreeSet<Attribute>) -> bool {
    entity.synonyms.contains(noun) && atts.iter().all(|a| a.holds_for(&entity.attributes))
}

/// Indices of the entities the logic form refers to.
pub fn ground_indices(logic: &LogicForm, scene: &SceneMeta) -> Vec<usize> {
    let layout = &scene.layout;
    let holds = |i: usize, j: Option<usize>| {
        logic
            .rel
            .is_some_and(|rel| eval_relation(layout, i, j, rel).unwrap_or(false))
    };
    (0..scene.entities.len())
        .filter(|&i| matches(&scene.entities[i], &logic.obj0, &logic.atts0))
        .filter(|&i| match logic.kind {
            LogicKind::Keyword | LogicKind::Be => true,
            LogicKind::Ape => holds(i, None),
            LogicKind::Rpe => {
                let (Some(obj1), Some(atts1)) = (&logic.obj1, &logic.atts1) else {
                    return false;
                };
                (0..scene.entities.len())
                    .any(|k| k != i && matches(&scene.entities[k], obj1, atts1) && holds(i, Some(k)))
            }
        })
        .collect()
}

/// Ids of the entities the logic form refers to. Empty when nothing matches.
pub fn ground(logic: &LogicForm, scene: &SceneMeta) -> BTreeSet<String> {
    ground_indices(logic, scene)
        .into_iter()
        .map(|i| scene.entities[i].id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::{Placement, Relation, RelationFact};

    fn entity(id: &str, category: &str, synonyms: &[&str], color: &str) -> SceneEntity {
        SceneEntity {
            id: id.into(),
            category: category.into(),
            synonyms: synonyms.iter().map(|s| s.to_string()).collect(),
            attributes: AttributeSet {
                color: color.into(),
                transparent: false,
                salient: true,
                gender: None,
                age_group: None,
                clothes: None,
            },
        }
    }

    fn placement(id: &str, x: u32, y: u32, z: i32) -> Placement {
        Placement {
            entity_id: id.into(),
            scale: 1.0,
            width: 40,
            height: 40,
            offset_x: x,
            offset_y: y,
            z,
        }
    }

    fn scene(entities: Vec<SceneEntity>, xs: &[u32]) -> SceneMeta {
        let placements = entities
            .iter()
            .zip(xs)
            .enumerate()
            .map(|(k, (e, &x))| placement(&e.id, x, 30, k as i32))
            .collect();
        let layout = SceneLayout {
            canvas_w: 200,
            canvas_h: 100,
            placements,
            relation_facts: Vec::<RelationFact>::new(),
        };
        SceneMeta::new(layout, entities).unwrap()
    }

    #[test]
    fn relative_fixture() {
        let s = scene(
            vec![
                entity("c1", "cat", &["cat", "kitty"], "dimgray"),
                entity("f1", "flower", &["flower", "plant"], "lightpink"),
            ],
            &[10, 120],
        );
        let logic = LogicForm::relative(
            "flower",
            BTreeSet::from([Attribute::Color("lightpink".into())]),
            Relation::Right,
            "cat",
            BTreeSet::from([Attribute::Color("dimgray".into()), Attribute::Transparent(false)]),
        );
        assert_eq!(ground(&logic, &s), BTreeSet::from(["f1".to_string()]));
        let mut wrong = logic.clone();
        wrong.rel = Some(Relation::Left);
        assert!(ground(&wrong, &s).is_empty());
    }

    #[test]
    fn keyword_fixtures() {
        let s = scene(
            vec![
                entity("a", "cat", &["cat"], "white"),
                entity("b", "cat", &["cat"], "black"),
            ],
            &[10, 120],
        );
        assert_eq!(ground(&LogicForm::keyword("cat"), &s).len(), 2);
        assert!(ground(&LogicForm::keyword("dog"), &s).is_empty());
        let be = LogicForm::basic("cat", BTreeSet::from([Attribute::Color("black".into())]));
        assert_eq!(ground(&be, &s), BTreeSet::from(["b".to_string()]));
        let ape = LogicForm::absolute("cat", BTreeSet::new(), Relation::Left);
        assert_eq!(ground(&ape, &s), BTreeSet::from(["a".to_string()]));
    }

    #[test]
    fn human_attribute_never_matches_non_human() {
        let s = scene(
            vec![
                entity("a", "cat", &["cat"], "white"),
                entity("b", "dog", &["dog"], "white"),
            ],
            &[10, 120],
        );
        let be = LogicForm::basic("cat", BTreeSet::from([Attribute::Gender(crate::catalog::Gender::Male)]));
        assert!(ground(&be, &s).is_empty());
    }

    #[test]
    fn mismatched_scene_is_rejected() {
        let s = scene(
            vec![
                entity("a", "cat", &["cat"], "white"),
                entity("b", "dog", &["dog"], "white"),
            ],
            &[10, 120],
        );
        let mut entities = s.entities.clone();
        entities[0].id = "zzz".into();
        assert!(SceneMeta::new(s.layout.clone(), entities).is_err());
    }
}
