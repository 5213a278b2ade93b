//! Referring expressions: vocabulary, generation, parsing and grounding.

mod generate;
mod grammar;
mod ground;
mod logic;
mod parse;
mod vocab;

pub use generate::{join_list, render_np, NpStyle, MAX_ATTEMPTS};
pub use grammar::Grammar;
pub use ground::{ground, ground_indices, SceneEntity, SceneMeta};
pub use logic::{attribute_units, Attribute, AttributeUnit, ExpressionKind, ExpressionRecord, LogicForm, LogicKind};
pub use vocab::{Lexicon, Role, Style, WordBags};
