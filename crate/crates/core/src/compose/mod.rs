//! Scene layout and alpha compositing.

mod layout;
mod render;

pub use layout::{eval_relation, plan_layout, BBox, LayoutConfig, Placement, Relation, RelationFact, SceneLayout};
pub use render::{blend, composite, render_layers, visible_alphas, z_order, Composite, Layer};
