//! Deterministic construction of referring-image-matting datasets.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! * [`catalog`] loads foreground/alpha assets and annotates their attributes
//!   (named color, transparency, saliency, human gender/age/clothes).
//! * [`compose`] places two or three entities on a background under a
//!   position relationship and renders the composite together with every
//!   entity's visible (occlusion-attenuated) alpha matte.
//! * [`expr`] generates keywords and referring expressions from a small
//!   template grammar, and parses/grounds them back against the scene.
//! * [`dataset`] balances the entity pools, forms groups, samples
//!   relationships and writes the manifest plus statistics.
//! * [`metrics`] scores predicted mattes (SAD/MSE/MAD and the per-image
//!   averaged variants).

pub mod catalog;
pub mod compose;
pub mod dataset;
pub mod error;
pub mod expr;
pub mod metrics;
pub mod raster;
pub mod seed;
pub mod synth;

pub use catalog::{AgeGroup, AttributeSet, CategoryTables, Entity, EntityClass, EntityMeta, Gender};
pub use compose::{Placement, Relation, SceneLayout};
pub use error::{ForgeError, Result};
pub use expr::{Attribute, ExpressionKind, ExpressionRecord, LogicForm, LogicKind};
pub use raster::{AlphaMatte, RgbRaster};
