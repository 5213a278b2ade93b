//! Entity assets and their attribute annotations.

pub mod colors;
mod entity;
mod store;
mod tables;

pub use entity::{
    annotate_color, dominant_color, dominant_named_color, load_entity, AttributeSet, Entity, EntityMeta, LoadOptions,
    COLOR_ALPHA_THRESHOLD,
};
pub use store::{Catalog, CatalogEntry, Split};
pub use tables::{age_to_group, AgeGroup, CategoryEntry, CategoryTables, EntityClass, Gender, TablesFile};
