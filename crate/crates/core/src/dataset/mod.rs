//! Balancing, grouping, composite sampling, manifests and statistics.

mod balance;
mod build;
mod manifest;
mod stats;

pub use balance::{auto_unit, balance, make_groups, BalanceUnit, ClassCounts, DuplicationPlan, Group, RelationRatio};
pub use build::{
    build_dataset, class_counts, image_id, load_backgrounds, plan_split, Background, BuildConfig, EntityPools,
    SplitPlan,
};
pub use manifest::{
    canonical_json, filter_keyword_setting, keyword_unambiguous, BuildFailure, DatasetManifest, EntityRecord,
    ImageRecord,
};
pub use stats::{stats, Setting, StatsReport};
