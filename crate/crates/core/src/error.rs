use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ForgeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("rgb is {rgb:?} but alpha is {alpha:?} (width, height)")]
    DimensionMismatch { rgb: (u32, u32), alpha: (u32, u32) },
    #[error("entity {0} has no foreground pixels")]
    EmptyEntity(String),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("{0:?} is not in the vocabulary")]
    UnknownVocabulary(String),
    #[error("invalid metadata for {id}: {reason}")]
    InvalidMetadata { id: String, reason: String },
    #[error("invalid category tables: {0}")]
    InvalidTables(String),

    #[error("could not place entities for {relation}: {reason}")]
    PlacementInfeasible { relation: String, reason: String },
    #[error("size mismatch: expected {expected:?}, got {actual:?}")]
    SizeMismatch { expected: (u32, u32), actual: (u32, u32) },
    #[error("index {index} out of range for {len} placements")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("no true {0} relation holds for the entity")]
    NoTrueRelation(String),
    #[error("could not produce a uniquely grounding {kind} expression for {entity_id}")]
    UngroundableExpression { entity_id: String, kind: String },
    #[error("cannot parse {text:?}: {reason}")]
    UnparsableExpression { text: String, reason: String },
    #[error("ambiguous parse of {0:?}")]
    AmbiguousParse(String),

    #[error("balance unit {unit} is smaller than the required minimum {minimum}")]
    UnitTooSmall { unit: usize, minimum: usize },
    #[error("pool is not in 5:1:1 proportion: {humans} humans, {animals} animals, {objects} objects")]
    ImbalancedPool {
        humans: usize,
        animals: usize,
        objects: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value {value} at index {index} is outside [0, 1]")]
    RangeViolation { index: usize, value: f32 },
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("prediction directory does not match the manifest: {0}")]
    ManifestMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl ForgeError {
    /// True for failures caused by the input data (files, rasters, assets)
    /// rather than by the caller's arguments or configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            ForgeError::DimensionMismatch { .. }
                | ForgeError::EmptyEntity(_)
                | ForgeError::SizeMismatch { .. }
                | ForgeError::PlacementInfeasible { .. }
                | ForgeError::NoTrueRelation(_)
                | ForgeError::UngroundableExpression { .. }
                | ForgeError::RangeViolation { .. }
                | ForgeError::ManifestMismatch(_)
                | ForgeError::Io { .. }
                | ForgeError::Image { .. }
                | ForgeError::Json { .. }
                | ForgeError::Csv(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ForgeError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        ForgeError::Json {
            path: path.into(),
            source,
        }
    }
}
