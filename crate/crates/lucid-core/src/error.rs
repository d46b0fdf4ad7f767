//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LucidError>;

#[derive(Debug, Error)]
pub enum LucidError {
    #[error("{context}: dimension mismatch, expected {expected} but got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("target must be a one-hot vector over two classes, got [{0}, {1}]")]
    NonOneHotTarget(f64, f64),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("non-finite gradient at input component {component}")]
    NonFiniteGradient { component: usize },

    #[error("inverse design failed for input {input_index} at epoch {epoch}: {source}")]
    StepFailed {
        input_index: usize,
        epoch: usize,
        #[source]
        source: Box<LucidError>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} is empty")]
    Empty { what: String },

    #[error("numeric column '{column}' is constant (min equals max)")]
    ConstantColumn { column: String },

    #[error("column '{column}' in config does not exist in the data")]
    UnknownColumn { column: String },

    #[error("column '{column}' required by config is missing from the CSV header")]
    MissingColumn { column: String },

    #[error("feature '{feature}' has no category '{value}' in the schema")]
    UnknownCategory { feature: String, value: String },

    #[error("sample is missing schema feature '{feature}'")]
    MissingFeature { feature: String },

    #[error("feature '{feature}' is not {expected_kind}")]
    WrongFeatureKind {
        feature: String,
        expected_kind: &'static str,
    },

    #[error("schema has no feature named '{feature}'")]
    UnknownFeature { feature: String },

    #[error("training set contains a single class only")]
    SingleClass,

    #[error("model parameters changed during inverse design")]
    FrozenModelViolated,

    #[error("training loss became NaN at epoch {epoch}")]
    NanLoss { epoch: usize },

    #[error("model input dimension {model_dim} does not match schema encoded dimension {schema_dim}")]
    ModelSchemaMismatch { model_dim: usize, schema_dim: usize },

    #[error("unsupported model format version {found} (this tool reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("audit report failed schema validation: {0}")]
    ReportSchema(String),

    #[error("cannot read {path}: {source}")]
    FileRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    FileWrite {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LucidError {
    /// Exit code the CLI maps this error to: 2 for usage/config problems,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LucidError::InvalidConfig(_)
            | LucidError::UnknownColumn { .. }
            | LucidError::MissingColumn { .. }
            | LucidError::FileRead { .. }
            | LucidError::UnsupportedVersion { .. } => 2,
            _ => 1,
        }
    }

    /// Machine-readable JSON for the CLI error channel.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}
