//! CSV ingestion, feature schema, encoding/decoding between raw samples and
//! model vectors, and train/test splitting.

mod config;
mod ingest;
mod schema;
mod split;
pub mod synth;

pub use config::{ColumnRole, ColumnSpec, DatasetConfig, RowFilter};
pub use ingest::{ingest, read_csv, IngestOutcome, RawTable, RowCounts};
pub(crate) use schema::argmax;
pub use schema::{
    fit_schema, DecodedField, DecodedRecord, DecodedValue, FeatureKind, FeatureSchema,
    FeatureSpec, TargetSpec,
};
pub use split::split;

use std::collections::BTreeMap;

/// A raw cell value: numeric columns carry reals, categorical columns text.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
}

/// One ingested row: feature values keyed by column name, plus the binary
/// label (`true` = positive class).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: BTreeMap<String, Value>,
    pub label: bool,
}
