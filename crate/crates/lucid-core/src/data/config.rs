//! Declarative dataset configuration: which CSV columns are features, which
//! is the label, which rows to keep.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LucidError, Result};

/// Role a CSV column plays in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Numeric,
    Categorical,
    Target,
    Drop,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
    /// Legally protected attribute; audited by the fairness analysis.
    #[serde(default)]
    pub protected: bool,
    /// Label value of the positive (preferred) class; target column only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
}

/// Row-level keep/drop predicates applied at ingestion, before any other
/// processing. Rows failing any filter are dropped and counted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RowFilter {
    /// Keep rows whose numeric `column` lies in `[min, max]`.
    NumericRange { column: String, min: f64, max: f64 },
    /// Keep rows whose `column` differs from `value`.
    NotEqual { column: String, value: String },
}

impl RowFilter {
    pub fn column(&self) -> &str {
        match self {
            RowFilter::NumericRange { column, .. } | RowFilter::NotEqual { column, .. } => column,
        }
    }
}

/// Declarative description of one dataset: CSV location, per-column roles,
/// missing-value marker, and row filters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub id: String,
    /// CSV path; relative paths resolve against the config file's directory.
    pub csv_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_marker: Option<String>,
    pub columns: Vec<ColumnSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filters: Vec<RowFilter>,
}

impl DatasetConfig {
    pub fn from_file(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|source| LucidError::FileRead {
            path: path.to_path_buf(),
            source,
        })?;
        let config: DatasetConfig = serde_json::from_str(&text)?;
        config.validate()?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let csv_path = base.join(&config.csv_path);
        Ok((config, csv_path))
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(LucidError::InvalidConfig(format!(
                "dataset '{}' declares no columns",
                self.id
            )));
        }
        let targets: Vec<&ColumnSpec> = self
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Target)
            .collect();
        if targets.len() != 1 {
            return Err(LucidError::InvalidConfig(format!(
                "dataset '{}' must declare exactly one target column, found {}",
                self.id,
                targets.len()
            )));
        }
        if targets[0].positive_label.is_none() {
            return Err(LucidError::InvalidConfig(format!(
                "target column '{}' needs a positive_label",
                targets[0].name
            )));
        }
        for c in &self.columns {
            if c.role != ColumnRole::Target && c.positive_label.is_some() {
                return Err(LucidError::InvalidConfig(format!(
                    "column '{}' sets positive_label but is not the target",
                    c.name
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(&c.name) {
                return Err(LucidError::InvalidConfig(format!(
                    "duplicate column '{}' in dataset config",
                    c.name
                )));
            }
        }
        for f in &self.filters {
            if !seen.contains(&f.column().to_string()) {
                return Err(LucidError::UnknownColumn {
                    column: f.column().to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn target(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::Target)
            .expect("validated config has a target")
    }

    pub fn positive_label(&self) -> &str {
        self.target()
            .positive_label
            .as_deref()
            .expect("validated config has a positive label")
    }

    /// Feature columns (numeric + categorical) in declaration order; this
    /// order fixes the encoded-vector layout.
    pub fn feature_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns
            .iter()
            .filter(|c| matches!(c.role, ColumnRole::Numeric | ColumnRole::Categorical))
    }
}
