//! CSV ingestion: header-checked reading, missing-value dropping, row
//! filters, and conversion into typed samples.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnRole, DatasetConfig, RowFilter, Sample, Value};
use crate::error::{LucidError, Result};

/// An RFC-4180 CSV file in memory, header row separated out.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Row bookkeeping carried into the audit report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub raw: usize,
    pub kept: usize,
    pub dropped_missing: usize,
    pub dropped_filtered: usize,
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub samples: Vec<Sample>,
    pub counts: RowCounts,
}

/// Reads a CSV file with a header row. Fields are whitespace-trimmed.
pub fn read_csv(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|source| LucidError::FileRead {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(|f| f.to_string()).collect());
    }
    Ok(RawTable { headers, rows })
}

/// Applies the config to a raw table: verifies the header covers every
/// configured column, drops rows with missing values, applies row filters,
/// and parses the survivors into typed samples.
pub fn ingest(table: &RawTable, config: &DatasetConfig) -> Result<IngestOutcome> {
    config.validate()?;
    if table.rows.is_empty() {
        return Err(LucidError::Empty {
            what: "input table".into(),
        });
    }

    let mut col_index = BTreeMap::new();
    for spec in &config.columns {
        let idx = table
            .headers
            .iter()
            .position(|h| *h == spec.name)
            .ok_or_else(|| LucidError::MissingColumn {
                column: spec.name.clone(),
            })?;
        col_index.insert(spec.name.as_str(), idx);
    }
    for header in &table.headers {
        if !config.columns.iter().any(|c| c.name == *header) {
            return Err(LucidError::UnknownColumn {
                column: header.clone(),
            });
        }
    }

    let positive_label = config.positive_label().to_string();
    let target_idx = col_index[config.target().name.as_str()];

    let mut counts = RowCounts {
        raw: table.rows.len(),
        ..RowCounts::default()
    };
    let mut samples = Vec::with_capacity(table.rows.len());

    'rows: for row in &table.rows {
        if let Some(marker) = &config.missing_marker {
            if row.iter().any(|cell| cell == marker) {
                counts.dropped_missing += 1;
                continue;
            }
        }
        for filter in &config.filters {
            let cell = &row[col_index[filter.column()]];
            let keep = match filter {
                RowFilter::NumericRange { min, max, column } => {
                    let v: f64 = cell.parse().map_err(|_| {
                        LucidError::InvalidConfig(format!(
                            "filter column '{column}' has non-numeric value '{cell}'"
                        ))
                    })?;
                    (*min..=*max).contains(&v)
                }
                RowFilter::NotEqual { value, .. } => cell != value,
            };
            if !keep {
                counts.dropped_filtered += 1;
                continue 'rows;
            }
        }

        let mut values = BTreeMap::new();
        for spec in &config.columns {
            let cell = &row[col_index[spec.name.as_str()]];
            match spec.role {
                ColumnRole::Numeric => {
                    let v: f64 = cell.parse().map_err(|_| {
                        LucidError::InvalidConfig(format!(
                            "numeric column '{}' has non-numeric value '{cell}'",
                            spec.name
                        ))
                    })?;
                    values.insert(spec.name.clone(), Value::Number(v));
                }
                ColumnRole::Categorical => {
                    values.insert(spec.name.clone(), Value::Text(cell.clone()));
                }
                ColumnRole::Target | ColumnRole::Drop => {}
            }
        }
        samples.push(Sample {
            values,
            label: row[target_idx] == positive_label,
        });
        counts.kept += 1;
    }

    Ok(IngestOutcome { samples, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnSpec;

    fn table(rows: &[&str]) -> RawTable {
        RawTable {
            headers: vec!["age".into(), "sex".into(), "skip".into(), "y".into()],
            rows: rows
                .iter()
                .map(|r| r.split(',').map(|c| c.to_string()).collect())
                .collect(),
        }
    }

    fn config() -> DatasetConfig {
        DatasetConfig {
            id: "t".into(),
            csv_path: "t.csv".into(),
            missing_marker: Some("?".into()),
            columns: vec![
                ColumnSpec {
                    name: "age".into(),
                    role: ColumnRole::Numeric,
                    protected: false,
                    positive_label: None,
                },
                ColumnSpec {
                    name: "sex".into(),
                    role: ColumnRole::Categorical,
                    protected: true,
                    positive_label: None,
                },
                ColumnSpec {
                    name: "skip".into(),
                    role: ColumnRole::Drop,
                    protected: false,
                    positive_label: None,
                },
                ColumnSpec {
                    name: "y".into(),
                    role: ColumnRole::Target,
                    protected: false,
                    positive_label: Some("pos".into()),
                },
            ],
            filters: vec![RowFilter::NumericRange {
                column: "age".into(),
                min: 0.0,
                max: 100.0,
            }],
        }
    }

    #[test]
    fn drops_missing_and_filtered_rows() {
        let t = table(&[
            "30,M,x,pos",
            "?,F,x,neg",     // missing
            "250,F,x,pos",   // filtered by age range
            "40,F,x,neg",
        ]);
        let out = ingest(&t, &config()).unwrap();
        assert_eq!(out.counts.raw, 4);
        assert_eq!(out.counts.kept, 2);
        assert_eq!(out.counts.dropped_missing, 1);
        assert_eq!(out.counts.dropped_filtered, 1);
        assert!(out.samples[0].label);
        assert!(!out.samples[1].label);
        assert_eq!(out.samples[0].values.get("age"), Some(&Value::Number(30.0)));
        assert!(!out.samples[0].values.contains_key("skip"));
    }

    #[test]
    fn rejects_header_missing_configured_column() {
        let mut t = table(&["30,M,x,pos"]);
        t.headers[0] = "agee".into();
        let err = ingest(&t, &config()).unwrap_err();
        assert!(matches!(err, LucidError::UnknownColumn { .. } | LucidError::MissingColumn { .. }));
    }

    #[test]
    fn rejects_empty_table() {
        let t = table(&[]);
        assert!(matches!(
            ingest(&t, &config()),
            Err(LucidError::Empty { .. })
        ));
    }
}
