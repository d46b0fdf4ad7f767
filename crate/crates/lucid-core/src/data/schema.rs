//! Feature schema: the mapping between raw samples and encoded model vectors.
//!
//! Numeric features min-max scale to one slot; categorical features one-hot
//! encode to one slot per category. Slot order follows the config's column
//! order with categories sorted lexicographically, so the layout is
//! deterministic regardless of file row order.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{ColumnRole, DatasetConfig, Sample, Value};
use crate::error::{LucidError, Result};

pub const SCHEMA_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric { min: f64, max: f64 },
    Categorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub protected: bool,
}

impl FeatureSpec {
    pub fn slot_width(&self) -> usize {
        match &self.kind {
            FeatureKind::Numeric { .. } => 1,
            FeatureKind::Categorical { categories } => categories.len(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub column: String,
    pub positive_label: String,
}

/// Ordered feature specs plus the induced encoded-vector layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    version: u32,
    features: Vec<FeatureSpec>,
    encoded_dim: usize,
    target: TargetSpec,
}

/// Human-readable decoding of an encoded vector.
#[derive(Debug, Clone, Serialize)]
pub struct DecodedRecord {
    pub fields: Vec<DecodedField>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodedField {
    pub name: String,
    pub value: DecodedValue,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodedValue {
    /// Inverse min-max scaled; values outside the training range map linearly
    /// beyond it.
    Numeric(f64),
    /// Argmax category of the group plus the raw slot values.
    Categorical {
        category: String,
        raw_slots: Vec<f64>,
    },
}

impl FeatureSchema {
    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn encoded_dim(&self) -> usize {
        self.encoded_dim
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature(&self, name: &str) -> Result<&FeatureSpec> {
        self.features
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| LucidError::UnknownFeature {
                feature: name.to_string(),
            })
    }

    /// Encoded-vector slot range of feature `index`.
    pub fn slots_of(&self, index: usize) -> Range<usize> {
        let start: usize = self.features[..index].iter().map(|f| f.slot_width()).sum();
        start..start + self.features[index].slot_width()
    }

    /// One name per encoded slot: `age` for numerics, `sex=Male` for
    /// categorical slots.
    pub fn slot_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.encoded_dim);
        for f in &self.features {
            match &f.kind {
                FeatureKind::Numeric { .. } => names.push(f.name.clone()),
                FeatureKind::Categorical { categories } => {
                    names.extend(categories.iter().map(|c| format!("{}={}", f.name, c)));
                }
            }
        }
        names
    }

    /// Min-max scale + one-hot encode `sample` into a length-M vector.
    pub fn encode(&self, sample: &Sample) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.encoded_dim);
        for f in &self.features {
            let value = sample
                .values
                .get(&f.name)
                .ok_or_else(|| LucidError::MissingFeature {
                    feature: f.name.clone(),
                })?;
            match (&f.kind, value) {
                (FeatureKind::Numeric { min, max }, Value::Number(v)) => {
                    out.push((v - min) / (max - min));
                }
                (FeatureKind::Categorical { categories }, Value::Text(v)) => {
                    let hit = categories.iter().position(|c| c == v).ok_or_else(|| {
                        LucidError::UnknownCategory {
                            feature: f.name.clone(),
                            value: v.clone(),
                        }
                    })?;
                    out.extend((0..categories.len()).map(|i| f64::from(i == hit)));
                }
                (FeatureKind::Numeric { .. }, Value::Text(_)) => {
                    return Err(LucidError::WrongFeatureKind {
                        feature: f.name.clone(),
                        expected_kind: "numeric",
                    })
                }
                (FeatureKind::Categorical { .. }, Value::Number(_)) => {
                    return Err(LucidError::WrongFeatureKind {
                        feature: f.name.clone(),
                        expected_kind: "categorical",
                    })
                }
            }
        }
        Ok(out)
    }

    /// Inverse of `encode`, total on any finite length-M vector: numeric
    /// slots inverse-scale (extrapolating linearly outside `[0,1]`),
    /// categorical groups report their argmax category (ties break to the
    /// lowest index) alongside the raw slot values.
    pub fn decode(&self, vector: &[f64]) -> Result<DecodedRecord> {
        if vector.len() != self.encoded_dim {
            return Err(LucidError::DimensionMismatch {
                context: "decode input".into(),
                expected: self.encoded_dim,
                actual: vector.len(),
            });
        }
        let mut fields = Vec::with_capacity(self.features.len());
        let mut cursor = 0;
        for f in &self.features {
            let width = f.slot_width();
            let slots = &vector[cursor..cursor + width];
            cursor += width;
            let value = match &f.kind {
                FeatureKind::Numeric { min, max } => {
                    DecodedValue::Numeric(min + slots[0] * (max - min))
                }
                FeatureKind::Categorical { categories } => {
                    let winner = argmax(slots);
                    DecodedValue::Categorical {
                        category: categories[winner].clone(),
                        raw_slots: slots.to_vec(),
                    }
                }
            };
            fields.push(DecodedField {
                name: f.name.clone(),
                value,
            });
        }
        Ok(DecodedRecord { fields })
    }

    /// Decoded raw-unit value of the numeric feature at `index` from an
    /// encoded vector.
    pub fn decode_numeric_at(&self, index: usize, vector: &[f64]) -> Result<f64> {
        match &self.features[index].kind {
            FeatureKind::Numeric { min, max } => {
                let slot = self.slots_of(index).start;
                Ok(min + vector[slot] * (max - min))
            }
            FeatureKind::Categorical { .. } => Err(LucidError::WrongFeatureKind {
                feature: self.features[index].name.clone(),
                expected_kind: "numeric",
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let schema: FeatureSchema = serde_json::from_str(json)?;
        if schema.version != SCHEMA_FORMAT_VERSION {
            return Err(LucidError::UnsupportedVersion {
                found: schema.version,
                supported: SCHEMA_FORMAT_VERSION,
            });
        }
        Ok(schema)
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// Index of the largest slot; ties break to the lowest index.
pub(crate) fn argmax(slots: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in slots.iter().enumerate().skip(1) {
        if *v > slots[best] {
            best = i;
        }
    }
    best
}

/// Fits a schema from observed rows: numeric min/max from the data,
/// categorical category lists from the observed distinct values, sorted
/// lexicographically. Feature order follows the config's column order.
pub fn fit_schema(samples: &[Sample], config: &DatasetConfig) -> Result<FeatureSchema> {
    if samples.is_empty() {
        return Err(LucidError::Empty {
            what: "schema-fit table".into(),
        });
    }
    let mut features = Vec::new();
    for col in config.feature_columns() {
        let kind = match col.role {
            ColumnRole::Numeric => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for s in samples {
                    match s.values.get(&col.name) {
                        Some(Value::Number(v)) => {
                            min = min.min(*v);
                            max = max.max(*v);
                        }
                        _ => {
                            return Err(LucidError::MissingFeature {
                                feature: col.name.clone(),
                            })
                        }
                    }
                }
                if min >= max {
                    return Err(LucidError::ConstantColumn {
                        column: col.name.clone(),
                    });
                }
                FeatureKind::Numeric { min, max }
            }
            ColumnRole::Categorical => {
                let mut distinct = BTreeSet::new();
                for s in samples {
                    match s.values.get(&col.name) {
                        Some(Value::Text(v)) => {
                            distinct.insert(v.clone());
                        }
                        _ => {
                            return Err(LucidError::MissingFeature {
                                feature: col.name.clone(),
                            })
                        }
                    }
                }
                if distinct.len() < 2 {
                    return Err(LucidError::InvalidConfig(format!(
                        "categorical column '{}' has fewer than 2 observed categories",
                        col.name
                    )));
                }
                FeatureKind::Categorical {
                    categories: distinct.into_iter().collect(),
                }
            }
            _ => unreachable!("feature_columns yields features only"),
        };
        features.push(FeatureSpec {
            name: col.name.clone(),
            kind,
            protected: col.protected,
        });
    }
    let encoded_dim = features.iter().map(|f| f.slot_width()).sum();
    Ok(FeatureSchema {
        version: SCHEMA_FORMAT_VERSION,
        features,
        encoded_dim,
        target: TargetSpec {
            column: config.target().name.clone(),
            positive_label: config.positive_label().to_string(),
        },
    })
}
