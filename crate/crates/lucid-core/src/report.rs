//! Run configuration and the consolidated audit report, including its
//! published JSON schema and atomic artifact writing.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analysis::{ComparisonSummary, FeatureDistribution, GroupMetrics, UniformityTest};
use crate::data::{DatasetConfig, FeatureSchema, RowCounts};
use crate::error::{LucidError, Result};
use crate::inverse::{CanonicalSet, InverseDesignConfig, Stage};
use crate::trainer::{TrainConfig, TrainReport};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// The published JSON schema every emitted audit report validates against.
pub const AUDIT_REPORT_SCHEMA: &str = include_str!("../schemas/audit_report.schema.json");

/// Environment variable consulted when a run config leaves `output_dir`
/// unset.
pub const OUTPUT_DIR_ENV: &str = "LUCID_OUT_DIR";

fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// No default: runs must pin their seed.
    pub seed: u64,
}

fn default_significance() -> f64 {
    0.01
}
fn default_bins() -> usize {
    20
}
fn default_gap_threshold() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// A feature is flagged when its uniformity p-value falls below this.
    #[serde(default = "default_significance")]
    pub significance_level: f64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Output-metric side of the comparison flags a feature when its
    /// statistical-parity gap exceeds this.
    #[serde(default = "default_gap_threshold")]
    pub metric_gap_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            significance_level: default_significance(),
            histogram_bins: default_bins(),
            metric_gap_threshold: default_gap_threshold(),
        }
    }
}

/// One experiment run: dataset, training, inverse design, and analysis
/// settings plus where artifacts land.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Dataset config path; relative paths resolve against this file's
    /// directory.
    pub dataset_config: PathBuf,
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub inverse_design: InverseDesignConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Falls back to `LUCID_OUT_DIR` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Loads a run config; returns it along with the directory its relative
    /// paths resolve against.
    pub fn from_file(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|source| LucidError::FileRead {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig = serde_json::from_str(&text)?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((config, base))
    }

    pub fn dataset_config_path(&self, base: &Path) -> PathBuf {
        base.join(&self.dataset_config)
    }

    /// Full validation: field ranges plus existence of every referenced path.
    pub fn validate(&self, base: &Path) -> Result<()> {
        self.train.validate()?;
        self.inverse_design.validate()?;
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(LucidError::InvalidConfig(format!(
                "split.test_fraction must be in (0, 1), got {}",
                self.split.test_fraction
            )));
        }
        if !(self.analysis.significance_level > 0.0 && self.analysis.significance_level < 1.0) {
            return Err(LucidError::InvalidConfig(
                "analysis.significance_level must be in (0, 1)".into(),
            ));
        }
        if self.analysis.histogram_bins == 0 {
            return Err(LucidError::InvalidConfig(
                "analysis.histogram_bins must be >= 1".into(),
            ));
        }
        if self.analysis.metric_gap_threshold < 0.0 {
            return Err(LucidError::InvalidConfig(
                "analysis.metric_gap_threshold must be >= 0".into(),
            ));
        }
        let dataset_path = self.dataset_config_path(base);
        let (_, csv_path) = DatasetConfig::from_file(&dataset_path)?;
        if !csv_path.exists() {
            return Err(LucidError::FileRead {
                path: csv_path,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            });
        }
        Ok(())
    }

    /// Output directory: explicit config value, else `LUCID_OUT_DIR`.
    pub fn resolve_output_dir(&self, base: &Path) -> Result<PathBuf> {
        if let Some(dir) = &self.output_dir {
            return Ok(base.join(dir));
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) => Ok(PathBuf::from(dir)),
            None => Err(LucidError::InvalidConfig(format!(
                "no output_dir in the run config and {OUTPUT_DIR_ENV} is unset"
            ))),
        }
    }
}

/// Positive-class probability summary of one canonical-set stage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StageStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl StageStats {
    pub fn of(set: &CanonicalSet, stage: Stage) -> StageStats {
        let probs = set.positive_probs(stage);
        let n = probs.len() as f64;
        StageStats {
            mean: probs.iter().sum::<f64>() / n,
            min: probs.iter().cloned().fold(f64::INFINITY, f64::min),
            max: probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSummaries {
    pub initial: StageStats,
    pub optimized: StageStats,
    pub formatted: StageStats,
}

impl StageSummaries {
    pub fn of(set: &CanonicalSet) -> StageSummaries {
        StageSummaries {
            initial: StageStats::of(set, Stage::Initial),
            optimized: StageStats::of(set, Stage::Optimized),
            formatted: StageStats::of(set, Stage::Formatted),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSection {
    pub id: String,
    pub row_counts: RowCounts,
    pub train_rows: usize,
    pub test_rows: usize,
}

/// The consolidated audit artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub report_version: u32,
    pub tool_version: String,
    pub created_at: DateTime<Utc>,
    pub dataset: DatasetSection,
    pub schema_digest: String,
    pub model_digest: String,
    pub train_summary: TrainReport,
    pub inverse_design: InverseDesignConfig,
    pub analysis_config: AnalysisConfig,
    pub prediction_stages: StageSummaries,
    pub feature_distributions: Vec<FeatureDistribution>,
    pub uniformity_tests: Vec<UniformityTest>,
    pub group_metrics: Vec<GroupMetrics>,
    pub comparison: ComparisonSummary,
}

impl AuditReport {
    /// Every protected feature must surface in both the canonical-set section
    /// and the output-metrics section, or be listed as uncompared with a
    /// reason. Checked before every emission.
    pub fn check_protected_coverage(&self, schema: &FeatureSchema) -> Result<()> {
        for feature in schema.features().iter().filter(|f| f.protected) {
            let uncompared = self
                .comparison
                .uncompared
                .iter()
                .any(|u| u.feature == feature.name);
            let in_tests = self
                .uniformity_tests
                .iter()
                .any(|t| t.feature == feature.name);
            let in_metrics = self
                .group_metrics
                .iter()
                .any(|m| m.feature == feature.name);
            if !(uncompared || (in_tests && in_metrics)) {
                return Err(LucidError::ReportSchema(format!(
                    "protected feature '{}' missing from the report \
                     (uniformity test: {in_tests}, group metrics: {in_metrics})",
                    feature.name
                )));
            }
        }
        Ok(())
    }

    /// Validates the serialized report against the published JSON schema.
    pub fn validate_against_schema(&self) -> Result<()> {
        let schema_doc: serde_json::Value = serde_json::from_str(AUDIT_REPORT_SCHEMA)?;
        let compiled = jsonschema::JSONSchema::compile(&schema_doc)
            .map_err(|e| LucidError::ReportSchema(format!("bad published schema: {e}")))?;
        let instance = serde_json::to_value(self)?;
        if let Err(errors) = compiled.validate(&instance) {
            let joined: Vec<String> = errors.map(|e| e.to_string()).collect();
            return Err(LucidError::ReportSchema(joined.join("; ")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Writes a file atomically: temp file in the destination directory, then
/// rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|source| LucidError::FileWrite {
        path: dir.to_path_buf(),
        source,
    })?;
    let map_err = |source: std::io::Error| LucidError::FileWrite {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(map_err)?;
    use std::io::Write;
    tmp.write_all(contents.as_bytes()).map_err(map_err)?;
    tmp.persist(path)
        .map_err(|e| map_err(e.error))
        .map(|_| ())
}
