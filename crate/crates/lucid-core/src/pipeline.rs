//! End-to-end runs behind the CLI subcommands: train, audit, sweep.
//!
//! Every artifact is written atomically (temp file + rename) and every
//! emitted CSV re-parses with its declared column count. Audit reports are
//! checked against the published JSON schema and the protected-feature
//! coverage invariant before they touch disk.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    categorical_counts, chi_square_uniformity, compare_analyses, numeric_shift,
    CategoricalDistribution, CountStage, FeatureDistribution, UncomparedFeature, UniformityTest,
};
use crate::data::{
    fit_schema, ingest, read_csv, split, DatasetConfig, FeatureSchema, RowCounts, Sample, Value,
};
use crate::error::{LucidError, Result};
use crate::inverse::{generate_canonical_set, CanonicalSet, Stage};
use crate::nn::MlpModel;
use crate::report::{
    atomic_write, AuditReport, DatasetSection, RunConfig, StageStats, StageSummaries,
    REPORT_FORMAT_VERSION,
};
use crate::trainer::{evaluate, train, TrainReport};

pub const MODEL_FILE: &str = "model.json";
pub const SCHEMA_FILE: &str = "schema.json";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const AUDIT_REPORT_FILE: &str = "audit_report.json";
pub const HISTOGRAMS_FILE: &str = "histograms.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

pub fn canonical_file(stage: Stage) -> &'static str {
    match stage {
        Stage::Initial => "canonical_initial.csv",
        Stage::Optimized => "canonical_optimized.csv",
        Stage::Formatted => "canonical_formatted.csv",
    }
}

/// Dataset loaded, filtered, and split according to a run config.
pub struct PreparedData {
    pub dataset: DatasetConfig,
    pub counts: RowCounts,
    pub train_set: Vec<Sample>,
    pub test_set: Vec<Sample>,
}

pub fn prepare_dataset(run: &RunConfig, base: &Path) -> Result<PreparedData> {
    let (dataset, csv_path) = DatasetConfig::from_file(&run.dataset_config_path(base))?;
    let table = read_csv(&csv_path)?;
    let outcome = ingest(&table, &dataset)?;
    let (train_set, test_set) = split(&outcome.samples, run.split.test_fraction, run.split.seed)?;
    Ok(PreparedData {
        dataset,
        counts: outcome.counts,
        train_set,
        test_set,
    })
}

pub struct TrainOutputs {
    pub out_dir: PathBuf,
    pub model: MlpModel,
    pub schema: FeatureSchema,
    pub report: TrainReport,
}

/// The `train` run: ingest, split, fit the schema on the training split,
/// train, score the held-out split, and write model/schema/report JSON.
pub fn run_train(run: &RunConfig, base: &Path) -> Result<TrainOutputs> {
    run.validate(base)?;
    let data = prepare_dataset(run, base)?;
    log::info!(
        "dataset '{}': {} raw rows, {} kept ({} missing, {} filtered)",
        data.dataset.id,
        data.counts.raw,
        data.counts.kept,
        data.counts.dropped_missing,
        data.counts.dropped_filtered
    );
    let schema = fit_schema(&data.train_set, &data.dataset)?;
    let (model, mut report) = train(&schema, &data.train_set, &run.train)?;
    report.final_test_accuracy = Some(evaluate(&model, &schema, &data.test_set)?.accuracy);
    log::info!(
        "trained: train accuracy {:.4}, test accuracy {:.4}",
        report.final_train_accuracy,
        report.final_test_accuracy.unwrap()
    );

    let out_dir = run.resolve_output_dir(base)?;
    atomic_write(&out_dir.join(MODEL_FILE), &model.to_json())?;
    atomic_write(&out_dir.join(SCHEMA_FILE), &schema.to_json())?;
    atomic_write(
        &out_dir.join(TRAIN_REPORT_FILE),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(TrainOutputs {
        out_dir,
        model,
        schema,
        report,
    })
}

/// Loads the model plus its sibling schema and train report, checking the
/// dimension contract.
pub fn load_model_artifacts(model_path: &Path) -> Result<(MlpModel, FeatureSchema, TrainReport)> {
    let read = |path: &Path| -> Result<String> {
        std::fs::read_to_string(path).map_err(|source| LucidError::FileRead {
            path: path.to_path_buf(),
            source,
        })
    };
    let model = MlpModel::from_json(&read(model_path)?)?;
    let dir = model_path.parent().unwrap_or_else(|| Path::new("."));
    let schema = FeatureSchema::from_json(&read(&dir.join(SCHEMA_FILE))?)?;
    let report: TrainReport = serde_json::from_str(&read(&dir.join(TRAIN_REPORT_FILE))?)?;
    if model.input_dim() != schema.encoded_dim() {
        return Err(LucidError::ModelSchemaMismatch {
            model_dim: model.input_dim(),
            schema_dim: schema.encoded_dim(),
        });
    }
    Ok((model, schema, report))
}

pub struct AuditOutputs {
    pub out_dir: PathBuf,
    pub report: AuditReport,
    pub set: CanonicalSet,
}

/// The `audit` run: generate a canonical set against the frozen model,
/// analyze protected-feature drift, compute output-based metrics on the
/// held-out split, and emit the consolidated report plus CSV artifacts.
pub fn run_audit(run: &RunConfig, base: &Path, model_path: &Path) -> Result<AuditOutputs> {
    run.validate(base)?;
    let (model, schema, train_summary) = load_model_artifacts(model_path)?;
    let data = prepare_dataset(run, base)?;

    let digest_before = model.digest();
    let set = generate_canonical_set(&model, &schema, &run.inverse_design)?;
    assert_eq!(model.digest(), digest_before, "model must stay frozen");

    let eval = evaluate(&model, &schema, &data.test_set)?;
    let predictions: Vec<bool> = eval.predictions.iter().map(|p| p.predicted_positive).collect();
    let labels: Vec<bool> = data.test_set.iter().map(|s| s.label).collect();

    let mut feature_distributions = Vec::new();
    let mut uniformity_tests = Vec::new();
    let mut group_metrics_all = Vec::new();
    let mut numeric_protected = Vec::new();

    for feature in schema.features() {
        if feature.is_categorical() {
            let categories = match &feature.kind {
                crate::data::FeatureKind::Categorical { categories } => categories.clone(),
                _ => unreachable!(),
            };
            let counts_initial =
                categorical_counts(&set, &schema, &feature.name, CountStage::Initial)?;
            let counts_formatted =
                categorical_counts(&set, &schema, &feature.name, CountStage::Formatted)?;
            let mut test = chi_square_uniformity(
                &feature.name,
                &counts_formatted,
                run.analysis.significance_level,
            )?;
            let modal = counts_formatted
                .iter()
                .enumerate()
                .max_by_key(|(_, c)| **c)
                .map(|(i, _)| categories[i].clone());
            test.modal_category = modal;
            uniformity_tests.push(test);
            feature_distributions.push(FeatureDistribution::Categorical(
                CategoricalDistribution {
                    feature: feature.name.clone(),
                    categories: categories.clone(),
                    counts_initial,
                    counts_formatted,
                },
            ));
            if feature.protected {
                let assignments: Vec<String> = data
                    .test_set
                    .iter()
                    .map(|s| match s.values.get(&feature.name) {
                        Some(Value::Text(v)) => Ok(v.clone()),
                        _ => Err(LucidError::MissingFeature {
                            feature: feature.name.clone(),
                        }),
                    })
                    .collect::<Result<_>>()?;
                group_metrics_all.push(crate::analysis::group_metrics(
                    &feature.name,
                    &categories,
                    &assignments,
                    &predictions,
                    &labels,
                )?);
            }
        } else {
            feature_distributions.push(FeatureDistribution::Numeric(numeric_shift(
                &set,
                &schema,
                &feature.name,
                run.analysis.histogram_bins,
            )?));
            if feature.protected {
                numeric_protected.push(feature.name.clone());
            }
        }
    }

    let protected_tests: Vec<UniformityTest> = uniformity_tests
        .iter()
        .filter(|t| {
            schema
                .feature(&t.feature)
                .map(|f| f.protected)
                .unwrap_or(false)
        })
        .cloned()
        .collect();
    let mut comparison = compare_analyses(
        &protected_tests,
        &group_metrics_all,
        run.analysis.metric_gap_threshold,
    );
    for feature in numeric_protected {
        comparison.uncompared.push(UncomparedFeature {
            feature,
            reason: "numeric protected feature: drift is reported under feature_distributions, \
                     not as a categorical uniformity test"
                .into(),
        });
    }

    let report = AuditReport {
        report_version: REPORT_FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_at: chrono::Utc::now(),
        dataset: DatasetSection {
            id: data.dataset.id.clone(),
            row_counts: data.counts,
            train_rows: data.train_set.len(),
            test_rows: data.test_set.len(),
        },
        schema_digest: schema.digest(),
        model_digest: digest_before,
        train_summary,
        inverse_design: run.inverse_design.clone(),
        analysis_config: run.analysis.clone(),
        prediction_stages: StageSummaries::of(&set),
        feature_distributions,
        uniformity_tests,
        group_metrics: group_metrics_all,
        comparison,
    };
    report.check_protected_coverage(&schema)?;
    report.validate_against_schema()?;

    let out_dir = run.resolve_output_dir(base)?;
    atomic_write(&out_dir.join(AUDIT_REPORT_FILE), &report.to_json())?;
    for stage in [Stage::Initial, Stage::Optimized, Stage::Formatted] {
        atomic_write(
            &out_dir.join(canonical_file(stage)),
            &matrix_csv(&schema, set.matrix(stage))?,
        )?;
    }
    atomic_write(
        &out_dir.join(HISTOGRAMS_FILE),
        &histograms_csv(&report.feature_distributions)?,
    )?;
    if let Some(trajectory) = &set.mean_loss_trajectory {
        atomic_write(&out_dir.join(TRAJECTORY_FILE), &trajectory_csv(trajectory)?)?;
    }

    Ok(AuditOutputs {
        out_dir,
        report,
        set,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub initial: StageStats,
    pub optimized: StageStats,
    pub formatted: StageStats,
}

pub struct SweepOutputs {
    pub out_dir: PathBuf,
    pub rows: Vec<SweepRow>,
}

/// The `sweep` run: one canonical set per learning rate, same seed, with a
/// per-rate prediction summary CSV and the per-rate canonical matrices.
pub fn run_sweep(
    run: &RunConfig,
    base: &Path,
    model_path: &Path,
    learning_rates: &[f64],
) -> Result<SweepOutputs> {
    if learning_rates.is_empty() {
        return Err(LucidError::InvalidConfig(
            "sweep needs at least one learning rate".into(),
        ));
    }
    run.validate(base)?;
    let (model, schema, _) = load_model_artifacts(model_path)?;
    let out_dir = run.resolve_output_dir(base)?;

    let mut rows = Vec::with_capacity(learning_rates.len());
    for &alpha in learning_rates {
        let mut config = run.inverse_design.clone();
        config.learning_rate = alpha;
        config.validate()?;
        let set = generate_canonical_set(&model, &schema, &config)?;
        let stage_dir = out_dir.join(format!("sweep_alpha_{alpha}"));
        for stage in [Stage::Initial, Stage::Optimized, Stage::Formatted] {
            atomic_write(
                &stage_dir.join(canonical_file(stage)),
                &matrix_csv(&schema, set.matrix(stage))?,
            )?;
        }
        let summaries = StageSummaries::of(&set);
        rows.push(SweepRow {
            alpha,
            initial: summaries.initial,
            optimized: summaries.optimized,
            formatted: summaries.formatted,
        });
    }

    atomic_write(&out_dir.join(SWEEP_FILE), &sweep_csv(&rows)?)?;
    Ok(SweepOutputs { out_dir, rows })
}

fn csv_into_string<F>(write: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    write(&mut writer)?;
    let bytes = writer
        .into_inner()
        .map_err(|e| LucidError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Canonical-set matrix as CSV with schema-derived slot headers. Values use
/// the shortest representation that round-trips exactly.
pub fn matrix_csv(schema: &FeatureSchema, matrix: &[Vec<f64>]) -> Result<String> {
    csv_into_string(|writer| {
        writer.write_record(schema.slot_names())?;
        for row in matrix {
            writer.write_record(row.iter().map(|v| v.to_string()))?;
        }
        Ok(())
    })
}

/// Tidy histogram CSV: feature, stage, bin (category name or bin index),
/// count.
pub fn histograms_csv(distributions: &[FeatureDistribution]) -> Result<String> {
    csv_into_string(|writer| {
        writer.write_record(["feature", "stage", "bin", "count"])?;
        for dist in distributions {
            match dist {
                FeatureDistribution::Categorical(c) => {
                    for (stage, counts) in
                        [("initial", &c.counts_initial), ("formatted", &c.counts_formatted)]
                    {
                        for (category, count) in c.categories.iter().zip(counts) {
                            writer.write_record([
                                c.feature.as_str(),
                                stage,
                                category.as_str(),
                                &count.to_string(),
                            ])?;
                        }
                    }
                }
                FeatureDistribution::Numeric(n) => {
                    for (stage, summary) in [("initial", &n.before), ("optimized", &n.after)] {
                        for (bin, count) in summary.histogram.iter().enumerate() {
                            writer.write_record([
                                n.feature.as_str(),
                                stage,
                                &bin.to_string(),
                                &count.to_string(),
                            ])?;
                        }
                    }
                }
            }
        }
        Ok(())
    })
}

fn trajectory_csv(mean_losses: &[f64]) -> Result<String> {
    csv_into_string(|writer| {
        writer.write_record(["epoch", "mean_loss"])?;
        for (epoch, loss) in mean_losses.iter().enumerate() {
            writer.write_record([epoch.to_string(), loss.to_string()])?;
        }
        Ok(())
    })
}

fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    csv_into_string(|writer| {
        writer.write_record([
            "alpha",
            "initial_mean",
            "initial_min",
            "initial_max",
            "optimized_mean",
            "optimized_min",
            "optimized_max",
            "formatted_mean",
            "formatted_min",
            "formatted_max",
        ])?;
        for row in rows {
            writer.write_record([
                row.alpha.to_string(),
                row.initial.mean.to_string(),
                row.initial.min.to_string(),
                row.initial.max.to_string(),
                row.optimized.mean.to_string(),
                row.optimized.min.to_string(),
                row.optimized.max.to_string(),
                row.formatted.mean.to_string(),
                row.formatted.min.to_string(),
                row.formatted.max.to_string(),
            ])?;
        }
        Ok(())
    })
}
