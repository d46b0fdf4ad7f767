//! Fairness analysis: distribution drift of protected features inside a
//! canonical set, and the traditional output-based group metrics (positivity
//! rate, true positive rate) those findings are compared against.

mod chi2;

pub use chi2::{chi_square_sf, chi_square_uniformity, UniformityTest};

use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, FeatureSchema};
use crate::error::{LucidError, Result};
use crate::inverse::CanonicalSet;

/// Which canonical-set stage category counts are taken over. Initial-stage
/// counts interpret each raw uniform group by its argmax category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountStage {
    Initial,
    Formatted,
}

/// Per-feature distribution summary across the canonical set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDistribution {
    Categorical(CategoricalDistribution),
    Numeric(NumericShift),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoricalDistribution {
    pub feature: String,
    pub categories: Vec<String>,
    pub counts_initial: Vec<u64>,
    pub counts_formatted: Vec<u64>,
}

/// Before/after summary of one numeric feature, in decoded (raw) units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NumericShift {
    pub feature: String,
    pub before: NumericSummary,
    pub after: NumericSummary,
    /// Shared bin edges (`bins + 1` values) spanning the pooled
    /// before+after range.
    pub bin_edges: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NumericSummary {
    pub mean: f64,
    pub std: f64,
    pub histogram: Vec<u64>,
}

/// Output-based metrics for one protected feature over a labelled dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub feature: String,
    pub categories: Vec<CategoryMetrics>,
    /// max - min positivity rate across non-empty categories.
    pub statistical_parity_gap: f64,
    /// max - min true positive rate across categories where the TPR is
    /// defined; `None` when no category has a positive-labelled member.
    pub equal_opportunity_gap: Option<f64>,
    /// Categories with no members in the dataset, excluded from the rates.
    pub excluded_empty: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: String,
    pub count: usize,
    pub positivity_rate: f64,
    /// Undefined (not zero) when the category has no positive-labelled
    /// members.
    pub true_positive_rate: Option<f64>,
}

/// Per-feature agreement between the canonical-set analysis and the
/// output-based metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub features: Vec<FeatureComparison>,
    pub uncompared: Vec<UncomparedFeature>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub feature: String,
    /// Canonical set did not keep uniformity (chi-square flag).
    pub canonical_flagged: bool,
    /// Statistical-parity gap exceeded the configured threshold.
    pub output_metrics_flagged: bool,
    pub agreement: bool,
    pub top_category_canonical: Option<String>,
    pub top_category_output: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncomparedFeature {
    pub feature: String,
    pub reason: String,
}

/// Counts how many canonical inputs land on each category of `feature` at
/// the given stage, in schema category order. Counts always sum to N.
pub fn categorical_counts(
    set: &CanonicalSet,
    schema: &FeatureSchema,
    feature: &str,
    stage: CountStage,
) -> Result<Vec<u64>> {
    let idx = schema
        .feature_index(feature)
        .ok_or_else(|| LucidError::UnknownFeature {
            feature: feature.to_string(),
        })?;
    let spec = &schema.features()[idx];
    let k = match &spec.kind {
        FeatureKind::Categorical { categories } => categories.len(),
        FeatureKind::Numeric { .. } => {
            return Err(LucidError::WrongFeatureKind {
                feature: feature.to_string(),
                expected_kind: "categorical",
            })
        }
    };
    let slots = schema.slots_of(idx);
    let matrix = match stage {
        CountStage::Initial => &set.initial,
        CountStage::Formatted => &set.formatted,
    };
    let mut counts = vec![0u64; k];
    for row in matrix {
        counts[crate::data::argmax(&row[slots.clone()])] += 1;
    }
    Ok(counts)
}

/// Before/after distribution of a numeric feature in decoded units:
/// means, standard deviations, and histograms over `bins` equal-width bins
/// spanning the pooled range. "After" reads the optimized stage (formatting
/// never touches numeric slots).
pub fn numeric_shift(
    set: &CanonicalSet,
    schema: &FeatureSchema,
    feature: &str,
    bins: usize,
) -> Result<NumericShift> {
    let idx = schema
        .feature_index(feature)
        .ok_or_else(|| LucidError::UnknownFeature {
            feature: feature.to_string(),
        })?;
    if schema.features()[idx].is_categorical() {
        return Err(LucidError::WrongFeatureKind {
            feature: feature.to_string(),
            expected_kind: "numeric",
        });
    }
    let bins = bins.max(1);
    let decode_all = |matrix: &[Vec<f64>]| -> Result<Vec<f64>> {
        matrix
            .iter()
            .map(|row| schema.decode_numeric_at(idx, row))
            .collect()
    };
    let before_vals = decode_all(&set.initial)?;
    let after_vals = decode_all(&set.optimized)?;

    let lo = before_vals
        .iter()
        .chain(&after_vals)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = before_vals
        .iter()
        .chain(&after_vals)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    // Degenerate pooled range still yields well-formed edges.
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();

    let summarize = |vals: &[f64]| -> NumericSummary {
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut histogram = vec![0u64; bins];
        for v in vals {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            histogram[b] += 1;
        }
        NumericSummary {
            mean,
            std: var.sqrt(),
            histogram,
        }
    };

    Ok(NumericShift {
        feature: feature.to_string(),
        before: summarize(&before_vals),
        after: summarize(&after_vals),
        bin_edges,
    })
}

/// Positivity rate and true positive rate per category, with the parity and
/// opportunity gaps. `assignments[i]` is sample i's category; `predictions`
/// are already thresholded.
pub fn group_metrics(
    feature: &str,
    categories: &[String],
    assignments: &[String],
    predictions: &[bool],
    labels: &[bool],
) -> Result<GroupMetrics> {
    if predictions.is_empty() {
        return Err(LucidError::Empty {
            what: format!("group metrics input for '{feature}'"),
        });
    }
    if assignments.len() != predictions.len() || labels.len() != predictions.len() {
        return Err(LucidError::DimensionMismatch {
            context: format!("group metrics arrays for '{feature}'"),
            expected: predictions.len(),
            actual: assignments.len().min(labels.len()),
        });
    }

    let mut rows = Vec::with_capacity(categories.len());
    let mut excluded_empty = Vec::new();
    for cat in categories {
        let member = |i: usize| assignments[i] == *cat;
        let total = (0..predictions.len()).filter(|&i| member(i)).count();
        if total == 0 {
            log::warn!("feature '{feature}': category '{cat}' has no members, excluded");
            excluded_empty.push(cat.clone());
            continue;
        }
        let positives = (0..predictions.len())
            .filter(|&i| member(i) && predictions[i])
            .count();
        let actual_positives = (0..predictions.len())
            .filter(|&i| member(i) && labels[i])
            .count();
        let true_positives = (0..predictions.len())
            .filter(|&i| member(i) && labels[i] && predictions[i])
            .count();
        rows.push(CategoryMetrics {
            category: cat.clone(),
            count: total,
            positivity_rate: positives as f64 / total as f64,
            true_positive_rate: (actual_positives > 0)
                .then(|| true_positives as f64 / actual_positives as f64),
        });
    }

    let prs: Vec<f64> = rows.iter().map(|r| r.positivity_rate).collect();
    let statistical_parity_gap = spread(&prs).unwrap_or(0.0);
    let tprs: Vec<f64> = rows.iter().filter_map(|r| r.true_positive_rate).collect();
    let equal_opportunity_gap = spread(&tprs);

    Ok(GroupMetrics {
        feature: feature.to_string(),
        categories: rows,
        statistical_parity_gap,
        equal_opportunity_gap,
        excluded_empty,
    })
}

fn spread(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(max - min)
}

/// Cross-references the canonical-set flags with the output-metric gaps.
/// A feature agrees when both methods raise it or neither does. Features
/// present on only one side land in `uncompared`.
pub fn compare_analyses(
    tests: &[UniformityTest],
    metrics: &[GroupMetrics],
    gap_threshold: f64,
) -> ComparisonSummary {
    let mut features = Vec::new();
    let mut uncompared = Vec::new();

    for test in tests {
        match metrics.iter().find(|m| m.feature == test.feature) {
            Some(metric) => {
                let output_metrics_flagged = metric.statistical_parity_gap > gap_threshold;
                let top_category_output = metric
                    .categories
                    .iter()
                    .max_by(|a, b| a.positivity_rate.total_cmp(&b.positivity_rate))
                    .map(|c| c.category.clone());
                features.push(FeatureComparison {
                    feature: test.feature.clone(),
                    canonical_flagged: test.flagged,
                    output_metrics_flagged,
                    agreement: test.flagged == output_metrics_flagged,
                    top_category_canonical: test.modal_category.clone(),
                    top_category_output,
                });
            }
            None => uncompared.push(UncomparedFeature {
                feature: test.feature.clone(),
                reason: "no output-based metrics for this feature".into(),
            }),
        }
    }
    for metric in metrics {
        if !tests.iter().any(|t| t.feature == metric.feature) {
            uncompared.push(UncomparedFeature {
                feature: metric.feature.clone(),
                reason: "no canonical-set uniformity test for this feature".into(),
            });
        }
    }
    ComparisonSummary {
        features,
        uncompared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{fit_schema, ColumnRole, ColumnSpec, DatasetConfig, Sample, Value};
    use crate::inverse::{generate_canonical_set, InverseDesignConfig};
    use crate::nn::MlpModel;
    use std::collections::BTreeMap;

    fn toy_schema() -> FeatureSchema {
        let config = DatasetConfig {
            id: "toy".into(),
            csv_path: "toy.csv".into(),
            missing_marker: None,
            columns: vec![
                ColumnSpec {
                    name: "num".into(),
                    role: ColumnRole::Numeric,
                    protected: false,
                    positive_label: None,
                },
                ColumnSpec {
                    name: "cat".into(),
                    role: ColumnRole::Categorical,
                    protected: true,
                    positive_label: None,
                },
                ColumnSpec {
                    name: "y".into(),
                    role: ColumnRole::Target,
                    protected: false,
                    positive_label: Some("1".into()),
                },
            ],
            filters: vec![],
        };
        let row = |n: f64, c: &str| {
            let mut values = BTreeMap::new();
            values.insert("num".into(), Value::Number(n));
            values.insert("cat".into(), Value::Text(c.into()));
            Sample {
                values,
                label: n > 50.0,
            }
        };
        fit_schema(
            &[
                row(0.0, "a"),
                row(100.0, "b"),
                row(50.0, "c"),
                row(25.0, "d"),
                row(75.0, "e"),
            ],
            &config,
        )
        .unwrap()
    }

    fn zero_model(input_dim: usize) -> MlpModel {
        MlpModel::new(
            vec![input_dim, 2],
            vec![vec![vec![0.0; input_dim], vec![0.0; input_dim]]],
            vec![vec![0.0, 0.0]],
        )
        .unwrap()
    }

    fn id_config(n: usize, epochs: usize, seed: u64) -> InverseDesignConfig {
        InverseDesignConfig {
            num_inputs: n,
            epochs,
            learning_rate: 0.1,
            preferred_output: [0.0, 1.0],
            seed,
            record_trajectory: false,
            format_initial: false,
        }
    }

    #[test]
    fn counts_sum_to_n_and_multinomial_spread() {
        let schema = toy_schema(); // 5-category feature
        let model = zero_model(schema.encoded_dim());
        let set = generate_canonical_set(&model, &schema, &id_config(1000, 0, 42)).unwrap();
        for stage in [CountStage::Initial, CountStage::Formatted] {
            let counts = categorical_counts(&set, &schema, "cat", stage).unwrap();
            assert_eq!(counts.iter().sum::<u64>(), 1000);
            // Uniform draws over 5 categories: each count near 200.
            for &c in &counts {
                assert!((140..=260).contains(&c), "count {c} outside 200 +/- 60");
            }
        }
    }

    #[test]
    fn formatted_counts_track_one_hot_rows() {
        let schema = toy_schema();
        let model = zero_model(schema.encoded_dim());
        let mut set = generate_canonical_set(&model, &schema, &id_config(10, 0, 1)).unwrap();
        // Force every row onto category index 0 ("a").
        let slots = schema.slots_of(1);
        for row in &mut set.formatted {
            for (offset, slot) in row[slots.clone()].iter_mut().enumerate() {
                *slot = f64::from(offset == 0);
            }
        }
        let counts = categorical_counts(&set, &schema, "cat", CountStage::Formatted).unwrap();
        assert_eq!(counts, vec![10, 0, 0, 0, 0]);
    }

    #[test]
    fn counts_reject_numeric_features() {
        let schema = toy_schema();
        let model = zero_model(schema.encoded_dim());
        let set = generate_canonical_set(&model, &schema, &id_config(5, 0, 1)).unwrap();
        assert!(matches!(
            categorical_counts(&set, &schema, "num", CountStage::Initial),
            Err(LucidError::WrongFeatureKind { .. })
        ));
    }

    #[test]
    fn zero_epochs_means_no_numeric_shift() {
        let schema = toy_schema();
        let model = zero_model(schema.encoded_dim());
        let set = generate_canonical_set(&model, &schema, &id_config(50, 0, 3)).unwrap();
        let shift = numeric_shift(&set, &schema, "num", 20).unwrap();
        assert_eq!(shift.before.mean, shift.after.mean);
        assert_eq!(shift.before.histogram, shift.after.histogram);
        assert_eq!(shift.bin_edges.len(), 21);
        assert_eq!(shift.before.histogram.iter().sum::<u64>(), 50);
    }

    #[test]
    fn zero_weight_column_never_shifts() {
        let schema = toy_schema();
        let m = schema.encoded_dim();
        // Nonzero weights everywhere except the numeric slot (index 0).
        let mut row_neg = vec![0.6; m];
        let mut row_pos = vec![-0.6; m];
        row_neg[0] = 0.0;
        row_pos[0] = 0.0;
        let model = MlpModel::new(
            vec![m, 2],
            vec![vec![row_neg, row_pos]],
            vec![vec![0.0, 0.0]],
        )
        .unwrap();
        let set = generate_canonical_set(&model, &schema, &id_config(40, 30, 5)).unwrap();
        let shift = numeric_shift(&set, &schema, "num", 20).unwrap();
        assert_eq!(shift.before.mean, shift.after.mean);
    }

    #[test]
    fn group_metrics_hand_example() {
        let cats = vec!["g".to_string()];
        let assignments = vec!["g".to_string(); 4];
        let predictions = vec![true, true, false, false];
        let labels = vec![true, false, true, false];
        let gm = group_metrics("f", &cats, &assignments, &predictions, &labels).unwrap();
        assert_eq!(gm.categories[0].count, 4);
        assert_eq!(gm.categories[0].positivity_rate, 0.5);
        assert_eq!(gm.categories[0].true_positive_rate, Some(0.5));
        assert_eq!(gm.statistical_parity_gap, 0.0);
    }

    #[test]
    fn tpr_is_undefined_without_actual_positives() {
        let cats = vec!["a".to_string(), "b".to_string()];
        let assignments = vec!["a".into(), "a".into(), "b".into()];
        let predictions = vec![true, false, true];
        let labels = vec![false, false, true];
        let gm = group_metrics("f", &cats, &assignments, &predictions, &labels).unwrap();
        assert_eq!(gm.categories[0].true_positive_rate, None);
        assert_eq!(gm.categories[1].true_positive_rate, Some(1.0));
        // Gap over the single defined TPR collapses to zero.
        assert_eq!(gm.equal_opportunity_gap, Some(0.0));
    }

    #[test]
    fn empty_categories_are_excluded_with_warning() {
        let cats = vec!["a".to_string(), "ghost".to_string()];
        let assignments = vec!["a".to_string(); 3];
        let predictions = vec![true, false, true];
        let labels = vec![true, true, false];
        let gm = group_metrics("f", &cats, &assignments, &predictions, &labels).unwrap();
        assert_eq!(gm.excluded_empty, vec!["ghost".to_string()]);
        assert_eq!(gm.categories.len(), 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            group_metrics("f", &[], &[], &[], &[]),
            Err(LucidError::Empty { .. })
        ));
    }

    #[test]
    fn pr_tpr_match_exhaustive_recount() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let cats: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        for _ in 0..50 {
            let n = rng.gen_range(1..=50);
            let assignments: Vec<String> =
                (0..n).map(|_| cats[rng.gen_range(0..3)].clone()).collect();
            let predictions: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let gm = group_metrics("f", &cats, &assignments, &predictions, &labels).unwrap();
            for row in &gm.categories {
                let mut total = 0usize;
                let mut pos = 0usize;
                let mut actual = 0usize;
                let mut tp = 0usize;
                for i in 0..n {
                    if assignments[i] != row.category {
                        continue;
                    }
                    total += 1;
                    if predictions[i] {
                        pos += 1;
                    }
                    if labels[i] {
                        actual += 1;
                        if predictions[i] {
                            tp += 1;
                        }
                    }
                }
                assert_eq!(row.count, total);
                assert_eq!(row.positivity_rate, pos as f64 / total as f64);
                match row.true_positive_rate {
                    Some(tpr) => assert_eq!(tpr, tp as f64 / actual as f64),
                    None => assert_eq!(actual, 0),
                }
            }
        }
    }

    #[test]
    fn relabeling_leaves_statistics_unchanged() {
        let counts = [400u64, 350, 250];
        let t1 = chi_square_uniformity("f", &counts, 0.01).unwrap();
        let permuted = [250u64, 400, 350];
        let t2 = chi_square_uniformity("f", &permuted, 0.01).unwrap();
        // Identical terms summed in a different order: equal up to rounding.
        assert!((t1.chi_square_statistic - t2.chi_square_statistic).abs() < 1e-12);
        assert!((t1.p_value - t2.p_value).abs() < 1e-12);

        let cats: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let assignments: Vec<String> = ["x", "x", "y", "y"].iter().map(|s| s.to_string()).collect();
        let predictions = vec![true, true, true, false];
        let labels = vec![true, false, true, true];
        let gm1 = group_metrics("f", &cats, &assignments, &predictions, &labels).unwrap();
        let swapped: Vec<String> = assignments
            .iter()
            .map(|a| if a == "x" { "y".to_string() } else { "x".to_string() })
            .collect();
        let gm2 = group_metrics("f", &cats, &swapped, &predictions, &labels).unwrap();
        assert_eq!(gm1.statistical_parity_gap, gm2.statistical_parity_gap);
        assert_eq!(gm1.equal_opportunity_gap, gm2.equal_opportunity_gap);
    }

    fn test_with(feature: &str, flagged: bool, modal: Option<&str>) -> UniformityTest {
        UniformityTest {
            feature: feature.into(),
            chi_square_statistic: if flagged { 100.0 } else { 0.5 },
            degrees_of_freedom: 1,
            p_value: if flagged { 1e-9 } else { 0.5 },
            flagged,
            expected_std_per_category: 0.01,
            low_power: false,
            modal_category: modal.map(|s| s.to_string()),
        }
    }

    fn metrics_with(feature: &str, gap: f64) -> GroupMetrics {
        GroupMetrics {
            feature: feature.into(),
            categories: vec![
                CategoryMetrics {
                    category: "hi".into(),
                    count: 10,
                    positivity_rate: 0.5 + gap / 2.0,
                    true_positive_rate: None,
                },
                CategoryMetrics {
                    category: "lo".into(),
                    count: 10,
                    positivity_rate: 0.5 - gap / 2.0,
                    true_positive_rate: None,
                },
            ],
            statistical_parity_gap: gap,
            equal_opportunity_gap: None,
            excluded_empty: vec![],
        }
    }

    #[test]
    fn comparison_agreement_cases() {
        // Neither method flags: agreement.
        let summary = compare_analyses(
            &[test_with("calm", false, None)],
            &[metrics_with("calm", 0.02)],
            0.1,
        );
        assert!(summary.features[0].agreement);

        // Output metrics find a gap the canonical set does not: disagreement.
        let summary = compare_analyses(
            &[test_with("race", false, None)],
            &[metrics_with("race", 0.45)],
            0.1,
        );
        assert!(!summary.features[0].agreement);
        assert_eq!(summary.features[0].top_category_output.as_deref(), Some("hi"));

        // Both flag: agreement, with top categories reported per method.
        let summary = compare_analyses(
            &[test_with("sex", true, Some("Female"))],
            &[metrics_with("sex", 0.3)],
            0.1,
        );
        assert!(summary.features[0].agreement);
        assert_eq!(
            summary.features[0].top_category_canonical.as_deref(),
            Some("Female")
        );
    }

    #[test]
    fn one_sided_features_are_uncompared() {
        let summary = compare_analyses(
            &[test_with("only-canonical", true, None)],
            &[metrics_with("only-output", 0.2)],
            0.1,
        );
        assert!(summary.features.is_empty());
        let names: Vec<&str> = summary.uncompared.iter().map(|u| u.feature.as_str()).collect();
        assert!(names.contains(&"only-canonical"));
        assert!(names.contains(&"only-output"));
    }
}
