//! Canonical-set generation: gradient descent on the input layer of a frozen
//! model toward a preferred output, followed by a single categorical
//! formatting pass.
//!
//! Each of the N inputs starts from its own uniform draw and descends for E
//! epochs with learning rate alpha. Model parameters are never touched;
//! numeric slots are never clamped (their drift outside `[0, 1]` is part of
//! the signal). Per-input RNG streams are derived from `(seed, input index)`,
//! so changing N never perturbs existing rows and parallel execution is
//! bitwise identical to sequential.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, FeatureSchema};
use crate::error::{LucidError, Result};
use crate::nn::MlpModel;

fn default_num_inputs() -> usize {
    1000
}
fn default_epochs() -> usize {
    200
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_preferred_output() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseDesignConfig {
    #[serde(default = "default_num_inputs")]
    pub num_inputs: usize,
    /// Number of descent steps per input. 0 is allowed and leaves the
    /// initial draws untouched.
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// One-hot target; the default prefers the positive class (index 1).
    #[serde(default = "default_preferred_output")]
    pub preferred_output: [f64; 2],
    /// No default: runs must pin their seed.
    pub seed: u64,
    #[serde(default)]
    pub record_trajectory: bool,
    /// Categorically format the initial draws before descent. Off by
    /// default: the raw continuous draws are what the predictions-before
    /// distributions describe.
    #[serde(default)]
    pub format_initial: bool,
}

impl InverseDesignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_inputs == 0 {
            return Err(LucidError::InvalidConfig("num_inputs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 10.0) {
            return Err(LucidError::InvalidConfig(format!(
                "learning_rate must be in (0, 10], got {}",
                self.learning_rate
            )));
        }
        let y = &self.preferred_output;
        if !(y.iter().all(|&v| v == 0.0 || v == 1.0) && y[0] + y[1] == 1.0) {
            return Err(LucidError::InvalidConfig(format!(
                "preferred_output must be one-hot, got [{}, {}]",
                y[0], y[1]
            )));
        }
        Ok(())
    }
}

/// The canonical set: all three stages of the N input vectors plus the model
/// predictions at each stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalSet {
    pub initial: Vec<Vec<f64>>,
    pub optimized: Vec<Vec<f64>>,
    pub formatted: Vec<Vec<f64>>,
    pub predictions_initial: Vec<[f64; 2]>,
    pub predictions_optimized: Vec<[f64; 2]>,
    pub predictions_formatted: Vec<[f64; 2]>,
    pub config: InverseDesignConfig,
    /// Digest of the frozen model the set was generated against.
    pub model_fingerprint: String,
    /// Mean loss across inputs at each epoch, when recording was requested.
    pub mean_loss_trajectory: Option<Vec<f64>>,
}

/// Which stage of a canonical set to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Initial,
    Optimized,
    Formatted,
}

impl CanonicalSet {
    pub fn matrix(&self, stage: Stage) -> &[Vec<f64>] {
        match stage {
            Stage::Initial => &self.initial,
            Stage::Optimized => &self.optimized,
            Stage::Formatted => &self.formatted,
        }
    }

    pub fn predictions(&self, stage: Stage) -> &[[f64; 2]] {
        match stage {
            Stage::Initial => &self.predictions_initial,
            Stage::Optimized => &self.predictions_optimized,
            Stage::Formatted => &self.predictions_formatted,
        }
    }

    /// Positive-class probabilities at a stage.
    pub fn positive_probs(&self, stage: Stage) -> Vec<f64> {
        self.predictions(stage).iter().map(|p| p[1]).collect()
    }
}

fn row_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// N x M matrix of i.i.d. U(0,1) draws; row `i` comes from the stream
/// derived from `(seed, i)`.
pub fn sample_uniform_inputs(schema: &FeatureSchema, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let m = schema.encoded_dim();
    (0..n)
        .map(|i| {
            let mut rng = row_rng(seed, i);
            (0..m).map(|_| rng.gen::<f64>()).collect()
        })
        .collect()
}

/// Projects every categorical group onto exact one-hot: the group's argmax
/// slot becomes 1 (ties break to the lowest index), the rest 0. Numeric
/// slots pass through. Idempotent.
pub fn format_categorical(schema: &FeatureSchema, vector: &[f64]) -> Vec<f64> {
    let mut out = vector.to_vec();
    for (idx, feature) in schema.features().iter().enumerate() {
        if let FeatureKind::Categorical { .. } = feature.kind {
            let range = schema.slots_of(idx);
            let group = &vector[range.clone()];
            let winner = crate::data::argmax(group);
            for (offset, slot) in out[range].iter_mut().enumerate() {
                *slot = f64::from(offset == winner);
            }
        }
    }
    out
}

/// One descent step on the input only: `x - alpha * grad_x loss(s(x) | y)`.
/// The model is read-only; numeric slots are not clamped.
pub fn inverse_design_step(
    model: &MlpModel,
    x: &[f64],
    config: &InverseDesignConfig,
) -> Result<Vec<f64>> {
    let (grad, _) = model.input_gradient(x, &config.preferred_output)?;
    apply_input_step(x, &grad, config.learning_rate)
}

fn apply_input_step(x: &[f64], grad: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if let Some(component) = grad.iter().position(|g| !g.is_finite()) {
        return Err(LucidError::NonFiniteGradient { component });
    }
    Ok(x.iter().zip(grad).map(|(v, g)| v - alpha * g).collect())
}

struct RowOutcome {
    initial: Vec<f64>,
    optimized: Vec<f64>,
    formatted: Vec<f64>,
    predictions: [[f64; 2]; 3],
    losses: Vec<f64>,
}

fn descend_row(
    model: &MlpModel,
    schema: &FeatureSchema,
    config: &InverseDesignConfig,
    index: usize,
) -> Result<RowOutcome> {
    let m = schema.encoded_dim();
    let mut rng = row_rng(config.seed, index);
    let mut initial: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    if config.format_initial {
        initial = format_categorical(schema, &initial);
    }
    let prediction_initial = model.forward(&initial)?;

    let mut x = initial.clone();
    let mut losses = Vec::with_capacity(if config.record_trajectory {
        config.epochs
    } else {
        0
    });
    for epoch in 0..config.epochs {
        let (grad, loss) = model
            .input_gradient(&x, &config.preferred_output)
            .map_err(|source| LucidError::StepFailed {
                input_index: index,
                epoch,
                source: Box::new(source),
            })?;
        if config.record_trajectory {
            losses.push(loss);
        }
        x = apply_input_step(&x, &grad, config.learning_rate).map_err(|source| {
            LucidError::StepFailed {
                input_index: index,
                epoch,
                source: Box::new(source),
            }
        })?;
    }
    let prediction_optimized = model.forward(&x)?;
    let formatted = format_categorical(schema, &x);
    let prediction_formatted = model.forward(&formatted)?;

    Ok(RowOutcome {
        initial,
        optimized: x,
        formatted,
        predictions: [
            [prediction_initial[0], prediction_initial[1]],
            [prediction_optimized[0], prediction_optimized[1]],
            [prediction_formatted[0], prediction_formatted[1]],
        ],
        losses,
    })
}

/// Runs the full canonical-set generation: N independent input descents
/// against the frozen model, formatted once at the end.
///
/// Rows are computed in parallel; because every row owns its RNG stream and
/// writes only its own index, the result is bitwise identical to sequential
/// execution.
pub fn generate_canonical_set(
    model: &MlpModel,
    schema: &FeatureSchema,
    config: &InverseDesignConfig,
) -> Result<CanonicalSet> {
    config.validate()?;
    if model.input_dim() != schema.encoded_dim() {
        return Err(LucidError::ModelSchemaMismatch {
            model_dim: model.input_dim(),
            schema_dim: schema.encoded_dim(),
        });
    }
    let fingerprint_before = model.digest();

    let rows: Vec<RowOutcome> = (0..config.num_inputs)
        .into_par_iter()
        .map(|i| descend_row(model, schema, config, i))
        .collect::<Result<_>>()?;

    let n = rows.len();
    let mut set = CanonicalSet {
        initial: Vec::with_capacity(n),
        optimized: Vec::with_capacity(n),
        formatted: Vec::with_capacity(n),
        predictions_initial: Vec::with_capacity(n),
        predictions_optimized: Vec::with_capacity(n),
        predictions_formatted: Vec::with_capacity(n),
        config: config.clone(),
        model_fingerprint: fingerprint_before.clone(),
        mean_loss_trajectory: None,
    };
    for row in rows {
        set.predictions_initial.push(row.predictions[0]);
        set.predictions_optimized.push(row.predictions[1]);
        set.predictions_formatted.push(row.predictions[2]);
        if config.record_trajectory {
            let trajectory = set
                .mean_loss_trajectory
                .get_or_insert_with(|| vec![0.0; config.epochs]);
            for (acc, l) in trajectory.iter_mut().zip(&row.losses) {
                *acc += l / n as f64;
            }
        }
        set.initial.push(row.initial);
        set.optimized.push(row.optimized);
        set.formatted.push(row.formatted);
    }

    let fingerprint_after = model.digest();
    if fingerprint_after != fingerprint_before {
        return Err(LucidError::FrozenModelViolated);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{fit_schema, ColumnRole, ColumnSpec, DatasetConfig, Sample, Value};
    use crate::nn::cross_entropy;
    use std::collections::BTreeMap;

    /// Schema with one numeric slot (0..100) and one 3-category group; M = 4.
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
            &[row(0.0, "a"), row(100.0, "b"), row(50.0, "c")],
            &config,
        )
        .unwrap()
    }

    /// Single-layer model whose positive logit grows with every slot.
    fn leaning_model() -> MlpModel {
        MlpModel::new(
            vec![4, 2],
            vec![vec![vec![-1.0, -0.5, -0.25, -0.75], vec![1.0, 0.5, 0.25, 0.75]]],
            vec![vec![0.0, 0.0]],
        )
        .unwrap()
    }

    fn config(n: usize, epochs: usize, alpha: f64, seed: u64) -> InverseDesignConfig {
        InverseDesignConfig {
            num_inputs: n,
            epochs,
            learning_rate: alpha,
            preferred_output: [0.0, 1.0],
            seed,
            record_trajectory: false,
            format_initial: false,
        }
    }

    #[test]
    fn uniform_draws_in_range_with_expected_mean() {
        let schema = toy_schema();
        let draws = sample_uniform_inputs(&schema, 1000, 17);
        assert_eq!(draws.len(), 1000);
        for slot in 0..schema.encoded_dim() {
            let mut mean = 0.0;
            for row in &draws {
                assert!((0.0..1.0).contains(&row[slot]));
                mean += row[slot];
            }
            mean /= draws.len() as f64;
            assert!((mean - 0.5).abs() < 0.05, "slot {slot} mean {mean}");
        }
    }

    #[test]
    fn uniform_draws_deterministic_and_prefix_stable() {
        let schema = toy_schema();
        let a = sample_uniform_inputs(&schema, 10, 3);
        let b = sample_uniform_inputs(&schema, 10, 3);
        assert_eq!(a, b);
        // Growing N leaves earlier rows untouched.
        let small = sample_uniform_inputs(&schema, 5, 3);
        assert_eq!(&a[..5], &small[..]);
        let other_seed = sample_uniform_inputs(&schema, 10, 4);
        assert_ne!(a, other_seed);
    }

    #[test]
    fn formatting_projects_groups_and_is_idempotent() {
        let schema = toy_schema();
        let v = vec![0.37, 0.2, 0.7, 0.1];
        let f = format_categorical(&schema, &v);
        assert_eq!(f, vec![0.37, 0.0, 1.0, 0.0]);
        assert_eq!(format_categorical(&schema, &f), f);
        // Ties break to the lowest index.
        let tie = format_categorical(&schema, &[0.0, 0.5, 0.5, 0.1]);
        assert_eq!(tie, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_alpha_and_zero_model_leave_input_unchanged() {
        let x = vec![0.1, 0.2, 0.3, 0.4];
        let mut cfg = config(1, 1, 0.0, 0);
        let model = leaning_model();
        assert_eq!(inverse_design_step(&model, &x, &cfg).unwrap(), x);

        cfg.learning_rate = 0.5;
        let zero = MlpModel::new(
            vec![4, 2],
            vec![vec![vec![0.0; 4], vec![0.0; 4]]],
            vec![vec![0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(inverse_design_step(&zero, &x, &cfg).unwrap(), x);
    }

    #[test]
    fn small_steps_descend_the_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let cfg = config(1, 1, 1e-3, 0);
        let mut successes = 0;
        let mut trial = 0;
        while trial < 100 {
            let dims = vec![6, rng.gen_range(3..=8), 2];
            let model = MlpModel::xavier_init(&dims, &mut rng).unwrap();
            let x: Vec<f64> = (0..6).map(|_| rng.gen::<f64>()).collect();
            let (grad, before) = model.input_gradient(&x, &cfg.preferred_output).unwrap();
            // A dead-ReLU draw has no descent direction at all; redraw.
            if grad.iter().all(|g| g.abs() < 1e-9) {
                continue;
            }
            trial += 1;
            let stepped = inverse_design_step(&model, &x, &cfg).unwrap();
            let after = model
                .input_gradient(&stepped, &cfg.preferred_output)
                .unwrap()
                .1;
            if after < before {
                successes += 1;
            } else {
                eprintln!("trial {trial}: loss {before} -> {after}");
            }
        }
        assert!(successes >= 99, "only {successes}/100 descended");
    }

    #[test]
    fn zero_epochs_copies_initial_to_optimized() {
        let schema = toy_schema();
        let model = leaning_model();
        let set = generate_canonical_set(&model, &schema, &config(8, 0, 0.1, 5)).unwrap();
        assert_eq!(set.initial, set.optimized);
        // Formatting still applies at the end.
        for row in &set.formatted {
            let group = &row[1..4];
            assert_eq!(group.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(group.iter().filter(|&&v| v == 0.0).count(), 2);
        }
    }

    #[test]
    fn generation_shapes_fingerprint_and_determinism() {
        let schema = toy_schema();
        let model = leaning_model();
        let digest_before = model.digest();
        let cfg = config(12, 25, 0.2, 9);
        let set = generate_canonical_set(&model, &schema, &cfg).unwrap();
        assert_eq!(model.digest(), digest_before);
        assert_eq!(set.model_fingerprint, digest_before);
        for matrix in [&set.initial, &set.optimized, &set.formatted] {
            assert_eq!(matrix.len(), 12);
            assert!(matrix.iter().all(|r| r.len() == 4));
        }
        assert_eq!(set.predictions_optimized.len(), 12);

        let again = generate_canonical_set(&model, &schema, &cfg).unwrap();
        assert_eq!(set.optimized, again.optimized);
    }

    #[test]
    fn optimized_loss_beats_initial_loss() {
        let schema = toy_schema();
        let model = leaning_model();
        let set = generate_canonical_set(&model, &schema, &config(32, 40, 0.1, 2)).unwrap();
        let mean_loss = |preds: &[[f64; 2]]| -> f64 {
            preds
                .iter()
                .map(|p| cross_entropy(p, &[0.0, 1.0]).unwrap())
                .sum::<f64>()
                / preds.len() as f64
        };
        assert!(mean_loss(&set.predictions_optimized) < mean_loss(&set.predictions_initial));
    }

    #[test]
    fn trajectory_has_one_mean_loss_per_epoch() {
        let schema = toy_schema();
        let model = leaning_model();
        let mut cfg = config(6, 15, 0.3, 4);
        cfg.record_trajectory = true;
        let set = generate_canonical_set(&model, &schema, &cfg).unwrap();
        let trajectory = set.mean_loss_trajectory.unwrap();
        assert_eq!(trajectory.len(), 15);
        assert!(trajectory.last().unwrap() < trajectory.first().unwrap());
    }

    #[test]
    fn format_initial_flag_formats_the_first_stage() {
        let schema = toy_schema();
        let model = leaning_model();
        let mut cfg = config(5, 0, 0.1, 8);
        cfg.format_initial = true;
        let set = generate_canonical_set(&model, &schema, &cfg).unwrap();
        for row in &set.initial {
            let group = &row[1..4];
            assert_eq!(group.iter().filter(|&&v| v == 1.0).count(), 1);
        }
    }

    #[test]
    fn dimension_mismatch_is_explicit() {
        let schema = toy_schema();
        let model = MlpModel::new(
            vec![3, 2],
            vec![vec![vec![0.0; 3], vec![0.0; 3]]],
            vec![vec![0.0, 0.0]],
        )
        .unwrap();
        assert!(matches!(
            generate_canonical_set(&model, &schema, &config(2, 1, 0.1, 0)),
            Err(LucidError::ModelSchemaMismatch { .. })
        ));
    }

    #[test]
    fn invalid_configs_rejected() {
        let schema = toy_schema();
        let model = leaning_model();
        assert!(generate_canonical_set(&model, &schema, &config(0, 1, 0.1, 0)).is_err());
        assert!(generate_canonical_set(&model, &schema, &config(1, 1, 0.0, 0)).is_err());
        assert!(generate_canonical_set(&model, &schema, &config(1, 1, 11.0, 0)).is_err());
        let mut cfg = config(1, 1, 0.1, 0);
        cfg.preferred_output = [0.5, 0.5];
        assert!(generate_canonical_set(&model, &schema, &cfg).is_err());
    }
}
