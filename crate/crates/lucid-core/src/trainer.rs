//! Mini-batch gradient-descent training of the binary MLP and test-set
//! evaluation. Plain gradient descent, no momentum; determinism comes from
//! the mandatory seed (init, shuffling) and a fixed accumulation order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureSchema, Sample};
use crate::error::{LucidError, Result};
use crate::nn::{apply_param_step, GradientBundle, MlpModel};

fn default_hidden_dims() -> Vec<usize> {
    vec![32, 16]
}
fn default_epochs() -> usize {
    50
}
fn default_batch_size() -> usize {
    64
}
fn default_learning_rate() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_hidden_dims")]
    pub hidden_dims: Vec<usize>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// No default: runs must pin their seed.
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(LucidError::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(LucidError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(LucidError::InvalidConfig(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(LucidError::InvalidConfig(
                "hidden layer dimensions must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_train_accuracy: f64,
    /// Filled by the pipeline once a held-out split has been scored.
    pub final_test_accuracy: Option<f64>,
    /// Mean sample loss per epoch, length = epochs.
    pub loss_curve: Vec<f64>,
    pub train_rows: usize,
    /// Class balance of the training set (no reweighting is applied).
    pub train_positive_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub prob_positive: f64,
    pub predicted_positive: bool,
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub accuracy: f64,
    pub predictions: Vec<PredictionRecord>,
}

fn one_hot(label: bool) -> [f64; 2] {
    // Positive class sits at output index 1.
    if label {
        [0.0, 1.0]
    } else {
        [1.0, 0.0]
    }
}

/// Trains a fresh model on the encoded training set. Deterministic under
/// `config.seed`; neither the schema nor the samples are mutated.
pub fn train(
    schema: &FeatureSchema,
    train_set: &[Sample],
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(LucidError::Empty {
            what: "training set".into(),
        });
    }
    let encoded: Vec<(Vec<f64>, [f64; 2])> = train_set
        .iter()
        .map(|s| Ok((schema.encode(s)?, one_hot(s.label))))
        .collect::<Result<_>>()?;
    let positives = train_set.iter().filter(|s| s.label).count();
    if positives == 0 || positives == train_set.len() {
        return Err(LucidError::SingleClass);
    }

    let mut dims = vec![schema.encoded_dim()];
    dims.extend_from_slice(&config.hidden_dims);
    dims.push(2);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel::xavier_init(&dims, &mut rng)?;

    let n = encoded.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = GradientBundle::zeros_like(&model);
            for &i in batch {
                let (x, target) = &encoded[i];
                let g = model.backward(x, target)?;
                epoch_loss += g.loss_value;
                grads.accumulate_scaled(&g, batch.len() as f64);
            }
            model = apply_param_step(&model, &grads, config.learning_rate)?;
        }
        let mean_loss = epoch_loss / n as f64;
        if !mean_loss.is_finite() {
            return Err(LucidError::NanLoss { epoch });
        }
        loss_curve.push(mean_loss);
    }

    let train_eval = evaluate(&model, schema, train_set)?;
    let report = TrainReport {
        final_train_accuracy: train_eval.accuracy,
        final_test_accuracy: None,
        loss_curve,
        train_rows: n,
        train_positive_fraction: positives as f64 / n as f64,
    };
    Ok((model, report))
}

/// Scores a dataset: a sample is predicted positive iff its positive-class
/// probability exceeds 0.5 (strict).
pub fn evaluate(model: &MlpModel, schema: &FeatureSchema, dataset: &[Sample]) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(LucidError::Empty {
            what: "evaluation dataset".into(),
        });
    }
    let mut predictions = Vec::with_capacity(dataset.len());
    let mut correct = 0usize;
    for sample in dataset {
        let x = schema.encode(sample)?;
        let probs = model.forward(&x)?;
        let predicted_positive = probs[1] > 0.5;
        if predicted_positive == sample.label {
            correct += 1;
        }
        predictions.push(PredictionRecord {
            prob_positive: probs[1],
            predicted_positive,
            label: sample.label,
        });
    }
    Ok(Evaluation {
        accuracy: correct as f64 / dataset.len() as f64,
        predictions,
    })
}
