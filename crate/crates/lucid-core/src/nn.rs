//! Dense network numerics: forward pass, cross-entropy loss, and gradients
//! with respect to both parameters (training) and inputs (inverse design).
//!
//! Layers are fully connected with ReLU activations on hidden layers and a
//! softmax over the two output logits. All arithmetic is `f64`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LucidError, Result};

/// Format version of the serialized model document.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Predictions are clamped to this floor inside the loss so saturated
/// probabilities never produce `-inf`.
pub const LOG_CLAMP_FLOOR: f64 = 1e-12;

/// A trained (or in-training) binary MLP classifier.
///
/// `weights[k]` has shape `layer_dims[k+1] x layer_dims[k]` (row-major, one
/// `Vec` per output row); `biases[k]` has length `layer_dims[k+1]`. The output
/// dimension is always 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
}

/// Loss value plus gradients from one backward pass.
#[derive(Debug, Clone)]
pub struct GradientBundle {
    /// Same nesting as `MlpModel::weights`.
    pub wrt_weights: Vec<Vec<Vec<f64>>>,
    /// Same nesting as `MlpModel::biases`.
    pub wrt_biases: Vec<Vec<f64>>,
    /// Gradient of the loss with respect to the input vector, length M.
    pub wrt_input: Vec<f64>,
    pub loss_value: f64,
}

impl MlpModel {
    /// Builds a model from explicit parameters, validating every invariant:
    /// consecutive dimension compatibility, binary output, finite values.
    pub fn new(
        layer_dims: Vec<usize>,
        weights: Vec<Vec<Vec<f64>>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(LucidError::InvalidConfig(
                "a model needs at least an input and an output layer".into(),
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(LucidError::InvalidConfig(
                "layer dimensions must be positive".into(),
            ));
        }
        let n_layers = layer_dims.len() - 1;
        if *layer_dims.last().unwrap() != 2 {
            return Err(LucidError::InvalidConfig(format!(
                "output dimension must be 2 for a binary classifier, got {}",
                layer_dims.last().unwrap()
            )));
        }
        if weights.len() != n_layers || biases.len() != n_layers {
            return Err(LucidError::DimensionMismatch {
                context: "parameter layer count".into(),
                expected: n_layers,
                actual: weights.len().max(biases.len()),
            });
        }
        for k in 0..n_layers {
            let (in_dim, out_dim) = (layer_dims[k], layer_dims[k + 1]);
            if weights[k].len() != out_dim {
                return Err(LucidError::DimensionMismatch {
                    context: format!("weights[{k}] rows"),
                    expected: out_dim,
                    actual: weights[k].len(),
                });
            }
            for (r, row) in weights[k].iter().enumerate() {
                if row.len() != in_dim {
                    return Err(LucidError::DimensionMismatch {
                        context: format!("weights[{k}][{r}] columns"),
                        expected: in_dim,
                        actual: row.len(),
                    });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(LucidError::NonFinite {
                        context: format!("weights[{k}][{r}]"),
                    });
                }
            }
            if biases[k].len() != out_dim {
                return Err(LucidError::DimensionMismatch {
                    context: format!("biases[{k}]"),
                    expected: out_dim,
                    actual: biases[k].len(),
                });
            }
            if biases[k].iter().any(|v| !v.is_finite()) {
                return Err(LucidError::NonFinite {
                    context: format!("biases[{k}]"),
                });
            }
        }
        Ok(Self {
            layer_dims,
            weights,
            biases,
        })
    }

    /// Fresh model with Xavier-uniform weights in
    /// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]` and zero
    /// biases, drawn from the given RNG.
    pub fn xavier_init<R: Rng + ?Sized>(layer_dims: &[usize], rng: &mut R) -> Result<Self> {
        let n_layers = layer_dims.len().saturating_sub(1);
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        for k in 0..n_layers {
            let (in_dim, out_dim) = (layer_dims[k], layer_dims[k + 1]);
            let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
            let layer: Vec<Vec<f64>> = (0..out_dim)
                .map(|_| (0..in_dim).map(|_| rng.gen_range(-limit..limit)).collect())
                .collect();
            weights.push(layer);
            biases.push(vec![0.0; out_dim]);
        }
        Self::new(layer_dims.to_vec(), weights, biases)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn weights(&self) -> &[Vec<Vec<f64>>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(LucidError::DimensionMismatch {
                context: "model input".into(),
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LucidError::NonFinite {
                context: "model input".into(),
            });
        }
        Ok(())
    }

    /// Post-activation values for every layer. `acts[0]` is the input itself,
    /// `acts.last()` the softmax probabilities.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.weights.len();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for k in 0..n_layers {
            let prev = &acts[k];
            let mut z: Vec<f64> = self.weights[k]
                .iter()
                .zip(&self.biases[k])
                .map(|(row, b)| row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>() + b)
                .collect();
            if k + 1 < n_layers {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            } else {
                softmax_in_place(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    /// Softmax class probabilities for `x`.
    ///
    /// Both entries are in `[0, 1]` and sum to 1 (within floating-point
    /// rounding). Pure and safe to call concurrently.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward_trace(x).pop().unwrap())
    }

    /// Full backward pass: loss plus gradients with respect to every
    /// parameter and the input vector.
    pub fn backward(&self, x: &[f64], target: &[f64]) -> Result<GradientBundle> {
        self.check_input(x)?;
        check_one_hot(target)?;
        let acts = self.forward_trace(x);
        let probs = acts.last().unwrap();
        let loss_value = cross_entropy(probs, target)?;

        let n_layers = self.weights.len();
        let mut wrt_weights: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n_layers);
        let mut wrt_biases: Vec<Vec<f64>> = Vec::with_capacity(n_layers);

        // Softmax + cross-entropy fuse to (probs - target) at the logits.
        let mut delta: Vec<f64> = probs.iter().zip(target).map(|(p, t)| p - t).collect();

        for k in (0..n_layers).rev() {
            let input_act = &acts[k];
            let d_w: Vec<Vec<f64>> = delta
                .iter()
                .map(|d| input_act.iter().map(|a| d * a).collect())
                .collect();
            let d_b = delta.clone();
            let prev_delta = self.backprop_delta(k, &delta, input_act);
            wrt_weights.push(d_w);
            wrt_biases.push(d_b);
            delta = prev_delta;
        }
        wrt_weights.reverse();
        wrt_biases.reverse();

        Ok(GradientBundle {
            wrt_weights,
            wrt_biases,
            wrt_input: delta,
            loss_value,
        })
    }

    /// Loss and input gradient only. Skips parameter-gradient allocation;
    /// this is the inverse-design hot path.
    pub fn input_gradient(&self, x: &[f64], target: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.check_input(x)?;
        check_one_hot(target)?;
        let acts = self.forward_trace(x);
        let probs = acts.last().unwrap();
        let loss_value = cross_entropy(probs, target)?;

        let mut delta: Vec<f64> = probs.iter().zip(target).map(|(p, t)| p - t).collect();
        for k in (0..self.weights.len()).rev() {
            delta = self.backprop_delta(k, &delta, &acts[k]);
        }
        Ok((delta, loss_value))
    }

    /// Propagates `delta` (dL/dz at layer k's output) to dL/d(activation) of
    /// the layer below, applying the ReLU mask except at the input. ReLU's
    /// derivative at exactly 0 is taken as 0.
    fn backprop_delta(&self, k: usize, delta: &[f64], input_act: &[f64]) -> Vec<f64> {
        let in_dim = self.layer_dims[k];
        let mut prev: Vec<f64> = vec![0.0; in_dim];
        for (row, d) in self.weights[k].iter().zip(delta) {
            for (p, w) in prev.iter_mut().zip(row) {
                *p += w * d;
            }
        }
        if k > 0 {
            for (p, a) in prev.iter_mut().zip(input_act) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
        }
        prev
    }

    /// Serializes to the versioned JSON document. Values round-trip
    /// bit-exactly (shortest-representation float encoding).
    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            version: MODEL_FORMAT_VERSION,
            layer_dims: self.layer_dims.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
    }

    /// Parses and validates the versioned JSON document.
    pub fn from_json(json: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(json)?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(LucidError::UnsupportedVersion {
                found: doc.version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        Self::new(doc.layer_dims, doc.weights, doc.biases)
    }

    /// SHA-256 of the serialized parameters, as lowercase hex. Identical
    /// digests mean bit-identical parameters.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        hex::encode(hasher.finalize())
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    layer_dims: Vec<usize>,
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
}

/// Numerically stable softmax (max subtraction before exponentiation).
fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn check_one_hot(target: &[f64]) -> Result<()> {
    let ok = target.len() == 2
        && target.iter().all(|&t| t == 0.0 || t == 1.0)
        && target.iter().sum::<f64>() == 1.0;
    if ok {
        Ok(())
    } else {
        let a = target.first().copied().unwrap_or(f64::NAN);
        let b = target.get(1).copied().unwrap_or(f64::NAN);
        Err(LucidError::NonOneHotTarget(a, b))
    }
}

/// Cross-entropy `-sum(target * ln(prediction))`, with predictions clamped to
/// `[1e-12, 1]` so saturated inputs stay finite.
pub fn cross_entropy(prediction: &[f64], target: &[f64]) -> Result<f64> {
    check_one_hot(target)?;
    if prediction.len() != 2 {
        return Err(LucidError::DimensionMismatch {
            context: "prediction".into(),
            expected: 2,
            actual: prediction.len(),
        });
    }
    let loss = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| -t * p.clamp(LOG_CLAMP_FLOOR, 1.0).ln())
        .sum();
    Ok(loss)
}

/// Gradient-descent step on the parameters: every `p` becomes
/// `p - learning_rate * grad(p)`. Returns a new model; used by the trainer
/// only, never by inverse design.
pub fn apply_param_step(
    model: &MlpModel,
    grads: &GradientBundle,
    learning_rate: f64,
) -> Result<MlpModel> {
    let n_layers = model.weights.len();
    if grads.wrt_weights.len() != n_layers || grads.wrt_biases.len() != n_layers {
        return Err(LucidError::DimensionMismatch {
            context: "gradient layer count".into(),
            expected: n_layers,
            actual: grads.wrt_weights.len().max(grads.wrt_biases.len()),
        });
    }
    let mut weights = model.weights.clone();
    let mut biases = model.biases.clone();
    for k in 0..n_layers {
        if grads.wrt_weights[k].len() != weights[k].len()
            || grads.wrt_biases[k].len() != biases[k].len()
        {
            return Err(LucidError::DimensionMismatch {
                context: format!("gradient shape at layer {k}"),
                expected: weights[k].len(),
                actual: grads.wrt_weights[k].len(),
            });
        }
        for (wrow, grow) in weights[k].iter_mut().zip(&grads.wrt_weights[k]) {
            if grow.len() != wrow.len() {
                return Err(LucidError::DimensionMismatch {
                    context: format!("gradient row width at layer {k}"),
                    expected: wrow.len(),
                    actual: grow.len(),
                });
            }
            for (w, g) in wrow.iter_mut().zip(grow) {
                *w -= learning_rate * g;
            }
        }
        for (b, g) in biases[k].iter_mut().zip(&grads.wrt_biases[k]) {
            *b -= learning_rate * g;
        }
    }
    MlpModel::new(model.layer_dims.clone(), weights, biases)
}

impl GradientBundle {
    /// Zero-valued bundle shaped like `model`'s parameters.
    pub fn zeros_like(model: &MlpModel) -> Self {
        GradientBundle {
            wrt_weights: model
                .weights
                .iter()
                .map(|layer| layer.iter().map(|row| vec![0.0; row.len()]).collect())
                .collect(),
            wrt_biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            wrt_input: vec![0.0; model.input_dim()],
            loss_value: 0.0,
        }
    }

    /// Adds `other / divisor` into `self`; the trainer uses this to average
    /// per-sample gradients over a mini-batch.
    pub fn accumulate_scaled(&mut self, other: &GradientBundle, divisor: f64) {
        for (acc_layer, layer) in self.wrt_weights.iter_mut().zip(&other.wrt_weights) {
            for (acc_row, row) in acc_layer.iter_mut().zip(layer) {
                for (acc, v) in acc_row.iter_mut().zip(row) {
                    *acc += v / divisor;
                }
            }
        }
        for (acc_b, b) in self.wrt_biases.iter_mut().zip(&other.wrt_biases) {
            for (acc, v) in acc_b.iter_mut().zip(b) {
                *acc += v / divisor;
            }
        }
        for (acc, v) in self.wrt_input.iter_mut().zip(&other.wrt_input) {
            *acc += v / divisor;
        }
        self.loss_value += other.loss_value / divisor;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_layer(weights: Vec<Vec<f64>>) -> MlpModel {
        let in_dim = weights[0].len();
        MlpModel::new(vec![in_dim, 2], vec![weights], vec![vec![0.0, 0.0]]).unwrap()
    }

    fn zero_model(dims: &[usize]) -> MlpModel {
        let weights = (0..dims.len() - 1)
            .map(|k| vec![vec![0.0; dims[k]]; dims[k + 1]])
            .collect();
        let biases = (0..dims.len() - 1).map(|k| vec![0.0; dims[k + 1]]).collect();
        MlpModel::new(dims.to_vec(), weights, biases).unwrap()
    }

    #[test]
    fn zero_model_outputs_half_half() {
        let model = zero_model(&[4, 3, 2]);
        let out = model.forward(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert_eq!(out, vec![0.5, 0.5]);
    }

    #[test]
    fn identity_logits_match_hand_softmax() {
        let model = single_layer(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let out = model.forward(&[2.0, 0.0]).unwrap();
        assert!((out[0] - 0.8808).abs() < 1e-4, "got {:?}", out);
        assert!((out[1] - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let model = zero_model(&[4, 2]);
        let err = model.forward(&[1.0, 2.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 4") && msg.contains("got 2"), "{msg}");
    }

    #[test]
    fn softmax_normalizes_for_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = MlpModel::xavier_init(&[6, 5, 2], &mut rng).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let out = model.forward(&x).unwrap();
            assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(out.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn forward_is_deterministic_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = MlpModel::xavier_init(&[5, 4, 2], &mut rng).unwrap();
        let x = vec![0.3, -0.2, 0.9, 0.0, 1.4];
        let a = model.forward(&x).unwrap();
        let b = model.forward(&x).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    #[test]
    fn cross_entropy_known_values() {
        assert_eq!(cross_entropy(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        let ln2 = cross_entropy(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-6);
        let l = cross_entropy(&[0.1, 0.9], &[1.0, 0.0]).unwrap();
        assert!((l - 2.302585092994046).abs() < 1e-6);
    }

    #[test]
    fn cross_entropy_rejects_non_one_hot() {
        assert!(matches!(
            cross_entropy(&[0.5, 0.5], &[0.4, 0.6]),
            Err(LucidError::NonOneHotTarget(_, _))
        ));
        assert!(cross_entropy(&[0.5, 0.5], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn cross_entropy_clamps_zero_probability() {
        let l = cross_entropy(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(l.is_finite());
        assert!((l - (-LOG_CLAMP_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn zero_model_has_zero_input_gradient() {
        let model = zero_model(&[4, 3, 2]);
        let g = model.backward(&[0.2, 0.4, 0.6, 0.8], &[0.0, 1.0]).unwrap();
        assert!(g.wrt_input.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_chain_rule_single_linear_layer() {
        // Logits [x, -x]; at x=0 the prediction is [0.5, 0.5] and
        // dl/dx = (p - t) . W column = (-0.5)(1) + (0.5)(-1) = -1.
        let model = single_layer(vec![vec![1.0], vec![-1.0]]);
        let g = model.backward(&[0.0], &[1.0, 0.0]).unwrap();
        assert!((g.wrt_input[0] - (-1.0)).abs() < 1e-12);
        let probs = model.forward(&[0.0]).unwrap();
        assert_eq!(probs, vec![0.5, 0.5]);
    }

    /// Central finite differences over loss(x) and loss(params); the analytic
    /// gradients must agree within 1e-4 relative (1e-7 absolute floor).
    fn assert_grad_close(analytic: f64, numeric: f64) {
        let diff = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        assert!(
            diff <= 1e-7 || diff / scale <= 1e-4,
            "analytic={analytic} numeric={numeric} diff={diff}"
        );
    }

    fn loss_at(model: &MlpModel, x: &[f64], target: &[f64]) -> f64 {
        cross_entropy(&model.forward(x).unwrap(), target).unwrap()
    }

    /// Pre-activations bounded away from the ReLU kink so central differences
    /// stay on one side of it.
    fn away_from_kink(model: &MlpModel, x: &[f64]) -> bool {
        let n_layers = model.weights().len();
        let mut act = x.to_vec();
        for k in 0..n_layers {
            let z: Vec<f64> = model.weights()[k]
                .iter()
                .zip(&model.biases()[k])
                .map(|(row, b)| row.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>() + b)
                .collect();
            if k + 1 < n_layers {
                if z.iter().any(|v| v.abs() < 1e-3) {
                    return false;
                }
                act = z.iter().map(|v| v.max(0.0)).collect();
            }
        }
        true
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h = 1e-5;
        let mut checked = 0;
        while checked < 30 {
            let n_hidden = rng.gen_range(0..=2);
            let mut dims = vec![rng.gen_range(1..=8usize)];
            for _ in 0..n_hidden {
                dims.push(rng.gen_range(1..=8));
            }
            dims.push(2);
            let model = MlpModel::xavier_init(&dims, &mut rng).unwrap();
            let x: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if !away_from_kink(&model, &x) {
                continue;
            }
            let target = if rng.gen_bool(0.5) { [1.0, 0.0] } else { [0.0, 1.0] };
            let g = model.backward(&x, &target).unwrap();

            for i in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let numeric = (loss_at(&model, &xp, &target) - loss_at(&model, &xm, &target))
                    / (2.0 * h);
                assert_grad_close(g.wrt_input[i], numeric);
            }

            for k in 0..model.weights().len() {
                for r in 0..model.weights()[k].len() {
                    for c in 0..model.weights()[k][r].len() {
                        let mut wp = model.clone();
                        let mut wm = model.clone();
                        wp.weights[k][r][c] += h;
                        wm.weights[k][r][c] -= h;
                        let numeric =
                            (loss_at(&wp, &x, &target) - loss_at(&wm, &x, &target)) / (2.0 * h);
                        assert_grad_close(g.wrt_weights[k][r][c], numeric);
                    }
                }
                for r in 0..model.biases()[k].len() {
                    let mut bp = model.clone();
                    let mut bm = model.clone();
                    bp.biases[k][r] += h;
                    bm.biases[k][r] -= h;
                    let numeric =
                        (loss_at(&bp, &x, &target) - loss_at(&bm, &x, &target)) / (2.0 * h);
                    assert_grad_close(g.wrt_biases[k][r], numeric);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn input_gradient_matches_backward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = MlpModel::xavier_init(&[5, 6, 2], &mut rng).unwrap();
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
        let full = model.backward(&x, &[0.0, 1.0]).unwrap();
        let (fast, loss) = model.input_gradient(&x, &[0.0, 1.0]).unwrap();
        assert_eq!(full.wrt_input, fast);
        assert_eq!(full.loss_value.to_bits(), loss.to_bits());
    }

    #[test]
    fn param_step_arithmetic() {
        let model = single_layer(vec![vec![1.0], vec![0.0]]);
        let mut grads = GradientBundle::zeros_like(&model);

        // Zero learning rate and zero gradient both leave the model unchanged.
        let same = apply_param_step(&model, &grads, 0.0).unwrap();
        assert_eq!(same, model);
        let same = apply_param_step(&model, &grads, 0.5).unwrap();
        assert_eq!(same, model);

        grads.wrt_weights[0][0][0] = 0.5;
        let stepped = apply_param_step(&model, &grads, 0.1).unwrap();
        assert!((stepped.weights[0][0][0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let tricky = vec![
            0.1 + 0.2,
            1e-300,
            -1e300,
            std::f64::consts::PI,
            5e-324, // smallest subnormal
            -0.0,
        ];
        let model = MlpModel::new(
            vec![3, 2],
            vec![vec![tricky[..3].to_vec(), tricky[3..].to_vec()]],
            vec![vec![f64::MAX, f64::MIN_POSITIVE]],
        )
        .unwrap();
        let restored = MlpModel::from_json(&model.to_json()).unwrap();
        for (a, b) in model.weights[0]
            .iter()
            .flatten()
            .zip(restored.weights[0].iter().flatten())
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(model.digest(), restored.digest());
    }

    #[test]
    fn from_json_rejects_other_versions() {
        let model = zero_model(&[2, 2]);
        let doc = model.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            MlpModel::from_json(&doc),
            Err(LucidError::UnsupportedVersion { found: 9, .. })
        ));
    }

    #[test]
    fn new_rejects_bad_shapes_and_values() {
        assert!(MlpModel::new(vec![2, 3], vec![vec![vec![0.0; 2]; 3]], vec![vec![0.0; 3]]).is_err());
        assert!(MlpModel::new(
            vec![2, 2],
            vec![vec![vec![0.0, f64::NAN], vec![0.0, 0.0]]],
            vec![vec![0.0, 0.0]]
        )
        .is_err());
        assert!(MlpModel::new(vec![2, 2], vec![vec![vec![0.0; 1]; 2]], vec![vec![0.0; 2]]).is_err());
    }
}
