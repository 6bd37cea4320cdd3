//! Multi-layer perceptron trained with mini-batch gradient descent.
//!
//! One output unit; hidden activations are ReLU or logistic. Regression
//! minimizes mean squared error on the identity output, classification the
//! numerically stable binary cross-entropy on the logit. Both objectives add
//! an L2 penalty `alpha * Σ‖W‖² / (2·batch)`.
//!
//! Weights start at Glorot-uniform values drawn from the seeded generator;
//! rows are reshuffled every epoch with the same generator. When at least
//! [`MIN_ROWS_FOR_EARLY_STOP`] rows are available, the trailing tenth is held
//! out and training stops once its loss has not improved for
//! [`EARLY_STOP_PATIENCE`] epochs, restoring the best weights seen.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{sigmoid, Activation, MlpParams, Task};

/// Hard cap on training epochs.
pub(crate) const MAX_EPOCHS: usize = 200;
/// Mini-batch size.
pub(crate) const BATCH_SIZE: usize = 32;
/// Epochs without holdout improvement before stopping.
pub(crate) const EARLY_STOP_PATIENCE: usize = 10;
/// Minimum rows before a 10% early-stopping holdout is carved off the tail.
pub(crate) const MIN_ROWS_FOR_EARLY_STOP: usize = 20;
/// Holdout-loss improvements smaller than this do not reset patience.
const IMPROVEMENT_TOLERANCE: f64 = 1e-7;

/// A trained feed-forward network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    /// Per layer, `d_in × d_out`.
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
    activation: Activation,
}

/// Gradients of the objective with respect to every weight and bias.
pub(crate) struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpModel {
    fn init(params: &MlpParams, n_features: usize, rng: &mut ChaCha8Rng) -> MlpModel {
        let mut dims = vec![n_features];
        dims.extend_from_slice(&params.hidden_layer_sizes);
        dims.push(1);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weight =
                Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..=bound));
            weights.push(weight);
            biases.push(Array1::zeros(fan_out));
        }
        MlpModel {
            weights,
            biases,
            activation: params.activation,
        }
    }

    fn activate(&self, z: f64) -> f64 {
        match self.activation {
            Activation::Relu => z.max(0.0),
            Activation::Logistic => sigmoid(z),
        }
    }

    /// Derivative of the activation expressed through the activated value.
    fn activate_prime(&self, a: f64) -> f64 {
        match self.activation {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Logistic => a * (1.0 - a),
        }
    }

    /// Forward pass keeping every layer's activation (index 0 is the input).
    fn forward(&self, x: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let layers = self.weights.len();
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(layers + 1);
        activations.push(x.to_owned());
        for l in 0..layers {
            let mut z = activations[l].dot(&self.weights[l]) + &self.biases[l];
            if l + 1 < layers {
                z.mapv_inplace(|v| self.activate(v));
            }
            activations.push(z);
        }
        activations
    }

    /// Raw network output: predicted value (regression) or logit
    /// (classification), one per row.
    pub(crate) fn raw_predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let activations = self.forward(x);
        activations
            .last()
            .expect("at least one layer")
            .column(0)
            .to_owned()
    }

    /// Task data loss (no penalty) on `(x, y)`.
    fn data_loss(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, task: Task) -> f64 {
        let out = self.raw_predict(x);
        let n = y.len() as f64;
        match task {
            Task::Regression => {
                out.iter()
                    .zip(y)
                    .map(|(&o, &t)| (o - t) * (o - t))
                    .sum::<f64>()
                    / n
            }
            Task::BinaryClassification => {
                // stable binary cross-entropy with logits
                out.iter()
                    .zip(y)
                    .map(|(&z, &t)| z.max(0.0) - t * z + (-z.abs()).exp().ln_1p())
                    .sum::<f64>()
                    / n
            }
        }
    }

    /// Full training objective on a batch: data loss plus
    /// `alpha * Σ‖W‖² / (2·batch)`. This is exactly what
    /// [`MlpModel::gradients`] differentiates, which the gradient-check test
    /// relies on.
    pub(crate) fn objective(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        task: Task,
        alpha: f64,
    ) -> f64 {
        let n = y.len() as f64;
        let penalty: f64 = self
            .weights
            .iter()
            .map(|w| w.iter().map(|v| v * v).sum::<f64>())
            .sum();
        self.data_loss(x, y, task) + alpha * penalty / (2.0 * n)
    }

    /// Backpropagated gradients of [`MlpModel::objective`].
    pub(crate) fn gradients(
        &self,
        x: ArrayView2<'_, f64>,
        y: ArrayView1<'_, f64>,
        task: Task,
        alpha: f64,
    ) -> Gradients {
        let layers = self.weights.len();
        let n = y.len() as f64;
        let activations = self.forward(x);

        // delta of the output layer, d(objective)/d(z_last), batch × 1
        let out = activations.last().expect("output layer").column(0);
        let mut delta: Array2<f64> = match task {
            Task::Regression => {
                let d: Array1<f64> =
                    out.iter().zip(y).map(|(&o, &t)| 2.0 * (o - t) / n).collect();
                d.insert_axis(Axis(1))
            }
            Task::BinaryClassification => {
                let d: Array1<f64> = out
                    .iter()
                    .zip(y)
                    .map(|(&z, &t)| (sigmoid(z) - t) / n)
                    .collect();
                d.insert_axis(Axis(1))
            }
        };

        let mut grad_w: Vec<Array2<f64>> = Vec::with_capacity(layers);
        let mut grad_b: Vec<Array1<f64>> = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            let gw = activations[l].t().dot(&delta) + &(alpha / n * &self.weights[l]);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                back.zip_mut_with(&activations[l], |d, &a| *d *= self.activate_prime(a));
                delta = back;
            }
            grad_w.push(gw);
            grad_b.push(gb);
        }
        grad_w.reverse();
        grad_b.reverse();
        Gradients {
            weights: grad_w,
            biases: grad_b,
        }
    }

    fn step(&mut self, grads: &Gradients, learning_rate: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            w.zip_mut_with(g, |w, &g| *w -= learning_rate * g);
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.biases) {
            b.zip_mut_with(g, |b, &g| *b -= learning_rate * g);
        }
    }
}

/// Worst relative disagreement between backpropagated gradients and central
/// finite differences of the training objective, over every weight and bias
/// of a freshly initialised network. A healthy implementation stays below
/// ~1e-6 with step `h = 1e-6`; callers typically assert against 1e-4 or 1e-5.
pub fn gradient_check_max_rel_err(
    params: &MlpParams,
    task: Task,
    seed: u64,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<f64> {
    params.validate()?;
    super::validate_fit_inputs(task, x, y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = MlpModel::init(params, x.ncols(), &mut rng);
    let alpha = params.alpha;
    let h = 1e-6;
    let analytic = net.gradients(x, y, task, alpha);
    let mut worst = 0.0f64;
    let mut probe = |net: &mut MlpModel, l: usize, slot: Slot, analytic_value: f64| {
        let orig = slot.get(net, l);
        slot.set(net, l, orig + h);
        let up = net.objective(x, y, task, alpha);
        slot.set(net, l, orig - h);
        let down = net.objective(x, y, task, alpha);
        slot.set(net, l, orig);
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic_value.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic_value - numeric).abs() / denom);
    };
    for l in 0..net.weights.len() {
        let (rows, cols) = net.weights[l].dim();
        for r in 0..rows {
            for c in 0..cols {
                probe(&mut net, l, Slot::Weight(r, c), analytic.weights[l][[r, c]]);
            }
        }
        for j in 0..net.biases[l].len() {
            probe(&mut net, l, Slot::Bias(j), analytic.biases[l][j]);
        }
    }
    Ok(worst)
}

/// Addresses one scalar parameter of the network for finite-difference
/// probing.
#[derive(Clone, Copy)]
enum Slot {
    Weight(usize, usize),
    Bias(usize),
}

impl Slot {
    fn get(self, net: &MlpModel, layer: usize) -> f64 {
        match self {
            Slot::Weight(r, c) => net.weights[layer][[r, c]],
            Slot::Bias(j) => net.biases[layer][j],
        }
    }

    fn set(self, net: &mut MlpModel, layer: usize, value: f64) {
        match self {
            Slot::Weight(r, c) => net.weights[layer][[r, c]] = value,
            Slot::Bias(j) => net.biases[layer][j] = value,
        }
    }
}

pub(crate) fn train(
    params: &MlpParams,
    task: Task,
    seed: u64,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    curve: &mut Vec<f64>,
) -> Result<MlpModel> {
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = MlpModel::init(params, x.ncols(), &mut rng);

    // Trailing rows become the early-stopping holdout when there is enough
    // data; with chronological data this is also the most recent segment.
    let holdout = if n >= MIN_ROWS_FOR_EARLY_STOP {
        ((n as f64 * 0.1).floor() as usize).max(1)
    } else {
        0
    };
    let n_train = n - holdout;
    let x_train = x.slice(s![..n_train, ..]);
    let y_train = y.slice(s![..n_train]);

    let mut order: Vec<usize> = (0..n_train).collect();
    type Checkpoint = (f64, Vec<Array2<f64>>, Vec<Array1<f64>>);
    let mut best: Option<Checkpoint> = None;
    let mut epochs_since_best = 0usize;

    for _epoch in 0..MAX_EPOCHS {
        order.shuffle(&mut rng);
        for chunk in order.chunks(BATCH_SIZE) {
            let xb = x_train.select(Axis(0), chunk);
            let yb = y_train.select(Axis(0), chunk);
            let grads = net.gradients(xb.view(), yb.view(), task, params.alpha);
            net.step(&grads, params.learning_rate_init);
        }
        curve.push(net.data_loss(x_train, y_train, task));

        if holdout > 0 {
            let x_hold = x.slice(s![n_train.., ..]);
            let y_hold = y.slice(s![n_train..]);
            let hold_loss = net.data_loss(x_hold, y_hold, task);
            let improved = best
                .as_ref()
                .is_none_or(|(b, _, _)| hold_loss < b - IMPROVEMENT_TOLERANCE);
            if improved {
                best = Some((hold_loss, net.weights.clone(), net.biases.clone()));
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best >= EARLY_STOP_PATIENCE {
                    break;
                }
            }
        }
    }

    if let Some((_, weights, biases)) = best {
        net.weights = weights;
        net.biases = biases;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::super::{LearnerConfig, Model};
    use super::*;
    use ndarray::arr1;

    /// Central finite differences on the batch objective must match
    /// backpropagation for every weight and bias, both tasks, both
    /// activations, with and without L2.
    #[test]
    fn gradient_check_against_finite_differences() {
        let x = ndarray::arr2(&[
            [0.2, -0.4, 0.9],
            [-1.1, 0.3, 0.5],
            [0.7, 0.8, -0.2],
            [0.0, -0.6, 0.1],
        ]);
        let y_reg = arr1(&[0.3, -0.8, 1.2, 0.05]);
        let y_cls = arr1(&[1.0, 0.0, 1.0, 0.0]);

        for activation in [Activation::Relu, Activation::Logistic] {
            for (task, y) in [
                (Task::Regression, &y_reg),
                (Task::BinaryClassification, &y_cls),
            ] {
                for alpha in [0.0, 0.01] {
                    // Depth is exercised with the smooth activation only:
                    // zero-initialized biases can leave a deep rectified net
                    // exactly on a kink (a sample deactivating one layer
                    // zeroes the next pre-activation), where central
                    // differences are not expected to match the subgradient.
                    let hidden = match activation {
                        Activation::Relu => vec![4],
                        Activation::Logistic => vec![4, 3],
                    };
                    let params = MlpParams {
                        hidden_layer_sizes: hidden,
                        activation,
                        alpha,
                        ..MlpParams::default()
                    };
                    let worst =
                        gradient_check_max_rel_err(&params, task, 42, x.view(), y.view())
                            .unwrap();
                    assert!(
                        worst < 1e-5,
                        "{activation:?} {task:?} alpha={alpha}: max rel err {worst}"
                    );
                }
            }
        }
    }

    #[test]
    fn learns_a_linear_function() {
        let n = 160;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
        let y: Array1<f64> = x.rows().into_iter().map(|r| 0.8 * r[0] - 0.3 * r[1]).collect();
        let cfg = LearnerConfig::mlp(
            Task::Regression,
            MlpParams {
                hidden_layer_sizes: vec![20],
                learning_rate_init: 0.01,
                alpha: 1e-4,
                activation: Activation::Relu,
            },
            0,
        );
        let model = Model::fit(&cfg, x.view(), y.view()).unwrap();
        let mse = model.evaluate(x.view(), y.view()).unwrap();
        let var = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!(mse < 0.05 * var, "mse {mse} vs variance {var}");
    }

    #[test]
    fn classification_outputs_probabilities_and_separates_classes() {
        let n = 120;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let center = if i < n / 2 { -1.0 } else { 1.0 };
            center + rng.random_range(-0.3..0.3) + j as f64 * 0.0
        });
        let y: Array1<f64> = (0..n).map(|i| f64::from(i >= n / 2)).collect();
        let cfg = LearnerConfig::mlp(
            Task::BinaryClassification,
            MlpParams {
                hidden_layer_sizes: vec![10],
                learning_rate_init: 0.1,
                ..MlpParams::default()
            },
            0,
        );
        let model = Model::fit(&cfg, x.view(), y.view()).unwrap();
        let p = model.predict(x.view()).unwrap();
        assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let ce = model.evaluate(x.view(), y.view()).unwrap();
        assert!(ce < 0.3, "cross-entropy {ce}");
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((60, 3), |_| rng.random_range(-1.0..1.0));
        let y: Array1<f64> = x.rows().into_iter().map(|r| r[0] + r[1] * r[2]).collect();
        let cfg = LearnerConfig::mlp(Task::Regression, MlpParams::default(), 5);
        let a = Model::fit(&cfg, x.view(), y.view()).unwrap();
        let b = Model::fit(&cfg, x.view(), y.view()).unwrap();
        assert_eq!(a.predict(x.view()).unwrap(), b.predict(x.view()).unwrap());
        let c = Model::fit(&cfg.with_seed(6), x.view(), y.view()).unwrap();
        assert_ne!(a.predict(x.view()).unwrap(), c.predict(x.view()).unwrap());
    }

    #[test]
    fn tiny_datasets_train_without_holdout() {
        // below MIN_ROWS_FOR_EARLY_STOP rows: no holdout, must still fit
        let x = ndarray::arr2(&[[0.0], [0.25], [0.5], [0.75], [1.0]]);
        let y = arr1(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let cfg = LearnerConfig::mlp(Task::Regression, MlpParams::default(), 0);
        let model = Model::fit(&cfg, x.view(), y.view()).unwrap();
        assert_eq!(model.train_loss_curve().len(), MAX_EPOCHS);
    }

    #[test]
    fn early_stopping_caps_epochs_and_restores_best() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // pure noise: holdout loss cannot keep improving for 200 epochs
        let x = Array2::from_shape_fn((100, 4), |_| rng.random_range(-1.0..1.0));
        let y: Array1<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cfg = LearnerConfig::mlp(
            Task::Regression,
            MlpParams {
                learning_rate_init: 0.05,
                ..MlpParams::default()
            },
            3,
        );
        let model = Model::fit(&cfg, x.view(), y.view()).unwrap();
        assert!(
            model.train_loss_curve().len() < MAX_EPOCHS,
            "expected early stop, ran {} epochs",
            model.train_loss_curve().len()
        );
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((40, 3), |_| rng.random_range(-1.0..1.0));
        let y: Array1<f64> = x.rows().into_iter().map(|r| r[0] * r[1] + r[2]).collect();
        let cfg = LearnerConfig::mlp(
            Task::Regression,
            MlpParams {
                hidden_layer_sizes: vec![8, 4],
                activation: Activation::Logistic,
                ..MlpParams::default()
            },
            0,
        );
        let model = Model::fit(&cfg, x.view(), y.view()).unwrap();
        let back = Model::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(
            model.predict(x.view()).unwrap(),
            back.predict(x.view()).unwrap()
        );
        assert!(back.feature_importance().is_err());
    }
}
