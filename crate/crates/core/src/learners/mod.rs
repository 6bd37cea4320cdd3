//! Self-contained learners: gradient-boosted decision trees and a
//! multi-layer perceptron.
//!
//! Both learners train from scratch on dense `f64` matrices — no external ML
//! runtime — and share one facade, [`Model`], which handles input validation,
//! task-appropriate losses, JSON (de)serialization, and feature importance.
//! Training is deterministic given the config seed; stochastic steps
//! (row/column subsampling, weight init, batch shuffling) all draw from a
//! seeded ChaCha8 stream.

pub(crate) mod gbdt;
pub(crate) mod mlp;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, LossKind};

pub use gbdt::GbdtModel;
pub use mlp::{gradient_check_max_rel_err, MlpModel};

/// What is being predicted, and with which loss it is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Continuous targets, scored with mean squared error.
    Regression,
    /// Binary 0/1 targets, scored with cross-entropy on predicted
    /// probabilities.
    BinaryClassification,
}

impl Task {
    pub fn loss_kind(&self) -> LossKind {
        match self {
            Task::Regression => LossKind::Mse,
            Task::BinaryClassification => LossKind::CrossEntropy,
        }
    }

    /// The task-appropriate loss between targets and predictions
    /// (probabilities for classification).
    pub fn loss(&self, y: &[f64], predictions: &[f64]) -> Result<f64> {
        match self {
            Task::Regression => metrics::mse(y, predictions),
            Task::BinaryClassification => metrics::cross_entropy(y, predictions),
        }
    }
}

/// Gradient-boosted decision tree hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    /// Maximum leaves per tree (leaf-wise growth).
    pub num_leaves: usize,
    /// Shrinkage applied to every leaf value.
    pub learning_rate: f64,
    /// Number of boosting rounds.
    pub n_estimators: usize,
    /// Fraction of rows sampled (without replacement) per tree.
    pub subsample: f64,
    /// Fraction of feature columns sampled per tree.
    pub colsample_bytree: f64,
    /// Minimum rows on each side of a split.
    pub min_child_samples: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            num_leaves: 31,
            learning_rate: 0.1,
            n_estimators: 100,
            subsample: 1.0,
            colsample_bytree: 1.0,
            min_child_samples: 5,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_leaves < 2 {
            return Err(Error::invalid("num_leaves must be >= 2"));
        }
        if self.n_estimators == 0 {
            return Err(Error::invalid("n_estimators must be >= 1"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::invalid(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, v) in [
            ("subsample", self.subsample),
            ("colsample_bytree", self.colsample_bytree),
        ] {
            if !v.is_finite() || v <= 0.0 || v > 1.0 {
                return Err(Error::invalid(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if self.min_child_samples == 0 {
            return Err(Error::invalid("min_child_samples must be >= 1"));
        }
        Ok(())
    }
}

/// Hidden-layer activation of the MLP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Logistic,
}

/// Multi-layer perceptron hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    /// Hidden layer widths, e.g. `[20, 10]`; the output layer (one unit) is
    /// implicit.
    pub hidden_layer_sizes: Vec<usize>,
    pub activation: Activation,
    /// L2 penalty strength.
    pub alpha: f64,
    /// Constant learning rate for mini-batch gradient descent.
    pub learning_rate_init: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_layer_sizes: vec![20],
            activation: Activation::Relu,
            alpha: 1e-4,
            learning_rate_init: 1e-3,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layer_sizes.is_empty() {
            return Err(Error::invalid("hidden_layer_sizes must not be empty"));
        }
        if self.hidden_layer_sizes.contains(&0) {
            return Err(Error::invalid("hidden layer width must be >= 1"));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::invalid(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !self.learning_rate_init.is_finite() || self.learning_rate_init <= 0.0 {
            return Err(Error::invalid(format!(
                "learning_rate_init must be positive, got {}",
                self.learning_rate_init
            )));
        }
        Ok(())
    }
}

/// Which learner family a config belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Gbdt,
    Mlp,
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LearnerKind::Gbdt => write!(f, "gbdt"),
            LearnerKind::Mlp => write!(f, "mlp"),
        }
    }
}

/// Hyper-parameters for one of the learner families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum LearnerParams {
    Gbdt(GbdtParams),
    Mlp(MlpParams),
}

impl LearnerParams {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerParams::Gbdt(_) => LearnerKind::Gbdt,
            LearnerParams::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerParams::Gbdt(p) => p.validate(),
            LearnerParams::Mlp(p) => p.validate(),
        }
    }
}

/// Everything needed to train a model: task, hyper-parameters, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub task: Task,
    pub params: LearnerParams,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn gbdt(task: Task, params: GbdtParams, seed: u64) -> Self {
        LearnerConfig {
            task,
            params: LearnerParams::Gbdt(params),
            seed,
        }
    }

    pub fn mlp(task: Task, params: MlpParams, seed: u64) -> Self {
        LearnerConfig {
            task,
            params: LearnerParams::Mlp(params),
            seed,
        }
    }

    pub fn kind(&self) -> LearnerKind {
        self.params.kind()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()
    }

    /// The same config with a different seed (used for derived, per-cell
    /// seeding in experiments).
    pub fn with_seed(&self, seed: u64) -> Self {
        LearnerConfig {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelInner {
    Gbdt(GbdtModel),
    Mlp(MlpModel),
}

/// A trained model: predictions, task loss, importance, JSON round-trips.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    config: LearnerConfig,
    n_features: usize,
    /// Training loss after each boosting round / epoch.
    train_loss_curve: Vec<f64>,
    inner: ModelInner,
}

impl Model {
    /// Trains a model on `x` (rows × features) against `y`.
    ///
    /// Validates the config, shapes, finiteness, and — for classification —
    /// that targets are 0/1 with both classes present.
    pub fn fit(config: &LearnerConfig, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<Model> {
        config.validate()?;
        validate_fit_inputs(config.task, x, y)?;
        let mut curve = Vec::new();
        let inner = match &config.params {
            LearnerParams::Gbdt(p) => {
                ModelInner::Gbdt(gbdt::train(p, config.task, config.seed, x, y, &mut curve)?)
            }
            LearnerParams::Mlp(p) => {
                ModelInner::Mlp(mlp::train(p, config.task, config.seed, x, y, &mut curve)?)
            }
        };
        Ok(Model {
            config: config.clone(),
            n_features: x.ncols(),
            train_loss_curve: curve,
            inner,
        })
    }

    /// Predicts targets (regression) or class-1 probabilities
    /// (classification) for each row of `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::FeatureCountMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        if let Some(((r, c), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::non_finite(format!(
                "predict input at row {r}, column {c}"
            )));
        }
        let raw = match &self.inner {
            ModelInner::Gbdt(m) => m.raw_predict(x),
            ModelInner::Mlp(m) => m.raw_predict(x),
        };
        Ok(match self.config.task {
            Task::Regression => raw,
            Task::BinaryClassification => raw.mapv(sigmoid),
        })
    }

    /// Task-appropriate loss of this model on `(x, y)`.
    pub fn evaluate(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
        let predictions = self.predict(x)?;
        let y_vec = y.to_vec();
        self.config
            .task
            .loss(&y_vec, predictions.as_slice().expect("owned predictions"))
    }

    /// Per-feature importance: total split gain accumulated by each feature.
    /// Only tree models carry importances.
    pub fn feature_importance(&self) -> Result<Vec<f64>> {
        match &self.inner {
            ModelInner::Gbdt(m) => Ok(m.split_gains().to_vec()),
            ModelInner::Mlp(_) => Err(Error::ImportanceUnsupported { got: "mlp" }),
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn kind(&self) -> LearnerKind {
        self.config.kind()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Training loss after each boosting round (GBDT) or epoch (MLP).
    pub fn train_loss_curve(&self) -> &[f64] {
        &self.train_loss_curve
    }

    /// Serializes the full model (config, parameters, learned state) to JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Restores a model serialized with [`Model::to_json`].
    pub fn from_json(json: &str) -> Result<Model> {
        let model: Model = serde_json::from_str(json)?;
        model.config.validate()?;
        Ok(model)
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn validate_fit_inputs(task: Task, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::EmptyTrainingData);
    }
    if y.len() != x.nrows() {
        return Err(Error::shape(format!(
            "{} feature rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if let Some(((r, c), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::non_finite(format!(
            "training feature at row {r}, column {c}"
        )));
    }
    match task {
        Task::Regression => {
            if let Some(r) = y.iter().position(|v| !v.is_finite()) {
                return Err(Error::non_finite(format!("training target at row {r}")));
            }
        }
        Task::BinaryClassification => {
            let mut seen = [false, false];
            for (r, &v) in y.iter().enumerate() {
                if v == 0.0 {
                    seen[0] = true;
                } else if v == 1.0 {
                    seen[1] = true;
                } else {
                    return Err(Error::BadLabel { row: r + 1, value: v });
                }
            }
            if !(seen[0] && seen[1]) {
                return Err(Error::SingleClass);
            }
        }
    }
    Ok(())
}
