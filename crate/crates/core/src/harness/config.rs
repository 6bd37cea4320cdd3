//! Experiment configuration: data sources, hyperparameter grids, selector
//! lists, and the TOML file format the CLI consumes.
//!
//! Grids default to the published search space (see the constants below).
//! With `paper_mode = true`, every configured value must stay inside those
//! declared ranges; without it, any valid value is allowed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureRecipe, SplitOrder, SplitSpec};
use crate::error::{Error, Result};
use crate::learners::{Activation, GbdtParams, LearnerConfig, LearnerParams, MlpParams, Task};
use crate::selection::AfsBmParams;
use crate::synthetic::SyntheticSpec;

/// Environment variable supplying the default worker-thread count.
pub const PARALLELISM_ENV: &str = "AFSBM_PARALLELISM";

// The published hyperparameter search space, used as grid defaults and as
// the admissible ranges under `paper_mode`.
pub const GBDT_NUM_LEAVES: &[usize] = &[20, 50, 100];
pub const GBDT_LEARNING_RATE: &[f64] = &[0.01, 0.1, 0.5];
pub const GBDT_N_ESTIMATORS: &[usize] = &[20, 50, 100];
pub const GBDT_SUBSAMPLE: &[f64] = &[0.6, 0.8, 1.0];
pub const GBDT_COLSAMPLE: &[f64] = &[0.6, 0.8, 1.0];
pub const GBDT_MIN_CHILD_SAMPLES: &[usize] = &[5, 10];
pub const MLP_ALPHA: &[f64] = &[1e-4, 1e-3, 1e-2];
pub const MLP_LEARNING_RATE_INIT: &[f64] = &[1e-3, 1e-2];
pub const AFSBM_MU: &[usize] = &[5, 6, 7, 8, 9, 10];
pub const AFSBM_BETA: &[usize] = &[3, 4, 5, 6, 7];
pub const AFSBM_DELTA_L: &[f64] = &[0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05];
pub const CC_GAMMA: &[f64] = &[
    0.02, 0.03, 0.04, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.50,
];

/// The four MLP architectures in the declared search space.
pub fn mlp_hidden_grid() -> Vec<Vec<usize>> {
    vec![vec![20], vec![40], vec![10], vec![20, 10]]
}

/// Where the experiment data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Generated benchmark with known informative columns.
    Synthetic(SyntheticSection),
    /// Tabular CSV with named feature columns and a target column.
    Csv {
        path: PathBuf,
        target: String,
        #[serde(default)]
        timestamp: Option<String>,
    },
    /// Univariate series CSV turned into a supervised dataset by a
    /// feature-engineering recipe.
    SeriesCsv {
        path: PathBuf,
        /// Column holding the series values.
        value: String,
        #[serde(default)]
        timestamp: Option<String>,
        recipe: FeatureRecipe,
    },
    /// Directory of series CSVs: the full pipeline runs once per file
    /// (seed = global seed + file index in sorted order) and losses are
    /// aggregated across series.
    SeriesDir {
        dir: PathBuf,
        value: String,
        #[serde(default)]
        timestamp: Option<String>,
        recipe: FeatureRecipe,
        /// Optional cap on how many series (sorted by file name) to run.
        #[serde(default)]
        limit: Option<usize>,
    },
}

/// Synthetic-benchmark settings with every field optional; unset fields fall
/// back to the benchmark defaults, and an unset seed follows the global one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSection {
    pub n_samples: Option<usize>,
    pub n_features: Option<usize>,
    pub n_informative: Option<usize>,
    pub noise_variance: Option<f64>,
    pub feature_low: Option<f64>,
    pub feature_high: Option<f64>,
    pub seed: Option<u64>,
}

impl SyntheticSection {
    pub fn to_spec(&self, global_seed: u64) -> SyntheticSpec {
        let d = SyntheticSpec::default();
        SyntheticSpec {
            n_samples: self.n_samples.unwrap_or(d.n_samples),
            n_features: self.n_features.unwrap_or(d.n_features),
            n_informative: self.n_informative.unwrap_or(d.n_informative),
            noise_variance: self.noise_variance.unwrap_or(d.noise_variance),
            feature_low: self.feature_low.unwrap_or(d.feature_low),
            feature_high: self.feature_high.unwrap_or(d.feature_high),
            seed: self.seed.unwrap_or(global_seed),
        }
    }
}

/// Split fractions and ordering; an unset seed follows the global one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSection {
    pub model_val_fraction: f64,
    pub mask_val_fraction: f64,
    pub test_fraction: f64,
    pub order: SplitOrder,
    pub seed: Option<u64>,
}

impl Default for SplitSection {
    fn default() -> Self {
        let d = SplitSpec::default();
        SplitSection {
            model_val_fraction: d.model_val_fraction,
            mask_val_fraction: d.mask_val_fraction,
            test_fraction: d.test_fraction,
            order: d.order,
            seed: None,
        }
    }
}

impl SplitSection {
    pub fn to_spec(&self, global_seed: u64) -> SplitSpec {
        SplitSpec {
            model_val_fraction: self.model_val_fraction,
            mask_val_fraction: self.mask_val_fraction,
            test_fraction: self.test_fraction,
            order: self.order,
            seed: self.seed.unwrap_or(global_seed),
        }
    }
}

/// One learner family plus the hyperparameter grid searched for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerGrid {
    Gbdt(GbdtGrid),
    Mlp(MlpGrid),
}

impl LearnerGrid {
    pub fn label(&self) -> &'static str {
        match self {
            LearnerGrid::Gbdt(_) => "gbdt",
            LearnerGrid::Mlp(_) => "mlp",
        }
    }

    /// Full factorial expansion in declared axis order; ties in a grid
    /// search resolve to the earliest cell of this listing.
    pub fn expand(&self) -> Vec<LearnerParams> {
        match self {
            LearnerGrid::Gbdt(g) => g.expand().into_iter().map(LearnerParams::Gbdt).collect(),
            LearnerGrid::Mlp(g) => g.expand().into_iter().map(LearnerParams::Mlp).collect(),
        }
    }

    fn check_axes_non_empty(&self) -> Result<()> {
        let empty: &str = match self {
            LearnerGrid::Gbdt(g) => {
                if g.num_leaves.is_empty() {
                    "num_leaves"
                } else if g.learning_rate.is_empty() {
                    "learning_rate"
                } else if g.n_estimators.is_empty() {
                    "n_estimators"
                } else if g.subsample.is_empty() {
                    "subsample"
                } else if g.colsample_bytree.is_empty() {
                    "colsample_bytree"
                } else if g.min_child_samples.is_empty() {
                    "min_child_samples"
                } else {
                    return Ok(());
                }
            }
            LearnerGrid::Mlp(g) => {
                if g.hidden_layer_sizes.is_empty() {
                    "hidden_layer_sizes"
                } else if g.activation.is_empty() {
                    "activation"
                } else if g.alpha.is_empty() {
                    "alpha"
                } else if g.learning_rate_init.is_empty() {
                    "learning_rate_init"
                } else {
                    return Ok(());
                }
            }
        };
        Err(Error::invalid(format!(
            "{} grid axis `{empty}` is empty",
            self.label()
        )))
    }

    fn check_paper_ranges(&self) -> Result<()> {
        match self {
            LearnerGrid::Gbdt(g) => {
                in_range_usize("num_leaves", &g.num_leaves, GBDT_NUM_LEAVES)?;
                in_range_f64("learning_rate", &g.learning_rate, GBDT_LEARNING_RATE)?;
                in_range_usize("n_estimators", &g.n_estimators, GBDT_N_ESTIMATORS)?;
                in_range_f64("subsample", &g.subsample, GBDT_SUBSAMPLE)?;
                in_range_f64("colsample_bytree", &g.colsample_bytree, GBDT_COLSAMPLE)?;
                in_range_usize(
                    "min_child_samples",
                    &g.min_child_samples,
                    GBDT_MIN_CHILD_SAMPLES,
                )?;
            }
            LearnerGrid::Mlp(g) => {
                let declared = mlp_hidden_grid();
                for h in &g.hidden_layer_sizes {
                    if !declared.contains(h) {
                        return Err(Error::invalid(format!(
                            "paper_mode: hidden_layer_sizes {h:?} is not one of the declared \
                             architectures {declared:?}"
                        )));
                    }
                }
                in_range_f64("alpha", &g.alpha, MLP_ALPHA)?;
                in_range_f64(
                    "learning_rate_init",
                    &g.learning_rate_init,
                    MLP_LEARNING_RATE_INIT,
                )?;
            }
        }
        Ok(())
    }
}

/// GBDT grid; every axis defaults to the declared search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtGrid {
    pub num_leaves: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub n_estimators: Vec<usize>,
    pub subsample: Vec<f64>,
    pub colsample_bytree: Vec<f64>,
    pub min_child_samples: Vec<usize>,
}

impl Default for GbdtGrid {
    fn default() -> Self {
        GbdtGrid {
            num_leaves: GBDT_NUM_LEAVES.to_vec(),
            learning_rate: GBDT_LEARNING_RATE.to_vec(),
            n_estimators: GBDT_N_ESTIMATORS.to_vec(),
            subsample: GBDT_SUBSAMPLE.to_vec(),
            colsample_bytree: GBDT_COLSAMPLE.to_vec(),
            min_child_samples: GBDT_MIN_CHILD_SAMPLES.to_vec(),
        }
    }
}

impl GbdtGrid {
    /// A 1×…×1 grid holding exactly one parameter set.
    pub fn single(p: &GbdtParams) -> GbdtGrid {
        GbdtGrid {
            num_leaves: vec![p.num_leaves],
            learning_rate: vec![p.learning_rate],
            n_estimators: vec![p.n_estimators],
            subsample: vec![p.subsample],
            colsample_bytree: vec![p.colsample_bytree],
            min_child_samples: vec![p.min_child_samples],
        }
    }

    pub fn expand(&self) -> Vec<GbdtParams> {
        let mut out = Vec::new();
        for &num_leaves in &self.num_leaves {
            for &learning_rate in &self.learning_rate {
                for &n_estimators in &self.n_estimators {
                    for &subsample in &self.subsample {
                        for &colsample_bytree in &self.colsample_bytree {
                            for &min_child_samples in &self.min_child_samples {
                                out.push(GbdtParams {
                                    num_leaves,
                                    learning_rate,
                                    n_estimators,
                                    subsample,
                                    colsample_bytree,
                                    min_child_samples,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// MLP grid; every axis defaults to the declared search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpGrid {
    pub hidden_layer_sizes: Vec<Vec<usize>>,
    pub activation: Vec<Activation>,
    pub alpha: Vec<f64>,
    pub learning_rate_init: Vec<f64>,
}

impl Default for MlpGrid {
    fn default() -> Self {
        MlpGrid {
            hidden_layer_sizes: mlp_hidden_grid(),
            activation: vec![Activation::Relu, Activation::Logistic],
            alpha: MLP_ALPHA.to_vec(),
            learning_rate_init: MLP_LEARNING_RATE_INIT.to_vec(),
        }
    }
}

impl MlpGrid {
    pub fn expand(&self) -> Vec<MlpParams> {
        let mut out = Vec::new();
        for hidden in &self.hidden_layer_sizes {
            for &activation in &self.activation {
                for &alpha in &self.alpha {
                    for &learning_rate_init in &self.learning_rate_init {
                        out.push(MlpParams {
                            hidden_layer_sizes: hidden.clone(),
                            activation,
                            alpha,
                            learning_rate_init,
                        });
                    }
                }
            }
        }
        out
    }
}

/// One selection method plus the grid its own hyperparameters are tuned
/// over. `k` grids left unset default to `2..=M` once the feature count `M`
/// is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectorSpec {
    /// No selection: the tuned learner on all features.
    Vanilla,
    CrossCorrelation {
        #[serde(default = "default_cc_gamma")]
        gamma: Vec<f64>,
    },
    MutualInformation {
        #[serde(default)]
        k: Option<Vec<usize>>,
        #[serde(default = "default_mi_bins")]
        bins: usize,
    },
    Rfe {
        #[serde(default)]
        k: Option<Vec<usize>>,
    },
    AfsBm {
        #[serde(default = "default_afsbm_mu")]
        mu: Vec<usize>,
        #[serde(default = "default_afsbm_beta")]
        beta: Vec<usize>,
        #[serde(default = "default_afsbm_delta_l")]
        delta_l: Vec<f64>,
        /// Safety cap on outer iterations per run.
        #[serde(default = "default_afsbm_max_outer")]
        max_outer_iterations: usize,
    },
}

fn default_cc_gamma() -> Vec<f64> {
    CC_GAMMA.to_vec()
}

fn default_mi_bins() -> usize {
    crate::baselines::DEFAULT_MI_BINS
}

fn default_afsbm_mu() -> Vec<usize> {
    AFSBM_MU.to_vec()
}

fn default_afsbm_beta() -> Vec<usize> {
    AFSBM_BETA.to_vec()
}

fn default_afsbm_delta_l() -> Vec<f64> {
    AFSBM_DELTA_L.to_vec()
}

fn default_afsbm_max_outer() -> usize {
    AfsBmParams::default().max_outer_iterations
}

impl SelectorSpec {
    pub fn label(&self) -> &'static str {
        match self {
            SelectorSpec::Vanilla => "vanilla",
            SelectorSpec::CrossCorrelation { .. } => "cross_correlation",
            SelectorSpec::MutualInformation { .. } => "mutual_information",
            SelectorSpec::Rfe { .. } => "rfe",
            SelectorSpec::AfsBm { .. } => "afs_bm",
        }
    }

    /// AFS-BM parameter cells in declared order (μ, then β, then ΔL).
    pub fn afsbm_cells(&self, seed: u64) -> Vec<AfsBmParams> {
        let SelectorSpec::AfsBm {
            mu,
            beta,
            delta_l,
            max_outer_iterations,
        } = self
        else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for &m in mu {
            for &b in beta {
                for &d in delta_l {
                    out.push(AfsBmParams {
                        mu: m,
                        beta: b,
                        delta_l: d,
                        seed,
                        max_outer_iterations: *max_outer_iterations,
                    });
                }
            }
        }
        out
    }

    fn check_axes_non_empty(&self) -> Result<()> {
        let empty = match self {
            SelectorSpec::Vanilla => return Ok(()),
            SelectorSpec::CrossCorrelation { gamma } => gamma.is_empty().then_some("gamma"),
            SelectorSpec::MutualInformation { k, .. } | SelectorSpec::Rfe { k } => k
                .as_ref()
                .is_some_and(|k| k.is_empty())
                .then_some("k"),
            SelectorSpec::AfsBm {
                mu, beta, delta_l, ..
            } => {
                if mu.is_empty() {
                    Some("mu")
                } else if beta.is_empty() {
                    Some("beta")
                } else if delta_l.is_empty() {
                    Some("delta_l")
                } else {
                    None
                }
            }
        };
        match empty {
            Some(axis) => Err(Error::invalid(format!(
                "selector `{}` grid axis `{axis}` is empty",
                self.label()
            ))),
            None => Ok(()),
        }
    }

    fn check_paper_ranges(&self) -> Result<()> {
        match self {
            SelectorSpec::Vanilla => Ok(()),
            SelectorSpec::CrossCorrelation { gamma } => in_range_f64("gamma", gamma, CC_GAMMA),
            SelectorSpec::MutualInformation { k, .. } | SelectorSpec::Rfe { k } => {
                if let Some(ks) = k {
                    for &v in ks {
                        if v < 2 {
                            return Err(Error::invalid(format!(
                                "paper_mode: selected-feature count k starts at 2, got {v}"
                            )));
                        }
                    }
                }
                Ok(())
            }
            SelectorSpec::AfsBm {
                mu, beta, delta_l, ..
            } => {
                in_range_usize("mu", mu, AFSBM_MU)?;
                in_range_usize("beta", beta, AFSBM_BETA)?;
                in_range_f64("delta_l", delta_l, AFSBM_DELTA_L)
            }
        }
    }
}

/// A full experiment: data, splits, learner grids, selectors, seed policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_task")]
    pub task: Task,
    /// Global seed: data generation, splitting, and training default to it.
    #[serde(default)]
    pub seed: u64,
    /// When set, every grid value must lie inside the published ranges.
    #[serde(default)]
    pub paper_mode: bool,
    /// Worker threads; unset falls back to the `AFSBM_PARALLELISM`
    /// environment variable, then to the machine's logical CPU count.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Where `report.json` and `report.txt` are written; optional.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub data: DataSource,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default = "default_learners")]
    pub learners: Vec<LearnerGrid>,
    #[serde(default = "default_selectors")]
    pub selectors: Vec<SelectorSpec>,
}

fn default_task() -> Task {
    Task::Regression
}

fn default_learners() -> Vec<LearnerGrid> {
    vec![LearnerGrid::Gbdt(GbdtGrid::default())]
}

fn default_selectors() -> Vec<SelectorSpec> {
    vec![
        SelectorSpec::Vanilla,
        SelectorSpec::CrossCorrelation {
            gamma: default_cc_gamma(),
        },
        SelectorSpec::MutualInformation {
            k: None,
            bins: default_mi_bins(),
        },
        SelectorSpec::Rfe { k: None },
        SelectorSpec::AfsBm {
            mu: default_afsbm_mu(),
            beta: default_afsbm_beta(),
            delta_l: default_afsbm_delta_l(),
            max_outer_iterations: default_afsbm_max_outer(),
        },
    ]
}

impl ExperimentConfig {
    /// Parses a TOML document; see the README for the schema.
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.learners.is_empty() {
            return Err(Error::invalid("no learners configured"));
        }
        if self.selectors.is_empty() {
            return Err(Error::invalid("no selectors configured"));
        }
        let learner_labels: Vec<&str> = self.learners.iter().map(|l| l.label()).collect();
        let selector_labels: Vec<&str> = self.selectors.iter().map(|s| s.label()).collect();
        for labels in [&learner_labels, &selector_labels] {
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].contains(l) {
                    return Err(Error::invalid(format!(
                        "duplicate entry `{l}`: each learner kind and selector method may \
                         appear once"
                    )));
                }
            }
        }
        for learner in &self.learners {
            learner.check_axes_non_empty()?;
            if self.paper_mode {
                learner.check_paper_ranges()?;
            }
        }
        for selector in &self.selectors {
            selector.check_axes_non_empty()?;
            if self.paper_mode {
                selector.check_paper_ranges()?;
            }
        }
        if let Some(0) = self.parallelism {
            return Err(Error::invalid("parallelism must be at least 1"));
        }
        self.split.to_spec(self.seed).validate()?;
        if let DataSource::Synthetic(section) = &self.data {
            section.to_spec(self.seed).validate()?;
        }
        Ok(())
    }

    /// Worker threads: explicit config, then the environment variable,
    /// then every logical CPU.
    pub fn effective_parallelism(&self) -> usize {
        self.parallelism
            .or_else(|| {
                std::env::var(PARALLELISM_ENV)
                    .ok()
                    .and_then(|v| v.parse().ok())
                    .filter(|&n| n > 0)
            })
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            })
    }

    /// The learner configuration for one grid cell: the cell's parameters
    /// with the experiment task and global seed.
    pub fn learner_config(&self, params: LearnerParams) -> LearnerConfig {
        LearnerConfig {
            task: self.task,
            params,
            seed: self.seed,
        }
    }
}

fn in_range_f64(name: &str, values: &[f64], declared: &[f64]) -> Result<()> {
    let lo = declared.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = declared.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &v in values {
        if !v.is_finite() || v < lo || v > hi {
            return Err(Error::invalid(format!(
                "paper_mode: {name} = {v} outside the declared range [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

fn in_range_usize(name: &str, values: &[usize], declared: &[usize]) -> Result<()> {
    let lo = *declared.iter().min().expect("non-empty declared grid");
    let hi = *declared.iter().max().expect("non-empty declared grid");
    for &v in values {
        if v < lo || v > hi {
            return Err(Error::invalid(format!(
                "paper_mode: {name} = {v} outside the declared range [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}
