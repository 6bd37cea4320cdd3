//! Experiment orchestration: hyperparameter grid search, the full
//! (selector × learner) comparison pipeline, and report verification.
//!
//! One experiment proceeds per learner family as follows. The learner grid
//! is tuned on all features (fit on `train`, scored on `model_val`); the
//! winning configuration then serves every selector cell. Each selector
//! tunes its own grid by re-running selection and retraining the tuned
//! learner on the masked training split, again scored on `model_val`.
//! `mask_val` is reserved for AFS-BM's in-loop mask scoring, and the test
//! split is touched exactly once per cell — the final evaluation goes
//! through an access-counting gate whose count lands in the report.
//!
//! Masks are applied by zeroing eliminated columns at full width, so every
//! stored model, mask, and loss can be re-checked offline from the report
//! JSON alone ([`verify_report`]).

mod config;
mod report;

pub use config::{
    mlp_hidden_grid, DataSource, ExperimentConfig, GbdtGrid, LearnerGrid, MlpGrid,
    SelectorSpec, SplitSection, SyntheticSection, AFSBM_BETA, AFSBM_DELTA_L, AFSBM_MU,
    CC_GAMMA, GBDT_COLSAMPLE, GBDT_LEARNING_RATE, GBDT_MIN_CHILD_SAMPLES, GBDT_NUM_LEAVES,
    GBDT_N_ESTIMATORS, GBDT_SUBSAMPLE, MLP_ALPHA, MLP_LEARNING_RATE_INIT, PARALLELISM_ENV,
};
pub use report::{
    AggregateCurves, AggregateRow, CellOutcome, CellReport, CellResult, ExperimentReport,
    ReportMetadata, SelectorParams, SeriesRun, SeriesSection,
};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{cross_correlation_select, mutual_information_select, rfe_select};
use crate::dataset::{load_csv, load_series_csv, BinaryMask, Dataset, Splits};
use crate::dataset::build_time_series_dataset;
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, Model};
use crate::metrics::averaged_loss_sequences;
use crate::selection::{run_afs_bm, SelectionResult};
use crate::synthetic;

/// Result of a full-factorial search: the winning cell plus bookkeeping.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome<C> {
    pub best: C,
    /// Index of the winner in the declared cell order.
    pub best_index: usize,
    pub best_loss: f64,
    /// Cells evaluated (the whole grid).
    pub evaluated: usize,
    /// `(cell index, error)` for cells that failed to train.
    pub failures: Vec<(usize, String)>,
}

/// Evaluates every cell and returns the one minimizing the objective; ties
/// resolve to the earliest cell in declared order.
///
/// `validate` runs over the whole grid before any evaluation, so a malformed
/// cell aborts with a configuration error rather than a partial run.
/// Individual evaluation failures (and non-finite objectives) are recorded
/// and skipped; only an entirely failed grid is an error. Evaluation runs on
/// the current rayon pool; the argmin is order-deterministic regardless.
pub fn grid_search<C, V, F>(cells: &[C], validate: V, evaluate: F) -> Result<GridSearchOutcome<C>>
where
    C: Clone + Sync,
    V: Fn(&C) -> Result<()>,
    F: Fn(&C) -> Result<f64> + Sync,
{
    if cells.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for cell in cells {
        validate(cell)?;
    }
    let results: Vec<Result<f64>> = cells
        .par_iter()
        .map(|cell| {
            let loss = evaluate(cell)?;
            if !loss.is_finite() {
                return Err(Error::non_finite("grid-cell validation loss"));
            }
            Ok(loss)
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut failures = Vec::new();
    for (index, outcome) in results.into_iter().enumerate() {
        match outcome {
            Ok(loss) => {
                if best.is_none_or(|(_, b)| loss < b) {
                    best = Some((index, loss));
                }
            }
            Err(e) => failures.push((index, e.to_string())),
        }
    }
    match best {
        Some((best_index, best_loss)) => Ok(GridSearchOutcome {
            best: cells[best_index].clone(),
            best_index,
            best_loss,
            evaluated: cells.len(),
            failures,
        }),
        None => Err(Error::AllCellsFailed {
            cells: cells.len(),
            first: failures
                .first()
                .map(|(_, e)| e.clone())
                .unwrap_or_default(),
        }),
    }
}

/// The loaded experiment inputs; shared by [`run_experiment`] and
/// [`verify_report`] so verification rebuilds exactly what the run saw.
enum Inputs {
    Single { source: String, dataset: Dataset },
    Series { source: String, runs: Vec<SeriesInput> },
}

struct SeriesInput {
    name: String,
    seed: u64,
    dataset: Dataset,
}

fn load_inputs(config: &ExperimentConfig) -> Result<Inputs> {
    match &config.data {
        DataSource::Synthetic(section) => {
            let spec = section.to_spec(config.seed);
            let (dataset, _truth) = synthetic::generate(&spec)?;
            Ok(Inputs::Single {
                source: format!(
                    "synthetic(n={}, m={}, informative={}, noise={}, seed={})",
                    spec.n_samples,
                    spec.n_features,
                    spec.n_informative,
                    spec.noise_variance,
                    spec.seed
                ),
                dataset,
            })
        }
        DataSource::Csv {
            path,
            target,
            timestamp,
        } => Ok(Inputs::Single {
            source: format!("csv({})", path.display()),
            dataset: load_csv(path, target, timestamp.as_deref())?,
        }),
        DataSource::SeriesCsv {
            path,
            value,
            timestamp,
            recipe,
        } => {
            let (series, stamps) = load_series_csv(path, value, timestamp.as_deref())?;
            let dataset = build_time_series_dataset(&series, stamps.as_deref(), recipe)?;
            Ok(Inputs::Single {
                source: format!("series_csv({})", path.display()),
                dataset,
            })
        }
        DataSource::SeriesDir {
            dir,
            value,
            timestamp,
            recipe,
            limit,
        } => {
            let mut paths: Vec<_> = std::fs::read_dir(dir)
                .map_err(|e| Error::io(dir, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
                })
                .collect();
            paths.sort();
            if let Some(limit) = limit {
                paths.truncate(*limit);
            }
            if paths.is_empty() {
                return Err(Error::invalid(format!(
                    "no .csv series found in {}",
                    dir.display()
                )));
            }
            let runs = paths
                .iter()
                .enumerate()
                .map(|(index, path)| {
                    let (series, stamps) = load_series_csv(path, value, timestamp.as_deref())?;
                    let dataset = build_time_series_dataset(&series, stamps.as_deref(), recipe)?;
                    Ok(SeriesInput {
                        name: path
                            .file_stem()
                            .and_then(|s| s.to_str())
                            .unwrap_or("series")
                            .to_string(),
                        seed: config.seed + index as u64,
                        dataset,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Inputs::Series {
                source: format!("series_dir({}, {} series)", dir.display(), runs.len()),
                runs,
            })
        }
    }
}

/// Conventions stamped into every report, covering the judgment calls a
/// reader needs before comparing numbers.
fn conventions() -> Vec<String> {
    vec![
        "synthetic features are sampled i.i.d. uniform on [feature_low, feature_high]; \
         the source distribution is a choice of this implementation"
            .to_string(),
        "masks are applied by zeroing eliminated columns at full width for every retrain \
         and evaluation"
            .to_string(),
        "filter selectors score on the training split only; selector hyperparameters are \
         tuned on the model-validation split; mask search uses the mask-validation split; \
         the test split is evaluated exactly once per cell"
            .to_string(),
        "AFS-BM removal candidates are drawn uniformly without replacement from the \
         active pool using the seeded generator"
            .to_string(),
    ]
}

/// Runs the full experiment described by `config` and, when
/// `config.output_dir` is set, writes `report.json` / `report.txt` there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let parallelism = config.effective_parallelism();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let report = pool.install(|| run_inner(config, parallelism))?;
    if let Some(dir) = &config.output_dir {
        report.write_to(dir)?;
    }
    Ok(report)
}

fn run_inner(config: &ExperimentConfig, parallelism: usize) -> Result<ExperimentReport> {
    let started = Instant::now();
    let inputs = load_inputs(config)?;
    let mut metadata = ReportMetadata {
        created_at: chrono::Utc::now().to_rfc3339(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        task: config.task,
        source: String::new(),
        n_rows: None,
        n_features: None,
        split: config.split.to_spec(config.seed),
        parallelism,
        paper_mode: config.paper_mode,
        conventions: conventions(),
        wall_clock_s: 0.0,
    };
    let (cells, series) = match inputs {
        Inputs::Single { source, dataset } => {
            metadata.source = source;
            metadata.n_rows = Some(dataset.n_rows());
            metadata.n_features = Some(dataset.n_features());
            (run_single(config, &dataset, config.seed)?, None)
        }
        Inputs::Series { source, runs } => {
            metadata.source = source;
            let runs = runs
                .iter()
                .map(|input| {
                    Ok(SeriesRun {
                        name: input.name.clone(),
                        seed: input.seed,
                        cells: run_single(config, &input.dataset, input.seed)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (rows, curves) = aggregate_series(config, &runs)?;
            (
                Vec::new(),
                Some(SeriesSection { runs, rows, curves }),
            )
        }
    };
    metadata.wall_clock_s = started.elapsed().as_secs_f64();
    Ok(ExperimentReport {
        metadata,
        cells,
        series,
    })
}

/// Mean test losses per cell label, and averaged AFS-BM loss trajectories,
/// across the per-series runs.
fn aggregate_series(
    config: &ExperimentConfig,
    runs: &[SeriesRun],
) -> Result<(Vec<AggregateRow>, Vec<AggregateCurves>)> {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for learner in &config.learners {
        for selector in &config.selectors {
            let reports: Vec<&CellReport> = runs
                .iter()
                .flat_map(|run| &run.cells)
                .filter(|c| c.selector == selector.label() && c.learner == learner.label())
                .filter_map(|c| c.report())
                .collect();
            let n_ok = reports.len();
            rows.push(AggregateRow {
                selector: selector.label().to_string(),
                learner: learner.label().to_string(),
                n_ok,
                mean_test_loss: (n_ok > 0).then(|| {
                    reports.iter().map(|r| r.test_loss).sum::<f64>() / n_ok as f64
                }),
            });
            let trajectories: Vec<Vec<f64>> = reports
                .iter()
                .filter_map(|r| r.selection.as_ref())
                .map(|s| s.loss_trajectory.clone())
                .collect();
            if !trajectories.is_empty() {
                let (l_ave, l_ave2) = averaged_loss_sequences(&trajectories)?;
                curves.push(AggregateCurves {
                    selector: selector.label().to_string(),
                    learner: learner.label().to_string(),
                    l_ave,
                    l_ave2,
                });
            }
        }
    }
    Ok((rows, curves))
}

/// Runs every (learner × selector) cell on one dataset.
fn run_single(config: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<Vec<CellOutcome>> {
    let split_spec = {
        let mut spec = config.split.to_spec(config.seed);
        spec.seed = seed;
        spec
    };
    split_spec.validate()?;
    let splits = dataset.split(&split_spec)?;
    let mut cells = Vec::new();
    for learner_grid in &config.learners {
        let learner_label = learner_grid.label();
        let tuned = tune_learner(config, learner_grid, &splits, seed);
        match tuned {
            Err(e) => {
                // without a tuned learner no selector cell can run; record
                // the same error on each
                for selector in &config.selectors {
                    cells.push(CellOutcome {
                        selector: selector.label().to_string(),
                        learner: learner_label.to_string(),
                        result: CellResult::Failed {
                            error: format!("learner tuning failed: {e}"),
                        },
                    });
                }
            }
            Ok(tuning) => {
                for selector in &config.selectors {
                    let started = Instant::now();
                    let result = match run_selector_cell(config, selector, &tuning, &splits, seed)
                    {
                        Ok(mut report) => {
                            report.wall_clock_s = started.elapsed().as_secs_f64();
                            CellResult::Ok(Box::new(report))
                        }
                        Err(e) => CellResult::Failed {
                            error: e.to_string(),
                        },
                    };
                    cells.push(CellOutcome {
                        selector: selector.label().to_string(),
                        learner: learner_label.to_string(),
                        result,
                    });
                }
            }
        }
    }
    Ok(cells)
}

fn tune_learner(
    config: &ExperimentConfig,
    grid: &LearnerGrid,
    splits: &Splits,
    seed: u64,
) -> Result<GridSearchOutcome<LearnerConfig>> {
    let cells: Vec<LearnerConfig> = grid
        .expand()
        .into_iter()
        .map(|params| LearnerConfig {
            task: config.task,
            params,
            seed,
        })
        .collect();
    grid_search(
        &cells,
        |cfg| cfg.validate(),
        |cfg| {
            let model = Model::fit(
                cfg,
                splits.train.features().view(),
                splits.train.targets().view(),
            )?;
            model.evaluate(
                splits.model_val.features().view(),
                splits.model_val.targets().view(),
            )
        },
    )
}

/// Retrains `cfg` on the masked training split and scores it on the masked
/// model-validation split.
fn retrain_and_val(
    cfg: &LearnerConfig,
    splits: &Splits,
    mask: &BinaryMask,
) -> Result<(Model, f64)> {
    let train = splits.train.masked(mask)?;
    let model = Model::fit(cfg, train.features().view(), train.targets().view())?;
    let val = splits.model_val.masked(mask)?;
    let loss = model.evaluate(val.features().view(), val.targets().view())?;
    Ok((model, loss))
}

/// Counts accesses to the test split; the final evaluation is the only
/// caller, and the count is stored in the report.
struct TestGate<'a> {
    test: &'a Dataset,
    accesses: AtomicUsize,
}

impl<'a> TestGate<'a> {
    fn new(test: &'a Dataset) -> Self {
        TestGate {
            test,
            accesses: AtomicUsize::new(0),
        }
    }

    fn evaluate(&self, model: &Model, mask: &BinaryMask) -> Result<f64> {
        self.accesses.fetch_add(1, Ordering::Relaxed);
        let masked = self.test.masked(mask)?;
        model.evaluate(masked.features().view(), masked.targets().view())
    }

    fn count(&self) -> usize {
        self.accesses.load(Ordering::Relaxed)
    }
}

/// What a selector arm resolves to before the final test evaluation.
struct SelectedCell {
    mask: BinaryMask,
    selector_params: SelectorParams,
    selection: Option<SelectionResult>,
    grid_cells: usize,
    grid_failures: Vec<(usize, String)>,
    model: Model,
    validation_loss: f64,
}

fn run_selector_cell(
    config: &ExperimentConfig,
    selector: &SelectorSpec,
    tuning: &GridSearchOutcome<LearnerConfig>,
    splits: &Splits,
    seed: u64,
) -> Result<CellReport> {
    let best = &tuning.best;
    let m = splits.train.n_features();
    let selected = match selector {
        SelectorSpec::Vanilla => {
            let mask = BinaryMask::ones(m);
            let (model, validation_loss) = retrain_and_val(best, splits, &mask)?;
            SelectedCell {
                mask,
                selector_params: SelectorParams::Vanilla,
                selection: None,
                grid_cells: tuning.evaluated,
                grid_failures: tuning.failures.clone(),
                model,
                validation_loss,
            }
        }
        SelectorSpec::CrossCorrelation { gamma } => {
            let outcome = grid_search(
                gamma,
                |&g| {
                    if g.is_finite() && g >= 0.0 {
                        Ok(())
                    } else {
                        Err(Error::invalid(format!("gamma must be >= 0, got {g}")))
                    }
                },
                |&g| {
                    let mask = select_cc(splits, g)?;
                    retrain_and_val(best, splits, &mask).map(|(_, loss)| loss)
                },
            )?;
            let mask = select_cc(splits, outcome.best)?;
            let (model, validation_loss) = retrain_and_val(best, splits, &mask)?;
            SelectedCell {
                mask,
                selector_params: SelectorParams::CrossCorrelation {
                    gamma: outcome.best,
                },
                selection: None,
                grid_cells: outcome.evaluated,
                grid_failures: outcome.failures,
                model,
                validation_loss,
            }
        }
        SelectorSpec::MutualInformation { k, bins } => {
            let ks = k_grid(k, m);
            let outcome = grid_search(
                &ks,
                |&k| check_k(k, m),
                |&k| {
                    let mask = mutual_information_select(
                        splits.train.features().view(),
                        splits.train.targets().view(),
                        k,
                        *bins,
                        config.task,
                    )?
                    .mask;
                    retrain_and_val(best, splits, &mask).map(|(_, loss)| loss)
                },
            )?;
            let mask = mutual_information_select(
                splits.train.features().view(),
                splits.train.targets().view(),
                outcome.best,
                *bins,
                config.task,
            )?
            .mask;
            let (model, validation_loss) = retrain_and_val(best, splits, &mask)?;
            SelectedCell {
                mask,
                selector_params: SelectorParams::MutualInformation {
                    k: outcome.best,
                    bins: *bins,
                },
                selection: None,
                grid_cells: outcome.evaluated,
                grid_failures: outcome.failures,
                model,
                validation_loss,
            }
        }
        SelectorSpec::Rfe { k } => {
            let ks = k_grid(k, m);
            for &k in &ks {
                check_k(k, m)?;
            }
            // one elimination path down to the smallest k serves the whole
            // grid: masks for larger k are earlier points on the same path
            let smallest = *ks.iter().min().expect("non-empty k grid");
            let path = rfe_select(
                best,
                splits.train.features().view(),
                splits.train.targets().view(),
                smallest,
            )?;
            let outcome = grid_search(
                &ks,
                |_| Ok(()),
                |&k| {
                    let mask = path.mask_at(k)?;
                    retrain_and_val(best, splits, &mask).map(|(_, loss)| loss)
                },
            )?;
            let mask = path.mask_at(outcome.best)?;
            let (model, validation_loss) = retrain_and_val(best, splits, &mask)?;
            SelectedCell {
                mask,
                selector_params: SelectorParams::Rfe { k: outcome.best },
                selection: None,
                grid_cells: outcome.evaluated,
                grid_failures: outcome.failures,
                model,
                validation_loss,
            }
        }
        SelectorSpec::AfsBm { .. } => {
            let cells = selector.afsbm_cells(seed);
            let outcome = grid_search(
                &cells,
                |params| params.validate(),
                |params| {
                    let sel = run_afs_bm(best, &splits.train, &splits.mask_val, params)?;
                    retrain_and_val(best, splits, &sel.mask).map(|(_, loss)| loss)
                },
            )?;
            // deterministic rerun of the winner to recover its iteration log
            let selection = run_afs_bm(best, &splits.train, &splits.mask_val, &outcome.best)?;
            let (model, validation_loss) = retrain_and_val(best, splits, &selection.mask)?;
            SelectedCell {
                mask: selection.mask.clone(),
                selector_params: SelectorParams::AfsBm(outcome.best.clone()),
                selection: Some(selection),
                grid_cells: outcome.evaluated,
                grid_failures: outcome.failures,
                model,
                validation_loss,
            }
        }
    };

    let gate = TestGate::new(&splits.test);
    let test_loss = gate.evaluate(&selected.model, &selected.mask)?;
    let names = splits.train.feature_names();
    let selected_features: Vec<String> = selected
        .mask
        .active_indices()
        .into_iter()
        .map(|i| names[i].clone())
        .collect();
    Ok(CellReport {
        learner_config: best.clone(),
        selector_params: selected.selector_params,
        validation_loss: selected.validation_loss,
        test_loss,
        loss_kind: config.task.loss_kind(),
        mask_bits: selected.mask.bits().to_vec(),
        selected_count: selected.mask.count_ones(),
        selected_features,
        total_features: m,
        test_accesses: gate.count(),
        grid_cells: selected.grid_cells,
        grid_failures: selected
            .grid_failures
            .into_iter()
            .map(|(index, error)| format!("cell {index}: {error}"))
            .collect(),
        seed,
        wall_clock_s: 0.0,
        model_json: selected.model.to_json()?,
        selection: selected.selection,
    })
}

fn select_cc(splits: &Splits, gamma: f64) -> Result<BinaryMask> {
    Ok(cross_correlation_select(
        splits.train.features().view(),
        splits.train.targets().view(),
        gamma,
    )?
    .mask)
}

/// Selected-feature-count grid: the configured one, or `2..=M` (just `[1]`
/// for a single-column dataset).
fn k_grid(configured: &Option<Vec<usize>>, m: usize) -> Vec<usize> {
    match configured {
        Some(ks) => ks.clone(),
        None if m >= 2 => (2..=m).collect(),
        None => vec![1],
    }
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::invalid(format!(
            "selected-feature count k must be in [1, {m}], got {k}"
        )));
    }
    Ok(())
}

/// Recomputes every reported loss from the serialized model, the stored
/// mask, and the splits rebuilt from `config`; any disagreement beyond
/// 1e-12, or a cell that touched the test split more than once, is an error.
pub fn verify_report(config: &ExperimentConfig, experiment: &ExperimentReport) -> Result<()> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    match (&inputs, &experiment.series) {
        (Inputs::Single { dataset, .. }, None) => {
            verify_cells(config, dataset, config.seed, &experiment.cells)
        }
        (Inputs::Series { runs, .. }, Some(series)) => {
            if runs.len() != series.runs.len() {
                return Err(Error::ReportMismatch(format!(
                    "config yields {} series, report has {}",
                    runs.len(),
                    series.runs.len()
                )));
            }
            for (input, run) in runs.iter().zip(&series.runs) {
                if input.name != run.name || input.seed != run.seed {
                    return Err(Error::ReportMismatch(format!(
                        "series mismatch: config {}#{} vs report {}#{}",
                        input.name, input.seed, run.name, run.seed
                    )));
                }
                verify_cells(config, &input.dataset, input.seed, &run.cells)?;
            }
            Ok(())
        }
        _ => Err(Error::ReportMismatch(
            "report shape does not match the config's data source".to_string(),
        )),
    }
}

const RECOMPUTE_TOLERANCE: f64 = 1e-12;

fn verify_cells(
    config: &ExperimentConfig,
    dataset: &Dataset,
    seed: u64,
    cells: &[CellOutcome],
) -> Result<()> {
    let mut split_spec = config.split.to_spec(config.seed);
    split_spec.seed = seed;
    let splits = dataset.split(&split_spec)?;
    for cell in cells {
        let Some(report) = cell.report() else {
            continue;
        };
        let label = format!("{} × {}", cell.selector, cell.learner);
        if report.test_accesses != 1 {
            return Err(Error::ReportMismatch(format!(
                "{label}: test split accessed {} times",
                report.test_accesses
            )));
        }
        let mask = BinaryMask::from_bits(report.mask_bits.clone())?;
        if mask.count_ones() != report.selected_count
            || report.selected_features.len() != report.selected_count
        {
            return Err(Error::ReportMismatch(format!(
                "{label}: selected_count disagrees with the mask"
            )));
        }
        let model = Model::from_json(&report.model_json)?;
        let val = splits.model_val.masked(&mask)?;
        let val_loss = model.evaluate(val.features().view(), val.targets().view())?;
        let test = splits.test.masked(&mask)?;
        let test_loss = model.evaluate(test.features().view(), test.targets().view())?;
        if (val_loss - report.validation_loss).abs() > RECOMPUTE_TOLERANCE {
            return Err(Error::ReportMismatch(format!(
                "{label}: validation loss recomputes to {val_loss}, report says {}",
                report.validation_loss
            )));
        }
        if (test_loss - report.test_loss).abs() > RECOMPUTE_TOLERANCE {
            return Err(Error::ReportMismatch(format!(
                "{label}: test loss recomputes to {test_loss}, report says {}",
                report.test_loss
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{GbdtParams, Task};

    fn small_config(selectors: &str) -> ExperimentConfig {
        let text = format!(
            r#"
            seed = 3
            parallelism = 2

            [data]
            kind = "synthetic"
            n_samples = 80
            n_features = 8
            n_informative = 3

            [[learners]]
            kind = "gbdt"
            num_leaves = [8]
            learning_rate = [0.1]
            n_estimators = [30]
            subsample = [1.0]
            colsample_bytree = [1.0]
            min_child_samples = [5]

            {selectors}
        "#
        );
        ExperimentConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn grid_search_returns_argmin_and_first_on_ties() {
        let cells = [3usize, 1, 2, 1];
        let outcome = grid_search(&cells, |_| Ok(()), |&c| Ok(c as f64)).unwrap();
        assert_eq!(outcome.best, 1);
        assert_eq!(outcome.best_index, 1); // first of the tied cells
        assert_eq!(outcome.evaluated, 4);
        assert!(outcome.failures.is_empty());
    }

    #[test]
    fn grid_search_single_cell_and_empty_grid() {
        let one = [7usize];
        assert_eq!(grid_search(&one, |_| Ok(()), |&c| Ok(c as f64)).unwrap().best, 7);
        let none: [usize; 0] = [];
        assert!(matches!(
            grid_search(&none, |_| Ok(()), |&c| Ok(c as f64)),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn grid_search_validates_before_evaluating() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let evaluated = AtomicUsize::new(0);
        let cells = [1usize, 2, 3];
        let err = grid_search(
            &cells,
            |&c| {
                if c == 3 {
                    Err(Error::invalid("bad cell"))
                } else {
                    Ok(())
                }
            },
            |&c| {
                evaluated.fetch_add(1, Ordering::SeqCst);
                Ok(c as f64)
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        assert_eq!(evaluated.load(Ordering::SeqCst), 0, "no training before validation");
    }

    #[test]
    fn grid_search_isolates_failures_and_reports_total_collapse() {
        let cells = [1usize, 2, 3];
        let outcome = grid_search(
            &cells,
            |_| Ok(()),
            |&c| {
                if c == 1 {
                    Err(Error::invalid("diverged"))
                } else {
                    Ok(c as f64)
                }
            },
        )
        .unwrap();
        assert_eq!(outcome.best, 2);
        assert_eq!(outcome.failures.len(), 1);

        let err = grid_search(&cells, |_| Ok(()), |_| {
            Err::<f64, _>(Error::invalid("diverged"))
        })
        .unwrap_err();
        assert!(matches!(err, Error::AllCellsFailed { cells: 3, .. }));
    }

    #[test]
    fn experiment_covers_all_cells_with_single_test_access() {
        let config = small_config(
            r#"
            [[selectors]]
            method = "vanilla"

            [[selectors]]
            method = "cross_correlation"
            gamma = [0.05, 0.2]

            [[selectors]]
            method = "mutual_information"
            k = [2, 3]

            [[selectors]]
            method = "rfe"
            k = [2, 4]

            [[selectors]]
            method = "afs_bm"
            mu = [5]
            beta = [3]
            delta_l = [0.05]
        "#,
        );
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.cells.len(), 5);
        for cell in &report.cells {
            let r = cell.report().unwrap_or_else(|| {
                panic!("{} × {} failed: {:?}", cell.selector, cell.learner, cell.result)
            });
            assert_eq!(r.test_accesses, 1, "{}", cell.selector);
            assert!(r.test_loss.is_finite());
            assert!(r.validation_loss.is_finite());
            assert_eq!(r.mask_bits.len(), 8);
            assert_eq!(r.selected_count, r.selected_features.len());
        }
        // vanilla keeps everything
        let vanilla = report.cells[0].report().unwrap();
        assert_eq!(vanilla.selected_count, 8);
        // the AFS-BM cell carries its iteration log
        let afs = report.cells[4].report().unwrap();
        assert!(afs.selection.is_some());
        assert!(!afs.selection.as_ref().unwrap().iterations.is_empty());

        verify_report(&config, &report).unwrap();
    }

    #[test]
    fn identical_runs_are_byte_identical_modulo_timing() {
        let config = small_config(
            r#"
            [[selectors]]
            method = "vanilla"

            [[selectors]]
            method = "afs_bm"
            mu = [5]
            beta = [3]
            delta_l = [0.05]
        "#,
        );
        let mut a = run_experiment(&config).unwrap();
        let mut b = run_experiment(&config).unwrap();
        a.strip_timing();
        b.strip_timing();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn rfe_with_mlp_fails_in_isolation() {
        let text = r#"
            seed = 1
            parallelism = 2

            [data]
            kind = "synthetic"
            n_samples = 60
            n_features = 5
            n_informative = 2

            [[learners]]
            kind = "mlp"
            hidden_layer_sizes = [[10]]
            activation = ["relu"]
            alpha = [0.001]
            learning_rate_init = [0.01]

            [[selectors]]
            method = "vanilla"

            [[selectors]]
            method = "rfe"
            k = [2]
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.cells.len(), 2);
        assert!(report.cells[0].report().is_some(), "vanilla survives");
        match &report.cells[1].result {
            CellResult::Failed { error } => {
                assert!(error.contains("importance"), "{error}");
            }
            CellResult::Ok(_) => panic!("rfe × mlp must fail"),
        }
        // the report with a failed cell still verifies
        verify_report(&config, &report).unwrap();
    }

    #[test]
    fn series_dir_runs_per_series_and_aggregates() {
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        // three seasonal-ish series, long enough for recipe + 4-way split
        for s in 0..3 {
            let mut f = std::fs::File::create(dir.path().join(format!("s{s}.csv"))).unwrap();
            writeln!(f, "value").unwrap();
            for t in 0..90 {
                let v = (t as f64 * 0.3).sin() + 0.01 * (s as f64 + 1.0) * t as f64;
                writeln!(f, "{v}").unwrap();
            }
        }
        let text = format!(
            r#"
            seed = 10
            parallelism = 2

            [data]
            kind = "series_dir"
            dir = "{}"
            value = "value"
            [data.recipe]
            lags = [1, 2, 3]
            rolling_windows = [5]

            [[learners]]
            kind = "gbdt"
            num_leaves = [8]
            learning_rate = [0.1]
            n_estimators = [25]
            subsample = [1.0]
            colsample_bytree = [1.0]
            min_child_samples = [5]

            [[selectors]]
            method = "vanilla"

            [[selectors]]
            method = "afs_bm"
            mu = [5]
            beta = [3]
            delta_l = [0.05]
        "#,
            dir.path().display()
        );
        let config = ExperimentConfig::from_toml_str(&text).unwrap();
        let report = run_experiment(&config).unwrap();
        assert!(report.cells.is_empty());
        let series = report.series.as_ref().unwrap();
        assert_eq!(series.runs.len(), 3);
        // sorted file order with consecutive seeds from the global seed
        assert_eq!(
            series.runs.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(),
            ["s0", "s1", "s2"]
        );
        assert_eq!(
            series.runs.iter().map(|r| r.seed).collect::<Vec<_>>(),
            [10, 11, 12]
        );
        for run in &series.runs {
            assert_eq!(run.cells.len(), 2);
        }
        // aggregate covers both cells; the AFS-BM row also has curves
        assert_eq!(series.rows.len(), 2);
        for row in &series.rows {
            assert_eq!(row.n_ok, 3);
            assert!(row.mean_test_loss.unwrap().is_finite());
        }
        assert_eq!(series.curves.len(), 1);
        assert_eq!(series.curves[0].selector, "afs_bm");
        assert_eq!(series.curves[0].l_ave.len(), series.curves[0].l_ave2.len());
        assert!(!series.curves[0].l_ave.is_empty());

        verify_report(&config, &report).unwrap();
    }

    #[test]
    fn tampered_report_fails_verification() {
        let config = small_config(
            r#"
            [[selectors]]
            method = "vanilla"
        "#,
        );
        let report = run_experiment(&config).unwrap();
        let mut tampered = report.clone();
        if let CellResult::Ok(r) = &mut tampered.cells[0].result {
            r.test_loss *= 1.5;
        }
        let err = verify_report(&config, &tampered).unwrap_err();
        assert!(matches!(err, Error::ReportMismatch(_)), "{err}");
    }

    #[test]
    fn learner_config_helper_uses_global_seed() {
        let config = small_config("[[selectors]]\nmethod = \"vanilla\"");
        let cfg = config.learner_config(crate::learners::LearnerParams::Gbdt(
            GbdtParams::default(),
        ));
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.task, Task::Regression);
    }
}
