//! Experiment reports: one cell per (selector × learner), everything needed
//! to recompute every reported loss offline, plus a human-readable table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::SplitSpec;
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, Task};
use crate::metrics::LossKind;
use crate::selection::{AfsBmParams, SelectionResult};

/// The tuned selector hyperparameters of one report cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectorParams {
    Vanilla,
    CrossCorrelation { gamma: f64 },
    MutualInformation { k: usize, bins: usize },
    Rfe { k: usize },
    AfsBm(AfsBmParams),
}

/// A successfully evaluated (selector × learner) combination.
///
/// `model_json` holds the final model (retrained on the masked training
/// split); together with `mask_bits` and the experiment config it recomputes
/// `validation_loss` and `test_loss` exactly — see `verify_report`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    /// Tuned learner configuration (winner of the learner grid).
    pub learner_config: LearnerConfig,
    pub selector_params: SelectorParams,
    /// Loss of the final model on the masked model-validation split.
    pub validation_loss: f64,
    /// Loss of the final model on the masked test split.
    pub test_loss: f64,
    pub loss_kind: LossKind,
    /// Final mask over the original feature columns (1 = kept).
    pub mask_bits: Vec<u8>,
    pub selected_count: usize,
    pub selected_features: Vec<String>,
    pub total_features: usize,
    /// How many times this cell touched the test split; always 1.
    pub test_accesses: usize,
    /// Grid cells evaluated while tuning this cell's own hyperparameters
    /// (the learner grid for `vanilla`, the selector grid otherwise).
    pub grid_cells: usize,
    /// Errors of grid cells that failed to train (the cell survives as long
    /// as one grid point succeeds).
    pub grid_failures: Vec<String>,
    pub seed: u64,
    /// Timing field; excluded from determinism comparisons.
    pub wall_clock_s: f64,
    /// Final model, JSON-serialized.
    pub model_json: String,
    /// Full iteration log when the selector is AFS-BM.
    pub selection: Option<SelectionResult>,
}

/// Outcome of one (selector × learner) cell; failures carry the error text
/// and never abort sibling cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellResult {
    Ok(Box<CellReport>),
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellOutcome {
    pub selector: String,
    pub learner: String,
    #[serde(flatten)]
    pub result: CellResult,
}

impl CellOutcome {
    pub fn report(&self) -> Option<&CellReport> {
        match &self.result {
            CellResult::Ok(report) => Some(report),
            CellResult::Failed { .. } => None,
        }
    }
}

/// One full pipeline execution on a single series (series-directory mode).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesRun {
    /// File stem of the series CSV.
    pub name: String,
    /// Effective seed: global seed + series index in sorted-name order.
    pub seed: u64,
    pub cells: Vec<CellOutcome>,
}

/// Mean test loss of one (selector × learner) combination across series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub selector: String,
    pub learner: String,
    /// Series where the cell succeeded.
    pub n_ok: usize,
    /// Mean test loss over succeeding series; absent when all failed.
    pub mean_test_loss: Option<f64>,
}

/// Zero-padded average of AFS-BM loss trajectories across series (`l_ave`),
/// and its running mean (`l_ave2`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateCurves {
    pub selector: String,
    pub learner: String,
    pub l_ave: Vec<f64>,
    pub l_ave2: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesSection {
    pub runs: Vec<SeriesRun>,
    pub rows: Vec<AggregateRow>,
    pub curves: Vec<AggregateCurves>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// Timing field; excluded from determinism comparisons.
    pub created_at: String,
    pub crate_version: String,
    pub seed: u64,
    pub task: Task,
    /// Human description of the data source.
    pub source: String,
    /// Rows/features of the working dataset; absent in series mode where
    /// they vary per series.
    pub n_rows: Option<usize>,
    pub n_features: Option<usize>,
    /// Resolved split specification (series runs override its seed).
    pub split: SplitSpec,
    pub parallelism: usize,
    pub paper_mode: bool,
    /// Conventions and assumptions that shaped the numbers in this report.
    pub conventions: Vec<String>,
    /// Timing field; excluded from determinism comparisons.
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: ReportMetadata,
    /// Cells of the single-dataset pipeline; empty in series mode.
    pub cells: Vec<CellOutcome>,
    /// Per-series runs and aggregates; present only in series mode.
    pub series: Option<SeriesSection>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ExperimentReport> {
        Ok(serde_json::from_str(text)?)
    }

    /// Zeroes every timing field so two reports from identical runs compare
    /// byte-identical.
    pub fn strip_timing(&mut self) {
        self.metadata.created_at = String::new();
        self.metadata.wall_clock_s = 0.0;
        let strip_cells = |cells: &mut Vec<CellOutcome>| {
            for cell in cells {
                if let CellResult::Ok(report) = &mut cell.result {
                    report.wall_clock_s = 0.0;
                }
            }
        };
        strip_cells(&mut self.cells);
        if let Some(series) = &mut self.series {
            for run in &mut series.runs {
                strip_cells(&mut run.cells);
            }
        }
    }

    /// Writes `report.json` and `report.txt` into `dir`, creating it.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json_path = dir.join("report.json");
        std::fs::write(&json_path, self.to_json()?).map_err(|e| Error::io(&json_path, e))?;
        let txt_path = dir.join("report.txt");
        std::fs::write(&txt_path, self.render_table()).map_err(|e| Error::io(&txt_path, e))?;
        Ok(())
    }

    /// Fixed-width summary table: selector × learner × selected features ×
    /// losses. Series mode shows the cross-series aggregate instead of every
    /// per-series cell.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "source: {} | task: {:?} | seed: {}\n",
            self.metadata.source, self.metadata.task, self.metadata.seed
        ));
        match &self.series {
            None => {
                out.push_str(&render_cell_table(&self.cells));
            }
            Some(series) => {
                out.push_str(&format!("series: {}\n", series.runs.len()));
                out.push_str(&format!(
                    "{:<20} {:<6} {:>5} {:>14}\n",
                    "selector", "learner", "ok", "mean test loss"
                ));
                for row in &series.rows {
                    let mean = row
                        .mean_test_loss
                        .map(|v| format!("{v:.6e}"))
                        .unwrap_or_else(|| "-".to_string());
                    out.push_str(&format!(
                        "{:<20} {:<6} {:>5} {:>14}\n",
                        row.selector, row.learner, row.n_ok, mean
                    ));
                }
                for curve in &series.curves {
                    out.push_str(&format!(
                        "{} × {}: averaged loss trajectory over {} steps\n",
                        curve.selector,
                        curve.learner,
                        curve.l_ave.len()
                    ));
                }
            }
        }
        for line in &self.metadata.conventions {
            out.push_str(&format!("note: {line}\n"));
        }
        out
    }
}

fn render_cell_table(cells: &[CellOutcome]) -> String {
    let mut out = format!(
        "{:<20} {:<6} {:>9} {:>14} {:>14} {:>9}\n",
        "selector", "learner", "features", "val loss", "test loss", "time (s)"
    );
    for cell in cells {
        match &cell.result {
            CellResult::Ok(r) => {
                out.push_str(&format!(
                    "{:<20} {:<6} {:>5}/{:<3} {:>14.6e} {:>14.6e} {:>9.2}\n",
                    cell.selector,
                    cell.learner,
                    r.selected_count,
                    r.total_features,
                    r.validation_loss,
                    r.test_loss,
                    r.wall_clock_s
                ));
            }
            CellResult::Failed { error } => {
                let mut short = error.replace('\n', " ");
                if short.len() > 60 {
                    short.truncate(57);
                    short.push_str("...");
                }
                out.push_str(&format!(
                    "{:<20} {:<6} FAILED: {short}\n",
                    cell.selector, cell.learner
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SplitSpec;
    use crate::learners::{GbdtParams, LearnerConfig};

    fn sample_report() -> ExperimentReport {
        let cell = CellReport {
            learner_config: LearnerConfig::gbdt(
                Task::Regression,
                GbdtParams::default(),
                0,
            ),
            selector_params: SelectorParams::CrossCorrelation { gamma: 0.05 },
            validation_loss: 0.5,
            test_loss: 0.25,
            loss_kind: LossKind::Mse,
            mask_bits: vec![1, 0, 1],
            selected_count: 2,
            selected_features: vec!["x0".into(), "x2".into()],
            total_features: 3,
            test_accesses: 1,
            grid_cells: 11,
            grid_failures: vec![],
            seed: 0,
            wall_clock_s: 1.25,
            model_json: "{}".into(),
            selection: None,
        };
        ExperimentReport {
            metadata: ReportMetadata {
                created_at: "2024-01-01T00:00:00Z".into(),
                crate_version: "0.1.0".into(),
                seed: 0,
                task: Task::Regression,
                source: "test".into(),
                n_rows: Some(10),
                n_features: Some(3),
                split: SplitSpec::default(),
                parallelism: 1,
                paper_mode: false,
                conventions: vec!["example note".into()],
                wall_clock_s: 2.5,
            },
            cells: vec![
                CellOutcome {
                    selector: "cross_correlation".into(),
                    learner: "gbdt".into(),
                    result: CellResult::Ok(Box::new(cell)),
                },
                CellOutcome {
                    selector: "rfe".into(),
                    learner: "mlp".into(),
                    result: CellResult::Failed {
                        error: "feature importance is not available for mlp".into(),
                    },
                },
            ],
            series: None,
        }
    }

    #[test]
    fn json_round_trip() {
        let report = sample_report();
        let json = report.to_json().unwrap();
        let back = ExperimentReport::from_json(&json).unwrap();
        assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn strip_timing_makes_reports_comparable() {
        let mut a = sample_report();
        let mut b = sample_report();
        b.metadata.created_at = "2030-12-31T23:59:59Z".into();
        b.metadata.wall_clock_s = 9.0;
        if let CellResult::Ok(r) = &mut b.cells[0].result {
            r.wall_clock_s = 100.0;
        }
        assert_ne!(a.to_json().unwrap(), b.to_json().unwrap());
        a.strip_timing();
        b.strip_timing();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn table_lists_every_cell_and_notes() {
        let table = sample_report().render_table();
        assert!(table.contains("cross_correlation"));
        assert!(table.contains("2/3"));
        assert!(table.contains("FAILED"));
        assert!(table.contains("example note"));
    }
}
