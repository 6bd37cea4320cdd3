//! Time-series feature construction: lags, rolling statistics, calendar
//! encodings.
//!
//! All builders are strictly causal: the features for time `t` use only
//! values at times `t-1` and earlier (calendar encodings use the timestamp of
//! `t` itself, which is known at prediction time). Rows too early to have a
//! full history are dropped, tracked through `valid_from`.

use chrono::{Datelike, NaiveDateTime, Timelike};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Dataset;

/// A bundle of derived feature columns, aligned to the source series.
///
/// Every column has one entry per source row; entries before `valid_from`
/// are placeholders (zero) and must be dropped before modelling.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumns {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    /// First row index at which every column is well-defined.
    pub valid_from: usize,
}

impl FeatureColumns {
    fn merge(mut self, other: FeatureColumns) -> FeatureColumns {
        self.names.extend(other.names);
        self.columns.extend(other.columns);
        self.valid_from = self.valid_from.max(other.valid_from);
        self
    }
}

fn check_series(series: &[f64], what: &str) -> Result<()> {
    if series.is_empty() {
        return Err(Error::shape(format!("{what}: empty series")));
    }
    if let Some(t) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::non_finite(format!("{what}: series index {t}")));
    }
    Ok(())
}

fn lag_columns(series: &[f64], lags: &[usize]) -> Result<FeatureColumns> {
    check_series(series, "lag features")?;
    if lags.is_empty() {
        return Err(Error::invalid("lag features: no lags given"));
    }
    let mut sorted = lags.to_vec();
    sorted.sort_unstable();
    if sorted[0] == 0 {
        return Err(Error::invalid("lag features: lag 0 is the target itself"));
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("lag features: duplicate lag"));
    }
    let max_lag = *sorted.last().unwrap();
    if max_lag >= series.len() {
        return Err(Error::invalid(format!(
            "lag features: max lag {max_lag} >= series length {}",
            series.len()
        )));
    }
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for &k in lags {
        names.push(format!("lag_{k}"));
        let col: Vec<f64> = (0..series.len())
            .map(|t| if t >= k { series[t - k] } else { 0.0 })
            .collect();
        columns.push(col);
    }
    Ok(FeatureColumns {
        names,
        columns,
        valid_from: max_lag,
    })
}

/// Lagged copies of the series as a modelling-ready dataset.
///
/// For each lag `k`, column `lag_k` holds `series[t - k]`; the target at row
/// `t` is `series[t]`. Rows before the largest lag are dropped. Lags must be
/// ≥ 1, distinct, and smaller than the series length.
pub fn build_lag_features(series: &[f64], lags: &[usize]) -> Result<Dataset> {
    let cols = lag_columns(series, lags)?;
    assemble(series, None, cols)
}

/// Rolling mean and population standard deviation over trailing windows.
///
/// For window `w`, row `t` summarizes `series[t-w .. t]` — the `w` values
/// strictly before `t`, so the current value never leaks into its own
/// features. Columns are named `roll_mean_<w>` and `roll_std_<w>`;
/// `valid_from` is the largest window.
pub fn build_rolling_features(series: &[f64], windows: &[usize]) -> Result<FeatureColumns> {
    check_series(series, "rolling features")?;
    if windows.is_empty() {
        return Err(Error::invalid("rolling features: no windows given"));
    }
    let mut sorted = windows.to_vec();
    sorted.sort_unstable();
    if sorted[0] == 0 {
        return Err(Error::invalid("rolling features: window must be >= 1"));
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("rolling features: duplicate window"));
    }
    let max_window = *sorted.last().unwrap();
    if max_window >= series.len() {
        return Err(Error::invalid(format!(
            "rolling features: max window {max_window} >= series length {}",
            series.len()
        )));
    }
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for &w in windows {
        let mut mean_col = vec![0.0; series.len()];
        let mut std_col = vec![0.0; series.len()];
        for t in w..series.len() {
            let window = &series[t - w..t];
            let mean = window.iter().sum::<f64>() / w as f64;
            let var = window.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w as f64;
            mean_col[t] = mean;
            std_col[t] = var.sqrt();
        }
        names.push(format!("roll_mean_{w}"));
        columns.push(mean_col);
        names.push(format!("roll_std_{w}"));
        columns.push(std_col);
    }
    Ok(FeatureColumns {
        names,
        columns,
        valid_from: max_window,
    })
}

/// Cyclic calendar encodings of timestamps: sine and cosine of
/// `2π·month/12`, `2π·day/31`, and `2π·hour/24`.
pub fn build_time_encodings(timestamps: &[NaiveDateTime]) -> Result<FeatureColumns> {
    if timestamps.is_empty() {
        return Err(Error::shape("time encodings: no timestamps"));
    }
    let tau = std::f64::consts::TAU;
    type PhaseFn = Box<dyn Fn(&NaiveDateTime) -> f64>;
    let phases: Vec<(&str, PhaseFn)> = vec![
        ("month", Box::new(|ts| ts.month() as f64 / 12.0)),
        ("day", Box::new(|ts| ts.day() as f64 / 31.0)),
        ("hour", Box::new(|ts| ts.hour() as f64 / 24.0)),
    ];
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (what, phase) in &phases {
        let sin: Vec<f64> = timestamps.iter().map(|t| (tau * phase(t)).sin()).collect();
        let cos: Vec<f64> = timestamps.iter().map(|t| (tau * phase(t)).cos()).collect();
        names.push(format!("{what}_sin"));
        columns.push(sin);
        names.push(format!("{what}_cos"));
        columns.push(cos);
    }
    Ok(FeatureColumns {
        names,
        columns,
        valid_from: 0,
    })
}

/// Which derived features to build from a raw series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecipe {
    /// Lag orders, e.g. `[1, 2, 3]`.
    #[serde(default)]
    pub lags: Vec<usize>,
    /// Trailing-window sizes for rolling mean/std.
    #[serde(default)]
    pub rolling_windows: Vec<usize>,
    /// Add calendar sine/cosine encodings (requires timestamps).
    #[serde(default)]
    pub time_encodings: bool,
}

impl FeatureRecipe {
    pub fn is_degenerate(&self) -> bool {
        self.lags.is_empty() && self.rolling_windows.is_empty() && !self.time_encodings
    }
}

/// Builds a modelling dataset from a raw series and a [`FeatureRecipe`].
///
/// The target at row `t` is `series[t]`; feature columns come from the
/// recipe's lags, rolling windows, and (if timestamps are given) calendar
/// encodings. Rows before the recipe's joint `valid_from` are dropped, and
/// timestamps for the surviving rows are kept on the dataset.
pub fn build_time_series_dataset(
    series: &[f64],
    timestamps: Option<&[NaiveDateTime]>,
    recipe: &FeatureRecipe,
) -> Result<Dataset> {
    if recipe.is_degenerate() {
        return Err(Error::invalid(
            "feature recipe is empty: need lags, rolling windows, or time encodings",
        ));
    }
    if let Some(ts) = timestamps {
        if ts.len() != series.len() {
            return Err(Error::shape(format!(
                "{} series values but {} timestamps",
                series.len(),
                ts.len()
            )));
        }
    }
    check_series(series, "time-series dataset")?;
    let mut cols: Option<FeatureColumns> = None;
    let mut push = |c: FeatureColumns| {
        cols = Some(match cols.take() {
            Some(acc) => acc.merge(c),
            None => c,
        });
    };
    if !recipe.lags.is_empty() {
        push(lag_columns(series, &recipe.lags)?);
    }
    if !recipe.rolling_windows.is_empty() {
        push(build_rolling_features(series, &recipe.rolling_windows)?);
    }
    if recipe.time_encodings {
        let ts = timestamps.ok_or_else(|| {
            Error::invalid("time encodings requested but the data has no timestamps")
        })?;
        push(build_time_encodings(ts)?);
    }
    assemble(series, timestamps, cols.expect("recipe is non-degenerate"))
}

/// Turns feature columns plus the original series into a Dataset, dropping
/// rows before `valid_from`.
fn assemble(
    series: &[f64],
    timestamps: Option<&[NaiveDateTime]>,
    cols: FeatureColumns,
) -> Result<Dataset> {
    let start = cols.valid_from;
    let n = series.len();
    if start >= n {
        return Err(Error::shape(format!(
            "no usable rows: history needs {start} rows, series has {n}"
        )));
    }
    let rows = n - start;
    let width = cols.columns.len();
    let mut features = Array2::zeros((rows, width));
    for (j, col) in cols.columns.iter().enumerate() {
        for t in start..n {
            features[[t - start, j]] = col[t];
        }
    }
    let targets = Array1::from_iter(series[start..].iter().copied());
    let ts = timestamps.map(|ts| ts[start..].to_vec());
    Dataset::new(features, targets, cols.names, ts)
}
