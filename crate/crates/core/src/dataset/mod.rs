//! Tabular data: container, CSV I/O, normalization, splitting, masking.
//!
//! [`Dataset`] is a dense feature matrix plus a target vector, with named
//! columns and optional row timestamps. Everything downstream (learners,
//! selectors, the harness) works on these. Conventions:
//!
//! - values are `f64` throughout and must be finite;
//! - feature names are unique and keep CSV header order;
//! - normalization removes the per-column mean and divides by the maximum
//!   absolute deviation, with statistics fitted on training data only;
//! - splits are train → model-validation → mask-validation → test, with
//!   floored fractional sizes and the remainder going to train.

mod io;
mod mask;
mod timeseries;

pub use io::{load_csv, load_series_csv, write_csv};
pub use mask::BinaryMask;
pub use timeseries::{
    build_lag_features, build_rolling_features, build_time_encodings, build_time_series_dataset,
    FeatureColumns, FeatureRecipe,
};

use chrono::NaiveDateTime;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense tabular dataset: features, targets, column names, optional
/// per-row timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    targets: Array1<f64>,
    feature_names: Vec<String>,
    timestamps: Option<Vec<NaiveDateTime>>,
}

impl Dataset {
    /// Builds a dataset, validating shapes, name uniqueness, and finiteness.
    pub fn new(
        features: Array2<f64>,
        targets: Array1<f64>,
        feature_names: Vec<String>,
        timestamps: Option<Vec<NaiveDateTime>>,
    ) -> Result<Self> {
        let (rows, cols) = features.dim();
        if rows == 0 {
            return Err(Error::shape("dataset has no rows"));
        }
        if cols == 0 {
            return Err(Error::shape("dataset has no feature columns"));
        }
        if targets.len() != rows {
            return Err(Error::shape(format!(
                "{} feature rows but {} targets",
                rows,
                targets.len()
            )));
        }
        if feature_names.len() != cols {
            return Err(Error::shape(format!(
                "{} feature columns but {} names",
                cols,
                feature_names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn { name: name.clone() });
            }
        }
        if let Some(ts) = &timestamps {
            if ts.len() != rows {
                return Err(Error::shape(format!(
                    "{} rows but {} timestamps",
                    rows,
                    ts.len()
                )));
            }
        }
        for ((r, c), &v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::non_finite(format!(
                    "feature {:?}, data row {}",
                    feature_names[c],
                    r + 1
                )));
            }
        }
        for (r, &v) in targets.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::non_finite(format!("target, data row {}", r + 1)));
            }
        }
        Ok(Dataset {
            features,
            targets,
            feature_names,
            timestamps,
        })
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    /// Number of feature columns.
    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// The feature matrix, rows × columns.
    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    /// The target vector.
    pub fn targets(&self) -> &Array1<f64> {
        &self.targets
    }

    /// Column names, in matrix order.
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Per-row timestamps, if the dataset carries any.
    pub fn timestamps(&self) -> Option<&[NaiveDateTime]> {
        self.timestamps.as_deref()
    }

    /// A new dataset keeping only the feature columns in `keep` (ascending,
    /// no duplicates). Targets and timestamps are untouched.
    pub fn retain_features(&self, keep: &[usize]) -> Result<Dataset> {
        if keep.is_empty() {
            return Err(Error::EmptyMask);
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) || *keep.last().unwrap() >= self.n_features() {
            return Err(Error::shape(format!(
                "retain_features: indices must be ascending, unique, < {}",
                self.n_features()
            )));
        }
        let features = self.features.select(Axis(1), keep);
        let feature_names = keep.iter().map(|&j| self.feature_names[j].clone()).collect();
        Dataset::new(
            features,
            self.targets.clone(),
            feature_names,
            self.timestamps.clone(),
        )
    }

    /// A new dataset with masked-out columns set to zero (names and width are
    /// preserved). This is the masking convention models are retrained under.
    pub fn masked(&self, mask: &BinaryMask) -> Result<Dataset> {
        let features = apply_mask(self.features.view(), mask)?;
        Dataset::new(
            features,
            self.targets.clone(),
            self.feature_names.clone(),
            self.timestamps.clone(),
        )
    }

    /// A new dataset made of the given rows, in the given order.
    fn take_rows(&self, rows: &[usize]) -> Dataset {
        let features = self.features.select(Axis(0), rows);
        let targets = self.targets.select(Axis(0), rows);
        let timestamps = self
            .timestamps
            .as_ref()
            .map(|ts| rows.iter().map(|&r| ts[r]).collect());
        // Validation already held for the parent; subsets cannot violate it.
        Dataset {
            features,
            targets,
            feature_names: self.feature_names.clone(),
            timestamps,
        }
    }

    /// Fits normalization statistics (per-column mean and max-abs scale) on
    /// this dataset. Fit on training data only, then [`NormalizationParams::apply`]
    /// the same parameters to validation and test partitions.
    pub fn fit_normalization(&self) -> NormalizationParams {
        let n = self.n_rows() as f64;
        let mut means = Vec::with_capacity(self.n_features());
        let mut scales = Vec::with_capacity(self.n_features());
        let mut zero_spread = Vec::with_capacity(self.n_features());
        for col in self.features.columns() {
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                // Constant column: record the fact and use the exact value as
                // the center so it maps to zero (the rounded mean may differ
                // from the value by an ulp, which a unit scale would blow up
                // to a full-range constant).
                means.push(first);
                scales.push(1.0);
                zero_spread.push(true);
                continue;
            }
            let mean = col.sum() / n;
            let max_abs = col.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            means.push(mean);
            scales.push(max_abs);
            zero_spread.push(false);
        }
        NormalizationParams {
            means,
            scales,
            zero_spread,
        }
    }

    /// Convenience: fit normalization on `self` and apply it to `self`.
    pub fn normalize(&self) -> Result<(Dataset, NormalizationParams)> {
        let params = self.fit_normalization();
        let normalized = params.apply(self)?;
        Ok((normalized, params))
    }

    /// Partitions rows into train / model-validation / mask-validation / test.
    pub fn split(&self, spec: &SplitSpec) -> Result<Splits> {
        spec.validate()?;
        let n = self.n_rows();
        let n_model = (spec.model_val_fraction * n as f64).floor() as usize;
        let n_mask = (spec.mask_val_fraction * n as f64).floor() as usize;
        let n_test = (spec.test_fraction * n as f64).floor() as usize;
        let reserved = n_model + n_mask + n_test;
        if reserved >= n {
            return Err(Error::EmptySplit {
                name: "train",
                rows: n,
            });
        }
        let n_train = n - reserved;
        for (name, count) in [
            ("model_val", n_model),
            ("mask_val", n_mask),
            ("test", n_test),
        ] {
            if count == 0 {
                return Err(Error::EmptySplit { name, rows: n });
            }
        }

        let order: Vec<usize> = match spec.order {
            SplitOrder::Chronological => (0..n).collect(),
            SplitOrder::Random => {
                let mut idx: Vec<usize> = (0..n).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                idx.shuffle(&mut rng);
                idx
            }
        };
        let (train_idx, rest) = order.split_at(n_train);
        let (model_idx, rest) = rest.split_at(n_model);
        let (mask_idx, test_idx) = rest.split_at(n_mask);
        Ok(Splits {
            train: self.take_rows(train_idx),
            model_val: self.take_rows(model_idx),
            mask_val: self.take_rows(mask_idx),
            test: self.take_rows(test_idx),
        })
    }
}

/// Per-column normalization statistics: `x' = (x - mean) / scale` where
/// `scale` is the maximum absolute deviation from the mean in the fitting
/// data. Columns with zero spread are flagged and given a unit scale, so they
/// normalize to exactly zero in the fitting partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub zero_spread: Vec<bool>,
}

impl NormalizationParams {
    /// Applies the stored statistics to a dataset of the same width.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if self.means.len() != data.n_features() {
            return Err(Error::shape(format!(
                "normalization fitted on {} columns, dataset has {}",
                self.means.len(),
                data.n_features()
            )));
        }
        let mut features = data.features.clone();
        for (j, mut col) in features.columns_mut().into_iter().enumerate() {
            let mean = self.means[j];
            let scale = self.scales[j];
            col.mapv_inplace(|v| (v - mean) / scale);
        }
        Dataset::new(
            features,
            data.targets.clone(),
            data.feature_names.clone(),
            data.timestamps.clone(),
        )
    }
}

/// Whether rows are split in their stored (chronological) order or after a
/// seeded shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitOrder {
    /// Keep stored row order: earliest rows train, latest rows test.
    Chronological,
    /// Apply a seeded permutation before partitioning.
    Random,
}

/// How to partition a dataset into the four working sets.
///
/// Partition sizes are `floor(fraction * n)` for the three validation/test
/// sets; train receives all remaining rows. Every partition must end up
/// non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of rows scoring model hyper-parameters.
    pub model_val_fraction: f64,
    /// Fraction of rows driving mask search.
    pub mask_val_fraction: f64,
    /// Fraction of rows held out for the final evaluation.
    pub test_fraction: f64,
    /// Row ordering before partitioning.
    pub order: SplitOrder,
    /// Seed for the permutation when `order` is [`SplitOrder::Random`];
    /// ignored otherwise.
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            model_val_fraction: 0.1,
            mask_val_fraction: 0.2,
            test_fraction: 0.2,
            order: SplitOrder::Random,
            seed: 0,
        }
    }
}

impl SplitSpec {
    /// Checks that fractions are in `[0, 1)` and sum below 1.
    pub fn validate(&self) -> Result<()> {
        let fs = [
            ("model_val_fraction", self.model_val_fraction),
            ("mask_val_fraction", self.mask_val_fraction),
            ("test_fraction", self.test_fraction),
        ];
        for (name, f) in fs {
            if !f.is_finite() || !(0.0..1.0).contains(&f) {
                return Err(Error::invalid(format!(
                    "{name} must be in [0, 1), got {f}"
                )));
            }
        }
        let sum = self.model_val_fraction + self.mask_val_fraction + self.test_fraction;
        if sum >= 1.0 {
            return Err(Error::invalid(format!(
                "split fractions sum to {sum}, leaving no training rows"
            )));
        }
        Ok(())
    }
}

/// The four partitions produced by [`Dataset::split`].
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub model_val: Dataset,
    pub mask_val: Dataset,
    pub test: Dataset,
}

/// Hadamard product of a feature matrix with a mask: masked-out columns
/// become zero, everything else is untouched. Width must match the mask.
pub fn apply_mask(features: ArrayView2<'_, f64>, mask: &BinaryMask) -> Result<Array2<f64>> {
    if features.ncols() != mask.len() {
        return Err(Error::shape(format!(
            "apply_mask: {} columns vs mask width {}",
            features.ncols(),
            mask.len()
        )));
    }
    let mut out = features.to_owned();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        if !mask.is_active(j) {
            col.fill(0.0);
        }
    }
    Ok(out)
}

/// Physically removes masked-out columns from two matrices that share a
/// column space (training and validation features), returning the reduced
/// matrices and a fresh all-ones mask of the reduced width.
///
/// Fails with [`Error::EmptyMask`] if the mask has no active bits.
pub fn delete_columns(
    train: ArrayView2<'_, f64>,
    validation: ArrayView2<'_, f64>,
    mask: &BinaryMask,
) -> Result<(Array2<f64>, Array2<f64>, BinaryMask)> {
    if train.ncols() != mask.len() || validation.ncols() != mask.len() {
        return Err(Error::shape(format!(
            "delete_columns: widths {} and {} vs mask width {}",
            train.ncols(),
            validation.ncols(),
            mask.len()
        )));
    }
    let keep = mask.active_indices();
    if keep.is_empty() {
        return Err(Error::EmptyMask);
    }
    let train_out = train.select(Axis(1), &keep);
    let val_out = validation.select(Axis(1), &keep);
    let fresh = BinaryMask::ones(keep.len());
    Ok((train_out, val_out, fresh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, array};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    fn toy(n_rows: usize, n_cols: usize) -> Dataset {
        let features =
            Array2::from_shape_fn((n_rows, n_cols), |(r, c)| (r * n_cols + c) as f64 * 0.5);
        let targets = Array1::from_shape_fn(n_rows, |r| r as f64);
        Dataset::new(features, targets, names(n_cols), None).unwrap()
    }

    #[test]
    fn new_validates_shapes_names_and_finiteness() {
        let x = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        assert!(Dataset::new(x.clone(), arr1(&[1.0]), names(2), None).is_err());
        assert!(Dataset::new(x.clone(), arr1(&[1.0, 2.0]), names(3), None).is_err());
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(matches!(
            Dataset::new(x.clone(), arr1(&[1.0, 2.0]), dup, None),
            Err(Error::DuplicateColumn { .. })
        ));
        let bad = arr2(&[[1.0, f64::NAN], [3.0, 4.0]]);
        assert!(Dataset::new(bad, arr1(&[1.0, 2.0]), names(2), None).is_err());
        assert!(Dataset::new(x, arr1(&[1.0, f64::INFINITY]), names(2), None).is_err());
    }

    #[test]
    fn normalize_centers_and_bounds_columns() {
        let d = Dataset::new(
            arr2(&[[0.0, 5.0], [2.0, 5.0], [10.0, 5.0]]),
            arr1(&[0.0, 1.0, 2.0]),
            names(2),
            None,
        )
        .unwrap();
        let (norm, params) = d.normalize().unwrap();
        // column 0: mean 4, deviations [-4, -2, 6], scale 6
        assert_eq!(params.means[0], 4.0);
        assert_eq!(params.scales[0], 6.0);
        assert!(!params.zero_spread[0]);
        let col0: Vec<f64> = norm.features().column(0).to_vec();
        assert_eq!(col0, vec![-4.0 / 6.0, -2.0 / 6.0, 1.0]);
        // column 1 is constant: flagged, scale 1, normalizes to zero
        assert!(params.zero_spread[1]);
        assert_eq!(params.scales[1], 1.0);
        assert!(norm.features().column(1).iter().all(|&v| v == 0.0));
        // every value within [-1, 1]
        assert!(norm.features().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn normalization_params_transfer_to_other_partitions() {
        let train = Dataset::new(
            arr2(&[[0.0], [10.0]]),
            arr1(&[0.0, 1.0]),
            names(1),
            None,
        )
        .unwrap();
        let test = Dataset::new(arr2(&[[20.0]]), arr1(&[0.0]), names(1), None).unwrap();
        let params = train.fit_normalization();
        let t = params.apply(&test).unwrap();
        // (20 - 5) / 5 = 3: test values may leave [-1, 1], statistics are train-only
        assert_eq!(t.features()[[0, 0]], 3.0);
    }

    #[test]
    fn split_sizes_follow_floored_fractions_with_remainder_to_train() {
        let d = toy(103, 2);
        let spec = SplitSpec::default();
        let s = d.split(&spec).unwrap();
        assert_eq!(s.model_val.n_rows(), 10); // floor(0.1 * 103)
        assert_eq!(s.mask_val.n_rows(), 20); // floor(0.2 * 103)
        assert_eq!(s.test.n_rows(), 20);
        assert_eq!(s.train.n_rows(), 103 - 50);
    }

    #[test]
    fn chronological_split_preserves_order() {
        let d = toy(10, 1);
        let spec = SplitSpec {
            model_val_fraction: 0.2,
            mask_val_fraction: 0.2,
            test_fraction: 0.2,
            order: SplitOrder::Chronological,
            seed: 99,
        };
        let s = d.split(&spec).unwrap();
        let t: Vec<f64> = s.train.targets().to_vec();
        assert_eq!(t, vec![0.0, 1.0, 2.0, 3.0]);
        let test: Vec<f64> = s.test.targets().to_vec();
        assert_eq!(test, vec![8.0, 9.0]);
    }

    #[test]
    fn random_split_is_a_seeded_partition_of_all_rows() {
        let d = toy(50, 3);
        let spec = SplitSpec {
            seed: 7,
            ..SplitSpec::default()
        };
        let a = d.split(&spec).unwrap();
        let b = d.split(&spec).unwrap();
        assert_eq!(a.train.targets(), b.train.targets());
        assert_eq!(a.test.targets(), b.test.targets());
        // different seed, different shuffle
        let c = d
            .split(&SplitSpec {
                seed: 8,
                ..SplitSpec::default()
            })
            .unwrap();
        assert_ne!(a.train.targets(), c.train.targets());
        // all rows appear exactly once across partitions
        let mut seen: Vec<f64> = [&a.train, &a.model_val, &a.mask_val, &a.test]
            .iter()
            .flat_map(|p| p.targets().to_vec())
            .collect();
        seen.sort_by(f64::total_cmp);
        let expect: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(seen, expect);
    }

    #[test]
    fn split_rejects_empty_partitions() {
        let d = toy(5, 1);
        // floor(0.1 * 5) = 0 -> model_val would be empty
        assert!(matches!(
            d.split(&SplitSpec::default()),
            Err(Error::EmptySplit { name: "model_val", .. })
        ));
        let spec = SplitSpec {
            model_val_fraction: 0.4,
            mask_val_fraction: 0.4,
            test_fraction: 0.2,
            ..SplitSpec::default()
        };
        assert!(d.split(&spec).is_err());
    }

    #[test]
    fn apply_mask_zeroes_inactive_columns() {
        let x = arr2(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let z = BinaryMask::from_bits(vec![1, 0, 1]).unwrap();
        let m = apply_mask(x.view(), &z).unwrap();
        assert_eq!(m, arr2(&[[1.0, 0.0, 3.0], [4.0, 0.0, 6.0]]));
        // width mismatch
        assert!(apply_mask(x.view(), &BinaryMask::ones(2)).is_err());
    }

    #[test]
    fn delete_columns_drops_and_returns_fresh_mask() {
        let a = arr2(&[[1.0, 2.0, 3.0]]);
        let b = arr2(&[[4.0, 5.0, 6.0], [7.0, 8.0, 9.0]]);
        let z = BinaryMask::from_bits(vec![0, 1, 1]).unwrap();
        let (a2, b2, fresh) = delete_columns(a.view(), b.view(), &z).unwrap();
        assert_eq!(a2, arr2(&[[2.0, 3.0]]));
        assert_eq!(b2, arr2(&[[5.0, 6.0], [8.0, 9.0]]));
        assert_eq!(fresh.bits(), &[1, 1]);
        let none = BinaryMask::from_bits(vec![0, 0, 0]).unwrap();
        assert!(matches!(
            delete_columns(a.view(), b.view(), &none),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn retain_features_subsets_columns_and_names() {
        let d = toy(3, 4);
        let r = d.retain_features(&[1, 3]).unwrap();
        assert_eq!(r.n_features(), 2);
        assert_eq!(r.feature_names(), &["x1".to_string(), "x3".to_string()]);
        assert_eq!(r.features().column(0), d.features().column(1));
        assert!(d.retain_features(&[]).is_err());
        assert!(d.retain_features(&[3, 1]).is_err());
        assert!(d.retain_features(&[1, 1]).is_err());
        assert!(d.retain_features(&[4]).is_err());
    }

    #[test]
    fn masked_keeps_width_and_zeroes_columns() {
        let d = toy(2, 3);
        let z = BinaryMask::from_bits(vec![0, 1, 0]).unwrap();
        let m = d.masked(&z).unwrap();
        assert_eq!(m.n_features(), 3);
        assert!(m.features().column(0).iter().all(|&v| v == 0.0));
        assert_eq!(m.features().column(1), d.features().column(1));
    }

    #[test]
    fn masked_target_and_names_survive() {
        let d = toy(4, 2);
        let z = BinaryMask::from_bits(vec![1, 0]).unwrap();
        let m = d.masked(&z).unwrap();
        assert_eq!(m.targets(), d.targets());
        assert_eq!(m.feature_names(), d.feature_names());
        assert_eq!(array![0.0, 0.0, 0.0, 0.0], m.features().column(1));
    }
}
