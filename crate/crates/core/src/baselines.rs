//! Baseline feature selectors to compare against: cross-correlation
//! filtering, mutual-information ranking, and recursive feature elimination.
//!
//! The two filters are model-free; RFE wraps the tree learner and uses its
//! split-gain importances. All three return the same shape of answer — a
//! [`BinaryMask`] plus per-feature scores — so the experiment harness can
//! treat every selector uniformly.

use ndarray::{ArrayView1, ArrayView2};

use crate::dataset::BinaryMask;
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, LearnerKind, Model, Task};

/// Default number of histogram bins for mutual-information estimates.
pub const DEFAULT_MI_BINS: usize = 10;

/// A mask plus the per-feature scores that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSelection {
    pub mask: BinaryMask,
    /// Score per original feature: |Pearson R| or mutual information (nats).
    pub scores: Vec<f64>,
}

fn check_inputs(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::shape("selector input is empty"));
    }
    if y.len() != x.nrows() {
        return Err(Error::shape(format!(
            "{} feature rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("selector input"));
    }
    Ok(())
}

/// Pearson correlation filter: keeps features with `|R| > gamma` (strict).
///
/// Zero-variance columns (or a zero-variance target) score 0 and are never
/// kept. The threshold may legitimately select nothing; callers decide what
/// an empty mask means for them.
pub fn cross_correlation_select(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    gamma: f64,
) -> Result<BaselineSelection> {
    check_inputs(x, y)?;
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::invalid(format!(
            "gamma must be a non-negative threshold, got {gamma}"
        )));
    }
    let n = y.len() as f64;
    let y_mean = y.sum() / n;
    let y_var: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    let mut scores = Vec::with_capacity(x.ncols());
    let mut bits = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let x_mean = col.sum() / n;
        let mut cov = 0.0;
        let mut x_var = 0.0;
        for (&xv, &yv) in col.iter().zip(y.iter()) {
            cov += (xv - x_mean) * (yv - y_mean);
            x_var += (xv - x_mean) * (xv - x_mean);
        }
        let r = if x_var == 0.0 || y_var == 0.0 {
            0.0
        } else {
            cov / (x_var.sqrt() * y_var.sqrt())
        };
        let score = r.abs();
        scores.push(score);
        bits.push(u8::from(score > gamma));
    }
    Ok(BaselineSelection {
        mask: BinaryMask::from_bits(bits)?,
        scores,
    })
}

/// Equal-width histogram binning into `bins` cells; constant columns land
/// entirely in cell 0.
fn equal_width_bins(values: ArrayView1<'_, f64>, bins: usize) -> Vec<usize> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![0; values.len()];
    }
    let width = (hi - lo) / bins as f64;
    values
        .iter()
        .map(|&v| (((v - lo) / width) as usize).min(bins - 1))
        .collect()
}

/// Plug-in mutual information (nats) between binned variables; empty cells
/// contribute nothing.
fn histogram_mi(xb: &[usize], yb: &[usize], nx: usize, ny: usize) -> f64 {
    let n = xb.len() as f64;
    let mut joint = vec![0u32; nx * ny];
    let mut mx = vec![0u32; nx];
    let mut my = vec![0u32; ny];
    for (&a, &b) in xb.iter().zip(yb) {
        joint[a * ny + b] += 1;
        mx[a] += 1;
        my[b] += 1;
    }
    let mut mi = 0.0;
    for a in 0..nx {
        for b in 0..ny {
            let c = joint[a * ny + b];
            if c == 0 {
                continue;
            }
            let p = c as f64 / n;
            let pa = mx[a] as f64 / n;
            let pb = my[b] as f64 / n;
            mi += p * (p / (pa * pb)).ln();
        }
    }
    mi
}

/// Mutual-information ranking: estimates MI between every feature and the
/// target with an equal-width histogram, then keeps the top `k` features
/// (score ties keep the lower index).
///
/// Regression bins the target into `bins` cells as well; classification uses
/// the two class labels directly.
pub fn mutual_information_select(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    k: usize,
    bins: usize,
    task: Task,
) -> Result<BaselineSelection> {
    check_inputs(x, y)?;
    if k == 0 || k > x.ncols() {
        return Err(Error::invalid(format!(
            "k must be in [1, {}], got {k}",
            x.ncols()
        )));
    }
    if bins < 2 {
        return Err(Error::invalid(format!("bins must be >= 2, got {bins}")));
    }
    let (y_binned, ny) = match task {
        Task::Regression => (equal_width_bins(y, bins), bins),
        Task::BinaryClassification => {
            let mut labels = Vec::with_capacity(y.len());
            for (row, &v) in y.iter().enumerate() {
                if v == 0.0 {
                    labels.push(0);
                } else if v == 1.0 {
                    labels.push(1);
                } else {
                    return Err(Error::BadLabel { row: row + 1, value: v });
                }
            }
            (labels, 2)
        }
    };
    let scores: Vec<f64> = x
        .columns()
        .into_iter()
        .map(|col| histogram_mi(&equal_width_bins(col, bins), &y_binned, bins, ny))
        .collect();
    Ok(BaselineSelection {
        mask: top_k_mask(&scores, k),
        scores,
    })
}

/// All-ones for the `k` highest-scoring indices; ties keep the lower index.
fn top_k_mask(scores: &[f64], k: usize) -> BinaryMask {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut bits = vec![0u8; scores.len()];
    for &i in order.iter().take(k) {
        bits[i] = 1;
    }
    BinaryMask::from_bits(bits).expect("non-empty binary bits")
}

/// One elimination round of [`rfe_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct RfeRound {
    /// Original indices of the features fitted this round, ascending.
    pub surviving: Vec<usize>,
    /// Importance of each surviving feature, aligned with `surviving`.
    pub importances: Vec<f64>,
    /// Original index eliminated this round (minimal importance; ties take
    /// the lowest index).
    pub eliminated: usize,
}

/// Result of recursive feature elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct RfeSelection {
    pub mask: BinaryMask,
    /// Elimination-order scores: the i-th feature eliminated scores `i + 1`;
    /// survivors all score the full feature count, so a top-k cut of the
    /// scores reproduces the mask.
    pub scores: Vec<f64>,
    pub rounds: Vec<RfeRound>,
}

impl RfeSelection {
    /// The mask that elimination would have produced had it stopped at `k`
    /// surviving features. `k` must lie between the final count and the
    /// original feature count.
    pub fn mask_at(&self, k: usize) -> Result<BinaryMask> {
        let m = self.mask.len();
        let final_k = self.mask.count_ones();
        if k < final_k || k > m {
            return Err(Error::invalid(format!(
                "mask_at: k must be in [{final_k}, {m}], got {k}"
            )));
        }
        let mut bits = vec![1u8; m];
        for round in self.rounds.iter().take(m - k) {
            bits[round.eliminated] = 0;
        }
        BinaryMask::from_bits(bits)
    }
}

/// Recursive feature elimination with the tree learner: fit, drop the
/// feature with the smallest split-gain importance, repeat until `k`
/// features remain. Exactly `M - k` fits are performed.
pub fn rfe_select(
    learner: &LearnerConfig,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    k: usize,
) -> Result<RfeSelection> {
    check_inputs(x, y)?;
    learner.validate()?;
    if learner.kind() != LearnerKind::Gbdt {
        return Err(Error::ImportanceUnsupported { got: "mlp" });
    }
    let m = x.ncols();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("k must be in [1, {m}], got {k}")));
    }
    let mut surviving: Vec<usize> = (0..m).collect();
    let mut rounds = Vec::with_capacity(m - k);
    let mut scores = vec![m as f64; m];
    let mut eliminated_so_far = 0usize;
    while surviving.len() > k {
        let sub = x.select(ndarray::Axis(1), &surviving);
        let model = Model::fit(learner, sub.view(), y)?;
        let importances = model.feature_importance()?;
        let local = importances
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.total_cmp(b))
            .map(|(i, _)| i)
            .expect("non-empty importances");
        let eliminated = surviving[local];
        eliminated_so_far += 1;
        scores[eliminated] = eliminated_so_far as f64;
        rounds.push(RfeRound {
            surviving: surviving.clone(),
            importances,
            eliminated,
        });
        surviving.remove(local);
    }
    let mut bits = vec![0u8; m];
    for &i in &surviving {
        bits[i] = 1;
    }
    Ok(RfeSelection {
        mask: BinaryMask::from_bits(bits)?,
        scores,
        rounds,
    })
}
