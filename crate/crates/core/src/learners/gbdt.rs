//! Gradient-boosted decision trees, trained with histogram splits and
//! leaf-wise growth.
//!
//! Second-order boosting in the usual formulation: per boosting round the
//! per-row gradient `g` and hessian `h` of the loss with respect to the
//! current score are accumulated into per-bin histograms; a split's gain is
//!
//! ```text
//! gain = 1/2 * (GL²/HL + GR²/HR - G²/H)
//! ```
//!
//! and a leaf's value is the Newton step `-G/H`, scaled by the learning rate.
//! For squared error `g = score - y` and `h = 1` (leaves are mean residuals);
//! for logistic loss `g = p - y` and `h = p(1-p)`.
//!
//! Feature values are pre-binned once per fit into at most [`MAX_BINS`]
//! quantile bins; thresholds stored in the trees are midpoints between
//! adjacent training values, so prediction works on raw (unbinned) inputs.
//! Trees grow leaf-wise: the leaf with the best achievable gain splits first,
//! until `num_leaves` is reached or no leaf can improve.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics;

use super::{sigmoid, GbdtParams, Task};

/// Upper bound on histogram bins per feature; bin codes must fit in a `u8`.
pub(crate) const MAX_BINS: usize = 64;

/// Hessian sums below this are treated as zero (guards the Newton step).
const MIN_HESSIAN: f64 = 1e-16;

/// Gains below this are numerical noise, not real splits.
const MIN_GAIN: f64 = 1e-12;

/// A regression-tree node. Rows with `feature <= threshold` descend left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        value: f64,
    },
}

impl Node {
    fn score(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

}

/// A trained boosted-tree ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbdtModel {
    base_score: f64,
    trees: Vec<Node>,
    /// Total split gain accumulated per feature across all trees.
    split_gains: Vec<f64>,
}

impl GbdtModel {
    /// Raw additive scores (log-odds for classification).
    pub(crate) fn raw_predict(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let mut out = Array1::from_elem(x.nrows(), self.base_score);
        for tree in &self.trees {
            for (i, row) in x.rows().into_iter().enumerate() {
                out[i] += tree.score(row);
            }
        }
        out
    }

    pub(crate) fn split_gains(&self) -> &[f64] {
        &self.split_gains
    }
}

/// Per-feature quantile binning of the training matrix.
struct Bins {
    /// Ascending cut points per feature; bin(x) = #cuts strictly below x.
    cuts: Vec<Vec<f64>>,
    /// Bin codes, column-major: `codes[feature * n_rows + row]`.
    codes: Vec<u8>,
    n_rows: usize,
}

impl Bins {
    fn build(x: ArrayView2<'_, f64>, max_bins: usize) -> Bins {
        let n = x.nrows();
        let mut cuts = Vec::with_capacity(x.ncols());
        let mut codes = vec![0u8; n * x.ncols()];
        let mut sorted: Vec<f64> = Vec::with_capacity(n);
        for (f, col) in x.columns().into_iter().enumerate() {
            sorted.clear();
            sorted.extend(col.iter().copied());
            sorted.sort_unstable_by(f64::total_cmp);
            let feature_cuts = quantile_cuts(&sorted, max_bins);
            for (i, &v) in col.iter().enumerate() {
                let bin = feature_cuts.partition_point(|c| *c < v);
                codes[f * n + i] = bin as u8;
            }
            cuts.push(feature_cuts);
        }
        Bins {
            cuts,
            codes,
            n_rows: n,
        }
    }

    fn code(&self, feature: usize, row: usize) -> usize {
        self.codes[feature * self.n_rows + row] as usize
    }

    fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }
}

/// Cut points at (approximately) equal-count quantiles, as midpoints between
/// adjacent distinct values. Constant columns get no cuts.
fn quantile_cuts(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut cuts: Vec<f64> = Vec::new();
    for i in 1..max_bins {
        let pos = i * n / max_bins;
        if pos == 0 || pos >= n {
            continue;
        }
        let lo = sorted[pos - 1];
        let hi = sorted[pos];
        if hi > lo {
            let cut = lo + (hi - lo) / 2.0;
            if cuts.last() != Some(&cut) {
                cuts.push(cut);
            }
        }
    }
    cuts
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    /// Split at this bin: codes <= bin go left.
    bin: usize,
}

/// A leaf of the tree being grown.
struct LeafState {
    /// Index of this leaf's slot in the flat tree.
    slot: usize,
    rows: Vec<u32>,
    grad_sum: f64,
    hess_sum: f64,
    candidate: Option<SplitCandidate>,
}

/// Flat tree under construction; converted to nested [`Node`]s when done.
/// Splits remember their bin so training rows can be routed by code instead
/// of by raw value (the two are equivalent: `bin(x) <= b  ⟺  x <= cuts[b]`).
enum FlatNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        bin: usize,
        left: usize,
        right: usize,
    },
}

fn to_nested(flat: &[FlatNode], idx: usize) -> Node {
    match &flat[idx] {
        FlatNode::Leaf { value } => Node::Leaf { value: *value },
        FlatNode::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } => Node::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(to_nested(flat, *left)),
            right: Box::new(to_nested(flat, *right)),
        },
    }
}

/// Scores one training row by bin-coded traversal of the flat tree.
fn flat_score(flat: &[FlatNode], bins: &Bins, row: usize) -> f64 {
    let mut idx = 0;
    loop {
        match &flat[idx] {
            FlatNode::Leaf { value } => return *value,
            FlatNode::Split {
                feature,
                bin,
                left,
                right,
                ..
            } => {
                idx = if bins.code(*feature, row) <= *bin {
                    *left
                } else {
                    *right
                };
            }
        }
    }
}

pub(crate) fn train(
    params: &GbdtParams,
    task: Task,
    seed: u64,
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    curve: &mut Vec<f64>,
) -> Result<GbdtModel> {
    let n = x.nrows();
    let m = x.ncols();
    let bins = Bins::build(x, MAX_BINS);
    let y_vec = y.to_vec();

    let base_score = match task {
        Task::Regression => y.sum() / n as f64,
        Task::BinaryClassification => {
            let p = (y.sum() / n as f64).clamp(1e-12, 1.0 - 1e-12);
            (p / (1.0 - p)).ln()
        }
    };
    let mut scores = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees: Vec<Node> = Vec::with_capacity(params.n_estimators);
    let mut split_gains = vec![0.0; m];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let row_count = ((n as f64 * params.subsample).floor() as usize).max(1);
    let col_count = ((m as f64 * params.colsample_bytree).floor() as usize).max(1);

    for _ in 0..params.n_estimators {
        for i in 0..n {
            let (g, h) = match task {
                Task::Regression => (scores[i] - y[i], 1.0),
                Task::BinaryClassification => {
                    let p = sigmoid(scores[i]);
                    (p - y[i], (p * (1.0 - p)).max(MIN_HESSIAN))
                }
            };
            grad[i] = g;
            hess[i] = h;
        }

        // The RNG is consulted only when a fraction below 1 is requested, so
        // results with subsample = colsample = 1 are seed-independent.
        let rows: Vec<u32> = if params.subsample < 1.0 {
            let mut picked: Vec<u32> = rand::seq::index::sample(&mut rng, n, row_count)
                .iter()
                .map(|i| i as u32)
                .collect();
            picked.sort_unstable();
            picked
        } else {
            (0..n as u32).collect()
        };
        let features: Vec<usize> = if params.colsample_bytree < 1.0 {
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, m, col_count).into_vec();
            picked.sort_unstable();
            picked
        } else {
            (0..m).collect()
        };

        let tree = grow_tree(
            params,
            &bins,
            &grad,
            &hess,
            rows,
            &features,
            &mut split_gains,
            &mut scores,
        );
        trees.push(tree);

        let loss = match task {
            Task::Regression => metrics::mse(&y_vec, &scores)?,
            Task::BinaryClassification => {
                let probs: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
                metrics::cross_entropy(&y_vec, &probs)?
            }
        };
        curve.push(loss);
    }

    Ok(GbdtModel {
        base_score,
        trees,
        split_gains,
    })
}

/// Grows one tree leaf-wise and applies its (shrunken) leaf values to the
/// running scores of the training rows it saw.
#[allow(clippy::too_many_arguments)]
fn grow_tree(
    params: &GbdtParams,
    bins: &Bins,
    grad: &[f64],
    hess: &[f64],
    root_rows: Vec<u32>,
    features: &[usize],
    split_gains: &mut [f64],
    scores: &mut [f64],
) -> Node {
    let mut flat: Vec<FlatNode> = vec![FlatNode::Leaf { value: 0.0 }];
    let sum = |rows: &[u32]| -> (f64, f64) {
        rows.iter().fold((0.0, 0.0), |(g, h), &r| {
            (g + grad[r as usize], h + hess[r as usize])
        })
    };
    let (g0, h0) = sum(&root_rows);
    let mut leaves = vec![LeafState {
        slot: 0,
        candidate: best_split(params, bins, grad, hess, &root_rows, g0, h0, features),
        rows: root_rows,
        grad_sum: g0,
        hess_sum: h0,
    }];

    while leaves.len() < params.num_leaves {
        // Leaf-wise: split the leaf with the highest achievable gain.
        let Some(pick) = leaves
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.candidate.map(|c| (i, c.gain)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
        else {
            break;
        };
        let leaf = leaves.swap_remove(pick);
        let cand = leaf.candidate.expect("picked leaf has a candidate");
        split_gains[cand.feature] += cand.gain;

        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = leaf
            .rows
            .iter()
            .copied()
            .partition(|&r| bins.code(cand.feature, r as usize) <= cand.bin);
        let threshold = bins.cuts[cand.feature][cand.bin];

        let left_slot = flat.len();
        let right_slot = flat.len() + 1;
        flat.push(FlatNode::Leaf { value: 0.0 });
        flat.push(FlatNode::Leaf { value: 0.0 });
        flat[leaf.slot] = FlatNode::Split {
            feature: cand.feature,
            threshold,
            bin: cand.bin,
            left: left_slot,
            right: right_slot,
        };

        for (slot, rows) in [(left_slot, left_rows), (right_slot, right_rows)] {
            let (g, h) = sum(&rows);
            leaves.push(LeafState {
                slot,
                candidate: best_split(params, bins, grad, hess, &rows, g, h, features),
                rows,
                grad_sum: g,
                hess_sum: h,
            });
        }
    }

    for leaf in &leaves {
        let value = -params.learning_rate * leaf.grad_sum / (leaf.hess_sum + MIN_HESSIAN);
        flat[leaf.slot] = FlatNode::Leaf { value };
    }
    // Every row gets the new tree's contribution, not just the subsampled
    // rows it was fitted on — the next round's gradients need full scores.
    for (r, s) in scores.iter_mut().enumerate() {
        *s += flat_score(&flat, bins, r);
    }
    to_nested(&flat, 0)
}

/// Best histogram split of one leaf, or `None` if no split satisfies the
/// constraints with positive gain. Ties in gain keep the earliest feature
/// (declared column order) and lowest bin.
#[allow(clippy::too_many_arguments)]
fn best_split(
    params: &GbdtParams,
    bins: &Bins,
    grad: &[f64],
    hess: &[f64],
    rows: &[u32],
    grad_total: f64,
    hess_total: f64,
    features: &[usize],
) -> Option<SplitCandidate> {
    if rows.len() < 2 * params.min_child_samples || hess_total <= MIN_HESSIAN {
        return None;
    }
    let parent_score = grad_total * grad_total / hess_total;
    let mut best: Option<SplitCandidate> = None;

    let mut hist_g = vec![0.0; MAX_BINS];
    let mut hist_h = vec![0.0; MAX_BINS];
    let mut hist_c = vec![0u32; MAX_BINS];
    for &f in features {
        let n_bins = bins.n_bins(f);
        if n_bins < 2 {
            continue; // constant column
        }
        hist_g[..n_bins].fill(0.0);
        hist_h[..n_bins].fill(0.0);
        hist_c[..n_bins].fill(0);
        for &r in rows {
            let b = bins.code(f, r as usize);
            hist_g[b] += grad[r as usize];
            hist_h[b] += hess[r as usize];
            hist_c[b] += 1;
        }

        let mut gl = 0.0;
        let mut hl = 0.0;
        let mut cl = 0u32;
        // Split "bin <= b": the last bin never splits (right side empty).
        for b in 0..n_bins - 1 {
            gl += hist_g[b];
            hl += hist_h[b];
            cl += hist_c[b];
            let cr = rows.len() as u32 - cl;
            if (cl as usize) < params.min_child_samples {
                continue;
            }
            if (cr as usize) < params.min_child_samples {
                break; // right side only shrinks from here
            }
            let gr = grad_total - gl;
            let hr = hess_total - hl;
            if hl <= MIN_HESSIAN || hr <= MIN_HESSIAN {
                continue;
            }
            let gain = 0.5 * (gl * gl / hl + gr * gr / hr - parent_score);
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate { gain, feature: f, bin: b });
            }
        }
    }
    best
}
