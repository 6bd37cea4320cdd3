//! Loss functions and loss-sequence averaging.
//!
//! Two losses are supported: mean squared error for regression and binary
//! cross-entropy for classification. Both reject non-finite inputs and
//! mismatched lengths instead of silently producing NaN.
//!
//! [`averaged_loss_sequences`] aggregates per-series loss sequences of uneven
//! length into a single pair of curves: the elementwise average `l_ave` and
//! its running (cumulative) mean `l_ave2`. Shorter sequences are zero-padded
//! to the longest length, which biases late entries of `l_ave` toward zero;
//! [`averaged_loss_sequences_unpadded`] averages only over the sequences that
//! are still alive at each step and is reported alongside as a diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clipped to `[PROB_CLIP_EPSILON, 1 - PROB_CLIP_EPSILON]`
/// before taking logarithms in [`cross_entropy`].
pub const PROB_CLIP_EPSILON: f64 = 1e-12;

/// Slack allowed when checking that an input probability lies in `[0, 1]`.
/// Values inside `[-PROB_TOLERANCE, 1 + PROB_TOLERANCE]` are clamped; anything
/// further out is an error.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Which loss a task is scored with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean squared error.
    Mse,
    /// Binary cross-entropy on predicted probabilities.
    CrossEntropy,
}

fn check_pair(y: &[f64], y_hat: &[f64], what: &str) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::shape(format!(
            "{what}: targets have {} entries, predictions {}",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::shape(format!("{what}: empty input")));
    }
    Ok(())
}

/// Mean squared error `mean((y - y_hat)^2)`.
///
/// Errors on length mismatch, empty input, or non-finite entries.
pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_pair(y, y_hat, "mse")?;
    let mut acc = 0.0;
    for (i, (&t, &p)) in y.iter().zip(y_hat).enumerate() {
        if !t.is_finite() {
            return Err(Error::non_finite(format!("mse target at index {i}")));
        }
        if !p.is_finite() {
            return Err(Error::non_finite(format!("mse prediction at index {i}")));
        }
        let d = t - p;
        acc += d * d;
    }
    Ok(acc / y.len() as f64)
}

/// Binary cross-entropy `-mean(y*ln(p) + (1-y)*ln(1-p))`.
///
/// `y` holds true class-1 probabilities (hard labels 0/1 are the common
/// case), `p_hat` predicted class-1 probabilities. Predictions are clipped
/// to `[PROB_CLIP_EPSILON, 1 - PROB_CLIP_EPSILON]` so that saturated
/// predictions yield a large finite loss rather than infinity. Inputs outside
/// `[0, 1]` by more than [`PROB_TOLERANCE`] are rejected.
pub fn cross_entropy(y: &[f64], p_hat: &[f64]) -> Result<f64> {
    check_pair(y, p_hat, "cross_entropy")?;
    let mut acc = 0.0;
    for (i, (&t, &p)) in y.iter().zip(p_hat).enumerate() {
        let t = clamp_probability(t, || format!("cross_entropy target at index {i}"))?;
        let p = clamp_probability(p, || format!("cross_entropy prediction at index {i}"))?;
        let p = p.clamp(PROB_CLIP_EPSILON, 1.0 - PROB_CLIP_EPSILON);
        acc -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
    }
    Ok(acc / y.len() as f64)
}

fn clamp_probability(v: f64, context: impl Fn() -> String) -> Result<f64> {
    if !v.is_finite() || !(-PROB_TOLERANCE..=1.0 + PROB_TOLERANCE).contains(&v) {
        return Err(Error::ProbabilityRange {
            value: v,
            context: context(),
        });
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Elementwise average and running mean of zero-padded loss sequences.
///
/// Sequences shorter than the longest are padded with zeros. The first
/// returned vector is the elementwise average `l_ave`; the second is its
/// running mean, `l_ave2[t] = mean(l_ave[0..=t])`. Both have the length of
/// the longest input sequence.
///
/// Errors if there are no sequences, all sequences are empty, or any entry is
/// non-finite.
pub fn averaged_loss_sequences(sequences: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let l_ave = padded_average(sequences)?;
    let l_ave2 = running_mean(&l_ave);
    Ok((l_ave, l_ave2))
}

/// Like [`averaged_loss_sequences`], but at each step averages only over the
/// sequences that still have an entry there (no zero padding).
///
/// Useful as a diagnostic: the padded variant pulls late entries toward zero
/// once short sequences run out, while this one does not.
pub fn averaged_loss_sequences_unpadded(sequences: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let t_max = check_sequences(sequences)?;
    let mut l_ave = vec![0.0; t_max];
    for (t, slot) in l_ave.iter_mut().enumerate() {
        let mut sum = 0.0;
        let mut alive = 0usize;
        for seq in sequences {
            if let Some(&v) = seq.get(t) {
                sum += v;
                alive += 1;
            }
        }
        // alive >= 1 because t < t_max = length of the longest sequence.
        *slot = sum / alive as f64;
    }
    let l_ave2 = running_mean(&l_ave);
    Ok((l_ave, l_ave2))
}

fn check_sequences(sequences: &[Vec<f64>]) -> Result<usize> {
    if sequences.is_empty() {
        return Err(Error::shape("averaged_loss_sequences: no sequences"));
    }
    let t_max = sequences.iter().map(Vec::len).max().unwrap_or(0);
    if t_max == 0 {
        return Err(Error::shape("averaged_loss_sequences: all sequences empty"));
    }
    for (s, seq) in sequences.iter().enumerate() {
        if let Some(t) = seq.iter().position(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!("loss sequence {s}, index {t}")));
        }
    }
    Ok(t_max)
}

fn padded_average(sequences: &[Vec<f64>]) -> Result<Vec<f64>> {
    let t_max = check_sequences(sequences)?;
    let n = sequences.len() as f64;
    let mut l_ave = vec![0.0; t_max];
    for seq in sequences {
        for (t, &v) in seq.iter().enumerate() {
            l_ave[t] += v;
        }
    }
    for v in &mut l_ave {
        *v /= n;
    }
    Ok(l_ave)
}

fn running_mean(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for (t, &x) in xs.iter().enumerate() {
        sum += x;
        out.push(sum / (t + 1) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mse_of_exact_predictions_is_zero() {
        let y = [1.0, -2.0, 3.5];
        assert_eq!(mse(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn mse_hand_computed() {
        // errors 1 and -2 -> (1 + 4) / 2 = 2.5
        let y = [0.0, 0.0];
        let y_hat = [1.0, -2.0];
        assert_eq!(mse(&y, &y_hat).unwrap(), 2.5);
    }

    #[test]
    fn mse_rejects_len_mismatch_and_empty() {
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn mse_rejects_non_finite() {
        assert!(mse(&[f64::NAN], &[0.0]).is_err());
        assert!(mse(&[0.0], &[f64::INFINITY]).is_err());
    }

    #[test]
    fn cross_entropy_uninformative_prediction_is_ln2() {
        let y = [0.0, 1.0, 1.0, 0.0];
        let p = [0.5; 4];
        assert_relative_eq!(
            cross_entropy(&y, &p).unwrap(),
            std::f64::consts::LN_2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn cross_entropy_perfect_prediction_is_zero() {
        let y = [0.0, 1.0];
        let p = [0.0, 1.0];
        // clipping turns ln(0) into ln(eps); the loss is ~eps, not exactly 0
        let ce = cross_entropy(&y, &p).unwrap();
        assert!((0.0..1e-11).contains(&ce), "ce = {ce}");
    }

    #[test]
    fn cross_entropy_clipping_keeps_loss_finite() {
        let ce = cross_entropy(&[1.0], &[0.0]).unwrap();
        assert_relative_eq!(ce, -PROB_CLIP_EPSILON.ln(), max_relative = 1e-12);
        assert!(ce.is_finite());
    }

    #[test]
    fn cross_entropy_rejects_out_of_range() {
        assert!(cross_entropy(&[1.0], &[1.5]).is_err());
        assert!(cross_entropy(&[-0.2], &[0.5]).is_err());
        assert!(cross_entropy(&[1.0], &[f64::NAN]).is_err());
        // within tolerance: clamped, not an error
        assert!(cross_entropy(&[1.0], &[1.0 + 1e-12]).is_ok());
    }

    #[test]
    fn cross_entropy_hand_computed() {
        // -(ln 0.8 + ln 0.6) / 2
        let y = [1.0, 0.0];
        let p = [0.8, 0.4];
        let expect = -(0.8f64.ln() + 0.6f64.ln()) / 2.0;
        assert_relative_eq!(cross_entropy(&y, &p).unwrap(), expect, max_relative = 1e-15);
    }

    #[test]
    fn averaging_pads_with_zeros() {
        // sequences [2] and [0, 4]:
        //   padded -> [2, 0], [0, 4]
        //   l_ave  -> [1, 2]
        //   l_ave2 -> [1, 1.5]
        let seqs = vec![vec![2.0], vec![0.0, 4.0]];
        let (l_ave, l_ave2) = averaged_loss_sequences(&seqs).unwrap();
        assert_eq!(l_ave, vec![1.0, 2.0]);
        assert_eq!(l_ave2, vec![1.0, 1.5]);
    }

    #[test]
    fn averaging_equal_lengths_matches_plain_mean() {
        let seqs = vec![vec![1.0, 2.0], vec![3.0, 6.0]];
        let (l_ave, l_ave2) = averaged_loss_sequences(&seqs).unwrap();
        assert_eq!(l_ave, vec![2.0, 4.0]);
        assert_eq!(l_ave2, vec![2.0, 3.0]);
    }

    #[test]
    fn unpadded_averaging_ignores_finished_sequences() {
        let seqs = vec![vec![2.0], vec![0.0, 4.0]];
        let (l_ave, l_ave2) = averaged_loss_sequences_unpadded(&seqs).unwrap();
        // step 0 averages both sequences; step 1 only the second
        assert_eq!(l_ave, vec![1.0, 4.0]);
        assert_eq!(l_ave2, vec![1.0, 2.5]);
    }

    #[test]
    fn averaging_rejects_degenerate_input() {
        assert!(averaged_loss_sequences(&[]).is_err());
        assert!(averaged_loss_sequences(&[vec![], vec![]]).is_err());
        assert!(averaged_loss_sequences(&[vec![f64::NAN]]).is_err());
    }
}
