//! AFS-BM: adaptive feature selection with binary masking.
//!
//! The algorithm alternates two phases until its patience budget runs out:
//!
//! 1. **Model optimization** — train the learner on the mask-filtered
//!    training data and measure the reference loss `l_th` on the
//!    mask-validation split (also mask-filtered).
//! 2. **Mask optimization** — repeatedly draw a not-yet-tried active feature
//!    uniformly at random (seeded), zero it in a trial mask, and re-evaluate
//!    the *same* trained model. The removal sticks when the relative loss
//!    increase stays within `delta_l` (the reference loss updates to the new
//!    value); otherwise the bit is restored and the per-phase slack `mu`
//!    shrinks by one.
//!
//! After each mask phase the rejected columns are physically deleted from
//! both matrices, so later iterations work on smaller problems. An outer
//! iteration that removes nothing costs one unit of the patience budget
//! `beta`; the budget never replenishes, and the run converges when it hits
//! zero. A safety cap on outer iterations and a last-feature guard (the mask
//! may never become empty) terminate runs that would otherwise spin or
//! degenerate; both mark the result as not converged.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{apply_mask, delete_columns, BinaryMask, Dataset};
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, Model};

/// AFS-BM hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AfsBmParams {
    /// Per-phase slack: how many rejected removals a mask phase tolerates
    /// before it ends.
    pub mu: usize,
    /// Patience: how many outer iterations may pass without any removal
    /// before the run converges. Never replenished.
    pub beta: usize,
    /// Relative loss-increase tolerance for accepting a removal.
    pub delta_l: f64,
    /// Seed for the index-drawing stream.
    pub seed: u64,
    /// Safety cap on outer iterations; hitting it marks the run unconverged.
    pub max_outer_iterations: usize,
}

impl Default for AfsBmParams {
    fn default() -> Self {
        AfsBmParams {
            mu: 10,
            beta: 5,
            delta_l: 0.01,
            seed: 0,
            max_outer_iterations: 50,
        }
    }
}

impl AfsBmParams {
    pub fn validate(&self) -> Result<()> {
        if self.mu == 0 {
            return Err(Error::invalid("mu must be >= 1"));
        }
        if self.beta == 0 {
            return Err(Error::invalid("beta must be >= 1"));
        }
        if !self.delta_l.is_finite() || self.delta_l <= 0.0 {
            return Err(Error::invalid(format!(
                "delta_l must be positive and finite, got {}",
                self.delta_l
            )));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::invalid("max_outer_iterations must be >= 1"));
        }
        Ok(())
    }
}

/// One attempted feature removal inside a mask phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalAttempt {
    /// Index in the original (full-width) feature space.
    pub original_index: usize,
    /// Index in the working (column-deleted) feature space of that phase.
    pub local_index: usize,
    /// Loss of the trial mask with this feature zeroed.
    pub l_mask: f64,
    /// Whether the removal passed the relevance test and stuck.
    pub accepted: bool,
    /// Slack left after this attempt (drops by one on every rejection).
    pub mu_remaining: usize,
}

/// Why a mask phase stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPhaseEnd {
    /// The slack `mu` ran out.
    SlackExhausted,
    /// Every active feature had been drawn once.
    IndicesExhausted,
    /// The phase drew the only remaining active feature; it is retained and
    /// the whole run terminates unconverged.
    LastFeatureGuard,
}

/// Everything a mask phase produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPhaseOutcome {
    /// The committed mask in the phase's working width.
    pub mask: BinaryMask,
    /// The reference loss after all accepted removals.
    pub l_final: f64,
    pub attempts: Vec<RemovalAttempt>,
    pub end: MaskPhaseEnd,
}

/// Log of one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterIterationLog {
    pub iteration: usize,
    /// Active features entering the iteration.
    pub active_before: usize,
    /// Reference loss right after the model fit (this iteration's `l_th`).
    pub l_th: f64,
    /// Reference loss after the mask phase's accepted removals.
    pub l_th_after_mask_phase: f64,
    pub attempts: Vec<RemovalAttempt>,
    pub accepted_removals: usize,
    pub mask_changed: bool,
    /// Patience left after this iteration.
    pub beta_remaining: usize,
    pub active_after: usize,
    pub mask_phase_end: MaskPhaseEnd,
}

/// Result of a full AFS-BM run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Final mask in the original feature space; its history holds one
    /// snapshot per completed outer iteration.
    pub mask: BinaryMask,
    /// Names of the original feature columns, in order.
    pub feature_names: Vec<String>,
    /// Names of the surviving features, in original order.
    pub selected_features: Vec<String>,
    pub iterations: Vec<OuterIterationLog>,
    /// `l_th` of each outer iteration.
    pub loss_trajectory: Vec<f64>,
    /// Fraction of surviving features, `‖z‖₁ / M`.
    pub sparsity: f64,
    /// True when the patience budget reached zero (normal termination).
    pub converged: bool,
    pub params: AfsBmParams,
}

/// The acceptance rule for a trial removal: relative loss increase within
/// `delta_l`. With a zero reference loss the relative form is undefined, so
/// the test degrades to the absolute comparison `l_mask <= delta_l`.
pub fn relevance_test(l_mask: f64, l_th: f64, delta_l: f64) -> Result<bool> {
    if !delta_l.is_finite() || delta_l <= 0.0 {
        return Err(Error::invalid(format!(
            "delta_l must be positive and finite, got {delta_l}"
        )));
    }
    for (name, v) in [("l_mask", l_mask), ("l_th", l_th)] {
        if !v.is_finite() {
            return Err(Error::non_finite(format!("relevance_test {name}")));
        }
        if v < 0.0 {
            return Err(Error::invalid(format!(
                "losses must be non-negative, {name} = {v}"
            )));
        }
    }
    if l_th == 0.0 {
        Ok(l_mask <= delta_l)
    } else {
        Ok((l_mask - l_th) / l_th <= delta_l)
    }
}

/// Model-optimization phase: fit the learner on mask-filtered training data,
/// return the trained model and its loss `l_th` on the mask-filtered
/// mask-validation split.
pub fn model_optimization_phase(
    learner: &LearnerConfig,
    train: &Dataset,
    mask_val: &Dataset,
    mask: &BinaryMask,
) -> Result<(Model, f64)> {
    if train.n_features() != mask.len() || mask_val.n_features() != mask.len() {
        return Err(Error::shape(format!(
            "model phase: train has {} columns, mask_val {}, mask {}",
            train.n_features(),
            mask_val.n_features(),
            mask.len()
        )));
    }
    let x_train = apply_mask(train.features().view(), mask)?;
    let model = Model::fit(learner, x_train.view(), train.targets().view())?;
    let x_val = apply_mask(mask_val.features().view(), mask)?;
    let l_th = model.evaluate(x_val.view(), mask_val.targets().view())?;
    Ok((model, l_th))
}

/// Mask-optimization phase: stochastic one-at-a-time elimination against a
/// fixed trained model.
///
/// Indices are drawn uniformly without replacement from the active set of
/// `start`. Each accepted removal updates the reference loss; each rejection
/// costs one unit of slack. The phase ends when slack runs out, when every
/// index has been tried, or when it would have to remove the last active
/// feature (the guard retains it).
pub fn mask_optimization_phase(
    model: &Model,
    mask_val: &Dataset,
    start: &BinaryMask,
    l_th: f64,
    params: &AfsBmParams,
    rng: &mut ChaCha8Rng,
) -> Result<MaskPhaseOutcome> {
    params.validate()?;
    if start.len() != mask_val.n_features() {
        return Err(Error::shape(format!(
            "mask phase: mask width {} vs {} columns",
            start.len(),
            mask_val.n_features()
        )));
    }
    if !l_th.is_finite() || l_th < 0.0 {
        return Err(Error::invalid(format!(
            "l_th must be a non-negative loss, got {l_th}"
        )));
    }
    let mut pool = start.active_indices();
    if pool.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut trial = BinaryMask::from_bits(start.bits().to_vec())?;
    let mut l_best = l_th;
    let mut mu = params.mu;
    let mut attempts = Vec::new();

    let end = loop {
        if mu == 0 {
            break MaskPhaseEnd::SlackExhausted;
        }
        if pool.is_empty() {
            break MaskPhaseEnd::IndicesExhausted;
        }
        let slot = rng.random_range(0..pool.len());
        let index = pool.swap_remove(slot);
        if trial.count_ones() == 1 {
            // `index` is necessarily the lone active feature: the pool only
            // ever holds active, not-yet-tried indices. Keep it and stop.
            break MaskPhaseEnd::LastFeatureGuard;
        }
        trial.set(index, false);
        let x_masked = apply_mask(mask_val.features().view(), &trial)?;
        let l_mask = model.evaluate(x_masked.view(), mask_val.targets().view())?;
        let accepted = relevance_test(l_mask, l_best, params.delta_l)?;
        if accepted {
            l_best = l_mask;
        } else {
            trial.set(index, true);
            mu -= 1;
        }
        attempts.push(RemovalAttempt {
            original_index: index,
            local_index: index,
            l_mask,
            accepted,
            mu_remaining: mu,
        });
    };

    Ok(MaskPhaseOutcome {
        mask: trial,
        l_final: l_best,
        attempts,
        end,
    })
}

/// Runs the full AFS-BM loop.
///
/// `train` and `mask_val` must share the same feature columns. The returned
/// mask lives in the original feature space regardless of how many columns
/// were physically deleted along the way.
pub fn run_afs_bm(
    learner: &LearnerConfig,
    train: &Dataset,
    mask_val: &Dataset,
    params: &AfsBmParams,
) -> Result<SelectionResult> {
    params.validate()?;
    learner.validate()?;
    if train.feature_names() != mask_val.feature_names() {
        return Err(Error::shape(
            "run_afs_bm: train and mask_val have different feature columns".to_string(),
        ));
    }

    let m_orig = train.n_features();
    let original_names: Vec<String> = train.feature_names().to_vec();
    let mut x_train = train.features().clone();
    let mut x_val = mask_val.features().clone();
    let mut names = original_names.clone();
    // Maps working-space column j to its original index.
    let mut index_map: Vec<usize> = (0..m_orig).collect();
    let mut cumulative = BinaryMask::ones(m_orig);
    let mut working = BinaryMask::ones(m_orig);
    let mut beta_remaining = params.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut iterations: Vec<OuterIterationLog> = Vec::new();
    let mut loss_trajectory: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut k = 0usize;

    loop {
        if beta_remaining == 0 {
            converged = true;
            break;
        }
        if k >= params.max_outer_iterations {
            break;
        }
        let train_cur = Dataset::new(
            x_train.clone(),
            train.targets().clone(),
            names.clone(),
            None,
        )?;
        let val_cur = Dataset::new(
            x_val.clone(),
            mask_val.targets().clone(),
            names.clone(),
            None,
        )?;
        let active_before = working.count_ones();

        let (model, l_th) = model_optimization_phase(learner, &train_cur, &val_cur, &working)?;
        let outcome =
            mask_optimization_phase(&model, &val_cur, &working, l_th, params, &mut rng)?;

        let mut attempts = outcome.attempts;
        for attempt in &mut attempts {
            attempt.original_index = index_map[attempt.local_index];
        }
        let accepted_removals = attempts.iter().filter(|a| a.accepted).count();
        let mask_changed = accepted_removals > 0;

        let (new_train, new_val, fresh) =
            delete_columns(x_train.view(), x_val.view(), &outcome.mask)?;
        let keep = outcome.mask.active_indices();
        names = keep.iter().map(|&j| names[j].clone()).collect();
        index_map = keep.iter().map(|&j| index_map[j]).collect();

        for bit in 0..m_orig {
            cumulative.set(bit, false);
        }
        for &orig in &index_map {
            cumulative.set(orig, true);
        }
        cumulative.record()?;

        if !mask_changed {
            beta_remaining -= 1;
        }
        loss_trajectory.push(l_th);
        iterations.push(OuterIterationLog {
            iteration: k,
            active_before,
            l_th,
            l_th_after_mask_phase: outcome.l_final,
            attempts,
            accepted_removals,
            mask_changed,
            beta_remaining,
            active_after: index_map.len(),
            mask_phase_end: outcome.end,
        });

        x_train = new_train;
        x_val = new_val;
        working = fresh;
        k += 1;

        if outcome.end == MaskPhaseEnd::LastFeatureGuard {
            // Accepted removals from this phase stay applied; the run itself
            // is flagged unconverged.
            break;
        }
    }

    let sparsity = cumulative.sparsity();
    Ok(SelectionResult {
        mask: cumulative,
        feature_names: original_names,
        selected_features: names,
        iterations,
        loss_trajectory,
        sparsity,
        converged,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{GbdtParams, Task};
    use ndarray::{Array1, Array2};

    fn deterministic_gbdt(seed: u64) -> LearnerConfig {
        LearnerConfig::gbdt(
            Task::Regression,
            GbdtParams {
                n_estimators: 40,
                learning_rate: 0.2,
                num_leaves: 15,
                min_child_samples: 2,
                ..GbdtParams::default()
            },
            seed,
        )
    }

    /// 5 features, y depends only on feature 3. Noise columns come from a
    /// fixed generator so the test is reproducible.
    fn single_signal_data(n: usize, seed: u64) -> (Dataset, Dataset) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let make = |rng: &mut ChaCha8Rng, rows: usize| {
            let x = Array2::from_shape_fn((rows, 5), |_| rng.random_range(-1.0..1.0));
            let y: Array1<f64> = x.rows().into_iter().map(|r| 3.0 * r[3]).collect();
            Dataset::new(
                x,
                y,
                (0..5).map(|i| format!("x{i}")).collect(),
                None,
            )
            .unwrap()
        };
        (make(&mut rng, n), make(&mut rng, n / 2))
    }

    #[test]
    fn relevance_test_boundaries() {
        // exactly delta_l worse: accepted (<=). 1.25 and 0.25 are
        // binary-exact, so the ratio lands on the boundary precisely.
        assert!(relevance_test(1.25, 1.0, 0.25).unwrap());
        // just above: rejected
        assert!(!relevance_test(1.25 + 1e-9, 1.0, 0.25).unwrap());
        // improvements always accepted
        assert!(relevance_test(0.5, 1.0, 0.05).unwrap());
        // zero reference: absolute comparison against delta_l
        assert!(relevance_test(0.04, 0.0, 0.05).unwrap());
        assert!(!relevance_test(0.06, 0.0, 0.05).unwrap());
        // domain errors
        assert!(relevance_test(f64::NAN, 1.0, 0.05).is_err());
        assert!(relevance_test(1.0, -0.1, 0.05).is_err());
        assert!(relevance_test(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(AfsBmParams::default().validate().is_ok());
        for bad in [
            AfsBmParams {
                mu: 0,
                ..AfsBmParams::default()
            },
            AfsBmParams {
                beta: 0,
                ..AfsBmParams::default()
            },
            AfsBmParams {
                delta_l: 0.0,
                ..AfsBmParams::default()
            },
            AfsBmParams {
                max_outer_iterations: 0,
                ..AfsBmParams::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    /// Hand-checkable oracle: with y = 3·x3 exactly, a mask phase must never
    /// drop feature 3 (masking it explodes the loss), and its bookkeeping —
    /// threshold updates, slack decrements, acceptance rule — must replay
    /// exactly from the attempt log, no matter the draw order. Noise features
    /// are usually dropped but may be legitimately rejected when the model
    /// leaned on them and the relative loss change exceeds delta_l.
    #[test]
    fn mask_phase_keeps_the_only_informative_feature() {
        let (train, val) = single_signal_data(200, 0);
        let (model, l_th) =
            model_optimization_phase(&deterministic_gbdt(0), &train, &val, &BinaryMask::ones(5))
                .unwrap();
        let params = AfsBmParams {
            mu: 5,
            delta_l: 0.05,
            ..AfsBmParams::default()
        };
        let mut total_accepted = 0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = mask_optimization_phase(
                &model,
                &val,
                &BinaryMask::ones(5),
                l_th,
                &params,
                &mut rng,
            )
            .unwrap();
            let survivors = out.mask.active_indices();
            assert!(survivors.contains(&3), "seed {seed}: {survivors:?}");
            // replay the log: acceptance must match the relevance test
            // against the running threshold, slack must only drop on
            // rejections, and the informative feature must never pass
            let mut running = l_th;
            let mut mu = params.mu;
            for a in &out.attempts {
                let passes = relevance_test(a.l_mask, running, params.delta_l).unwrap();
                assert_eq!(a.accepted, passes, "seed {seed}: {a:?}");
                if a.accepted {
                    assert_ne!(a.original_index, 3, "seed {seed}: dropped the signal");
                    running = a.l_mask;
                    total_accepted += 1;
                } else {
                    mu -= 1;
                }
                assert_eq!(a.mu_remaining, mu, "seed {seed}: {a:?}");
            }
            assert_eq!(out.l_final, running, "threshold mismatch after replay");
            assert!(matches!(
                out.end,
                MaskPhaseEnd::SlackExhausted
                    | MaskPhaseEnd::IndicesExhausted
                    | MaskPhaseEnd::LastFeatureGuard
            ));
        }
        // across ten draw orders the noise features cannot all survive
        assert!(total_accepted >= 10, "only {total_accepted} acceptances");
    }

    #[test]
    fn mask_phase_each_index_drawn_at_most_once() {
        let (train, val) = single_signal_data(120, 3);
        let (model, l_th) =
            model_optimization_phase(&deterministic_gbdt(0), &train, &val, &BinaryMask::ones(5))
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = AfsBmParams {
            mu: 100,
            delta_l: 0.05,
            ..AfsBmParams::default()
        };
        let out =
            mask_optimization_phase(&model, &val, &BinaryMask::ones(5), l_th, &params, &mut rng)
                .unwrap();
        let mut seen: Vec<usize> = out.attempts.iter().map(|a| a.local_index).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), out.attempts.len(), "an index was drawn twice");
    }

    #[test]
    fn run_keeps_signal_and_reports_history() {
        let (train, val) = single_signal_data(240, 7);
        let params = AfsBmParams {
            mu: 5,
            beta: 3,
            delta_l: 0.05,
            seed: 11,
            max_outer_iterations: 50,
        };
        let result = run_afs_bm(&deterministic_gbdt(0), &train, &val, &params).unwrap();
        assert_eq!(result.mask.active_indices(), vec![3]);
        assert_eq!(result.selected_features, vec!["x3".to_string()]);
        assert_eq!(result.sparsity, 0.2);
        assert_eq!(result.mask.history().len(), result.iterations.len());
        // history is monotone: active sets only shrink
        let mut prev: Option<Vec<u8>> = None;
        for snap in result.mask.history() {
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(snap) {
                    assert!(!(a == &0 && b == &1), "mask regrew");
                }
            }
            prev = Some(snap.clone());
        }
        // the run either converged via beta or hit the last-feature guard
        if !result.converged {
            assert_eq!(
                result.iterations.last().unwrap().mask_phase_end,
                MaskPhaseEnd::LastFeatureGuard
            );
        }
        // mu resets every phase: no attempt may report more slack than mu
        for it in &result.iterations {
            for a in &it.attempts {
                assert!(a.mu_remaining <= params.mu);
            }
        }
    }

    /// With two equally necessary features, every removal attempt is
    /// rejected, so each outer iteration leaves the mask unchanged and burns
    /// one unit of patience; the run converges with all features after
    /// exactly `beta` unchanged iterations (plus the initial pruning one).
    #[test]
    fn patience_budget_drives_convergence() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Array2::from_shape_fn((240, 4), |_| rng.random_range(-1.0..1.0));
        let y: Array1<f64> = x.rows().into_iter().map(|r| 2.0 * r[0] - 2.0 * r[1]).collect();
        let names: Vec<String> = (0..4).map(|i| format!("x{i}")).collect();
        let train = Dataset::new(
            x.slice(ndarray::s![..160, ..]).to_owned(),
            y.slice(ndarray::s![..160]).to_owned(),
            names.clone(),
            None,
        )
        .unwrap();
        let val = Dataset::new(
            x.slice(ndarray::s![160.., ..]).to_owned(),
            y.slice(ndarray::s![160..]).to_owned(),
            names,
            None,
        )
        .unwrap();
        let params = AfsBmParams {
            mu: 4,
            beta: 3,
            delta_l: 0.02,
            seed: 5,
            max_outer_iterations: 50,
        };
        let result = run_afs_bm(&deterministic_gbdt(0), &train, &val, &params).unwrap();
        assert!(result.converged, "{result:?}");
        let selected = result.mask.active_indices();
        assert!(selected.contains(&0) && selected.contains(&1), "{selected:?}");
        // once the mask stabilizes, each iteration decrements beta exactly once
        let unchanged: Vec<_> = result.iterations.iter().filter(|i| !i.mask_changed).collect();
        assert_eq!(unchanged.len(), params.beta);
        assert_eq!(result.iterations.last().unwrap().beta_remaining, 0);
    }

    #[test]
    fn runs_are_deterministic_in_the_seed() {
        let (train, val) = single_signal_data(160, 2);
        let params = AfsBmParams {
            mu: 4,
            beta: 2,
            delta_l: 0.05,
            seed: 9,
            ..AfsBmParams::default()
        };
        let a = run_afs_bm(&deterministic_gbdt(0), &train, &val, &params).unwrap();
        let b = run_afs_bm(&deterministic_gbdt(0), &train, &val, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn safety_cap_flags_unconverged() {
        let (train, val) = single_signal_data(160, 4);
        let params = AfsBmParams {
            mu: 2,
            beta: 100,
            delta_l: 0.05,
            seed: 0,
            max_outer_iterations: 1,
        };
        let result = run_afs_bm(&deterministic_gbdt(0), &train, &val, &params).unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations.len(), 1);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let (train, val) = single_signal_data(100, 5);
        let shrunk = val.retain_features(&[0, 1, 2]).unwrap();
        assert!(run_afs_bm(
            &deterministic_gbdt(0),
            &train,
            &shrunk,
            &AfsBmParams::default()
        )
        .is_err());
        let (model, l_th) = model_optimization_phase(
            &deterministic_gbdt(0),
            &train,
            &val,
            &BinaryMask::ones(5),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(mask_optimization_phase(
            &model,
            &val,
            &BinaryMask::ones(4),
            l_th,
            &AfsBmParams::default(),
            &mut rng
        )
        .is_err());
        assert!(mask_optimization_phase(
            &model,
            &val,
            &BinaryMask::ones(5),
            f64::NAN,
            &AfsBmParams::default(),
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn masked_model_phase_ignores_masked_columns() {
        let (train, val) = single_signal_data(150, 8);
        // mask out the signal: the model must do no better than predicting a
        // constant, and l_th reflects that
        let mut mask = BinaryMask::ones(5);
        mask.set(3, false);
        let (_, l_th_masked) =
            model_optimization_phase(&deterministic_gbdt(0), &train, &val, &mask).unwrap();
        let (_, l_th_full) = model_optimization_phase(
            &deterministic_gbdt(0),
            &train,
            &val,
            &BinaryMask::ones(5),
        )
        .unwrap();
        assert!(
            l_th_masked > 10.0 * l_th_full.max(1e-6),
            "masked {l_th_masked} vs full {l_th_full}"
        );
    }
}
