//! Pre-classification rules, score functions and calibration sets.

mod gmm;
mod softmax;

pub use gmm::{gmm_posterior, GmmPosterior, GmmSpec};
pub use softmax::{softmax_objective, train_softmax, SoftmaxModel, SoftmaxObjective, TrainConfig};

use rand::{Rng, RngCore};

use crate::error::{PspError, Result};
use crate::exact::Ratio;
use crate::rng::stream_rng;
use crate::types::{CalibrationState, ClassLabel, FeatureVector, GroupPartition, ScoreMatrix};

/// Maps a feature vector to `K` real confidence scores.
///
/// Implementations must be fit without touching hold-out or target data.
pub trait ScoreFunction: Send + Sync {
    fn num_classes(&self) -> usize;

    /// Writes the `K` scores of `x` into `out`.
    fn scores_into(&self, x: &[f64], out: &mut [f64]);

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_classes()];
        self.scores_into(x, &mut out);
        out
    }

    fn score_matrix(&self, xs: &[FeatureVector]) -> Result<ScoreMatrix> {
        let k = self.num_classes();
        let mut data = vec![0.0; xs.len() * k];
        for (x, out) in xs.iter().zip(data.chunks_exact_mut(k)) {
            self.scores_into(x, out);
        }
        ScoreMatrix::new(k, data)
    }
}

/// A pre-classification rule `(x, u) -> label`.
///
/// `u` is the subject's private randomness; deterministic rules ignore it.
pub trait PreClassifier: Send + Sync {
    fn preclassify(&self, x: &[f64], u: &mut dyn RngCore) -> ClassLabel;
}

/// Soft-classifier rule: argmax of the scores, ties broken uniformly.
pub struct ArgmaxRule<S>(pub S);

impl<S: ScoreFunction> PreClassifier for ArgmaxRule<S> {
    fn preclassify(&self, x: &[f64], u: &mut dyn RngCore) -> ClassLabel {
        argmax_with_ties(&self.0.scores(x), u)
    }
}

/// Hard-classifier rule wrapping a plain function; the randomness is unused.
pub struct HardRule<F>(pub F);

impl<F> PreClassifier for HardRule<F>
where
    F: Fn(&[f64]) -> ClassLabel + Send + Sync,
{
    fn preclassify(&self, x: &[f64], _u: &mut dyn RngCore) -> ClassLabel {
        (self.0)(x)
    }
}

fn argmax_with_ties(row: &[f64], u: &mut dyn RngCore) -> ClassLabel {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied = row.iter().filter(|&&v| v == max).count();
    let pick = if tied == 1 { 0 } else { u.random_range(0..tied) };
    let col = row
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == max)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("row has a maximum");
    ClassLabel::from_index(col)
}

/// Argmax pre-classification of every row of `scores`.
///
/// Row `j` draws its tie-breaking randomness from stream `j` under `seed`, so
/// the result does not depend on evaluation order.
pub fn argmax_preclassify(scores: &ScoreMatrix, seed: u64) -> Vec<ClassLabel> {
    scores
        .rows()
        .enumerate()
        .map(|(j, row)| argmax_with_ties(row, &mut stream_rng(seed, j as u64)))
        .collect()
}

/// Applies `rule` to each feature vector with per-subject streams under `seed`.
pub fn preclassify_all(
    rule: &dyn PreClassifier,
    xs: &[FeatureVector],
    seed: u64,
) -> Vec<ClassLabel> {
    xs.iter()
        .enumerate()
        .map(|(j, x)| rule.preclassify(x, &mut stream_rng(seed, j as u64)))
        .collect()
}

/// Builds the pre-classification sets, residual sets and per-group `θ̂`.
pub fn build_calibration(
    pre_target: &[ClassLabel],
    pre_holdout: &[ClassLabel],
    holdout_truth: &[ClassLabel],
    partition: &GroupPartition,
) -> Result<CalibrationState> {
    if pre_holdout.len() != holdout_truth.len() {
        return Err(PspError::LengthMismatch {
            what: "hold-out labels",
            expected: pre_holdout.len(),
            actual: holdout_truth.len(),
        });
    }
    let k = partition.num_classes();
    let check = |label: &ClassLabel| {
        if label.index() >= k {
            Err(PspError::LabelOutOfRange {
                label: label.value() as i64,
                k,
            })
        } else {
            Ok(())
        }
    };
    pre_target
        .iter()
        .chain(pre_holdout)
        .chain(holdout_truth)
        .try_for_each(check)?;

    let mut target_sets = vec![Vec::new(); k];
    for (j, label) in pre_target.iter().enumerate() {
        target_sets[label.index()].push(j);
    }
    let mut holdout_sets = vec![Vec::new(); k];
    let mut residual_sets = vec![Vec::new(); k];
    for (i, (pre, truth)) in pre_holdout.iter().zip(holdout_truth).enumerate() {
        holdout_sets[pre.index()].push(i);
        if pre != truth {
            residual_sets[pre.index()].push(i);
        }
    }
    let theta_hat = (0..partition.num_groups())
        .map(|g| {
            let members = partition.members(g);
            let r: usize = members.iter().map(|l| residual_sets[l.index()].len()).sum();
            let s: usize = members.iter().map(|l| holdout_sets[l.index()].len()).sum();
            Ratio::new(1 + r as u64, 1 + s as u64)
        })
        .collect();
    Ok(CalibrationState {
        target_sets,
        holdout_sets,
        residual_sets,
        theta_hat,
    })
}
