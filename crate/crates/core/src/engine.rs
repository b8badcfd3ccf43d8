//! Selective p-values, the group-wise step-up threshold, and final decisions.

use crate::error::{PspError, Result};
use crate::exact::{le_scaled_reduced, Ratio};
use crate::models::build_calibration;
use crate::types::{
    CalibrationState, ClassLabel, Decision, DecisionReport, EvidenceKind, GroupOutcome,
    GroupPartition, ScoreMatrix,
};

/// Everything one group contributes to its own test: the target subjects with
/// the score of their pre-assigned class, and the pooled residual scores.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupView {
    pub group: usize,
    /// Target indices pre-classified into the group, ascending.
    pub subjects: Vec<usize>,
    /// `μ_k(X_j)` for each subject, `k` its pre-label.
    pub subject_scores: Vec<f64>,
    /// `μ_k'(X_{m+i})` over residual hold-outs `i` of every class `k'` in the group.
    pub residual_scores: Vec<f64>,
    /// Number of hold-outs pre-classified into the group.
    pub holdout_count: usize,
    pub theta_hat: Ratio,
}

impl GroupView {
    pub fn residual_count(&self) -> usize {
        self.residual_scores.len()
    }
}

/// Gathers per-group scores from full target and hold-out score matrices.
pub fn group_views(
    target_scores: &ScoreMatrix,
    holdout_scores: &ScoreMatrix,
    calib: &CalibrationState,
    partition: &GroupPartition,
) -> Result<Vec<GroupView>> {
    (0..partition.num_groups())
        .map(|g| {
            let mut subjects = Vec::new();
            let mut residual_scores = Vec::new();
            for &label in partition.members(g) {
                for &j in &calib.target_sets[label.index()] {
                    check_index(j, target_scores.len())?;
                    subjects.push((j, label));
                }
                for &i in &calib.residual_sets[label.index()] {
                    check_index(i, holdout_scores.len())?;
                    residual_scores.push(holdout_scores.score(i, label));
                }
            }
            subjects.sort_unstable_by_key(|&(j, _)| j);
            let subject_scores = subjects
                .iter()
                .map(|&(j, label)| target_scores.score(j, label))
                .collect();
            Ok(GroupView {
                group: g,
                subjects: subjects.into_iter().map(|(j, _)| j).collect(),
                subject_scores,
                residual_scores,
                holdout_count: calib.group_holdout_count(partition, g),
                theta_hat: calib.theta_hat[g],
            })
        })
        .collect()
}

fn check_index(index: usize, len: usize) -> Result<()> {
    if index >= len {
        Err(PspError::IndexOutOfRange { index, len })
    } else {
        Ok(())
    }
}

/// Selective p-values of one group, aligned with [`GroupView::subjects`].
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPValues {
    pub group: usize,
    pub subjects: Vec<usize>,
    pub pvalues: Vec<Ratio>,
    pub residual_count: usize,
}

/// `(1 + #{r ∈ residuals : r >= s}) / (1 + |residuals|)` for each subject score `s`.
///
/// Ties count against the subject.
pub fn conformal_pvalues(subject_scores: &[f64], residual_scores: &[f64]) -> Vec<Ratio> {
    let mut pool = residual_scores.to_vec();
    pool.sort_unstable_by(f64::total_cmp);
    let r = pool.len() as u64;
    subject_scores
        .iter()
        .map(|&s| {
            let below = pool.partition_point(|&v| v < s) as u64;
            Ratio::new(1 + r - below, 1 + r)
        })
        .collect()
}

pub fn selective_pvalues(view: &GroupView) -> GroupPValues {
    GroupPValues {
        group: view.group,
        subjects: view.subjects.clone(),
        pvalues: conformal_pvalues(&view.subject_scores, &view.residual_scores),
        residual_count: view.residual_count(),
    }
}

/// Result of the step-up search in one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupThreshold {
    /// `p_(l̂)`, or zero when no index qualifies.
    pub threshold: Ratio,
    pub l_hat: Option<usize>,
}

/// Positions of `values` in ascending order, ties kept in index order.
pub(crate) fn ascending_order(values: &[Ratio]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].cmp(&values[b]).then(a.cmp(&b)));
    order
}

/// `l̂ = max{l : p_(l) <= l·α / (θ̂·m_g)}` with `m_g = pvalues.len()`.
///
/// Decided exactly: the bound is rearranged to
/// `p.num·θ.num·m_g <= l·p.den·θ.den·α` over integers.
pub fn bh_threshold(pvalues: &[Ratio], theta_hat: Ratio, alpha: f64) -> GroupThreshold {
    let m_g = pvalues.len() as u128;
    let order = ascending_order(pvalues);
    for l in (1..=pvalues.len()).rev() {
        let p = pvalues[order[l - 1]];
        let lhs = p.num as u128 * theta_hat.num as u128 * m_g;
        let rhs = l as u128 * p.den as u128 * theta_hat.den as u128;
        if le_scaled_reduced(lhs, rhs, alpha) {
            return GroupThreshold {
                threshold: p,
                l_hat: Some(l),
            };
        }
    }
    GroupThreshold {
        threshold: Ratio::ZERO,
        l_hat: None,
    }
}

/// Keeps a subject's pre-label iff its p-value is at most its group threshold.
pub fn psp_decide(
    pre_labels: &[ClassLabel],
    groups: &[GroupPValues],
    thresholds: &[GroupThreshold],
    partition: &GroupPartition,
    calib: &CalibrationState,
) -> DecisionReport {
    let m = pre_labels.len();
    let mut decisions = vec![Decision::ABSTAIN; m];
    let mut evidence = vec![1.0; m];
    let mut outcomes = Vec::with_capacity(groups.len());
    for (gp, th) in groups.iter().zip(thresholds) {
        let mut decided = 0;
        for (&j, &p) in gp.subjects.iter().zip(&gp.pvalues) {
            evidence[j] = p.to_f64();
            if p <= th.threshold {
                decisions[j] = pre_labels[j].into();
                decided += 1;
            }
        }
        outcomes.push(GroupOutcome {
            theta_hat: calib.theta_hat(gp.group),
            threshold: th.threshold.to_f64(),
            l_hat: th.l_hat,
            subjects: gp.subjects.len(),
            decided,
            holdouts: calib.group_holdout_count(partition, gp.group),
            residuals: gp.residual_count,
        });
    }
    DecisionReport {
        kind: EvidenceKind::PValue,
        decisions,
        pre_labels: pre_labels.to_vec(),
        groups: pre_labels.iter().map(|&l| partition.group_of(l)).collect(),
        evidence,
        outcomes,
    }
}

/// Checks shapes shared by the p-value and e-value pipelines and builds the
/// calibration state.
pub(crate) fn prepare(
    target_scores: &ScoreMatrix,
    holdout_scores: &ScoreMatrix,
    pre_target: &[ClassLabel],
    pre_holdout: &[ClassLabel],
    holdout_truth: &[ClassLabel],
    partition: &GroupPartition,
) -> Result<(CalibrationState, Vec<GroupView>)> {
    let k = partition.num_classes();
    for (what, scores) in [
        ("target score columns", target_scores),
        ("hold-out score columns", holdout_scores),
    ] {
        if !scores.is_empty() && scores.num_classes() != k {
            return Err(PspError::LengthMismatch {
                what,
                expected: k,
                actual: scores.num_classes(),
            });
        }
    }
    for (what, expected, actual) in [
        ("target pre-labels", target_scores.len(), pre_target.len()),
        ("hold-out pre-labels", holdout_scores.len(), pre_holdout.len()),
    ] {
        if expected != actual {
            return Err(PspError::LengthMismatch {
                what,
                expected,
                actual,
            });
        }
    }
    let calib = build_calibration(pre_target, pre_holdout, holdout_truth, partition)?;
    let views = group_views(target_scores, holdout_scores, &calib, partition)?;
    Ok((calib, views))
}

/// The full procedure: calibration sets, selective p-values, group thresholds
/// and decisions.
pub fn psp_run(
    target_scores: &ScoreMatrix,
    holdout_scores: &ScoreMatrix,
    pre_target: &[ClassLabel],
    pre_holdout: &[ClassLabel],
    holdout_truth: &[ClassLabel],
    partition: &GroupPartition,
) -> Result<DecisionReport> {
    let (calib, views) = prepare(
        target_scores,
        holdout_scores,
        pre_target,
        pre_holdout,
        holdout_truth,
        partition,
    )?;
    let groups: Vec<GroupPValues> = views.iter().map(selective_pvalues).collect();
    let thresholds: Vec<GroupThreshold> = groups
        .iter()
        .map(|gp| bh_threshold(&gp.pvalues, calib.theta_hat[gp.group], partition.alpha(gp.group)))
        .collect();
    Ok(psp_decide(pre_target, &groups, &thresholds, partition, &calib))
}
