//! Two uses of the selective pipeline beyond labelling: picking subjects whose
//! label falls in a region of interest, and reporting short prediction sets.

use crate::engine::{bh_threshold, conformal_pvalues, GroupThreshold};
use crate::error::{PspError, Result};
use crate::exact::Ratio;
use crate::types::{ClassLabel, ScoreMatrix};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(PspError::AlphaOutOfRange { group: 0, alpha })
    }
}

/// Select subjects with `Y ∈ region`, controlling the proportion selected
/// from outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTask {
    pub k: usize,
    pub region: Vec<ClassLabel>,
    pub alpha: f64,
}

impl SelectionTask {
    pub fn new(k: usize, region: &[u32], alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let region = region
            .iter()
            .map(|&v| ClassLabel::new(v, k))
            .collect::<Result<Vec<_>>>()?;
        if region.is_empty() {
            return Err(PspError::InvalidSpec("empty region of interest".into()));
        }
        Ok(SelectionTask { k, region, alpha })
    }

    pub fn contains(&self, label: ClassLabel) -> bool {
        self.region.contains(&label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Targets passing the pre-selection rule, ascending.
    pub candidates: Vec<usize>,
    /// p-value of each candidate.
    pub pvalues: Vec<Ratio>,
    pub theta_hat: Ratio,
    pub threshold: GroupThreshold,
    pub selected: Vec<usize>,
}

fn masked(mask: Option<&[bool]>, len: usize, what: &'static str) -> Result<Vec<usize>> {
    match mask {
        None => Ok((0..len).collect()),
        Some(m) if m.len() != len => Err(PspError::LengthMismatch {
            what,
            expected: len,
            actual: m.len(),
        }),
        Some(m) => Ok((0..len).filter(|&i| m[i]).collect()),
    }
}

/// Runs selection on precomputed scores `μ(x)`, where larger means more
/// likely inside the region.
///
/// `pre_target` and `pre_holdout` are pre-selection masks; `None` keeps
/// every subject.
pub fn select_subjects(
    task: &SelectionTask,
    target_scores: &[f64],
    holdout_scores: &[f64],
    holdout_labels: &[ClassLabel],
    pre_target: Option<&[bool]>,
    pre_holdout: Option<&[bool]>,
) -> Result<SelectionResult> {
    check_alpha(task.alpha)?;
    if holdout_scores.len() != holdout_labels.len() {
        return Err(PspError::LengthMismatch {
            what: "hold-out labels",
            expected: holdout_scores.len(),
            actual: holdout_labels.len(),
        });
    }
    for (row, &v) in target_scores.iter().chain(holdout_scores).enumerate() {
        if !v.is_finite() {
            return Err(PspError::NonFiniteScore { row, col: 0 });
        }
    }
    for y in holdout_labels {
        if y.index() >= task.k {
            return Err(PspError::LabelOutOfRange {
                label: y.value() as i64,
                k: task.k,
            });
        }
    }
    let candidates = masked(pre_target, target_scores.len(), "target pre-selection mask")?;
    let pool = masked(pre_holdout, holdout_scores.len(), "hold-out pre-selection mask")?;
    let residual: Vec<f64> = pool
        .iter()
        .filter(|&&i| !task.contains(holdout_labels[i]))
        .map(|&i| holdout_scores[i])
        .collect();
    let subject_scores: Vec<f64> = candidates.iter().map(|&j| target_scores[j]).collect();
    let pvalues = conformal_pvalues(&subject_scores, &residual);
    let theta_hat = Ratio::new(1 + residual.len() as u64, 1 + pool.len() as u64);
    let threshold = bh_threshold(&pvalues, theta_hat, task.alpha);
    let selected = candidates
        .iter()
        .zip(&pvalues)
        .filter(|(_, &p)| p <= threshold.threshold)
        .map(|(&j, _)| j)
        .collect();
    Ok(SelectionResult {
        candidates,
        pvalues,
        theta_hat,
        threshold,
        selected,
    })
}

/// Prediction sets of at most `l` labels, reported only for selected subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct InformativeSetTask {
    pub k: usize,
    pub l: usize,
    pub alpha: f64,
}

impl InformativeSetTask {
    pub fn new(k: usize, l: usize, alpha: f64) -> Result<Self> {
        if k < 2 {
            return Err(PspError::TooFewClasses(k));
        }
        if l == 0 || l >= k {
            return Err(PspError::InvalidL { l, max: k - 1 });
        }
        check_alpha(alpha)?;
        Ok(InformativeSetTask { k, l, alpha })
    }
}

/// `μ_(K−L)`: the `(K−L)`-th smallest entry of `row`.
fn order_stat(row: &[f64], l: usize) -> f64 {
    let mut sorted = row.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted[row.len() - l - 1]
}

/// The set `{k : μ_k > μ_(K−L)}` and its score `1 − μ_(K−L)`.
///
/// Ties at the order statistic shrink the set below `l`.
pub fn informative_set(row: &[f64], l: usize) -> (Vec<ClassLabel>, f64) {
    let cut = order_stat(row, l);
    let set = row
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > cut)
        .map(|(k, _)| ClassLabel::from_index(k))
        .collect();
    (set, 1.0 - cut)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InformativeSetResult {
    /// Candidate set of every target.
    pub sets: Vec<Vec<ClassLabel>>,
    pub scores: Vec<f64>,
    pub pvalues: Vec<Ratio>,
    pub theta_hat: Ratio,
    pub threshold: GroupThreshold,
    pub selected: Vec<usize>,
}

impl InformativeSetResult {
    /// `(subject, set)` pairs for the selected subjects.
    pub fn reported(&self) -> impl Iterator<Item = (usize, &[ClassLabel])> + '_ {
        self.selected.iter().map(|&j| (j, self.sets[j].as_slice()))
    }
}

pub fn informative_sets(
    task: &InformativeSetTask,
    target_scores: &ScoreMatrix,
    holdout_scores: &ScoreMatrix,
    holdout_labels: &[ClassLabel],
) -> Result<InformativeSetResult> {
    let task = InformativeSetTask::new(task.k, task.l, task.alpha)?;
    for (what, m) in [
        ("target score columns", target_scores),
        ("hold-out score columns", holdout_scores),
    ] {
        if !m.is_empty() && m.num_classes() != task.k {
            return Err(PspError::LengthMismatch {
                what,
                expected: task.k,
                actual: m.num_classes(),
            });
        }
    }
    if holdout_scores.len() != holdout_labels.len() {
        return Err(PspError::LengthMismatch {
            what: "hold-out labels",
            expected: holdout_scores.len(),
            actual: holdout_labels.len(),
        });
    }
    let mut residual = Vec::new();
    for (row, y) in holdout_scores.rows().zip(holdout_labels) {
        if y.index() >= task.k {
            return Err(PspError::LabelOutOfRange {
                label: y.value() as i64,
                k: task.k,
            });
        }
        let (set, s) = informative_set(row, task.l);
        if !set.contains(y) {
            residual.push(s);
        }
    }
    let (sets, scores): (Vec<_>, Vec<_>) = target_scores
        .rows()
        .map(|row| informative_set(row, task.l))
        .unzip();
    assert!(sets.iter().all(|c| c.len() <= task.l));
    let pvalues = conformal_pvalues(&scores, &residual);
    let theta_hat = Ratio::new(1 + residual.len() as u64, 1 + holdout_scores.len() as u64);
    let threshold = bh_threshold(&pvalues, theta_hat, task.alpha);
    let selected = pvalues
        .iter()
        .enumerate()
        .filter(|(_, &p)| p <= threshold.threshold)
        .map(|(j, _)| j)
        .collect();
    Ok(InformativeSetResult {
        sets,
        scores,
        pvalues,
        theta_hat,
        threshold,
        selected,
    })
}
