//! Domain types shared across the crate.
//!
//! Labels are 1-based (`1..=K`) on every public surface; `0` is reserved for
//! abstention.

use std::fmt;

use crate::error::{PspError, Result};
use crate::exact::Ratio;

/// A class label in `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassLabel(u32);

impl ClassLabel {
    pub fn new(value: u32, k: usize) -> Result<Self> {
        if value == 0 || value as usize > k {
            return Err(PspError::LabelOutOfRange {
                label: value as i64,
                k,
            });
        }
        Ok(ClassLabel(value))
    }

    /// Label from a 0-based class index.
    pub fn from_index(index: usize) -> Self {
        ClassLabel(index as u32 + 1)
    }

    pub fn value(self) -> u32 {
        self.0
    }

    /// 0-based column index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A final decision: a class label, or `0` for abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Decision(u32);

impl Decision {
    pub const ABSTAIN: Decision = Decision(0);

    pub fn label(label: ClassLabel) -> Self {
        Decision(label.0)
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_abstain(self) -> bool {
        self.0 == 0
    }

    pub fn as_label(self) -> Option<ClassLabel> {
        (self.0 != 0).then_some(ClassLabel(self.0))
    }
}

impl From<ClassLabel> for Decision {
    fn from(label: ClassLabel) -> Self {
        Decision::label(label)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Validates and converts raw 1-based labels.
pub fn labels_from_raw(raw: &[u32], k: usize) -> Result<Vec<ClassLabel>> {
    raw.iter().map(|&v| ClassLabel::new(v, k)).collect()
}

pub type FeatureVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: FeatureVector,
    pub y: ClassLabel,
}

/// Dense row-major matrix of per-class scores, one row per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    k: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(k: usize, data: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(PspError::EmptyScores);
        }
        if !data.len().is_multiple_of(k) {
            return Err(PspError::LengthMismatch {
                what: "score matrix entries",
                expected: data.len().div_ceil(k) * k,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(PspError::NonFiniteScore {
                row: pos / k,
                col: pos % k,
            });
        }
        Ok(ScoreMatrix { k, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let k = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * k);
        for row in rows {
            let row = row.as_ref();
            if row.len() != k {
                return Err(PspError::LengthMismatch {
                    what: "score row",
                    expected: k,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        if rows.is_empty() {
            return Ok(ScoreMatrix { k: 1, data });
        }
        Self::new(k, data)
    }

    /// An empty matrix with `k` columns.
    pub fn empty(k: usize) -> Self {
        ScoreMatrix { k, data: Vec::new() }
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.k..(j + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }

    /// Score of subject `j` for class `label`.
    pub fn score(&self, j: usize, label: ClassLabel) -> f64 {
        self.data[j * self.k + label.index()]
    }

    /// Applies `f` entrywise. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.k, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.k);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        ScoreMatrix { k: self.k, data }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// A disjoint partition of `1..=K` into groups, each with its own level.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    k: usize,
    groups: Vec<Vec<ClassLabel>>,
    alphas: Vec<f64>,
    group_of: Vec<usize>,
}

impl GroupPartition {
    /// Validates raw 1-based label groups and their target levels.
    pub fn new(groups: &[Vec<u32>], alphas: &[f64], k: usize) -> Result<Self> {
        if k < 2 {
            return Err(PspError::TooFewClasses(k));
        }
        if alphas.len() != groups.len() {
            return Err(PspError::AlphaCountMismatch {
                expected: groups.len(),
                actual: alphas.len(),
            });
        }
        let mut group_of = vec![usize::MAX; k];
        let mut out = Vec::with_capacity(groups.len());
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(PspError::EmptyGroup { group: g });
            }
            let mut labels = Vec::with_capacity(members.len());
            for &v in members {
                let label = ClassLabel::new(v, k)?;
                if group_of[label.index()] != usize::MAX {
                    return Err(PspError::OverlappingGroups { label: v });
                }
                group_of[label.index()] = g;
                labels.push(label);
            }
            labels.sort();
            out.push(labels);
        }
        if let Some(missing) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(PspError::UncoveredLabel {
                label: missing as u32 + 1,
            });
        }
        for (g, &alpha) in alphas.iter().enumerate() {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(PspError::AlphaOutOfRange { group: g, alpha });
            }
        }
        Ok(GroupPartition {
            k,
            groups: out,
            alphas: alphas.to_vec(),
            group_of,
        })
    }

    /// Single group holding every class (overall error control).
    pub fn overall(k: usize, alpha: f64) -> Result<Self> {
        let all: Vec<u32> = (1..=k as u32).collect();
        Self::new(&[all], &[alpha], k)
    }

    /// One group per class (class-wise error control).
    pub fn classwise(k: usize, alphas: &[f64]) -> Result<Self> {
        let groups: Vec<Vec<u32>> = (1..=k as u32).map(|v| vec![v]).collect();
        Self::new(&groups, alphas, k)
    }

    /// Same groups, new levels.
    pub fn with_alphas(&self, alphas: &[f64]) -> Result<Self> {
        let raw: Vec<Vec<u32>> = self
            .groups
            .iter()
            .map(|g| g.iter().map(|l| l.value()).collect())
            .collect();
        Self::new(&raw, alphas, self.k)
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[Vec<ClassLabel>] {
        &self.groups
    }

    pub fn members(&self, g: usize) -> &[ClassLabel] {
        &self.groups[g]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha(&self, g: usize) -> f64 {
        self.alphas[g]
    }

    pub fn group_of(&self, label: ClassLabel) -> usize {
        self.group_of[label.index()]
    }
}

/// Pre-classification sets and the per-group false pre-classification estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationState {
    /// Target indices pre-classified to each class (indexed by class - 1).
    pub target_sets: Vec<Vec<usize>>,
    /// Hold-out indices pre-classified to each class.
    pub holdout_sets: Vec<Vec<usize>>,
    /// Hold-out indices pre-classified to each class whose true label differs.
    pub residual_sets: Vec<Vec<usize>>,
    /// `(1 + residual count) / (1 + hold-out count)` for each group.
    pub theta_hat: Vec<Ratio>,
}

impl CalibrationState {
    pub fn theta_hat(&self, g: usize) -> f64 {
        self.theta_hat[g].to_f64()
    }

    /// Target indices of group `g`, ascending.
    pub fn group_targets(&self, partition: &GroupPartition, g: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = partition
            .members(g)
            .iter()
            .flat_map(|l| self.target_sets[l.index()].iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }

    pub fn group_residual_count(&self, partition: &GroupPartition, g: usize) -> usize {
        partition
            .members(g)
            .iter()
            .map(|l| self.residual_sets[l.index()].len())
            .sum()
    }

    pub fn group_holdout_count(&self, partition: &GroupPartition, g: usize) -> usize {
        partition
            .members(g)
            .iter()
            .map(|l| self.holdout_sets[l.index()].len())
            .sum()
    }
}

/// Whether a report carries selective p-values or selective e-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceKind {
    PValue,
    EValue,
}

/// Per-group outcome of the thresholding step.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupOutcome {
    pub theta_hat: f64,
    /// `T̂` for p-values (0 when nothing passes), or the e-value cut-off
    /// (`+∞` when nothing passes).
    pub threshold: f64,
    pub l_hat: Option<usize>,
    pub subjects: usize,
    pub decided: usize,
    /// Hold-outs pre-classified into the group, and the wrong ones among them.
    pub holdouts: usize,
    pub residuals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionReport {
    pub kind: EvidenceKind,
    pub decisions: Vec<Decision>,
    pub pre_labels: Vec<ClassLabel>,
    /// Group index of each subject's pre-label.
    pub groups: Vec<usize>,
    /// Selective p-value or e-value of each subject.
    pub evidence: Vec<f64>,
    pub outcomes: Vec<GroupOutcome>,
}

impl DecisionReport {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn decided_count(&self) -> usize {
        self.decisions.iter().filter(|d| !d.is_abstain()).count()
    }

    /// Indices of subjects that received a label, ascending.
    pub fn decided_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| !self.decisions[j].is_abstain())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_partition_is_valid() {
        let p = GroupPartition::new(&[vec![1, 2, 3]], &[0.1], 3).unwrap();
        assert_eq!(p.num_groups(), 1);
        assert_eq!(p, GroupPartition::overall(3, 0.1).unwrap());
    }

    #[test]
    fn classwise_partition_is_valid() {
        let p = GroupPartition::new(&[vec![1], vec![2], vec![3]], &[0.1, 0.1, 0.1], 3).unwrap();
        assert_eq!(p.num_groups(), 3);
        assert_eq!(p.group_of(ClassLabel::new(2, 3).unwrap()), 1);
    }

    #[test]
    fn overlapping_groups_rejected() {
        let err = GroupPartition::new(&[vec![1, 2], vec![2, 3]], &[0.1, 0.1], 3).unwrap_err();
        assert_eq!(err, PspError::OverlappingGroups { label: 2 });
    }

    #[test]
    fn uncovered_label_rejected() {
        let err = GroupPartition::new(&[vec![1], vec![3]], &[0.1, 0.1], 3).unwrap_err();
        assert_eq!(err, PspError::UncoveredLabel { label: 2 });
    }

    #[test]
    fn alpha_must_be_open_unit() {
        for bad in [0.0, 1.0, -0.2, f64::NAN] {
            let err = GroupPartition::overall(3, bad).unwrap_err();
            assert!(matches!(err, PspError::AlphaOutOfRange { group: 0, .. }));
        }
    }

    #[test]
    fn label_range_checked() {
        assert!(ClassLabel::new(0, 3).is_err());
        assert!(ClassLabel::new(4, 3).is_err());
        assert!(GroupPartition::new(&[vec![1, 2, 4]], &[0.1], 3).is_err());
        assert_eq!(
            GroupPartition::overall(1, 0.1).unwrap_err(),
            PspError::TooFewClasses(1)
        );
    }

    #[test]
    fn score_matrix_rejects_nan() {
        let err = ScoreMatrix::new(2, vec![0.1, 0.2, f64::NAN, 0.3]).unwrap_err();
        assert_eq!(err, PspError::NonFiniteScore { row: 1, col: 0 });
        let err = ScoreMatrix::from_rows(&[vec![0.1, 0.2], vec![0.3]]).unwrap_err();
        assert!(matches!(err, PspError::LengthMismatch { .. }));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn valid_partition_covers_each_label_once(
                k in 2usize..12,
                assign in proptest::collection::vec(0usize..12, 12),
            ) {
                // Map each label to one of at most k groups, dropping empty ones.
                let mut groups: Vec<Vec<u32>> = vec![Vec::new(); k];
                for label in 1..=k {
                    groups[assign[label - 1] % k].push(label as u32);
                }
                groups.retain(|g| !g.is_empty());
                let alphas = vec![0.1; groups.len()];
                let p = GroupPartition::new(&groups, &alphas, k).unwrap();
                let total: usize = p.groups().iter().map(Vec::len).sum();
                prop_assert_eq!(total, k);
                for label in 1..=k as u32 {
                    let l = ClassLabel::new(label, k).unwrap();
                    let hits = p.groups().iter().filter(|g| g.contains(&l)).count();
                    prop_assert_eq!(hits, 1);
                    prop_assert!(p.members(p.group_of(l)).contains(&l));
                }
            }
        }
    }
}
